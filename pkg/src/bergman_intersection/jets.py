"""Truncated Taylor arithmetic in the Wirtinger variables (h, conj(h)).

A :class:`Jet` stores the coefficients ``c[a, b]`` of ``h**a * conj(h)**b``
with ``a + b <= order``.  Coefficients are numpy arrays so one jet carries a
whole batch of base points.  Holomorphic jets only populate ``b == 0`` and
stay cheap, because products only touch the keys that are present.

The Wirtinger derivative is recovered as
``d^a dbar^b f = a! * b! * c[a, b]``.
"""
from math import factorial

import numpy as np


class Jet:
    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order):
        self.coeffs = {key: val for key, val in coeffs.items() if sum(key) <= order}
        self.order = order

    @classmethod
    def constant(cls, value, order):
        return cls({(0, 0): np.asarray(value, dtype=complex)}, order)

    @classmethod
    def variable(cls, value, order):
        """Jet of ``z -> z`` expanded at ``value``."""
        value = np.asarray(value, dtype=complex)
        coeffs = {(0, 0): value}
        if order >= 1:
            coeffs[(1, 0)] = np.ones_like(value)
        return cls(coeffs, order)

    @property
    def value(self):
        return self.coeffs[(0, 0)]

    def coefficient(self, a, b=0):
        if (a, b) in self.coeffs:
            return self.coeffs[(a, b)]
        return np.zeros_like(self.value)

    def derivative(self, a, b=0):
        """Wirtinger derivative ``d^a dbar^b`` at the base points."""
        return factorial(a) * factorial(b) * self.coefficient(a, b)

    def conj(self):
        return Jet({(b, a): np.conj(c) for (a, b), c in self.coeffs.items()}, self.order)

    def shift_derivative(self):
        """Holomorphic jet of ``f'`` from a holomorphic jet of ``f`` (loses one order)."""
        out = {}
        for (a, b), c in self.coeffs.items():
            if b == 0 and a >= 1:
                out[(a - 1, 0)] = a * c
        return Jet(out, self.order - 1)

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        order = min(self.order, other.order)
        out = dict(self.coeffs)
        for key, val in other.coeffs.items():
            out[key] = out[key] + val if key in out else val
        return Jet(out, order)

    __radd__ = __add__

    def __neg__(self):
        return Jet({key: -val for key, val in self.coeffs.items()}, self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            return Jet({key: val * other for key, val in self.coeffs.items()}, self.order)
        order = min(self.order, other.order)
        out = {}
        for (a1, b1), c1 in self.coeffs.items():
            for (a2, b2), c2 in other.coeffs.items():
                if a1 + a2 + b1 + b2 > order:
                    continue
                key = (a1 + a2, b1 + b2)
                prod = c1 * c2
                out[key] = out[key] + prod if key in out else prod
        return Jet(out, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def compose(self, taylor):
        """Return ``f(self)`` given ``taylor[n] = f^(n)(c0) / n!`` at the base value."""
        delta = Jet({k: v for k, v in self.coeffs.items() if k != (0, 0)}, self.order)
        result = Jet.constant(taylor[0] * np.ones_like(self.value), self.order)
        power = Jet.constant(np.ones_like(self.value), self.order)
        for n in range(1, self.order + 1):
            power = power * delta
            result = result + power * taylor[n]
        return result

    def reciprocal(self):
        c0 = self.value
        taylor = [(-1) ** n / c0 ** (n + 1) for n in range(self.order + 1)]
        return self.compose(taylor)

    def exp(self):
        e0 = np.exp(self.value)
        return self.compose([e0 / factorial(n) for n in range(self.order + 1)])

    def power(self, alpha, base_power=None):
        """``self**alpha``; ``base_power`` fixes the branch of ``c0**alpha``."""
        c0 = self.value
        if base_power is None:
            base_power = c0 ** alpha
        taylor = []
        binom = 1.0
        for n in range(self.order + 1):
            taylor.append(base_power * binom / c0 ** n)
            binom *= (alpha - n) / (n + 1)
        return self.compose(taylor)

    def real_sqrt(self):
        """Square root of a jet whose base value is real and positive."""
        return self.power(0.5, base_power=np.sqrt(self.value.real).astype(complex))
