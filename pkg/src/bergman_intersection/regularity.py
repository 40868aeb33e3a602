"""Sobolev and L^p norms on the lens and refinement probes that separate
bounded norms from norms that blow up at the corners.

Sobolev norms are sums of ``|d^a dbar^b f|**2`` over ``a + b <= k``
(Wirtinger derivatives).  For holomorphic ``f`` only the ``b = 0`` terms
survive, and the sum is equivalent to the usual real-derivative norm.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bergman import DEFAULT_BUMP, chi, chi_jet
from .errors import PreconditionError
from .geometry import (
    CORNER_A,
    CORNER_B,
    corner_distance,
    in_lens,
    lens_map,
    lens_map_deriv,
    lens_map_inverse,
    lens_map_jet,
)
from .quadrature import QuadratureSpec, integrate_disc, integrate_lens


class Descriptor(Enum):
    Fprime = "Fprime"
    Chi = "Chi"


class DerivativeSource(Enum):
    ClosedForm = "ClosedForm"
    FiniteDifference = "FiniteDifference"


class Verdict(Enum):
    Bounded = "Bounded"
    Diverging = "Diverging"
    Inconclusive = "Inconclusive"


@dataclass(frozen=True)
class NormSpec:
    """``kind`` is ``"sobolev"`` (uses ``k``) or ``"lp"`` (uses ``p``)."""

    kind: str = "sobolev"
    k: int = 0
    p: float = 2.0
    derivative_source: DerivativeSource = DerivativeSource.ClosedForm

    def __post_init__(self):
        if self.kind == "sobolev":
            if int(self.k) != self.k or self.k < 0:
                raise PreconditionError("Sobolev order must be a non-negative integer")
            if self.derivative_source is DerivativeSource.ClosedForm and self.k > 3:
                raise PreconditionError("closed-form derivatives are stocked up to k = 3")
        elif self.kind == "lp":
            if not self.p > 1:
                raise PreconditionError("L^p exponent must exceed 1")
        else:
            raise PreconditionError(f"unknown norm kind {self.kind!r}")

    @property
    def label(self):
        return f"W{self.k}" if self.kind == "sobolev" else f"L{self.p:g}"


@dataclass(frozen=True)
class RefinementTrace:
    levels: tuple
    verdict: Verdict
    annuli: tuple = field(default=())

    def __post_init__(self):
        depths = [d for d, _ in self.levels]
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError("refinement depths must be strictly increasing")

    @property
    def estimates(self):
        return np.array([e for _, e in self.levels])


def _fd_wirtinger(func, z, a, b, h):
    """Nested central differences for ``d^a dbar^b func`` at ``z``."""
    if a == 0 and b == 0:
        return func(z)
    if a > 0:
        sub = lambda w: _fd_wirtinger(func, w, a - 1, b, h)  # noqa: E731
        sign = -1j
    else:
        sub = lambda w: _fd_wirtinger(func, w, a, b - 1, h)  # noqa: E731
        sign = 1j
    dx = (sub(z + h) - sub(z - h)) / (2 * h)
    dy = (sub(z + 1j * h) - sub(z - 1j * h)) / (2 * h)
    return 0.5 * (dx + sign * dy)


def _derivative_table(f, z, k, source, bump):
    """Dict ``(a, b) -> d^a dbar^b f(z)`` for ``a + b <= k``."""
    f = Descriptor(f)
    if source is DerivativeSource.ClosedForm:
        if f is Descriptor.Fprime:
            jet = lens_map_jet(z, k + 1).shift_derivative()
            return {(a, 0): jet.derivative(a, 0) for a in range(k + 1)}
        jet = chi_jet(z, k, bump)
        return {(a, b): jet.derivative(a, b) for a in range(k + 1) for b in range(k + 1 - a)}
    func = (lambda w: lens_map_deriv(w, 1, check=False)) if f is Descriptor.Fprime else (
        lambda w: chi(np.where(in_lens(w), w, 0.5), bump)
    )
    pairs = [(a, 0) for a in range(k + 1)] if f is Descriptor.Fprime else [
        (a, b) for a in range(k + 1) for b in range(k + 1 - a)
    ]
    # step balancing truncation h^2 against rounding eps / h^n for order n
    step = {n: 0.5 * np.finfo(float).eps ** (1.0 / (n + 2)) for n in range(k + 1)}
    return {ab: _fd_wirtinger(func, z, ab[0], ab[1], step[sum(ab)]) for ab in pairs}


def _sobolev_density(f, k, source, bump):
    f = Descriptor(f)

    def density(z):
        out = np.zeros(z.shape)
        if f is Descriptor.Chi:
            live = np.abs(lens_map(z, check=False)) < bump.r1
            zl = z[live]
        else:
            live, zl = Ellipsis, z
        table = _derivative_table(f, zl, k, source, bump)
        acc = np.zeros(zl.shape)
        for val in table.values():
            acc = acc + np.abs(val) ** 2
        out[live] = acc
        return out

    return density


def support_corner_distance(bump=DEFAULT_BUMP, n=720):
    """Distance from the support of ``chi`` to the lens corners (sampled)."""
    theta = 2 * np.pi * np.arange(n) / n
    return float(np.min(corner_distance(lens_map_inverse(bump.r1 * np.exp(1j * theta)))))


def _pullback_to_disc(density, bump):
    """``density(F^-1(zeta)) / |F'|^2`` on ``|zeta| < r1``, zero outside."""

    def g(zeta):
        out = np.zeros(zeta.shape)
        live = np.abs(zeta) < bump.r1
        z = lens_map_inverse(zeta[live])
        out[live] = density(z) / np.abs(lens_map_deriv(z, 1, check=False)) ** 2
        return out

    return g


def sobolev_norm_sq(f, k, spec=None, corner_radius=None, bump=DEFAULT_BUMP,
                    derivative_source=DerivativeSource.ClosedForm, check=True):
    """Squared Sobolev norm of ``f`` in ``W^k`` of the lens.

    ``corner_radius`` removes corner discs of that radius; by default only
    the quadrature's innermost layers are removed and their contribution is
    extrapolated into the error estimate.

    ``chi`` is supported in ``F^-1({|zeta| < r1})``, away from the corners,
    so its norms are computed in the disc variable with panel edges across
    the transition band of ``H``; corner discs that miss the support do not
    change the value.
    """
    source = DerivativeSource(derivative_source)
    NormSpec("sobolev", k=k, derivative_source=source)
    spec = spec or QuadratureSpec()
    density = _sobolev_density(f, k, source, bump)
    if Descriptor(f) is Descriptor.Chi and (
        corner_radius is None or corner_radius < support_corner_distance(bump)
    ):
        breaks = np.linspace(bump.r0, bump.r1, 5)
        res = integrate_disc(_pullback_to_disc(density, bump), spec, check=check, radial_breaks=breaks)
    else:
        res = integrate_lens(density, spec, corner_radius=corner_radius, check=check)
    return float(res.value)


def _lp_density(f, p, bump):
    f = Descriptor(f)

    def density(z):
        val = lens_map_deriv(z, 1, check=False) if f is Descriptor.Fprime else chi(z, bump)
        return np.abs(val) ** p

    return density


def lp_norm(f, p, spec=None, corner_radius=None, bump=DEFAULT_BUMP, check=True, return_result=False):
    """``L^p`` norm of ``f`` on the lens; optionally with the raw integral result."""
    NormSpec("lp", p=p)
    spec = spec or QuadratureSpec()
    res = integrate_lens(_lp_density(f, p, bump), spec, corner_radius=corner_radius, check=check)
    norm = float(res.value) ** (1.0 / p)
    return (norm, res) if return_result else norm


def lp_growth(f, ps, spec=None, bump=DEFAULT_BUMP):
    """``L^p`` norms over increasing exponents with relative error estimates.

    A bounded function has norms that level off at its supremum as ``p``
    grows; an unbounded one keeps growing.
    """
    rows = []
    for p in ps:
        norm, res = lp_norm(f, p, spec, bump=bump, check=False, return_result=True)
        rel = res.error_estimate / abs(res.value) / p if res.value else float("nan")
        rows.append({"p": p, "norm": norm, "rel_error": rel})
    return rows


def norm_estimate(f, norm, spec, corner_radius, bump=DEFAULT_BUMP):
    if norm.kind == "sobolev":
        return sobolev_norm_sq(f, norm.k, spec, corner_radius, bump, norm.derivative_source, check=False)
    return lp_norm(f, norm.p, spec, corner_radius, bump, check=False)


def classify(estimates, grow=1.5, settle=1e-2):
    """Verdict from a refinement sequence.

    Diverging iff each of the last three steps grows by at least ``grow``;
    Bounded iff the last step changes by less than ``settle`` (relative).
    """
    est = np.asarray(estimates, dtype=float)
    if len(est) < 4:
        raise PreconditionError("need at least four refinement levels")
    ratios = est[-3:] / est[-4:-1]
    if np.all(ratios >= grow):
        return Verdict.Diverging
    if abs(est[-1] - est[-2]) < settle * abs(est[-1]):
        return Verdict.Bounded
    return Verdict.Inconclusive


def divergence_probe(f, norm, depths, spec=None, bump=DEFAULT_BUMP):
    """Evaluate ``norm`` of ``f`` on the lens minus corner discs of radius
    ``2**-depth`` for each depth, and classify the sequence."""
    depths = [int(d) for d in depths]
    if len(depths) < 4 or any(b <= a for a, b in zip(depths, depths[1:])):
        raise PreconditionError("need at least four strictly increasing depths")
    spec = spec or QuadratureSpec()
    estimates = [norm_estimate(f, norm, spec, 2.0 ** -d, bump) for d in depths]
    annuli = tuple(float(b - a) for a, b in zip(estimates, estimates[1:]))
    levels = tuple((d, float(e)) for d, e in zip(depths, estimates))
    return RefinementTrace(levels, classify(estimates), annuli)


def annulus_contributions(order, depths, spec=None):
    """``int |F^(order)|**2`` over the corner annuli between radii
    ``2**-(d+1)`` and ``2**-d`` (both corners), for each depth ``d``.

    Returns ``(radii, contributions)`` with ``radii = 2**-d``.
    """
    spec = spec or QuadratureSpec()

    def density(z):
        return np.abs(lens_map_jet(z, order).derivative(order)) ** 2

    depths = list(depths)
    cum = [float(integrate_lens(density, spec, corner_radius=2.0 ** -d, check=False).value)
           for d in depths + [depths[-1] + 1]]
    radii = 2.0 ** -np.array(depths, dtype=float)
    return radii, np.diff(cum)


def loglog_slope(x, y):
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y))), 1)
    return float(slope)


def ray_exponent(order, corner="a", radii=None, direction=None):
    """Log-log slope of ``|F^(order)(corner + r e^{i theta})|`` against ``r``.

    The default direction bisects the corner angle, pointing into the lens.
    """
    c = CORNER_A if corner == "a" else CORNER_B
    if direction is None:
        direction = np.pi / 2 if corner == "a" else -np.pi / 2
    radii = np.logspace(-7, -3, 17) if radii is None else np.asarray(radii)
    pts = c + radii * np.exp(1j * direction)
    vals = lens_map_deriv(pts, order)
    return loglog_slope(radii, vals)
