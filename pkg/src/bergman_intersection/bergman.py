"""Bergman kernels of the disc, the lens and the product domain; the test
function ``chi = H(F) F'`` and numerical Bergman projections."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NearSingularError, PreconditionError
from .geometry import DomainId, in_lens, lens_map, lens_map_deriv, lens_map_jet
from .jets import Jet
from .quadrature import QuadratureSpec, integrate_disc, integrate_lens


@dataclass(frozen=True)
class BumpSpec:
    """Radial plateau ``H``: 1 on ``|zeta| <= r0``, 0 on ``|zeta| >= r1``.

    The transition is the C-infinity blend ``psi(1-t) / (psi(1-t) + psi(t))``
    with ``psi(t) = exp(-1/t)`` and ``t = (|zeta| - r0) / (r1 - r0)``.
    """

    r0: float = 0.5
    r1: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.r0 < self.r1 < 1.0:
            raise PreconditionError("bump radii must satisfy 0 < r0 < r1 < 1")


DEFAULT_BUMP = BumpSpec()


@dataclass(frozen=True)
class KernelEval:
    value: complex
    domain: DomainId


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def radial_bump(zeta, spec=DEFAULT_BUMP):
    r = np.abs(np.asarray(zeta))
    t = np.clip((r - spec.r0) / (spec.r1 - spec.r0), 0.0, 1.0)
    a, b = _psi(1.0 - t), _psi(t)
    out = a / (a + b)
    return out if out.ndim else float(out)


def disc_kernel(z, w):
    """``K(z, w) = 1 / (pi (1 - z conj(w))**2)`` on the unit disc."""
    z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
    if np.any(np.abs(z) >= 1) or np.any(np.abs(w) >= 1):
        raise DomainError("disc kernel arguments must lie in the unit disc")
    denom = 1.0 - z * np.conj(w)
    if np.any(np.abs(denom) < 1e-14):
        raise NearSingularError("|1 - z conj(w)| below 1e-14")
    out = 1.0 / (np.pi * denom ** 2)
    return out if out.ndim else complex(out)


def lens_kernel(z, w):
    """Lens kernel by the biholomorphic transformation rule."""
    fz, fw = lens_map(z), lens_map(w)
    dz, dw = lens_map_deriv(z, 1), lens_map_deriv(w, 1)
    return dz * disc_kernel(fz, fw) * np.conj(dw)


def product_kernel(p, q):
    """Kernel of ``P = lens x disc`` at ``p = (z1, z2)``, ``q = (w1, w2)``."""
    p, q = np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)
    return lens_kernel(p[..., 0], q[..., 0]) * disc_kernel(p[..., 1], q[..., 1])


def chi(z, spec=DEFAULT_BUMP):
    """Test function ``H(F(z)) F'(z)``; zero off ``F^-1({|zeta| < r1})``."""
    z = np.asarray(z, dtype=complex)
    if not np.all(in_lens(z)):
        raise DomainError("chi is defined on the lens")
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.zeros(z.shape, dtype=complex)
    fz = lens_map(z, check=False)
    live = np.abs(fz) < spec.r1
    if np.any(live):
        out[live] = radial_bump(fz[live], spec) * lens_map_deriv(z[live], 1, check=False)
    return complex(out[0]) if scalar else out


def _bump_jet(modulus_sq, spec):
    """Jet of ``H`` composed with a jet of ``|zeta|**2`` inside the transition band."""
    r = modulus_sq.real_sqrt()
    t = (r - spec.r0) * (1.0 / (spec.r1 - spec.r0))
    a = (-(1.0 - t).reciprocal()).exp()
    b = (-t.reciprocal()).exp()
    return a / (a + b)


def chi_jet(z, order, spec=DEFAULT_BUMP):
    """Wirtinger jet of ``chi`` of total ``order`` at points ``z`` (no checks)."""
    z = np.asarray(z, dtype=complex)
    fjet = lens_map_jet(z, order + 1)
    dfjet = fjet.shift_derivative()
    fjet = Jet({k: v for k, v in fjet.coeffs.items()}, order)
    r = np.abs(fjet.value)
    band = (r > spec.r0) & (r < spec.r1)
    hval = np.where(r <= spec.r0, 1.0, 0.0).astype(complex)
    coeffs = {(0, 0): hval}
    if np.any(band):
        sub = Jet({k: v[band] for k, v in fjet.coeffs.items()}, order)
        hb = _bump_jet(sub * sub.conj(), spec)
        for key, val in hb.coeffs.items():
            full = coeffs.get(key, np.zeros(z.shape, dtype=complex)).copy()
            full[band] = val
            coeffs[key] = full
    return Jet(coeffs, order) * dfjet


def projection_constant(spec=DEFAULT_BUMP, quad=None):
    """``(1/pi) * integral of H over the disc``: the disc projection of ``H``."""
    quad = quad or QuadratureSpec()
    res = integrate_disc(lambda zeta: radial_bump(zeta, spec), quad)
    return float(res.value) / np.pi


def bergman_project(domain, f, z, quad=None, return_result=False):
    """Bergman projection of ``f`` on the disc or the lens at query points ``z``.

    ``f`` is a vectorised callable of the integration variable.  The kernel
    is applied pointwise at the query points; the integral goes through the
    corresponding deterministic quadrature.
    """
    domain = DomainId(domain)
    quad = quad or QuadratureSpec()
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if domain is DomainId.UnitDisc:
        if np.any(np.abs(z) >= 1):
            raise DomainError("query points must lie in the unit disc")
        zz = z.reshape(-1, *([1] * 4))

        def integrand(w):
            return disc_kernel(zz, w) * f(w)

        res = integrate_disc(integrand, quad)
    elif domain is DomainId.Lens:
        fz = lens_map(z).reshape(-1, *([1] * 4))
        dz = lens_map_deriv(z, 1).reshape(-1, *([1] * 4))

        def integrand(w):
            fw = lens_map(w, check=False)
            dw = lens_map_deriv(w, 1, check=False)
            return dz * np.conj(dw) / (np.pi * (1.0 - fz * np.conj(fw)) ** 2) * f(w)

        res = integrate_lens(integrand, quad)
    else:
        raise PreconditionError("projection is implemented on UnitDisc and Lens")
    value = np.asarray(res.value)
    return (value, res) if return_result else value
