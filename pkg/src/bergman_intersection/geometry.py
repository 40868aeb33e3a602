"""Domains and the explicit conformal map of the lens onto the unit disc.

The lens is ``D = {|z| < 1} & {|z - 1| < 1}`` with corners

    a = 1/2 - i sqrt(3)/2,   b = 1/2 + i sqrt(3)/2.

The map is ``F = C(M(z) ** 1.5)`` where ``M(z) = (z - a) / (z - b)`` sends the
lens onto the wedge ``2pi/3 < arg < 4pi/3`` and ``C(u) = (u + i) / (u - i)``
sends the lower half-plane onto the disc.  The 3/2 power uses arguments in
``(0, 2pi)``, which keeps ``F`` single valued on the lens with ``F(1/2) = 0``.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConvergenceError, CornerProximityError, DomainError
from .jets import Jet

SQRT3 = np.sqrt(3.0)
CORNER_A = complex(0.5, -SQRT3 / 2)
CORNER_B = complex(0.5, SQRT3 / 2)

#: Radius around a corner inside which F and its derivatives are refused.
DELTA_CORNER = 1e-8

WEDGE = (2 * np.pi / 3, 4 * np.pi / 3)


def corner_distance(z):
    """Distance from ``z`` to the nearest lens corner."""
    z = np.asarray(z, dtype=complex)
    d = np.minimum(np.abs(z - CORNER_A), np.abs(z - CORNER_B))
    return d if d.ndim else float(d)


def in_lens(z):
    z = np.asarray(z, dtype=complex)
    return (np.abs(z) < 1.0) & (np.abs(z - 1.0) < 1.0)


def _check_lens_points(z, delta):
    if not np.all(in_lens(z)):
        raise DomainError("point outside the lens D1(0) & D1(1)")
    if np.any(corner_distance(z) < delta):
        raise CornerProximityError(f"point within {delta:g} of a lens corner")


def _arg_0_2pi(w):
    return np.mod(np.angle(w), 2 * np.pi)


def _branch_power(w, alpha):
    """``w**alpha`` with ``arg w`` taken in ``(0, 2pi)``."""
    return np.abs(w) ** alpha * np.exp(1j * alpha * _arg_0_2pi(w))


def _mobius(z):
    return (z - CORNER_A) / (z - CORNER_B)


def _lens_map_raw(z):
    u = _branch_power(_mobius(z), 1.5)
    return (u + 1j) / (u - 1j)


def _lens_map_inverse_raw(zeta):
    u = 1j * (1 + zeta) / (zeta - 1)
    # arg u lies in (pi, 2pi) on the disc, so the 2/3 power lands in the wedge
    g = _branch_power(u, 2.0 / 3.0)
    return (CORNER_A - g * CORNER_B) / (1 - g)


def lens_map_jet(z, order):
    """Holomorphic :class:`Jet` of F at the points ``z`` (no domain checks)."""
    z = np.asarray(z, dtype=complex)
    h = Jet.variable(z, order)
    g = (h - CORNER_A) / (h - CORNER_B)
    u = g.power(1.5, base_power=_branch_power(g.value, 1.5))
    return (u + 1j) / (u - 1j)


@dataclass(frozen=True)
class LensMap:
    """The conformal map of the lens onto the unit disc, with its inverse.

    Parameters
    ----------
    delta_corner : float
        Evaluation radius around the corners that is refused.
    """

    corner_a: complex = CORNER_A
    corner_b: complex = CORNER_B
    branch: tuple = (0.0, 2 * np.pi)
    delta_corner: float = DELTA_CORNER
    newton_tol: float = 1e-13
    newton_maxiter: int = 50

    def __call__(self, z, check=True):
        z = np.asarray(z, dtype=complex)
        if check:
            _check_lens_points(z, self.delta_corner)
        out = _lens_map_raw(z)
        return out if out.ndim else complex(out)

    def derivative(self, z, order=1, check=True):
        if order not in (1, 2, 3, 4):
            raise ValueError("derivative order must be 1, 2, 3 or 4")
        z = np.asarray(z, dtype=complex)
        if check:
            _check_lens_points(z, self.delta_corner)
        out = lens_map_jet(z, order).derivative(order)
        return out if out.ndim else complex(out)

    def inverse(self, zeta):
        """Preimage of ``zeta`` under F, polished by damped Newton."""
        zeta = np.asarray(zeta, dtype=complex)
        if np.any(np.abs(zeta) >= 1.0):
            raise DomainError("inverse lens map needs |zeta| < 1")
        z = _lens_map_inverse_raw(zeta)
        for it in range(self.newton_maxiter):
            jet = lens_map_jet(z, 1)
            resid = jet.value - zeta
            if np.all(np.abs(resid) <= self.newton_tol):
                break
            step = resid / jet.coefficient(1)
            trial = z - step
            # halve steps that leave the lens
            for _ in range(30):
                bad = ~in_lens(trial)
                if not np.any(bad):
                    break
                step = np.where(bad, step / 2, step)
                trial = z - step
            z = trial
        else:
            resid = np.abs(_lens_map_raw(z) - zeta)
            raise ConvergenceError(
                "Newton iteration for the inverse lens map did not converge",
                diagnostics={"max_residual": float(np.max(resid)), "iterations": it + 1},
            )
        return z if z.ndim else complex(z)


DEFAULT_MAP = LensMap()


def lens_map(z, check=True):
    """Evaluate F on the lens (array friendly)."""
    return DEFAULT_MAP(z, check=check)


def lens_map_deriv(z, order=1, check=True):
    """Closed-form derivative ``F^(order)`` for ``order`` in 1..4."""
    return DEFAULT_MAP.derivative(z, order, check=check)


def lens_map_inverse(zeta):
    return DEFAULT_MAP.inverse(zeta)


def strip_to_lens(s, phi):
    """Map strip coordinates ``w = s + i phi`` to the lens.

    ``M(z) = exp(w)`` with ``phi`` in the wedge, so ``s -> -inf`` is corner a and
    ``s -> +inf`` is corner b.  Returns ``(z, dz/dw)``.
    """
    g = np.exp(np.asarray(s) + 1j * np.asarray(phi))
    z = (CORNER_A - g * CORNER_B) / (1 - g)
    dz_dw = g * (CORNER_A - CORNER_B) / (1 - g) ** 2
    return z, dz_dw


def apollonius_parameter(radius):
    """Strip abscissa whose level curve is the corner circle of the given radius.

    The set ``|z - a| < (r / sqrt 3) |z - b|`` is a disc around corner a of
    radius close to ``r`` for small ``r``; it is ``s < log(r / sqrt 3)``.
    """
    return np.log(radius / SQRT3)


# ---------------------------------------------------------------------------
# Domains in C^2


class DomainId(Enum):
    UnitDisc = "UnitDisc"
    Lens = "Lens"
    ProductP = "ProductP"
    OmegaX = "OmegaX"
    OmegaY = "OmegaY"
    OmegaZ = "OmegaZ"
    OmegaXp = "OmegaXp"
    OmegaYp = "OmegaYp"
    Omega = "Omega"
    OmegaPrime = "OmegaPrime"


def log4(r):
    return np.log(r) / np.log(4.0)


def cap_bound(r):
    """Upper radius ``1 / (2 r log4 r)`` of the thin piece over ``r > 4``."""
    return 1.0 / (2.0 * r * log4(r))


def annulus_bounds(r):
    """Inner radius window ``|rho - 1/r| < 1/r**3`` of the annular piece."""
    return 1.0 / r - 1.0 / r ** 3, 1.0 / r + 1.0 / r ** 3


@dataclass(frozen=True)
class RadialProfile:
    """Radial description of one unbounded Reinhardt piece.

    ``outer`` is the coordinate index (0 or 1) whose modulus exceeds
    ``r_lower``; the other modulus is bounded by ``kind``: ``"cap"`` means
    ``rho < 1/(2 r log4 r)``, ``"annulus"`` means ``|rho - 1/r| < 1/r**3``.
    """

    outer: int
    kind: str
    r_lower: float = 4.0

    def bounds(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "cap":
            return np.zeros_like(r), cap_bound(r)
        return annulus_bounds(r)

    def contains(self, z1, z2):
        r_out = np.abs(z1) if self.outer == 0 else np.abs(z2)
        rho = np.abs(z2) if self.outer == 0 else np.abs(z1)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "cap":
                inside = rho < cap_bound(r_out)
            else:
                inside = np.abs(rho - 1.0 / r_out) < 1.0 / r_out ** 3
        return (r_out > self.r_lower) & inside


PROFILES = {
    DomainId.OmegaX: RadialProfile(outer=0, kind="cap"),
    DomainId.OmegaY: RadialProfile(outer=1, kind="annulus"),
    DomainId.OmegaXp: RadialProfile(outer=0, kind="annulus"),
    DomainId.OmegaYp: RadialProfile(outer=1, kind="cap"),
}

UNIONS = {
    DomainId.Omega: (DomainId.OmegaX, DomainId.OmegaY, DomainId.OmegaZ),
    DomainId.OmegaPrime: (DomainId.OmegaXp, DomainId.OmegaYp, DomainId.OmegaZ),
}


def contains(d, p):
    """Membership of ``p = (z1, z2)`` (or an ``(N, 2)`` array) in domain ``d``.

    One-dimensional domains read only ``z1``.
    """
    d = DomainId(d)
    p = np.asarray(p, dtype=complex)
    z1, z2 = p[..., 0], p[..., 1]
    if d is DomainId.UnitDisc:
        out = np.abs(z1) < 1.0
    elif d is DomainId.Lens:
        out = in_lens(z1)
    elif d is DomainId.ProductP:
        out = in_lens(z1) & (np.abs(z2) < 1.0)
    elif d is DomainId.OmegaZ:
        out = (np.abs(z1) <= 4.0) & (np.abs(z2) <= 4.0)
    elif d in PROFILES:
        out = PROFILES[d].contains(z1, z2)
    else:
        out = np.zeros(np.shape(z1), dtype=bool)
        for piece in UNIONS[d]:
            out |= contains(piece, p)
    return out if np.ndim(out) else bool(out)


def radius_gap(r):
    """``(1/r - 1/r**3) - 1/(2 r log4 r)``: positive iff the cap misses the annulus."""
    r = np.asarray(r, dtype=float)
    return annulus_bounds(r)[0] - cap_bound(r)


def disjointness_certificate():
    """Analytic check that the cap and annulus pieces never meet for ``r > 4``.

    ``r * gap(r) = 1 - 1/r**2 - 1/(2 log4 r)`` is increasing in ``r`` (both
    subtracted terms decrease), so positivity at ``r = 4`` suffices.
    """
    value_at_4 = 1.0 - 1.0 / 16.0 - 1.0 / (2.0 * log4(4.0))
    return value_at_4 > 0, float(value_at_4)
