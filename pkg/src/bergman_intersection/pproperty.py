"""Probes on the intersection ``S = {rho1 = rho2 = 0}`` of two boundaries in C^2:
sampling, exceptional (complex tangent) points, squared distance functions
and their complex Hessians, and the ``lambda_M = (2M/C) d^2`` rescaling.

Points of C^2 are complex arrays with a trailing axis of length 2.  The real
coordinates used for optimisation are ``(x1, y1, x2, y2)``.
"""
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    CertificationError,
    InconsistencyError,
    InvariantViolation,
    OptimizationError,
    PreconditionError,
    SamplingError,
)

EPS_EXC = 1e-8
RESIDUAL_TOL = 1e-10
FD_STEP = 1e-6


def to_real(p):
    p = np.asarray(p, dtype=complex)
    return np.stack([p[..., 0].real, p[..., 0].imag, p[..., 1].real, p[..., 1].imag], axis=-1)


def to_complex(x):
    x = np.asarray(x, dtype=float)
    return np.stack([x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]], axis=-1)


def _fd_dz(rho, p, h=FD_STEP):
    """``d rho / d z_k`` by central differences in the real coordinates."""
    p = np.asarray(p, dtype=complex)
    out = np.empty(p.shape, dtype=complex)
    for k in range(p.shape[-1]):
        e = np.zeros(p.shape[-1], dtype=complex)
        e[k] = h
        dx = (rho(p + e) - rho(p - e)) / (2 * h)
        dy = (rho(p + 1j * e) - rho(p - 1j * e)) / (2 * h)
        out[..., k] = 0.5 * (dx - 1j * dy)
    return out


@dataclass(frozen=True)
class DefiningPair:
    """Two real defining functions on C^2.

    ``grad1``/``grad2`` return the complex gradients ``(d rho/d z1, d rho/d z2)``;
    when absent, central differences with step ``1e-6`` are used.
    ``start_sampler(rng, n)`` returns ``n`` starting points for Newton.
    """

    rho1: Callable
    rho2: Callable
    grad1: Optional[Callable] = None
    grad2: Optional[Callable] = None
    start_sampler: Optional[Callable] = None
    center: tuple = (0.0, 0.0)
    name: str = "pair"

    def values(self, p):
        return np.stack([self.rho1(p), self.rho2(p)], axis=-1)

    def dz(self, p):
        """Complex gradient matrix ``(d rho_j / d z_k)``, shape (..., 2, 2)."""
        g1 = self.grad1(p) if self.grad1 else _fd_dz(self.rho1, p)
        g2 = self.grad2(p) if self.grad2 else _fd_dz(self.rho2, p)
        return np.stack([g1, g2], axis=-2)

    def real_jacobian(self, p):
        g = self.dz(p)
        # d rho/d z = (rho_x - i rho_y) / 2
        jac = np.empty(g.shape[:-1] + (4,))
        jac[..., 0::2] = 2 * g.real
        jac[..., 1::2] = -2 * g.imag
        return jac

    def normalized_det(self, p):
        """``det(d rho_j / d z_k)`` after scaling each gradient row to unit length."""
        g = self.dz(p)
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.any(norms == 0):
            raise PreconditionError("gradient vanishes at a point of S")
        g = g / norms
        return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]

    def starts(self, rng, n):
        if self.start_sampler is not None:
            return np.asarray(self.start_sampler(rng, n), dtype=complex)
        x = rng.standard_normal((n, 4))
        return to_complex(x) + np.asarray(self.center, dtype=complex)

    def check_gradients(self, points, tol=1e-4):
        """True when both gradients are non-vanishing at all ``points``."""
        g = self.dz(points)
        return bool(np.all(np.linalg.norm(g, axis=-1) > tol))


# ---------------------------------------------------------------------------
# stocked pairs


def two_spheres(r1=1.0, r2=1.0):
    """Spheres ``|z| = r1`` and ``|z - (1, 0)| = r2``; ``det = conj(z2)`` up to scaling."""
    shift = np.array([1.0, 0.0], dtype=complex)
    return DefiningPair(
        rho1=lambda p: np.sum(np.abs(p) ** 2, axis=-1) - r1 ** 2,
        rho2=lambda p: np.sum(np.abs(p - shift) ** 2, axis=-1) - r2 ** 2,
        grad1=lambda p: np.conj(p),
        grad2=lambda p: np.conj(p - shift),
        center=(0.5, 0.0),
        name=f"two_spheres({r1:g},{r2:g})",
    )


def real_planes():
    """``{Im z1 = 0}`` and ``{Im z2 = 0}``; their intersection is totally real."""
    return DefiningPair(
        rho1=lambda p: np.asarray(p)[..., 0].imag,
        rho2=lambda p: np.asarray(p)[..., 1].imag,
        grad1=lambda p: np.broadcast_to(np.array([-0.5j, 0.0]), np.shape(p)),
        grad2=lambda p: np.broadcast_to(np.array([0.0, -0.5j]), np.shape(p)),
        name="real_planes",
    )


def flat_bump(t):
    """``exp(-1/t)`` for ``t > 0`` and 0 otherwise."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _flat_bump_deriv(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def _cap_sampler(radius=0.49, jitter=1e-4):
    """Starts near the unit sphere with ``|z2| < radius``."""

    def sample(rng, n):
        rad = radius * np.sqrt(rng.uniform(size=n))
        z2 = rad * np.exp(2j * np.pi * rng.uniform(size=n))
        z1 = np.sqrt(1 - rad ** 2) * np.exp(2j * np.pi * rng.uniform(size=n))
        p = np.stack([z1, z2], axis=-1)
        return p + jitter * to_complex(rng.standard_normal((n, 4)))

    return sample


def flat_pair():
    """The pair built from ``exp(-1/t)`` whose common zero set is the cap
    ``|z1|^2 + |z2|^2 = 1, |z2| <= 1/2`` of the unit sphere.

    ``rho1`` is flat across ``|z2| = 1/2``, so residuals cannot locate the
    rim of the cap; starts are drawn inside it.
    """

    def rho1(p):
        s = np.sum(np.abs(p) ** 2, axis=-1)
        return flat_bump(s / 3) + flat_bump(np.abs(p[..., 1]) ** 2 - 0.25) - np.exp(-3.0)

    def grad1(p):
        p = np.asarray(p, dtype=complex)
        s = np.sum(np.abs(p) ** 2, axis=-1)
        a = _flat_bump_deriv(s / 3)[..., None] * np.conj(p) / 3
        b = _flat_bump_deriv(np.abs(p[..., 1]) ** 2 - 0.25)
        a[..., 1] += b * np.conj(p[..., 1])
        return a

    return DefiningPair(
        rho1=rho1,
        rho2=lambda p: np.sum(np.abs(p) ** 2, axis=-1) - 1.0,
        grad1=grad1,
        grad2=lambda p: np.conj(p),
        start_sampler=_cap_sampler(),
        name="flat_pair",
    )


def degenerate_pair():
    """A squared sphere: the gradient of ``rho1`` vanishes on its zero set."""
    return DefiningPair(
        rho1=lambda p: (np.sum(np.abs(p) ** 2, axis=-1) - 1.0) ** 2,
        rho2=lambda p: np.asarray(p)[..., 1].imag,
        name="degenerate",
    )


STOCKED_PAIRS = {
    "two_spheres": two_spheres,
    "perturbed_spheres": lambda: two_spheres(1.0, 1.1),
    "real_planes": real_planes,
    "flat_pair": flat_pair,
    "degenerate": degenerate_pair,
}


# ---------------------------------------------------------------------------
# sampling


@dataclass
class ManifoldSample:
    points: np.ndarray
    det_values: np.ndarray
    exceptional_flags: np.ndarray
    eps_exc: float = EPS_EXC

    def to_json(self):
        return json.dumps({
            "points": to_real(self.points).tolist(),
            "det_values": [[float(d.real), float(d.imag)] for d in self.det_values],
            "exceptional_flags": [bool(f) for f in self.exceptional_flags],
            "eps_exc": self.eps_exc,
        })


def _rng(seed):
    # counter-based generator: streams depend only on the seed
    return np.random.Generator(np.random.Philox(seed))


def _newton_project(pair, p, maxiter=60):
    """Damped minimum-norm Newton steps onto ``rho1 = rho2 = 0`` (batched)."""
    x = to_real(p)
    res = np.linalg.norm(pair.values(to_complex(x)), axis=-1)
    for _ in range(maxiter):
        if np.all(res <= RESIDUAL_TOL):
            break
        jac = pair.real_jacobian(to_complex(x))
        step = np.einsum("nij,nj->ni", np.linalg.pinv(jac, rcond=1e-12), pair.values(to_complex(x)))
        t = np.ones(len(x))
        for _ in range(20):
            trial = x - t[:, None] * step
            new = np.linalg.norm(pair.values(to_complex(trial)), axis=-1)
            worse = ~(new < res) & (res > RESIDUAL_TOL)
            if not np.any(worse):
                break
            t = np.where(worse, t / 2, t)
        active = res > RESIDUAL_TOL
        x = np.where(active[:, None], trial, x)
        res = np.where(active, new, res)
    ok = np.isfinite(res) & (res <= RESIDUAL_TOL)
    return to_complex(x), ok


def sample_intersection(pair, n, seed=0, eps_exc=EPS_EXC, max_rounds=20):
    """``n`` points of ``S`` from seeded random starts; failed starts are discarded."""
    if n < 0:
        raise PreconditionError("n must be non-negative")
    if n == 0:
        empty = np.zeros((0, 2), dtype=complex)
        return ManifoldSample(empty, np.zeros(0, dtype=complex), np.zeros(0, dtype=bool), eps_exc)
    rng = _rng(seed)
    found = []
    for _ in range(max_rounds):
        pts, ok = _newton_project(pair, pair.starts(rng, 2 * n))
        found.extend(pts[ok])
        if len(found) >= n:
            break
    if len(found) < n:
        raise SamplingError(f"only {len(found)} of {n} starts converged onto S")
    pts = np.array(found[:n])
    if not pair.check_gradients(pts):
        raise InvariantViolation(f"a defining gradient of {pair.name} vanishes on S")
    det = pair.normalized_det(pts)
    return ManifoldSample(pts, det, np.abs(det) <= eps_exc, eps_exc)


def exceptional_points(pair, sample, eps_exc=EPS_EXC, dedupe_tol=1e-6):
    """Points of ``S`` with ``det(d rho_j/d z_k) = 0``.

    Every sample point seeds a Levenberg-Marquardt solve of
    ``(rho1, rho2, Re det, Im det) = 0``; converged solutions are merged
    when closer than ``dedupe_tol``.
    """

    def residual(x):
        p = to_complex(x)
        d = pair.normalized_det(p)
        return np.concatenate([pair.values(p), [d.real, d.imag]])

    sols = []
    for p in np.asarray(sample.points):
        try:
            fit = least_squares(residual, to_real(p), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        except PreconditionError:
            continue
        r = residual(fit.x)
        if np.all(np.abs(r[:2]) <= RESIDUAL_TOL) and np.hypot(r[2], r[3]) <= eps_exc:
            sols.append(fit.x)
    out = []
    for x in sorted(sols, key=tuple):
        if all(np.linalg.norm(x - y) > dedupe_tol for y in out):
            out.append(x)
    return [tuple(to_complex(x)) for x in out]


# ---------------------------------------------------------------------------
# distance functions and complex Hessians


@dataclass(frozen=True)
class Patch:
    """Parametrised piece ``t -> param(t)`` of a real submanifold of C^2.

    ``lower``/``upper`` bound the parameters; nearest points on that bound
    are outside the patch's trust region.  ``dparam(t)`` returns the complex
    tangent vectors, shape (len(t), 2); without it the stationarity test is
    limited by finite-difference Jacobians and loosened to ``1e-8``.
    """

    param: Callable
    lower: tuple
    upper: tuple
    name: str = "patch"
    dparam: Optional[Callable] = None


def real_plane_patch(extent=10.0):
    return Patch(
        lambda t: np.array([t[0], t[1]], dtype=complex), (-extent,) * 2, (extent,) * 2, "real_plane",
        dparam=lambda t: np.eye(2, dtype=complex),
    )


def circle_patch():
    """``{|z1| = 1, z2 = 0}`` parametrised by angle."""
    return Patch(
        lambda t: np.array([np.exp(1j * t[0]), 0.0]), (-np.pi,), (3 * np.pi,), "circle",
        dparam=lambda t: np.array([[1j * np.exp(1j * t[0]), 0.0]]),
    )


def sphere_cap_patch(radius=0.6):
    """Intersection of the two unit spheres, upper half, over ``z2 = u + iv``."""

    def param(t):
        z2 = t[0] + 1j * t[1]
        return np.array([0.5 + 1j * np.sqrt(max(0.75 - abs(z2) ** 2, 0.0)), z2])

    def dparam(t):
        h = np.sqrt(0.75 - t[0] ** 2 - t[1] ** 2)
        return np.array([[-1j * t[0] / h, 1.0], [-1j * t[1] / h, 1j]])

    return Patch(param, (-radius,) * 2, (radius,) * 2, "two_spheres_cap", dparam=dparam)


STOCKED_PATCHES = {
    "real_plane": real_plane_patch,
    "circle": circle_patch,
    "two_spheres_cap": sphere_cap_patch,
}


def distance_sq(patch, x, seed=0, n_starts=8, tol=1e-12):
    """Squared Euclidean distance from ``x`` to the patch (best of ``n_starts``)."""
    x = np.asarray(x, dtype=complex)
    target = to_real(x)
    lo, hi = np.asarray(patch.lower, float), np.asarray(patch.upper, float)

    def resid(t):
        return to_real(patch.param(t)) - target

    if patch.dparam is not None:
        def jac(t):
            return to_real(np.asarray(patch.dparam(t))).T
    else:
        jac, tol = "3-point", max(tol, 1e-8)
    rng = _rng(seed)
    starts = lo + (hi - lo) * rng.uniform(size=(n_starts, len(lo)))
    best = None
    for t0 in starts:
        fit = least_squares(resid, t0, jac=jac, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        t, r, J = fit.x, fit.fun, fit.jac
        if callable(jac) and np.all(fit.active_mask == 0):
            # the bounded solver stops on step size; finish with Gauss-Newton,
            # which contracts linearly at rate ~ curvature * distance
            for _ in range(200):
                if np.linalg.norm(J.T @ r) <= tol * max(1.0, np.linalg.norm(r)):
                    break
                t_new = t - np.linalg.lstsq(J, r, rcond=None)[0]
                if np.any(t_new <= lo) or np.any(t_new >= hi):
                    break
                t, r, J = t_new, resid(t_new), jac(t_new)
        grad = J.T @ r
        if np.linalg.norm(grad) > tol * max(1.0, np.linalg.norm(r)):
            continue
        val = float(r @ r)
        if best is None or val < best:
            best = val
    if best is None:
        raise OptimizationError(f"no start reached a stationary point of the distance to {patch.name}")
    return best


@dataclass
class HessianReport:
    point: np.ndarray
    matrix: np.ndarray
    min_eigenvalue: float
    hermitian_residual: float = 0.0

    def to_json(self):
        pt = np.atleast_1d(np.asarray(self.point, dtype=complex))
        return json.dumps({
            "point": [v for z in pt for v in (float(z.real), float(z.imag))],
            "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix],
            "min_eigenvalue": self.min_eigenvalue,
        })


def _min_eig_hermitian(m):
    if m.shape == (1, 1):
        return float(m[0, 0].real)
    a, d, b = m[0, 0].real, m[1, 1].real, m[0, 1]
    return float((a + d) / 2 - np.hypot((a - d) / 2, abs(b)))


def complex_hessian(f, x, h=1e-4, herm_tol=1e-6):
    """Levi matrix ``d^2 f / dz_j dconj(z_k)`` by central differences.

    Each coordinate plane gets the 3x3 (9-point) stencil.  The mixed
    derivative for the ordered pair ``(a, b)``, ``a < b``, uses the
    diagonal corners and ``(b, a)`` the anti-diagonal ones; both are
    second-order accurate for C^2 inputs, so their disagreement shows up
    as a non-Hermitian residual exactly when ``f`` is not smooth at ``x``.
    """
    if not 1e-6 <= h <= 1e-3:
        raise PreconditionError("step must lie in [1e-6, 1e-3]")
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    n = x.size
    base = np.concatenate([[z.real, z.imag] for z in x])

    def fr(v):
        z = v[0::2] + 1j * v[1::2]
        return float(f(z if n > 1 else z[0]))

    m = 2 * n
    f0 = fr(base)
    eye = np.eye(m) * h
    axis = {(a, s): fr(base + s * eye[a]) for a in range(m) for s in (1, -1)}
    hess = np.empty((m, m))
    for a in range(m):
        hess[a, a] = (axis[a, 1] - 2 * f0 + axis[a, -1]) / h ** 2
        for b in range(a + 1, m):
            star = axis[a, 1] + axis[a, -1] + axis[b, 1] + axis[b, -1] - 2 * f0
            diag = fr(base + eye[a] + eye[b]) + fr(base - eye[a] - eye[b])
            anti = fr(base + eye[a] - eye[b]) + fr(base - eye[a] + eye[b])
            hess[a, b] = (diag - star) / (2 * h ** 2)
            hess[b, a] = (star - anti) / (2 * h ** 2)
    xx, yy = hess[0::2, 0::2], hess[1::2, 1::2]
    xy, yx = hess[0::2, 1::2], hess[1::2, 0::2]
    levi = 0.25 * (xx + yy) + 0.25j * (xy - yx)
    resid = float(np.max(np.abs(levi - levi.conj().T)))
    # relative to the matrix scale, so that rescaling f does not trip it
    if resid > herm_tol * max(1.0, float(np.max(np.abs(levi)))):
        raise InconsistencyError(f"Levi matrix not Hermitian (residual {resid:.3g})")
    levi = 0.5 * (levi + levi.conj().T)
    return HessianReport(x, levi, _min_eig_hermitian(levi), resid)


@dataclass
class PshCertificate:
    C: float
    scaled_min: float
    M: float
    reports: list = field(default_factory=list)


def psh_certify(patch, region, M, h=1e-4, c_min=1e-6, seed=0):
    """Certify strict plurisubharmonicity of ``d^2`` on sampled ``region`` points.

    ``C`` is the smallest Levi eigenvalue of ``d^2`` over the region; the
    rescaled ``lambda_M = (2M/C) d^2`` then has Levi eigenvalues ``>= 2M``.
    ``C <= c_min`` (the finite-difference noise floor) fails certification.
    """
    if M < 0:
        raise PreconditionError("M must be non-negative")
    region = np.atleast_2d(np.asarray(region, dtype=complex))

    def d2(z):
        return distance_sq(patch, z, seed=seed)

    reports = [complex_hessian(d2, p, h) for p in region]
    C = min(r.min_eigenvalue for r in reports)
    if not C > c_min:
        worst = region[int(np.argmin([r.min_eigenvalue for r in reports]))]
        raise CertificationError(
            f"smallest Levi eigenvalue {C:.3g} at {worst.tolist()} is not positive"
        )
    scale = 2 * M / C
    scaled = min(complex_hessian(lambda z: scale * d2(z), p, h).min_eigenvalue for p in region)
    return PshCertificate(C, scaled, M, reports)
