"""Deterministic composite Gauss-Legendre integration on the disc, the lens
and half-lines.

Every rule is a fixed tensor of panels, so identical inputs give bit-identical
sums.  Reductions go through :func:`tree_sum` (numpy's pairwise summation on
contiguous data).  Error estimates compare each cell against a cheaper rule
on the same cell and discount differences that are at rounding level.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, PreconditionError, QuadratureDivergence
from .geometry import DELTA_CORNER, SQRT3, WEDGE, strip_to_lens

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution knobs shared by all integrators.

    Parameters
    ----------
    order : int
        Gauss-Legendre points per panel direction (>= 4).
    depth : int
        Refinement level.  On the disc it is the number of dyadic radial levels
        toward ``|z| = 1``; on the lens it sets the subdivision of each graded
        cell.
    corner_grading : float
        Geometric ratio between successive corner layers, in (0, 1).
    corner_layers : int
        Number of graded layers toward each lens corner.
    tail_cutoff : float
        Largest radius integrated explicitly by :func:`integrate_radial_improper`.
    tolerance : float
        Accepted error estimate relative to ``max(1, |value|)``.
    """

    order: int = 16
    depth: int = 8
    corner_grading: float = 0.5
    corner_layers: int = 20
    tail_cutoff: float = 1e150
    tolerance: float = 1e-8

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 4:
            raise PreconditionError("Gauss-Legendre order must be an integer >= 4")
        if int(self.depth) != self.depth or self.depth < 0:
            raise PreconditionError("depth must be a non-negative integer")
        if not 0.0 < self.corner_grading < 1.0:
            raise PreconditionError("corner_grading must lie in (0, 1)")
        if self.corner_layers < 1:
            raise PreconditionError("corner_layers must be positive")
        if not self.tail_cutoff > 4.0:
            raise PreconditionError("tail_cutoff must exceed 4")
        if not self.tolerance > 0.0:
            raise PreconditionError("tolerance must be positive")

    def replace(self, **changes):
        fields = {**self.__dict__, **changes}
        return QuadratureSpec(**fields)


@dataclass(frozen=True)
class IntegralResult:
    value: object
    error_estimate: float
    cells: int
    excluded_estimate: float = 0.0

    def __post_init__(self):
        if not self.error_estimate >= 0.0:
            raise ValueError("error_estimate must be non-negative")


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def tree_sum(values, axis=-1):
    """Pairwise (tree) reduction along ``axis`` on a contiguous copy."""
    values = np.ascontiguousarray(np.moveaxis(np.asarray(values), axis, -1))
    return np.sum(values, axis=-1)


def panel_rule(edges, n):
    """Composite rule: arrays of shape (panels, n) for nodes and weights."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    lo, width = edges[:-1, None], np.diff(edges)[:, None]
    return lo + width * x[None, :], width * w[None, :]


def _trapezoid_rule(n):
    theta = 2 * np.pi * np.arange(n) / n
    return theta[None, :], np.full((1, n), 2 * np.pi / n)


def _tensor(f, xrule, yrule, transform):
    """Integrate ``f`` over a tensor grid of cells.

    Returns the cell sums, of shape (..., panels_x, panels_y), and the matching
    sums of ``|weight * f|`` used to judge rounding.
    """
    (xn, xw), (yn, yw) = xrule, yrule
    X = xn[:, :, None, None]
    Y = yn[None, None, :, :]
    points, jac = transform(X, Y)
    weights = xw[:, :, None, None] * yw[None, None, :, :] * jac
    vals = np.asarray(f(points)) * weights
    cell = tree_sum(tree_sum(vals, axis=-1), axis=-2)
    mag = tree_sum(tree_sum(np.abs(vals), axis=-1), axis=-2)
    return cell, mag


def _error_from_cells(hi, lo, mag):
    diff = np.abs(hi - lo) - 64 * _EPS * mag
    diff = np.clip(diff, 0.0, None)
    if diff.ndim > 2:
        diff = np.max(diff.reshape(-1, *diff.shape[-2:]), axis=0)
    return float(tree_sum(diff.ravel()))


def _check(result, spec, check):
    scale = max(1.0, float(np.max(np.abs(result.value))))
    if check and not result.error_estimate <= spec.tolerance * scale:
        raise AccuracyError(
            f"error estimate {result.error_estimate:.3g} exceeds tolerance "
            f"{spec.tolerance:.3g} (relative to {scale:.3g})",
            result=result,
        )
    return result


def _total(cell):
    return tree_sum(cell.reshape(*cell.shape[:-2], -1))


def _as_value(total):
    total = np.asarray(total)
    return total[()] if total.ndim == 0 else total


def _subdivide(edges, m):
    if m <= 1:
        return np.asarray(edges, dtype=float)
    out = [np.linspace(a, b, m + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate(out + [np.asarray(edges[-1:], dtype=float)])


# ---------------------------------------------------------------------------
# Unit disc


def disc_radial_edges(spec, breaks=()):
    levels = [1.0 - 2.0 ** -l for l in range(1, spec.depth + 1)]
    edges = np.unique(np.array([0.0] + levels + [1.0] + [float(b) for b in breaks]))
    return _subdivide(edges, max(1, spec.depth // 2))


def _graded_angle_edges(angles, spec):
    base = list(np.linspace(0.0, 2 * np.pi, 9))
    q = spec.corner_grading
    for theta in angles:
        for l in range(spec.corner_layers + spec.depth + 1):
            step = (np.pi / 8) * q ** l
            base.extend([theta - step, theta + step])
        base.append(theta)
    edges = np.unique(np.mod(np.array(base), 2 * np.pi))
    edges = np.concatenate([edges, [edges[0] + 2 * np.pi]])
    return edges


def integrate_disc(f, spec=None, singular_angles=(), check=True, radial_breaks=()):
    """Integrate ``f(zeta)`` over the unit disc in polar coordinates.

    Radial panels are dyadic toward ``|zeta| = 1``, with extra panel edges at
    ``radial_breaks`` (radii where ``f`` is not smooth).  The angle uses the
    periodic trapezoidal rule, or Gauss panels graded toward
    ``singular_angles`` when the integrand has boundary point singularities.
    """
    spec = spec or QuadratureSpec()
    redges = disc_radial_edges(spec, radial_breaks)

    def transform(r, theta):
        return r * np.exp(1j * theta), r

    results = []
    for n_r, use_half in ((spec.order, False), (spec.order - 2, True)):
        rrule = panel_rule(redges, n_r)
        if singular_angles:
            trule = panel_rule(_graded_angle_edges(singular_angles, spec), n_r)
        else:
            n_t = 8 * spec.order * max(1, spec.depth // 4)
            trule = _trapezoid_rule(n_t // 2 if use_half else n_t)
        results.append(_tensor(f, rrule, trule, transform))
    (hi, mag), (lo, _) = results
    err = _error_from_cells(hi, lo, mag)
    res = IntegralResult(_as_value(_total(hi)), err, int(np.prod(hi.shape[-2:])))
    return _check(res, spec, check)


# ---------------------------------------------------------------------------
# Lens


def lens_strip_edges(spec, corner_radius=None):
    """Strip abscissae of the graded cells and their layer labels.

    Layer ``l`` toward a corner holds distances between ``q**(l+1)`` and
    ``q**l`` (Apollonius radius); label 0 is the central cell.
    """
    q = spec.corner_grading
    if corner_radius is None:
        corner_radius = max(DELTA_CORNER, q ** spec.corner_layers)
    if not 0.0 < corner_radius < 1.0:
        raise PreconditionError("corner exclusion radius must lie in (0, 1)")
    s_min = np.log(corner_radius / SQRT3)
    nodes = [np.log(1.0 / SQRT3)]
    l = 1
    while np.log(q ** l / SQRT3) > s_min + 1e-12:
        nodes.append(np.log(q ** l / SQRT3))
        l += 1
    nodes.append(s_min)
    left = np.array(nodes[::-1])
    edges = np.concatenate([left, -left[::-1]])
    n_side = len(left) - 1
    labels = np.concatenate([np.arange(n_side, 0, -1), [0], np.arange(1, n_side + 1)])
    return edges, labels


def integrate_lens(f, spec=None, corner_radius=None, check=True):
    """Integrate ``f(z)`` over the lens with graded cells toward both corners.

    The lens is parametrised by strip coordinates ``w = log M(z)``; dyadic
    corner discs become half-lines ``s < const`` so geometric grading is a
    uniform grid in ``s``.  With ``corner_radius`` given, corner discs of that
    (Apollonius) radius are excluded exactly; otherwise the innermost layers
    are extrapolated geometrically and the tail is added to the error
    estimate (infinite when layer sums do not decay).
    """
    spec = spec or QuadratureSpec()
    edges, labels = lens_strip_edges(spec, corner_radius)
    m = max(1, spec.depth // 2)
    sedges = _subdivide(edges, m)
    panel_labels = np.repeat(labels, m)
    panel_side = np.repeat(np.sign(np.arange(len(labels)) - len(labels) // 2), m)
    pedges = np.linspace(WEDGE[0], WEDGE[1], max(2, 4 * m) + 1)

    def transform(s, phi):
        z, dz = strip_to_lens(s, phi)
        return z, np.abs(dz) ** 2

    hi, mag = _tensor(f, panel_rule(sedges, spec.order), panel_rule(pedges, spec.order), transform)
    lo, _ = _tensor(f, panel_rule(sedges, spec.order - 2), panel_rule(pedges, spec.order - 2), transform)
    err = _error_from_cells(hi, lo, mag)
    total = _total(hi)

    excluded = 0.0
    if corner_radius is None:
        per_panel = tree_sum(hi, axis=-1)
        for side in (-1, 1):
            mask = panel_side == side
            lab = panel_labels[mask]
            vals = per_panel[..., mask]
            inner = np.max(lab)
            if inner < 2:
                continue
            l1 = np.abs(tree_sum(vals[..., lab == inner]))
            l2 = np.abs(tree_sum(vals[..., lab == inner - 1]))
            l1, l2 = float(np.max(l1)), float(np.max(l2))
            if l1 == 0.0:
                continue
            ratio = l1 / l2 if l2 > 0 else np.inf
            excluded += l1 * ratio / (1 - ratio) if ratio < 1 else np.inf
    res = IntegralResult(_as_value(total), err + excluded, hi.shape[-2] * hi.shape[-1], excluded)
    return _check(res, spec, check)


# ---------------------------------------------------------------------------
# Improper radial integrals


def integrate_radial_improper(g, lower, spec=None, substitution="log4", check=True):
    """Integrate ``g(r)`` over ``[lower, inf)``.

    ``substitution="log4"`` integrates in ``u = log4 r`` on doubling panels
    ``[u0 2^m, u0 2^(m+1)]`` (suits logarithmic tails); ``"inverse"`` integrates
    in ``t = 1/r`` on halving panels toward ``t = 0`` (suits power tails).
    Panels stop at ``spec.tail_cutoff``; the remainder is extrapolated from
    the last two panel sums.  Non-decaying panel sums raise
    :class:`QuadratureDivergence`.
    """
    spec = spec or QuadratureSpec()
    if lower <= 1.0:
        raise PreconditionError("lower limit must exceed 1")
    ln4 = np.log(4.0)
    if substitution == "log4":
        u0, u_max = np.log(lower) / ln4, np.log(spec.tail_cutoff) / ln4
        n_pan = max(3, int(np.floor(np.log2(u_max / u0))))
        edges = u0 * 2.0 ** np.arange(n_pan + 1)

        def integrand(u):
            with np.errstate(over="ignore", invalid="ignore"):
                return g(np.exp(u * ln4)) * np.exp(u * ln4) * ln4
    elif substitution == "inverse":
        t0, t_min = 1.0 / lower, 1.0 / spec.tail_cutoff
        n_pan = max(3, int(np.floor(np.log2(t0 / t_min))))
        edges = t0 * 2.0 ** -np.arange(n_pan + 1)

        def integrand(t):
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                return g(1.0 / t) / t ** 2
    else:
        raise PreconditionError(f"unknown substitution {substitution!r}")

    m = max(1, spec.depth // 2)
    fine = _subdivide(np.sort(edges), m)
    panels = []
    for n in (spec.order, spec.order - 2):
        x, w = panel_rule(fine, n)
        vals = (integrand(x) * w).reshape(len(edges) - 1, m * n)
        sums = tree_sum(vals, axis=-1)
        mag = tree_sum(np.abs(vals), axis=-1)
        if substitution == "inverse":
            sums, mag = sums[::-1], mag[::-1]
        panels.append((sums, mag))
    (hi, mag), (lo, _) = panels
    if not np.all(np.isfinite(hi)):
        raise QuadratureDivergence("integrand overflowed along the tail", panel_values=hi)

    def ratio_of(last, prev):
        if last == 0.0:
            return 0.0
        return abs(last / prev) if prev != 0 else np.inf

    def tail_with(last, ratio):
        return last * ratio / (1 - ratio) if ratio < 1 else np.inf

    r1, r2 = ratio_of(hi[-1], hi[-2]), ratio_of(hi[-2], hi[-3])
    tail1 = tail_with(hi[-1], r1) if hi[-1] != 0.0 else 0.0
    if not np.isfinite(tail1):
        raise QuadratureDivergence(
            f"panel sums do not decay (last ratio {r1:.3g})", panel_values=hi
        )
    quad_err = float(tree_sum(np.clip(np.abs(hi - lo) - 64 * _EPS * mag, 0, None)))
    tail2 = tail_with(hi[-1], r2) if hi[-1] != 0.0 else 0.0
    tail_err = abs(tail1 - tail2) if np.isfinite(tail2) else abs(tail1)
    value = float(tree_sum(hi)) + tail1
    res = IntegralResult(value, quad_err + tail_err, len(edges) - 1, abs(tail1))
    return _check(res, spec, check)
