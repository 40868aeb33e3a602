"""Monomial moments of the Reinhardt domains and Hilbert-Schmidt diagnostics
for the Hankel operator with symbol ``conj(z1 z2)``.

All moments ``c2[j, k] = int |z1|^(2j) |z2|^(2k) dV`` are stored as natural
logarithms; pieces are combined with log-sum-exp so nothing overflows for
indices in the hundreds.

For a Reinhardt domain the normalised monomials ``e = z^a / c[a]`` form an
orthonormal basis, and

    ||H e_a||^2 = c2[a + (1,1)] / c2[a] - c2[a] / c2[a - (1,1)],

where the second ratio is the squared norm of the projection onto
``z^(a - (1,1))`` and is dropped when that monomial does not exist.
"""
import csv
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from math import lgamma, log, pi
from types import MappingProxyType

import numpy as np
from scipy.special import expn, logsumexp

from .errors import PreconditionError, QuadratureDivergence
from .geometry import PROFILES, UNIONS, DomainId
from .quadrature import QuadratureSpec, gauss_legendre, integrate_radial_improper, panel_rule

logger = logging.getLogger(__name__)

LN4 = log(4.0)
R_LOWER = 4.0


class Method(Enum):
    ClosedForm = "ClosedForm"
    Quadrature = "Quadrature"


PIECE_DOMAINS = (DomainId.OmegaX, DomainId.OmegaY, DomainId.OmegaXp, DomainId.OmegaYp, DomainId.OmegaZ)
MOMENT_DOMAINS = PIECE_DOMAINS + (DomainId.Omega, DomainId.OmegaPrime)


def _check_indices(j, k):
    if int(j) != j or int(k) != k or j < 0 or k < 0:
        raise PreconditionError("moment indices must be non-negative integers")


def _pieces(d):
    d = DomainId(d)
    if d not in MOMENT_DOMAINS:
        raise PreconditionError(f"no moments for domain {d.value}")
    return UNIONS.get(d, (d,))


def _orient(piece, j, k):
    """``(p_out, p_in)``: exponents on the unbounded and bounded coordinates."""
    prof = PROFILES[piece]
    return (j, k) if prof.outer == 0 else (k, j)


def piece_admissible(piece, j, k):
    """Finiteness of the moment on a single piece (closed-form exponent test).

    The tail in the outer radius behaves like ``r^(2(p_out - p_in) - 1) /
    (log r)^(2 p_in + 2)`` on a cap and ``r^(2(p_out - p_in) - 3)`` on an
    annulus; both are integrable iff ``p_out <= p_in``.
    """
    _check_indices(j, k)
    if DomainId(piece) is DomainId.OmegaZ:
        return True
    p_out, p_in = _orient(piece, j, k)
    return p_out <= p_in


def admissible(d, j, k):
    """Whether ``z1^j z2^k`` lies in the Bergman space of ``d``."""
    return all(piece_admissible(p, j, k) for p in _pieces(d))


# ---------------------------------------------------------------------------
# closed forms


def log_z_moment(j, k):
    """Bidisc of radius 4: ``pi^2 4^(2j+2) 4^(2k+2) / ((j+1)(k+1))``."""
    return 2 * log(pi) + (2 * j + 2 * k + 4) * LN4 - (log(j + 1) + log(k + 1))


def log_cap_moment(p_out, p_in):
    """Cap piece ``rho < 1/(2 r log4 r)``, ``r > 4``.

    With ``n = 2 p_in + 2`` and ``u = log4 r`` the radial integral is
    ``4 pi^2 / n * 2^-n * ln4 * E_n(2 (p_in - p_out) ln4)``.
    """
    if p_out > p_in:
        return np.inf
    n = 2 * p_in + 2
    log_en = log_expint(n, 2 * (p_in - p_out) * LN4)
    return log(4 * pi ** 2 / n * LN4) + log_en - n * log(2.0)


def log_expint(n, x):
    """``log E_n(x)`` for integer ``n >= 2`` and ``x >= 0``.

    ``x = 0`` gives ``1/(n-1)``; ``0 < x < 1`` uses scipy's ``expn``;
    otherwise the continued fraction for ``e^x E_n(x)`` (modified Lentz),
    which stays in range where ``E_n`` itself underflows.
    """
    if x == 0:
        return -log(n - 1)
    if x < 1:
        return log(expn(n, x))
    tiny = 1e-300
    b = x + n
    c, d = 1 / tiny, 1 / b
    h = d
    for i in range(1, 10_000):
        a = -i * (n - 1 + i)
        b += 2
        d = 1 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1) < 1e-16:
            break
    return log(h) - x


def _log_binom(n, i):
    return lgamma(n + 1) - lgamma(i + 1) - lgamma(n - i + 1)


def log_annulus_moment(p_out, p_in):
    """Annular piece ``|rho - 1/r| < 1/r^3``, ``r > 4``.

    The inner integral is ``(2/n) r^(-3n) sum_{i odd} C(n, i) r^(2(n - i))``
    (no cancellation), and each term integrates to ``4^-m / m`` with
    ``m = 2 (p_in + i - p_out)``.
    """
    if p_out > p_in:
        return np.inf
    n = 2 * p_in + 2
    terms = []
    for i in range(1, n + 1, 2):
        m = 2 * (p_in + i - p_out)
        terms.append(_log_binom(n, i) - m * LN4 - log(m))
    return log(4 * pi ** 2 * 2 / n) + float(logsumexp(np.sort(terms)))


def printed_cap_display(k):
    """Reference diagonal cap constant ``4 pi^2 / (2 (2k+2) (2k+1))``.

    The derived closed form equals this times ``ln4 / 2^(2k+1)``; it is kept
    for the comparison report.
    """
    return 4 * pi ** 2 / (2 * (2 * k + 2) * (2 * k + 1))


# ---------------------------------------------------------------------------
# quadrature


def _log_disc_moment_quad(p, radius=R_LOWER, spec=None):
    """``log(2 pi int_0^radius r^(2p+1) dr)`` by Gauss-Legendre panels."""
    spec = spec or QuadratureSpec()
    n = max(spec.order, p + 2)
    x, w = panel_rule(np.linspace(0.0, 1.0, 5), n)
    # scale to [0, radius] and factor out radius^(2p+2) to stay in range
    s = np.sum(w * x ** (2 * p + 1))
    return log(2 * pi) + (2 * p + 2) * log(radius) + log(s)


def _cap_log_integrand(p_out, p_in):
    n = 2 * p_in + 2

    def logg(r):
        lr = np.log(r)
        return log(4 * pi ** 2 / n) + (2 * p_out + 1) * lr - n * (log(2.0) + lr + np.log(lr / LN4))

    return logg


def _annulus_log_integrand(p_out, p_in):
    n = 2 * p_in + 2
    odd = np.arange(1, n + 1, 2)
    lbin = np.array([_log_binom(n, i) for i in odd])

    def logg(r):
        lr = np.log(r)[..., None]
        expo = 2 * (n - odd) - 3 * n + 2 * p_out + 1
        return log(4 * pi ** 2 * 2 / n) + logsumexp(lbin + expo * lr, axis=-1)

    return logg


def _log_piece_quad(piece, j, k, spec):
    if DomainId(piece) is DomainId.OmegaZ:
        return _log_disc_moment_quad(j, spec=spec) + _log_disc_moment_quad(k, spec=spec)
    p_out, p_in = _orient(piece, j, k)
    if PROFILES[piece].kind == "cap":
        logg, sub = _cap_log_integrand(p_out, p_in), "log4"
    else:
        logg, sub = _annulus_log_integrand(p_out, p_in), "inverse"
    # rescale by the value at the lower limit so the panels stay O(1)
    shift = float(logg(np.array(R_LOWER)))

    def g(r):
        with np.errstate(over="ignore"):
            return np.exp(logg(r) - shift)

    res = integrate_radial_improper(g, R_LOWER, spec, substitution=sub)
    return shift + log(res.value)


# ---------------------------------------------------------------------------
# moments


def log_piece_moment(piece, j, k, method=Method.ClosedForm, spec=None):
    """Natural log of the moment of ``z1^j z2^k`` on one piece, or ``inf``."""
    _check_indices(j, k)
    piece = DomainId(piece)
    if Method(method) is Method.Quadrature:
        return _log_piece_quad(piece, j, k, spec or QuadratureSpec())
    if piece is DomainId.OmegaZ:
        return log_z_moment(j, k)
    p_out, p_in = _orient(piece, j, k)
    if PROFILES[piece].kind == "cap":
        return log_cap_moment(p_out, p_in)
    return log_annulus_moment(p_out, p_in)


def moment_details(d, j, k, method=Method.ClosedForm, spec=None):
    """Per-piece log moments, the combined value and any divergence messages."""
    _check_indices(j, k)
    method = Method(method)
    pieces, notes = {}, []
    for piece in _pieces(d):
        try:
            pieces[piece] = log_piece_moment(piece, j, k, method, spec)
        except QuadratureDivergence as exc:
            pieces[piece] = np.inf
            notes.append(f"{piece.value}: {exc}")
    vals = np.sort(np.array(list(pieces.values())))
    total = np.inf if np.isinf(vals).any() else float(logsumexp(vals))
    return {"log_c2": total, "pieces": pieces, "divergence": notes}


def moment(d, j, k, method=Method.ClosedForm, spec=None):
    """``log c2[j, k]`` on domain ``d``; ``inf`` if the monomial is not square integrable."""
    info = moment_details(d, j, k, method, spec)
    for msg in info["divergence"]:
        logger.info("moment (%d, %d) on %s diverges: %s", j, k, DomainId(d).value, msg)
    return info["log_c2"]


@dataclass(frozen=True)
class MomentTable:
    domain: DomainId
    entries: MappingProxyType
    method: Method = Method.ClosedForm

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def log_c2(self, j, k):
        try:
            return self.entries[(j, k)]
        except KeyError:
            raise PreconditionError(f"moment ({j}, {k}) missing from table") from None

    def to_csv(self, fh=None):
        own = fh is None
        fh = fh or io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["domain", "j", "k", "log_c2", "method"])
        for (j, k), v in sorted(self.entries.items()):
            w.writerow([self.domain.value, j, k, f"{v:.17g}", self.method.value])
        return fh.getvalue() if own else None

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise PreconditionError("empty moment table")
        entries = {(int(r["j"]), int(r["k"])): float(r["log_c2"]) for r in rows}
        return cls(DomainId(rows[0]["domain"]), entries, Method(rows[0]["method"]))


def build_table(d, kmax, method=Method.ClosedForm, diagonal=None, spec=None):
    """Moment table of ``d`` for indices up to ``kmax``.

    ``diagonal`` defaults to True for the unions (only diagonal moments are
    finite there) and False for single pieces, where the full grid is filled.
    """
    d = DomainId(d)
    if diagonal is None:
        diagonal = d in UNIONS
    if diagonal:
        idx = [(k, k) for k in range(kmax + 1)]
    else:
        idx = [(j, k) for j in range(kmax + 1) for k in range(kmax + 1)]
    return MomentTable(d, {(j, k): moment(d, j, k, method, spec) for j, k in idx}, Method(method))


# ---------------------------------------------------------------------------
# Hankel norms


def _ratio(table, a, b):
    la, lb = table.log_c2(*a), table.log_c2(*b)
    if not (np.isfinite(la) and np.isfinite(lb)):
        raise PreconditionError(f"moments {a} and {b} must both be finite")
    return float(np.exp(la - lb))


def hankel_norm_sq(table, j, k):
    """``||H e_{jk}||^2`` from a moment table (projection term dropped at the edge)."""
    out = _ratio(table, (j + 1, k + 1), (j, k))
    if j > 0 and k > 0:
        out -= _ratio(table, (j, k), (j - 1, k - 1))
    return out


def hankel_norm_sq_diag(d, k, table):
    """``||H e_k||^2`` for the diagonal basis vector ``e_k ~ (z1 z2)^k``."""
    if DomainId(d) is not table.domain:
        raise PreconditionError("table belongs to a different domain")
    if k < 0:
        raise PreconditionError("k must be non-negative")
    return hankel_norm_sq(table, k, k)


@dataclass(frozen=True)
class HsDiagnostics:
    """Diagonal Hilbert-Schmidt diagnostics.

    ``ratios[k] = c2[k+1]/c2[k]``; ``differences[k] = ||H e_k||^2``, which is
    ``ratios[0]`` at ``k = 0`` and ``ratios[k] - ratios[k-1]`` afterwards;
    ``partial_sums[K]`` is the sum of ``differences[0..K]``.
    """

    domain: DomainId
    ratios: np.ndarray
    differences: np.ndarray
    partial_sums: np.ndarray
    converged: bool
    decay_exponent: float = field(default=float("nan"))

    def to_csv(self):
        fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "ratio", "difference", "partial_sum"])
        for k, row in enumerate(zip(self.ratios, self.differences, self.partial_sums)):
            w.writerow([k] + [f"{v:.17g}" for v in row])
        return fh.getvalue()


def decay_exponent(differences, kmin=8, kmax=128):
    """Least-squares ``p`` in ``d_k ~ C k^-p`` over ``kmin <= k <= kmax``."""
    k = np.arange(len(differences))
    sel = (k >= kmin) & (k <= kmax)
    if sel.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(k[sel]), np.log(np.asarray(differences)[sel]), 1)
    return float(-slope)


def hs_partial_sum(d, K, table, rtol=1e-2):
    """Partial Hilbert-Schmidt sums over the diagonal basis up to ``K``.

    Converged iff ``|S_K - S_{K//2}| / S_K < rtol``.
    """
    if K < 2:
        raise PreconditionError("K must be at least 2")
    if DomainId(d) is not table.domain:
        raise PreconditionError("table belongs to a different domain")
    ratios = np.array([_ratio(table, (k + 1, k + 1), (k, k)) for k in range(K + 1)])
    diffs = np.empty_like(ratios)
    diffs[0] = ratios[0]
    diffs[1:] = ratios[1:] - ratios[:-1]
    sums = np.cumsum(diffs)
    conv = bool(abs(sums[K] - sums[K // 2]) < rtol * abs(sums[K]))
    return HsDiagnostics(DomainId(d), ratios, diffs, sums, conv, decay_exponent(diffs))


@dataclass(frozen=True)
class DoubleSumDiagnostics:
    K: np.ndarray
    partial_sums: np.ndarray
    diagonal_sums: np.ndarray
    row_sums: np.ndarray
    slope: float
    diverging: bool


def hs_double_sum_polydisc(K, table, min_slope=0.5):
    """Partial sums of ``||H e_{jk}||^2`` over ``j, k <= K`` on the bidisc piece.

    Diverging iff the least-squares slope of ``S(K')`` against ``K'`` over the
    last octave ``K/2 <= K' <= K`` is at least ``min_slope``.
    """
    if table.domain is not DomainId.OmegaZ:
        raise PreconditionError("double sums need the bidisc (OmegaZ) table")
    if K < 2:
        raise PreconditionError("K must be at least 2")
    norms = np.array([[hankel_norm_sq(table, j, k) for k in range(K + 1)] for j in range(K + 1)])
    cum = np.cumsum(np.cumsum(norms, axis=0), axis=1)
    partial = np.diagonal(cum).copy()
    diag = np.cumsum(np.diagonal(norms))
    ks = np.arange(K + 1)
    sel = ks >= K // 2
    slope = float(np.polyfit(ks[sel], partial[sel], 1)[0])
    return DoubleSumDiagnostics(ks, partial, diag, norms.sum(axis=1), slope, slope >= min_slope)


def gram_hankel_norms(K=1, degree=4, radius=R_LOWER, n_r=24, n_theta=32):
    """Brute-force ``||H e_{jk}||^2`` on the bidisc for ``j, k <= K``.

    Inner products of all monomials of total degree ``<= degree + 2`` are
    computed by tensor quadrature in polar coordinates (Gauss-Legendre in
    the radii, trapezoid in the angles); the projection is the least-squares
    solve against the Gram matrix of monomials of degree ``<= degree``.
    """
    x, w = gauss_legendre(n_r)
    r, wr = radius * x, radius * w * radius * x
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    wt = np.full(n_theta, 2 * np.pi / n_theta)
    z = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    wz = (wr[:, None] * wt[None, :]).ravel()
    z1, z2 = z[:, None], z[None, :]
    weight = wz[:, None] * wz[None, :]
    basis = [(a, b) for a in range(degree + 1) for b in range(degree + 1 - a)]
    # scale monomials by radius^-(a+b) to keep the Gram matrix well conditioned
    mons = np.stack([(z1 / radius) ** a * (z2 / radius) ** b for a, b in basis])
    gram = np.einsum("mij,nij,ij->mn", mons, np.conj(mons), weight)
    out = {}
    for j in range(K + 1):
        for k in range(K + 1):
            e = (z1 / radius) ** j * (z2 / radius) ** k
            e = e / np.sqrt(np.sum(np.abs(e) ** 2 * weight))
            f = np.conj(z1 * z2) * e
            rhs = np.einsum("mij,ij,ij->m", np.conj(mons), f, weight)
            coef = np.linalg.solve(gram, rhs)
            proj_sq = float(np.real(np.vdot(coef, gram @ coef)))
            out[(j, k)] = float(np.sum(np.abs(f) ** 2 * weight)) - proj_sq
    return out


# ---------------------------------------------------------------------------
# reports


def cap_comparison(kmax=16, spec=None):
    """Diagonal cap moments: the printed constant against the derived closed
    form and quadrature.  ``ratio`` is derived / printed and is expected to
    equal ``ln4 / 2^(2k+1)``.  The ``log4_power_*`` columns record the power
    of ``log4 r`` in the intermediate integrand, which also differs.
    """
    rows = []
    for k in range(kmax + 1):
        derived = log_cap_moment(k, k)
        quad = log_piece_moment(DomainId.OmegaX, k, k, Method.Quadrature, spec)
        printed = log(printed_cap_display(k))
        rows.append({
            "k": k,
            "log_printed": printed,
            "log_derived": derived,
            "log_quadrature": quad,
            "ratio": float(np.exp(derived - printed)),
            "expected_ratio": LN4 / 2.0 ** (2 * k + 1),
            "derived_vs_quadrature": abs(derived - quad),
            # power of log4(r) in the intermediate cap integral: reference vs derived
            "log4_power_printed": 2 * (2 * k + 2),
            "log4_power_derived": 2 * k + 2,
        })
    return rows


def dominance(d, k):
    """Fraction of ``c2[k, k]`` on ``d`` carried by each piece."""
    info = moment_details(d, k, k)
    total = info["log_c2"]
    return {p.value: float(np.exp(v - total)) for p, v in info["pieces"].items()}
