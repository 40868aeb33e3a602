import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from math import log, pi

from bergman_intersection.errors import PreconditionError
from bergman_intersection.geometry import DomainId
from bergman_intersection.hankel import (
    LN4,
    Method,
    MomentTable,
    admissible,
    build_table,
    cap_comparison,
    dominance,
    gram_hankel_norms,
    hankel_norm_sq,
    hankel_norm_sq_diag,
    hs_double_sum_polydisc,
    hs_partial_sum,
    log_annulus_moment,
    log_cap_moment,
    log_piece_moment,
    moment,
    printed_cap_display,
)


def test_bidisc_volume():
    assert np.exp(moment(DomainId.OmegaZ, 0, 0)) == pytest.approx(256 * pi ** 2, rel=1e-14)


def test_bidisc_second_moment():
    # (pi 4^4 / 2)^2 = 16384 pi^2
    assert np.exp(moment(DomainId.OmegaZ, 1, 1)) == pytest.approx(16384 * pi ** 2, rel=1e-14)


def test_annulus_base_moment():
    # 4 pi^2 int_4^inf 2 r^-3 dr = pi^2 / 4
    assert np.exp(log_annulus_moment(0, 0)) == pytest.approx(pi ** 2 / 4, rel=1e-14)


@given(st.integers(0, 40))
@settings(max_examples=41, deadline=None)
def test_cap_diagonal_closed_form(k):
    # E_n(0) = 1/(n-1): 4 pi^2 ln4 / ((2k+2)(2k+1) 2^(2k+2))
    expect = log(4 * pi ** 2 * LN4) - log((2 * k + 2) * (2 * k + 1)) - (2 * k + 2) * log(2)
    assert log_cap_moment(k, k) == pytest.approx(expect, abs=1e-12)


def test_cap_against_scipy_quad():
    from scipy.integrate import quad

    # outer exponent below inner: integrand 4 pi^2 r^(2j+1) (2 r log4 r)^-n / n
    j, k = 1, 3
    n = 2 * k + 2
    val, _ = quad(lambda r: 4 * pi ** 2 * r ** (2 * j + 1) * (2 * r * np.log(r) / LN4) ** -n / n,
                  4, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    assert log_cap_moment(j, k) == pytest.approx(log(val), abs=1e-9)


def test_annulus_against_direct_subtraction():
    from scipy.integrate import quad

    j, k = 2, 1  # outer exponent k on z2, inner j: p_out = 1, p_in = 2
    n = 2 * j + 2

    def inner(r):
        return ((1 / r + 1 / r ** 3) ** n - (1 / r - 1 / r ** 3) ** n) / n

    val, _ = quad(lambda r: 4 * pi ** 2 * r ** (2 * k + 1) * inner(r), 4, 200, epsrel=1e-13, limit=200)
    tail, _ = quad(lambda r: 4 * pi ** 2 * r ** (2 * k + 1) * inner(r), 200, np.inf, epsrel=1e-10, limit=200)
    assert log_annulus_moment(1, 2) == pytest.approx(log(val + tail), abs=1e-8)


@given(st.integers(0, 12), st.integers(0, 12))
@settings(max_examples=40, deadline=None)
def test_bidisc_symmetry(j, k):
    assert moment(DomainId.OmegaZ, j, k) == moment(DomainId.OmegaZ, k, j)


@given(st.integers(0, 30), st.integers(0, 30))
@settings(max_examples=100, deadline=None)
def test_admissibility_is_diagonal(j, k):
    for d in (DomainId.Omega, DomainId.OmegaPrime):
        assert admissible(d, j, k) == (j == k)
        assert np.isfinite(moment(d, j, k)) == (j == k)
    assert admissible(DomainId.OmegaZ, j, k)


def test_admissible_examples():
    assert not admissible(DomainId.Omega, 2, 1)
    assert admissible(DomainId.Omega, 3, 3)
    assert admissible(DomainId.OmegaZ, 5, 0)
    assert admissible(DomainId.OmegaX, 1, 2) and not admissible(DomainId.OmegaX, 2, 1)
    assert admissible(DomainId.OmegaY, 2, 1) and not admissible(DomainId.OmegaY, 1, 2)


def test_negative_index_rejected():
    with pytest.raises(PreconditionError):
        moment(DomainId.Omega, -1, 0)


def test_no_overflow_at_large_k():
    v = moment(DomainId.Omega, 512, 512)
    assert np.isfinite(v) and v > 700  # far beyond binary64 range if exponentiated


@pytest.mark.parametrize("piece", ["OmegaX", "OmegaY", "OmegaXp", "OmegaYp"])
def test_quadrature_matches_closed_form(piece):
    for k in (0, 3, 8):
        for j in (k, k + 1, max(k - 1, 0)):
            cf = log_piece_moment(piece, j, k)
            q = log_piece_moment(piece, j, k, Method.Quadrature) if np.isfinite(cf) else None
            if q is not None:
                assert abs(cf - q) < 1e-8


def test_quadrature_flags_divergence():
    assert np.isinf(moment(DomainId.Omega, 2, 1, Method.Quadrature))


def test_omega_and_omega_prime_diagonals_identical():
    for k in range(0, 300, 7):
        assert moment(DomainId.Omega, k, k) == moment(DomainId.OmegaPrime, k, k)


def test_table_csv_round_trip():
    t = build_table(DomainId.Omega, 5)
    back = MomentTable.from_csv(t.to_csv())
    assert dict(back.entries) == dict(t.entries)
    with pytest.raises(TypeError):
        t.entries[(0, 0)] = 1.0


def test_missing_entry_is_precondition_error():
    t = build_table(DomainId.Omega, 3)
    with pytest.raises(PreconditionError):
        hankel_norm_sq_diag(DomainId.Omega, 3, t)


def test_edge_convention_k0():
    t = build_table(DomainId.Omega, 2)
    r0 = np.exp(t.log_c2(1, 1) - t.log_c2(0, 0))
    assert hankel_norm_sq_diag(DomainId.Omega, 0, t) == pytest.approx(r0, rel=1e-15)


def test_hs_diagnostics_identities():
    t = build_table(DomainId.Omega, 65)
    h = hs_partial_sum(DomainId.Omega, 64, t)
    assert np.all(h.differences > 0)
    # telescoping: sum_{k=1}^K d_k = r_K - r_0
    tele = h.partial_sums - h.differences[0]
    np.testing.assert_allclose(tele[1:], h.ratios[1:] - h.ratios[0], rtol=1e-12)
    np.testing.assert_allclose(h.partial_sums, h.ratios, rtol=1e-12)


def test_hs_differences_match_bidisc_asymptotics():
    # the bidisc dominates: d_k ~ 256 (2k^2 + 4k + 1) / ((k+1)^2 (k+2)^2)
    t = build_table(DomainId.Omega, 41)
    h = hs_partial_sum(DomainId.Omega, 40, t)
    k = np.arange(10, 41)
    approx = 256 * (2 * k ** 2 + 4 * k + 1) / ((k + 1) ** 2 * (k + 2) ** 2)
    np.testing.assert_allclose(h.differences[10:], approx, rtol=1e-6)


def test_hs_csv_schema():
    t = build_table(DomainId.Omega, 9)
    text = hs_partial_sum(DomainId.Omega, 8, t).to_csv()
    assert text.splitlines()[0] == "k,ratio,difference,partial_sum"
    assert len(text.splitlines()) == 10


def test_bidisc_row_norm_formula():
    t = build_table(DomainId.OmegaZ, 6)
    for j in range(1, 5):
        for k in range(1, 5):
            expect = 256 * ((j + 1) * (k + 1) / ((j + 2) * (k + 2)) - j * k / ((j + 1) * (k + 1)))
            assert hankel_norm_sq(t, j, k) == pytest.approx(expect, rel=1e-12)


def test_bidisc_double_sum_diverges_diagonal_converges():
    t = build_table(DomainId.OmegaZ, 33)
    d = hs_double_sum_polydisc(32, t)
    assert d.diverging
    # the diagonal alone is summable: its tail increments shrink like 1/k^2
    inc = np.diff(d.diagonal_sums)
    assert inc[-1] < 1.0 and inc[-1] < inc[10] / 4


def test_gram_oracle_small_block():
    t = build_table(DomainId.OmegaZ, 2)
    gram = gram_hankel_norms(K=1)
    for (j, k), v in gram.items():
        assert abs(v - hankel_norm_sq(t, j, k)) <= 1e-10 * v


def test_cap_comparison_report():
    rows = cap_comparison(6)
    for r in rows:
        assert r["ratio"] == pytest.approx(r["expected_ratio"], rel=1e-12)
        assert r["derived_vs_quadrature"] < 1e-8
        assert r["log_printed"] == pytest.approx(log(printed_cap_display(r["k"])))


def test_bidisc_dominates():
    for k in (4, 10, 50):
        assert dominance(DomainId.Omega, k)["OmegaZ"] >= 0.99


@pytest.mark.parametrize("n", [2, 5, 58, 400])
@pytest.mark.parametrize("x", [0.3, 2 * np.log(4), 56 * np.log(4), 600.0])
def test_log_expint_matches_scipy(n, x):
    from scipy.special import expn

    from bergman_intersection.hankel import log_expint

    assert log_expint(n, x) == pytest.approx(np.log(expn(n, x)), abs=1e-12)


def test_log_expint_beyond_underflow():
    # e^x E_n(x) lies between 1/(x+n) and 1/(x+n-1)
    from bergman_intersection.hankel import log_expint

    n, x = 1026, 1024 * np.log(4)
    v = log_expint(n, x) + x
    assert -np.log(x + n - 1) > v > -np.log(x + n)
