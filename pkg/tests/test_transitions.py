import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singosc.algebra import weight_from_coupling, weight_from_j, wigner_boost_oracle
from singosc.errors import DomainError, LogMagnitudeOverflow, TailCapError
from singosc.transitions import (
    TransitionQuery,
    build_table,
    default_tail_cap,
    energy_level,
    jacobi_polynomial,
    terminating_2f1,
    transition_probability,
    transition_row,
)

mpmath = pytest.importorskip("mpmath")

J_VALUES = [0.55, 0.75, 1.0, 1.5, 3.0]


def mp_probability(j, rho, m, n, dps=50):
    """High-precision w_mn from the hypergeometric form."""
    with mpmath.workdps(dps):
        L, S = max(m, n), min(m, n)
        j, rho = mpmath.mpf(j), mpmath.mpf(rho)
        pref = (mpmath.factorial(L) / (mpmath.factorial(L - S) ** 2 * mpmath.factorial(S))
                * mpmath.gamma(L + 2 * j) / mpmath.gamma(S + 2 * j)
                * rho ** (L - S) * (1 - rho) ** (2 * j))
        f = mpmath.hyp2f1(-S, L + 2 * j, L - S + 1, rho)
        return pref * f * f


# -- spectrum -----------------------------------------------------------------

def test_ground_level_regular_oscillator():
    assert energy_level(0, 1.0, weight_from_coupling(0.0)) == 1.5


@pytest.mark.parametrize("g", [0.0, 3.0])
@pytest.mark.parametrize("omega", [1.0, 2.0])
def test_spectrum_is_exact(g, omega):
    wt = weight_from_coupling(g)
    for n in range(11):
        assert energy_level(n, omega, wt) == 2.0 * omega * (n + wt.j)


def test_spectrum_g3():
    assert energy_level(0, 2.0, weight_from_coupling(3.0)) == 4.0


def test_spectrum_rejects_bad_input():
    wt = weight_from_j(1.0)
    with pytest.raises(DomainError):
        energy_level(-1, 1.0, wt)
    with pytest.raises(DomainError):
        energy_level(0, 0.0, wt)


# -- Jacobi polynomials ----------------------------------------------------------

def test_jacobi_degree_one():
    a, b, x = 1.5, 0.25, 0.3
    assert jacobi_polynomial(1, a, b, x) == pytest.approx(((a + b + 2) * x + (a - b)) / 2,
                                                          abs=1e-15)


@pytest.mark.parametrize("k", range(7))
@pytest.mark.parametrize("a,b", [(0.0, 0.5), (2.0, -0.4), (5.0, 1.0)])
def test_jacobi_matches_series(k, a, b):
    # P_k^(a,b)(x) = sum_s C(k+a, k-s) C(k+b, s) ((x-1)/2)^s ((x+1)/2)^(k-s)
    for x in (-0.9, -0.2, 0.4, 0.95):
        with mpmath.workdps(30):
            ref = mpmath.fsum(mpmath.binomial(k + a, k - s) * mpmath.binomial(k + b, s)
                              * ((x - 1) / 2) ** s * ((x + 1) / 2) ** (k - s)
                              for s in range(k + 1))
        assert jacobi_polynomial(k, a, b, x) == pytest.approx(float(ref), rel=1e-13, abs=1e-14)


@pytest.mark.parametrize("k", range(21))
def test_jacobi_endpoint(k):
    a, b = 3.0, 0.5
    assert jacobi_polynomial(k, a, b, 1.0) == pytest.approx(math.comb(k + 3, k), rel=1e-13)


def test_jacobi_vectorised_over_alpha():
    alpha = np.arange(5.0)
    p = jacobi_polynomial(4, alpha, 0.5, -0.3)
    for a, val in zip(alpha, p):
        assert val == pytest.approx(jacobi_polynomial(4, a, 0.5, -0.3), rel=1e-15)


# -- 2F1 --------------------------------------------------------------------------

def test_2f1_hand_expansion():
    assert terminating_2f1(1, 1, 1.5, 0.5) == -0.25


def test_2f1_trivial_cases():
    assert terminating_2f1(0, 7, 2.2, 0.4) == 1.0
    assert terminating_2f1(5, 7, 2.2, 0.0) == 1.0


@pytest.mark.parametrize("S,L,two_j,rho", [(5, 9, 1.1, 0.35), (20, 30, 6.0, 0.95),
                                           (30, 30, 1.5, 0.85)])
def test_2f1_against_mpmath(S, L, two_j, rho):
    with mpmath.workdps(60):
        ref = mpmath.hyp2f1(-S, L + mpmath.mpf(two_j), L - S + 1, mpmath.mpf(rho))
    got = terminating_2f1(S, L, two_j, rho)
    assert got == pytest.approx(float(ref), rel=1e-14, abs=1e-300)


def test_2f1_argument_checks():
    with pytest.raises(DomainError):
        terminating_2f1(3, 2, 1.5, 0.5)
    with pytest.raises(DomainError):
        terminating_2f1(1, 2, 1.5, 1.0)


# -- transition probabilities -------------------------------------------------------

def test_ground_to_ground_and_first():
    wt = weight_from_j(0.75)
    w00 = transition_probability(wt, 0.5, 0, 0)
    w01 = transition_probability(wt, 0.5, 0, 1)
    assert w00 == pytest.approx(0.5 ** 1.5, rel=1e-15)
    assert w01 == pytest.approx(1.5 * 0.5 * 0.5 ** 1.5, rel=1e-15)
    assert w01 == pytest.approx(0.2651650, abs=1e-7)


def test_frozen_values():
    # frozen from this implementation; cross-checked against mpmath below
    wt = weight_from_j(0.75)
    assert transition_probability(wt, 0.5, 0, 0) == 0.3535533905932738
    assert transition_probability(wt, 0.5, 0, 1) == pytest.approx(0.2651650429449554, rel=1e-15)
    assert transition_probability(wt, 0.5, 3, 5) == pytest.approx(
        float(mp_probability(0.75, 0.5, 3, 5)), rel=1e-13)


def test_query_indices():
    q = TransitionQuery(weight_from_j(1.0), 0.3, 7, 2)
    assert (q.L, q.S, q.L - q.S) == (7, 2, 5)
    assert q.probability() == pytest.approx(q.probability("hypergeometric"), rel=1e-12)


def test_zero_rho_is_identity():
    wt = weight_from_j(1.2)
    assert transition_probability(wt, 0.0, 4, 4) == 1.0
    assert transition_probability(wt, 0.0, 4, 5) == 0.0
    np.testing.assert_array_equal(build_table(wt, 0.0, 3).w[:, :4], np.eye(4))


@pytest.mark.parametrize("method", ["jacobi", "hypergeometric"])
@pytest.mark.parametrize("j", [0.55, 1.5, 3.0])
def test_against_mpmath(method, j):
    wt = weight_from_j(j)
    for rho in (0.05, 0.45, 0.95):
        for m, n in [(0, 0), (0, 9), (4, 4), (12, 3), (17, 29), (30, 30)]:
            ref = float(mp_probability(j, rho, m, n))
            got = transition_probability(wt, rho, m, n, method=method)
            assert got == pytest.approx(ref, rel=1e-11, abs=1e-300)


def test_polynomial_root_is_handled():
    # the Jacobi factor nearly vanishes here; both routes must agree
    wt = weight_from_j(1.5)
    a = transition_probability(wt, 0.85, 1, 17, method="hypergeometric")
    b = transition_probability(wt, 0.85, 1, 17, method="jacobi")
    ref = float(mp_probability(1.5, 0.85, 1, 17))
    assert a == pytest.approx(ref, rel=1e-11, abs=1e-300)
    assert b == pytest.approx(ref, rel=1e-11, abs=1e-300)


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(J_VALUES), st.floats(min_value=0.01, max_value=0.97),
       st.integers(0, 30), st.integers(0, 30))
def test_dual_formulas_agree(j, rho, m, n):
    wt = weight_from_j(j)
    a = transition_probability(wt, rho, m, n, method="hypergeometric")
    b = transition_probability(wt, rho, m, n, method="jacobi")
    assert abs(a - b) / max(a, 1e-300) < 1e-11


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.51, max_value=4.0), st.floats(min_value=0.0, max_value=0.99),
       st.integers(0, 40), st.integers(0, 40))
def test_symmetry_and_positivity(j, rho, m, n):
    wt = weight_from_j(j)
    for method in ("jacobi", "hypergeometric"):
        a = transition_probability(wt, rho, m, n, method=method)
        b = transition_probability(wt, rho, n, m, method=method)
        assert a >= 0.0
        assert abs(a - b) <= 1e-12 * max(a, 1e-300)


def test_row_matches_scalar():
    wt = weight_from_j(1.0)
    row = transition_row(wt, 0.4, 6, 25)
    for n in range(26):
        assert row[n] == pytest.approx(transition_probability(wt, 0.4, 6, n), rel=1e-13)


def test_large_levels_stay_finite():
    wt = weight_from_j(1.0)
    p = transition_probability(wt, 0.5, 0, 400)
    assert 0.0 <= p < 1e-100
    assert math.isfinite(transition_probability(wt, 0.5, 200, 210))


def test_overflow_guard():
    with pytest.raises(LogMagnitudeOverflow):
        transition_probability(weight_from_j(1.0), 0.5, 0, 400, max_log=10.0)


@pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5, float("nan")])
def test_rho_outside_domain(rho):
    with pytest.raises(DomainError):
        transition_probability(weight_from_j(1.0), rho, 0, 0)


def test_bad_method_and_level():
    wt = weight_from_j(1.0)
    with pytest.raises(DomainError):
        transition_probability(wt, 0.5, 0, 0, method="series")
    with pytest.raises(DomainError):
        transition_probability(wt, 0.5, -1, 0)


# -- tables ---------------------------------------------------------------------

def test_table_unitarity_small():
    tab = build_table(weight_from_j(0.75), 0.5, 5, tail_eps=1e-10)
    assert np.all(tab.row_residuals < 1e-10)


def test_table_symmetry():
    tab = build_table(weight_from_j(0.75), 0.5, 6, 6)
    assert abs(tab.w[2, 5] - tab.w[5, 2]) < 1e-12
    np.testing.assert_allclose(tab.w, tab.w.T, rtol=1e-12, atol=0)


@pytest.mark.parametrize("j", [0.75, 3.0])
@pytest.mark.parametrize("rho", [0.1, 0.9])
def test_table_unitarity_grid(j, rho):
    tab = build_table(weight_from_j(j), rho, 20, tail_eps=1e-11)
    assert tab.row_residuals.max() < 1e-10
    assert np.all(tab.w >= 0.0)


def test_first_moments():
    wt = weight_from_j(1.5)
    rho = 0.25
    tab = build_table(wt, rho, 4, tail_eps=1e-13)
    target = (np.arange(5) + wt.j) * (1 + rho) / (1 - rho)
    np.testing.assert_allclose(tab.first_moments(), target, rtol=1e-9)


def test_oracle_equivalence():
    wt = weight_from_j(1.0)
    oracle = wigner_boost_oracle(wt, 0.3, 200)
    tab = build_table(wt, 0.3, 10, 10)
    assert np.max(np.abs(oracle[:11, :11].T - tab.w)) < 1e-8


def test_tail_cap_binds_explicitly():
    with pytest.raises(TailCapError):
        build_table(weight_from_j(1.0), 0.9, 3, tail_eps=1e-10, cap=30)


def test_default_cap_covers_slow_decay():
    cap = default_tail_cap(20, 0.9, 1e-10)
    tab = build_table(weight_from_j(3.0), 0.9, 20, tail_eps=1e-10)
    assert tab.n_extent.max() <= cap


def test_high_rho_stress_row():
    tab = build_table(weight_from_j(0.75), 0.99, 2, tail_eps=1e-11)
    assert tab.row_residuals.max() < 1e-10
    assert tab.n_extent.max() > 1000
