import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singosc.algebra import (
    boost_matrix,
    boost_squaring_residual,
    build_truncated_rep,
    hamiltonian_decomposition,
    verify_casimir,
    verify_commutators,
    weight_from_coupling,
    weight_from_j,
    wigner_boost_oracle,
)
from singosc.errors import DimensionError, DomainError


# -- weights ------------------------------------------------------------------

def test_regular_oscillator_weight():
    w = weight_from_coupling(0.0)
    assert w.j == 0.75
    assert w.casimir == pytest.approx(-3.0 / 16.0, abs=1e-16)


@pytest.mark.parametrize("g", [-1.0, -2.0, float("nan")])
def test_inadmissible_coupling_rejected(g):
    with pytest.raises(DomainError):
        weight_from_coupling(g)


def test_weight_below_half_rejected():
    with pytest.raises(DomainError):
        weight_from_j(0.5)


@given(st.floats(min_value=-0.999, max_value=1e4))
def test_casimir_matches_coupling_form(g):
    w = weight_from_coupling(g)
    assert w.j > 0.5
    assert math.isclose(w.casimir, w.casimir_from_coupling, rel_tol=1e-14, abs_tol=1e-14)


@given(st.floats(min_value=0.5001, max_value=50.0))
def test_weight_round_trip(j):
    w = weight_from_j(j)
    assert math.isclose(weight_from_coupling(w.g).j, j, rel_tol=1e-13)


# -- truncated representation -------------------------------------------------

def test_first_raising_element():
    rep = build_truncated_rep(weight_from_j(0.75), 4)
    assert rep.J_plus[1, 0].real == pytest.approx(math.sqrt(1.5), abs=1e-15)
    assert rep.J_plus[1, 0] == pytest.approx(1.224744871, abs=1e-9)
    assert verify_casimir(rep).passed


def test_generators_are_hermitian():
    rep = build_truncated_rep(weight_from_j(1.3), 12)
    for J in (rep.J1, rep.J2, rep.J3):
        np.testing.assert_allclose(J, J.conj().T, atol=0)


def test_equidistant_ladder():
    rep = build_truncated_rep(weight_from_j(1.75), 30)
    assert np.all(np.diff(np.diag(rep.J3).real) == 1.0)


@pytest.mark.parametrize("j", [0.55, 0.75, 1.0, 1.5, 3.0])
def test_closure_double_precision_n50(j):
    rep = build_truncated_rep(weight_from_j(j), 50, interior=48)
    assert verify_commutators(rep).residual < 1e-12
    assert verify_casimir(rep).residual < 1e-12


def test_casimir_j12_n60():
    assert verify_casimir(build_truncated_rep(weight_from_j(1.2), 60)).residual < 1e-12


@pytest.mark.parametrize("j", [0.55, 0.75, 1.0, 1.5, 3.0])
def test_closure_extended_precision_n200(j):
    rep = build_truncated_rep(weight_from_j(j), 200, dtype=np.clongdouble)
    assert verify_commutators(rep).residual < 1e-12
    assert verify_casimir(rep).residual < 1e-12


def test_edge_row_shows_truncation():
    rep = build_truncated_rep(weight_from_j(0.75), 40)
    full = verify_casimir(rep, interior=40).residual
    assert full > 10.0             # O(N) defect in the last row
    assert verify_casimir(rep).residual < 1e-12


def test_rep_validation():
    wt = weight_from_j(1.0)
    with pytest.raises(DimensionError):
        build_truncated_rep(wt, 3)
    with pytest.raises(DimensionError):
        build_truncated_rep(wt, 10, interior=9)
    with pytest.raises(DomainError):
        build_truncated_rep(wt, 10, dtype=np.float64)


# -- Hamiltonian ---------------------------------------------------------------

def test_hamiltonian_on_plateau_is_2J3():
    wt = weight_from_coupling(0.0)
    rep = build_truncated_rep(wt, 20)
    H = hamiltonian_decomposition(wt, 1.0, 1.0, rep)
    np.testing.assert_allclose(H, 2 * rep.J3, atol=1e-15)
    np.testing.assert_allclose(np.diag(H).real, 2 * (np.arange(20) + 0.75))


def test_hamiltonian_spectrum_other_frequency():
    # H(omega=2) in the omega_plus=1 basis has levels 2*2*(n+j)
    wt = weight_from_j(0.75)
    ev = []
    for dim in (120, 240):
        rep = build_truncated_rep(wt, dim)
        H = hamiltonian_decomposition(wt, 2.0, 1.0, rep)
        ev.append(np.sort(np.linalg.eigvalsh(H))[:5])
    expected = 4.0 * (np.arange(5) + 0.75)
    np.testing.assert_allclose(ev[-1], expected, rtol=1e-8)
    assert np.max(np.abs(ev[-1] - expected)) <= np.max(np.abs(ev[0] - expected)) + 1e-12


# -- boost oracle ---------------------------------------------------------------

def test_boost_is_unitary():
    W = boost_matrix(weight_from_j(1.0), 0.3, 80)
    k = 20
    np.testing.assert_allclose((W.conj().T @ W)[:k, :k], np.eye(k), atol=1e-10)


def test_oracle_ground_state():
    P = wigner_boost_oracle(weight_from_j(0.75), 0.5, 200)
    assert P[0, 0] == pytest.approx(0.5 ** 1.5, abs=1e-12)
    assert P[0, 0] == pytest.approx(0.3535534, abs=1e-7)


def test_oracle_row_normalisation_and_symmetry():
    dim = 200
    P = wigner_boost_oracle(weight_from_j(1.5), 0.6, dim)
    k = dim // 4
    assert np.max(np.abs(P[:, :k].sum(axis=0) - 1.0)) < 1e-8
    assert np.max(np.abs(P[:k, :k] - P[:k, :k].T)) < 1e-10


def test_boost_composition():
    assert boost_squaring_residual(weight_from_j(0.75), 0.3, 200) < 1e-10


def test_oracle_rejects_bad_rho():
    with pytest.raises(DomainError):
        wigner_boost_oracle(weight_from_j(1.0), 1.0, 50)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.55, max_value=3.0), st.floats(min_value=0.0, max_value=0.5))
def test_oracle_entries_are_probabilities(j, rho):
    P = wigner_boost_oracle(weight_from_j(j), rho, 120)
    k = 30
    assert np.all(P[:k, :k] >= 0.0)
    assert np.all(P[:k, :k] <= 1.0 + 1e-12)
