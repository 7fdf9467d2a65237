from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qutrit_qrg import spin_block
from qutrit_qrg.errors import RootFindingError, SingularBlock
from qutrit_qrg.spin_block import (
    SX,
    SY,
    SZ,
    Couplings,
    block_solution,
    build_block_hamiltonian,
    companion_roots,
    cubic_coefficients,
    dense_eigh,
    ed_check,
    embedding_operator,
    eps0_smallest_root,
    eps1_smallest_root,
    quartic_coefficients,
    sector_eigh,
    sector_indices,
    site_operator,
    smallest_real_root,
    total_sz_diagonal,
    verify_renormalized_operators,
)


def test_eps_roots_at_known_points():
    assert eps0_smallest_root(1.0, 0.0) == pytest.approx(-3.0, abs=1e-12)
    assert eps0_smallest_root(0.0, 0.0) == pytest.approx(-np.sqrt(6.0), abs=1e-12)
    assert eps1_smallest_root(1.0, 0.0) == pytest.approx(-3.0, abs=1e-12)
    assert eps1_smallest_root(0.0, 0.0) == pytest.approx(-np.sqrt(5.0), abs=1e-12)


@pytest.mark.parametrize("delta,d", [(1.4, 1.4), (2.5, 2.5), (0.3, -0.8)])
def test_root_residuals(delta, d):
    e0 = eps0_smallest_root(delta, d)
    e1 = eps1_smallest_root(delta, d)
    assert abs(np.polyval(cubic_coefficients(delta, d), e0)) < 1e-9 * (1 + abs(e0) ** 3)
    assert abs(np.polyval(quartic_coefficients(delta, d), e1)) < 1e-9 * (1 + abs(e1) ** 4)


def test_companion_roots():
    roots = np.sort(companion_roots([1.0, -6.0, 11.0, -6.0]).real)
    assert np.allclose(roots, [1.0, 2.0, 3.0])
    # leading zeros are dropped
    assert np.allclose(np.sort(companion_roots([0.0, 1.0, 0.0, -4.0]).real), [-2.0, 2.0])


def test_no_real_root_carries_roots():
    with pytest.raises(RootFindingError) as ei:
        smallest_real_root([1.0, 0.0, 1.0])
    assert len(ei.value.roots) == 2


def test_block_solution_heisenberg_point():
    s = block_solution(1.0, 0.0)
    assert (s.a, s.b, s.c, s.d_coef, s.e) == pytest.approx((-1.5, 2.0, -3.0, 6.0, 2.0), abs=1e-12)
    assert s.n0 == pytest.approx(15 ** -0.5)
    assert s.n1 == pytest.approx(60 ** -0.5)
    assert s.x_ren == pytest.approx(-0.75, abs=1e-12)
    assert s.z_ren == pytest.approx(0.75, abs=1e-12)
    assert s.x_ren ** 2 == pytest.approx(0.5625)
    assert s.abs_i6() == pytest.approx(0.012, abs=1e-14)


@given(st.floats(min_value=0.0, max_value=3.0))
@settings(deadline=None, max_examples=40)
def test_b_is_two_without_single_ion_term(delta):
    assert block_solution(delta, 0.0).b == 2.0


@given(st.floats(min_value=0.0, max_value=3.0), st.floats(min_value=-1.0, max_value=3.0))
@settings(deadline=None, max_examples=40)
def test_block_solution_relations(delta, d):
    try:
        s = block_solution(delta, d)
    except (SingularBlock, RootFindingError):
        return
    assert s.a == pytest.approx(s.eps0 / 2 - d, abs=1e-12)
    assert s.n0 == pytest.approx((2 + 4 * s.a ** 2 + s.b ** 2) ** -0.5)
    assert s.n1 == pytest.approx((2 + 2 * s.c ** 2 + s.d_coef ** 2 + s.e ** 2) ** -0.5)
    assert s.psi0().norm() == pytest.approx(1.0)


def test_singular_block_names_denominator(monkeypatch):
    monkeypatch.setattr(spin_block, "eps0_smallest_root", lambda delta, d: 0.0)
    with pytest.raises(SingularBlock) as ei:
        block_solution(1.0, 0.0)
    assert ei.value.denominator == "eps0"


def test_couplings_validation():
    with pytest.raises(ValueError):
        Couplings(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        Couplings(1.0, float("nan"), 0.0)


def test_hamiltonian_traces_and_symmetry():
    h0 = build_block_hamiltonian(Couplings(1.0, 0.0, 0.0))
    assert np.trace(h0) == pytest.approx(0.0, abs=1e-12)
    h1 = build_block_hamiltonian(Couplings(1.0, 0.0, 1.0))
    assert np.trace(h1) == pytest.approx(54.0)
    h = build_block_hamiltonian(Couplings(1.3, 0.7, -0.4))
    assert h.shape == (27, 27)
    assert np.max(np.abs(h - h.T)) < 1e-14


def test_hamiltonian_commutes_with_total_sz():
    h = build_block_hamiltonian(Couplings(1.0, 1.7, 0.9))
    sz = sum(site_operator(SZ, k) for k in (1, 2, 3))
    assert np.max(np.abs(h @ sz - sz @ h)) < 1e-13
    assert np.array_equal(np.diag(sz).real.astype(int), total_sz_diagonal())


def test_spin_matrices():
    assert np.allclose(SX @ SX + SY @ SY + SZ @ SZ, 2 * np.eye(3))
    assert np.allclose(SX @ SY - SY @ SX, 1j * SZ)


def test_sector_sizes():
    assert len(sector_indices(0)) == 7
    assert len(sector_indices(1)) == 6
    assert len(sector_indices(-1)) == 6
    assert len(sector_indices(3)) == 1


def test_dense_eigh_small_cases():
    w, v = dense_eigh(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1.0, 2.0, 3.0])
    assert np.allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]])
    w, _ = dense_eigh(np.eye(4))
    assert np.allclose(w, 1.0)


def test_dense_eigh_rejects_non_symmetric():
    with pytest.raises(ValueError):
        dense_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_dense_eigh_reconstruction(rng):
    a = rng.standard_normal((8, 8))
    m = a + a.T
    w, v = dense_eigh(m)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(m - v @ np.diag(w) @ v.T) < 1e-10 * np.linalg.norm(m)
    assert np.allclose(v.T @ v, np.eye(8), atol=1e-12)


def test_block_ground_state_from_ed():
    h = build_block_hamiltonian(Couplings(1.0, 1.0, 0.0))
    w, _ = sector_eigh(h, 0)
    assert w[0] == pytest.approx(-3.0, abs=1e-10)


def test_embedding_is_isometry():
    s = block_solution(1.0, 0.0)
    t = embedding_operator(s)
    assert t.shape == (27, 3)
    assert np.allclose(t.T @ t, np.eye(3), atol=1e-12)
    assert np.linalg.matrix_rank(t @ t.T) == 3
    h = build_block_hamiltonian(Couplings(1.0, 1.0, 0.0))
    assert np.linalg.norm(h @ t - t @ np.diag([s.eps1, s.eps0, s.eps1])) < 1e-9
    assert np.allclose(t.T @ np.eye(27) @ t, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("delta,d", [(1.0, 0.0), (0.5, 1.4)])
def test_renormalized_operators(delta, d):
    report = verify_renormalized_operators(block_solution(delta, d))
    assert set(report.spin) == {f"s{a}{k}" for a in "xyz" for k in (1, 3)}
    assert report.max_deviation < 1e-10


@pytest.mark.parametrize("delta,d", [(1.0, 0.0), (0.5, 1.4), (2.0, -0.5), (2.5, 2.5)])
def test_ed_oracle(delta, d):
    rep = ed_check(block_solution(delta, d))
    assert rep.eps0_deviation < 1e-9
    assert rep.eps1_deviation < 1e-9
    assert rep.doublet_splitting < 1e-10
    assert rep.psi0_deviation < 1e-8


@pytest.mark.slow
def test_ed_oracle_grid():
    for delta, d in itertools.product(np.linspace(0, 3, 50), np.linspace(-1, 3, 50)):
        try:
            s = block_solution(delta, d)
        except (SingularBlock, RootFindingError):
            continue
        rep = ed_check(s)
        assert rep.eps0_deviation < 1e-9
        assert rep.psi0_deviation < 1e-8
        t = embedding_operator(s)
        assert np.allclose(t.T @ t, np.eye(3), atol=1e-12)
        assert verify_renormalized_operators(s).max_deviation < 1e-9
