from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qutrit_qrg.errors import SingularMatrixError, TensorFormatError
from qutrit_qrg.spin_block import total_sz_diagonal
from qutrit_qrg.tensor_core import (
    MINUS,
    PLUS,
    ZERO,
    LocalOp,
    Tensor333,
    apply_local,
    assemble_psi0,
    assemble_psi_minus,
    assemble_psi_plus,
    compose,
    cyclic_legs,
    from_kron_vector,
    nurmiev_tensor,
    product_tensor,
    random_sl3,
    random_sl_op,
    tensor_from_coefficients,
    to_kron_vector,
)

finite = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)


def test_tensor_is_read_only_complex():
    t = Tensor333(np.ones((3, 3, 3)))
    assert t.gamma.dtype == np.complex128
    with pytest.raises(ValueError):
        t.gamma[0, 0, 0] = 2.0


def test_entry_is_one_based():
    g = np.zeros((3, 3, 3))
    g[2, 0, 1] = 5.0
    assert Tensor333(g).entry(3, 1, 2) == 5.0


def test_wrong_shape_rejected():
    with pytest.raises(TensorFormatError):
        Tensor333(np.zeros((3, 3)))


def test_tensor_from_coefficients_reports_bad_index():
    coeffs = [0.0] * 27
    coeffs[11] = float("nan")
    with pytest.raises(TensorFormatError) as ei:
        tensor_from_coefficients(coeffs)
    assert ei.value.index == 11


def test_tensor_from_coefficients_wrong_length():
    with pytest.raises(TensorFormatError):
        tensor_from_coefficients([1.0] * 26)


def test_row_major_order():
    t = tensor_from_coefficients(np.arange(27.0))
    assert t.entry(1, 1, 2) == 1.0
    assert t.entry(2, 1, 1) == 9.0
    assert t.entry(3, 3, 3) == 26.0


@given(finite, finite)
@settings(deadline=None)
def test_psi0_unit_norm(a, b):
    assert assemble_psi0(a, b).norm() == pytest.approx(1.0, abs=1e-12)


def test_psi0_entries():
    a, b = -1.5, 2.0
    t = assemble_psi0(a, b)
    n0 = 1 / np.sqrt(15.0)
    assert t.gamma[PLUS, ZERO, MINUS] == pytest.approx(n0)
    assert t.gamma[MINUS, ZERO, PLUS] == pytest.approx(n0)
    for pos in [(PLUS, MINUS, ZERO), (MINUS, PLUS, ZERO), (ZERO, PLUS, MINUS), (ZERO, MINUS, PLUS)]:
        assert t.gamma[pos] == pytest.approx(n0 * a)
    assert t.gamma[ZERO, ZERO, ZERO] == pytest.approx(n0 * b)
    assert np.count_nonzero(t.gamma) == 7


def test_psi0_rejects_non_finite():
    with pytest.raises(ValueError):
        assemble_psi0(float("inf"), 0.0)


def test_psi_plus_minus_are_mirror_images():
    plus = assemble_psi_plus(-3.0, 6.0, 2.0)
    minus = assemble_psi_minus(-3.0, 6.0, 2.0)
    assert plus.norm() == pytest.approx(1.0)
    assert np.allclose(minus.gamma, plus.gamma[::-1, ::-1, ::-1])


def test_kron_vectors_live_in_sz_sectors():
    sz = total_sz_diagonal()
    v0 = to_kron_vector(assemble_psi0(0.3, -1.1))
    vp = to_kron_vector(assemble_psi_plus(0.4, 0.2, -0.9))
    vm = to_kron_vector(assemble_psi_minus(0.4, 0.2, -0.9))
    assert set(sz[np.abs(v0) > 0]) == {0}
    assert set(sz[np.abs(vp) > 0]) == {1}
    assert set(sz[np.abs(vm) > 0]) == {-1}


def test_from_kron_vector_inverts():
    t = assemble_psi_plus(0.4, 0.2, -0.9)
    assert from_kron_vector(to_kron_vector(t)).allclose(t)


def test_local_op_rejects_singular_leg():
    eye = np.eye(3)
    sing = np.diag([1.0, 1.0, 0.0])
    with pytest.raises(SingularMatrixError) as ei:
        LocalOp(eye, sing, eye)
    assert ei.value.leg == 2


def test_local_op_sl_flag_checks_determinant():
    eye = np.eye(3)
    with pytest.raises(ValueError):
        LocalOp(2 * eye, eye, eye, sl=True)
    LocalOp(2 * eye, eye, eye)


def test_random_sl3_is_deterministic_and_unimodular():
    m = random_sl3(7)
    assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-10)
    assert np.array_equal(m, random_sl3(7))
    assert not np.array_equal(random_sl3(7, stream=0), random_sl3(7, stream=1))


def test_apply_identity(rng):
    t = Tensor333(rng.standard_normal((3, 3, 3)))
    assert apply_local(t, LocalOp.identity()).allclose(t)


@given(arrays(np.float64, (3, 3, 3), elements=finite), st.integers(0, 10_000), st.integers(0, 10_000))
@settings(deadline=None, max_examples=30)
def test_compose_matches_sequential_application(g, s1, s2):
    t = Tensor333(g)
    inner, outer = random_sl_op(s1), random_sl_op(s2)
    a = apply_local(apply_local(t, inner), outer)
    b = apply_local(t, compose(outer, inner))
    scale = max(1.0, float(np.abs(a.gamma).max()))
    assert np.allclose(a.gamma, b.gamma, atol=1e-9 * scale, rtol=0)


def test_cyclic_legs(rng):
    t = Tensor333(rng.standard_normal((3, 3, 3)))
    c = cyclic_legs(t)
    assert c.gamma[0, 1, 2] == t.gamma[2, 0, 1]
    assert cyclic_legs(cyclic_legs(c)).allclose(t)


def test_product_tensor_and_nurmiev():
    p = product_tensor([1, 0, 0], [0, 1, 0], [0, 0, 1])
    assert p.entry(1, 2, 3) == 1.0
    assert np.count_nonzero(p.gamma) == 1

    n = nurmiev_tensor(1.0, 2.0, 3.0)
    assert n.entry(2, 2, 2) == 1.0
    assert n.entry(1, 2, 3) == 2.0
    assert n.entry(2, 3, 1) == 2.0
    assert n.entry(1, 3, 2) == 3.0
    assert n.entry(3, 2, 1) == 3.0
    assert np.count_nonzero(n.gamma) == 9


def test_scaled_and_zero():
    t = nurmiev_tensor(1.0, 0.0, 0.0)
    assert t.norm() == pytest.approx(np.sqrt(3.0))
    assert t.scaled(0).is_zero()
    assert not t.is_zero()
