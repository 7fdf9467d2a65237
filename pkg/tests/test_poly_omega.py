from __future__ import annotations

import numpy as np
import pytest

from qutrit_qrg.errors import OmegaResidueError
from qutrit_qrg.poly_omega import (
    DEFAULT_UNIVERSE,
    SparsePoly,
    VarId,
    factorized_omega_trace,
    linear_pairing,
    naive_omega_product,
    naive_omega_trace,
    omega_apply,
    omega_patterns,
    omega_product,
    poly_diff,
    poly_mul,
    rename_groups,
    trace_all,
    trace_identify,
    trilinear_form,
    with_copy,
)
from qutrit_qrg.tensor_core import assemble_psi0, nurmiev_tensor


def x(i, c=1):
    return SparsePoly.variable(VarId("x", c, i))


def test_universe_slot_roundtrip():
    u = DEFAULT_UNIVERSE
    for s in range(u.size):
        assert u.slot(u.var(s)) == s
    assert u.size == 6 * 3 * 3


def test_varid_validation():
    with pytest.raises(ValueError):
        VarId("x", 0, 1)
    with pytest.raises(ValueError):
        VarId("x", 1, 4)
    assert str(VarId("eta", 2, 3)) == "eta3(2)"


def test_like_terms_merge_and_cancel():
    p = x(1) + x(1) + x(2) - x(2)
    assert len(p) == 1
    assert p.coefficient({VarId("x", 1, 1): 1}) == 2.0
    assert (x(3) - x(3)).is_zero()


def test_evaluate_and_degree():
    p = poly_mul(x(1), x(2)) + SparsePoly.constant(3.0)
    assert p.degree() == 2
    assert p.group_degree("x") == 2
    assert p.group_degree("y") == 0
    assert p.evaluate({VarId("x", 1, 1): 2.0, VarId("x", 1, 2): 5.0}) == 13.0
    with pytest.raises(KeyError):
        p.evaluate({VarId("x", 1, 1): 2.0})


def test_poly_diff_falling_factorial():
    v = VarId("x", 1, 1)
    p = SparsePoly.variable(v, 3)
    d1 = poly_diff(p, v)
    assert d1.coefficient({v: 2}) == 3.0
    d3 = poly_diff(p, v, 3)
    assert d3.constant_term() == 6.0
    assert poly_diff(p, v, 4).is_zero()


def test_multiplication_is_commutative():
    p = x(1) + 2 * x(2, 2)
    q = x(3) - SparsePoly.variable(VarId("y", 1, 1))
    assert poly_mul(p, q).max_abs_difference(poly_mul(q, p)) == 0.0


def test_omega_patterns_single_power():
    counts, signs = omega_patterns(1)
    assert counts.shape == (6, 3, 3)
    assert sorted(signs.tolist()) == [-1, -1, -1, 1, 1, 1]
    # every pattern takes one derivative per copy
    assert np.all(counts.sum(axis=2) == 1)


def test_omega_on_determinant_monomials():
    p = poly_mul(poly_mul(x(1, 1), x(2, 2)), x(3, 3))
    assert omega_apply(p, "x").constant_term() == 1.0
    q = poly_mul(poly_mul(x(2, 1), x(1, 2)), x(3, 3))
    assert omega_apply(q, "x").constant_term() == -1.0


def test_omega_annihilates_symmetric_product():
    p = poly_mul(poly_mul(x(1, 1), x(1, 2)), x(3, 3))
    assert omega_apply(p, "x").is_zero()


def test_trace_identify_merges_copies():
    p = poly_mul(x(1, 1), x(1, 2))
    t = trace_identify(p, "x")
    assert t.coefficient({VarId("x", 1, 1): 2}) == 1.0
    assert t.copies_used() == (1,)


def test_with_copy_and_rename():
    p = poly_mul(x(1), SparsePoly.variable(VarId("eta", 1, 2)))
    moved = with_copy(p, 3)
    assert moved.coefficient({VarId("x", 3, 1): 1, VarId("eta", 3, 2): 1}) == 1.0
    renamed = rename_groups(p, {"x": "y", "y": "z", "z": "x", "xi": "eta", "eta": "zeta", "zeta": "xi"})
    assert renamed.coefficient({VarId("y", 1, 1): 1, VarId("zeta", 1, 2): 1}) == 1.0
    with pytest.raises(ValueError):
        rename_groups(p, {"x": "y"})
    with pytest.raises(ValueError):
        with_copy(moved, 2)


def test_linear_pairing():
    p = linear_pairing("y", "eta", 2)
    assert len(p) == 3
    assert p.coefficient({VarId("y", 2, 1): 1, VarId("eta", 2, 1): 1}) == 1.0


def test_trilinear_form_terms():
    t = nurmiev_tensor(1.0, 0.0, 0.0)
    f = trilinear_form(t, 2)
    assert len(f) == 3
    assert f.copies_used() == (2,)
    assert f.coefficient({VarId("x", 2, 2): 1, VarId("y", 2, 2): 1, VarId("z", 2, 2): 1}) == 1.0


def _i6_factors(t):
    forms = [trilinear_form(t, c) for c in (1, 2, 3)]
    return [poly_mul(f, f) for f in forms]


@pytest.mark.parametrize("a,b", [(-1.5, 2.0), (0.7, -1.2), (1.0, 0.0)])
def test_factorized_trace_matches_naive(a, b):
    factors = _i6_factors(assemble_psi0(a, b))
    axes = (("x", 2), ("y", 2), ("z", 2))
    fast = factorized_omega_trace(factors, axes)
    slow = naive_omega_trace(factors, axes)
    assert fast == pytest.approx(slow, rel=1e-12, abs=1e-14)


def test_omega_product_matches_naive_product():
    forms = [trilinear_form(nurmiev_tensor(1.0, 0.5, -0.3), c) for c in (1, 2, 3)]
    axes = (("y", 1), ("z", 1))
    fast = trace_all(omega_product(forms, axes))
    slow = trace_all(naive_omega_product(forms, axes))
    assert fast.max_abs_difference(slow) < 1e-12


def test_residue_is_rejected():
    factors = _i6_factors(nurmiev_tensor(1.0, 0.0, 0.0))
    with pytest.raises(OmegaResidueError) as ei:
        factorized_omega_trace(factors, (("x", 2), ("y", 2)))
    assert ei.value.group == "z"


def test_factor_copy_mismatch_rejected():
    f = trilinear_form(nurmiev_tensor(1.0, 0.0, 0.0), 1)
    with pytest.raises(ValueError):
        omega_product([f, f, f], (("x", 1),))
    with pytest.raises(ValueError):
        omega_product([f, with_copy(f, 2), with_copy(f, 3)], (("x", 1), ("x", 1)))
