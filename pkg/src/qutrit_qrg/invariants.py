"""SL(3,C)^3 invariants of three-qutrit tensors via Cayley's Omega-process.

All Omega-process values are computed with the factorized evaluator; pass
``naive=True`` to route through the expanded product (small/sparse tensors only).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from .errors import ZeroTensorError
from .poly_omega import (
    GROUPS,
    SparsePoly,
    factorized_omega_trace,
    linear_pairing,
    naive_omega_product,
    naive_omega_trace,
    omega_product,
    poly_mul,
    rename_groups,
    trace_all,
    trilinear_form,
    with_copy,
)
from .tensor_core import Tensor333, cyclic_legs, nurmiev_tensor
from .utils.logger import setup_logger

log = setup_logger("qutrit_qrg.invariants")

I6_NORMALIZATION = 1.0 / 1152.0
I9_NORMALIZATION = 1.0 / 576.0
I12_NORMALIZATION = 1.0 / 124416.0
ZERO_FLOOR = 1e-12

# (x, y, z) -> (y, z, x), (xi, eta, zeta) -> (eta, zeta, xi)
CYCLIC_SUBSTITUTION: Dict[str, str] = {"x": "y", "y": "z", "z": "x", "xi": "eta", "eta": "zeta", "zeta": "xi"}

# normal form with closed-form I9 = 2; fixes the overall sign of the odd invariant
I9_REFERENCE: Tuple[float, float, float] = (1.0, -1.0, 0.0)


@dataclass(frozen=True)
class InvariantSet:
    i6: complex
    i9: complex
    i12: complex
    j12: complex
    delta333: complex
    scale: float

    def raw(self) -> Dict[str, complex]:
        s = self.scale
        return {
            "i6": self.i6 * s ** 6,
            "i9": self.i9 * s ** 9,
            "i12": self.i12 * s ** 12,
            "j12": self.j12 * s ** 12,
            "delta333": self.delta333 * s ** 36,
        }

    def is_genuine(self, floor: float = ZERO_FLOOR) -> bool:
        """Genuinely tripartite entangled: the hyperdeterminant of the unit-norm tensor is nonzero.

        Delta333 has degree 36, so it is compared with the sixth power of the
        largest fundamental invariant taken to degree 6; at least one of I6, I9,
        J12 must also clear `floor`.
        """
        if max(abs(self.i6), abs(self.i9), abs(self.j12)) < floor:
            return False
        m = max(abs(self.i6), abs(self.i9) ** (2.0 / 3.0), abs(self.j12) ** 0.5)
        return abs(self.delta333) > floor * m ** 6


def _forms(t: Tensor333):
    return [trilinear_form(t, c) for c in (1, 2, 3)]


def invariant_I6(t: Tensor333, naive: bool = False) -> complex:
    squares = [poly_mul(f, f) for f in _forms(t)]
    axes = (("x", 2), ("y", 2), ("z", 2))
    raw = naive_omega_trace(squares, axes) if naive else factorized_omega_trace(squares, axes)
    return raw * I6_NORMALIZATION


def b_alpha(t: Tensor333, naive: bool = False) -> SparsePoly:
    """tr Omega_y Omega_z f1 f2 f3: a cubic in x (copy 1), equal to 6 det(sum_i Gamma_ijk x_i)."""
    axes = (("y", 1), ("z", 1))
    prod = naive_omega_product(_forms(t), axes) if naive else omega_product(_forms(t), axes)
    return trace_all(prod)


def invariant_I12(t: Tensor333) -> complex:
    b = b_alpha(t)
    factors = [poly_mul(with_copy(b, c), trilinear_form(t, c)) for c in (1, 2, 3)]
    return factorized_omega_trace(factors, (("x", 4), ("y", 1), ("z", 1))) * I12_NORMALIZATION


def q_alpha(t: Tensor333) -> SparsePoly:
    """tr Omega_y Omega_z f1 f2 (y3 . eta3)(z3 . zeta3); polynomial in x, eta, zeta."""
    f1, f2, _ = _forms(t)
    p3 = poly_mul(linear_pairing("y", "eta", 3), linear_pairing("z", "zeta", 3))
    return trace_all(omega_product([f1, f2, p3], (("y", 1), ("z", 1))))


def q_beta(t: Tensor333) -> SparsePoly:
    """Q_alpha with x, eta, zeta replaced by y, zeta, xi (taken on the cyclically relabelled tensor)."""
    return rename_groups(q_alpha(cyclic_legs(t)), CYCLIC_SUBSTITUTION)


def e_alpha(t: Tensor333) -> SparsePoly:
    """tr Omega_x Q_alpha(1) f(2) (x3 . xi3)."""
    q = q_alpha(t)
    return trace_all(omega_product([q, trilinear_form(t, 2), linear_pairing("x", "xi", 3)], (("x", 1),)))


def e_beta(t: Tensor333) -> SparsePoly:
    return rename_groups(e_alpha(cyclic_legs(t)), CYCLIC_SUBSTITUTION)


def _i9_unoriented(t: Tensor333) -> complex:
    ea = e_alpha(t)
    eb = e_beta(t)
    factors = [ea, with_copy(eb, 2), with_copy(eb, 3)]
    return factorized_omega_trace(factors, tuple((g, 1) for g in GROUPS)) * I9_NORMALIZATION


@lru_cache(maxsize=1)
def i9_orientation() -> float:
    expected = normal_form_invariants(*I9_REFERENCE)["i9"]
    got = _i9_unoriented(nurmiev_tensor(*I9_REFERENCE))
    if abs(got) < 1e-9:
        raise RuntimeError("degree-9 Omega-process vanishes on the reference normal form")
    ratio = expected / got
    if abs(ratio.imag) > 1e-9 * abs(ratio):
        raise RuntimeError(f"degree-9 orientation is not real: {ratio}")
    if abs(abs(ratio.real) - 1.0) > 1e-9:
        log.warning(f"I9 normalization rescaled by {ratio.real:.12g} to match the normal form")
        return float(ratio.real)
    return math.copysign(1.0, ratio.real)


def invariant_I9(t: Tensor333) -> complex:
    return _i9_unoriented(t) * i9_orientation()


def j12_from(i12: complex, i6: complex) -> complex:
    return -(i12 + i6 * i6) / 24.0


def _fsum_complex(terms) -> complex:
    return complex(math.fsum(z.real for z in terms), math.fsum(z.imag for z in terms))


def _hyperdet_terms(i6: complex, i9: complex, j12: complex) -> Tuple[complex, ...]:
    i6, i9, j12 = complex(i6), complex(i9), complex(j12)
    return (
        i6 ** 3 * i9 ** 2,
        -(i6 ** 2) * j12 ** 2,
        36.0 * i6 * i9 ** 2 * j12,
        108.0 * i9 ** 4,
        -32.0 * j12 ** 3,
    )


def hyperdet_from(i6: complex, i9: complex, j12: complex) -> complex:
    return _fsum_complex(_hyperdet_terms(i6, i9, j12))


def hyperdet_333(inv: InvariantSet) -> complex:
    return hyperdet_from(inv.i6, inv.i9, inv.j12)


def invariants_full(t: Tensor333) -> InvariantSet:
    scale = t.norm()
    if scale == 0.0:
        raise ZeroTensorError("invariants of the zero tensor are undefined")
    u = t.scaled(1.0 / scale)
    i6 = invariant_I6(u)
    i9 = invariant_I9(u)
    i12 = invariant_I12(u)
    j12 = j12_from(i12, i6)
    return InvariantSet(i6=i6, i9=i9, i12=i12, j12=j12, delta333=hyperdet_from(i6, i9, j12), scale=scale)


def normal_form_invariants(a1: complex, a2: complex, a3: complex) -> Dict[str, complex]:
    """Closed forms on the Nurmiev normal form (B_alpha = 6(mu x1x2x3 - nu sum x_i^3))."""
    c1, c2, c3 = a1 ** 3, a2 ** 3, a3 ** 3
    mu = c1 + c2 + c3
    nu = a1 * a2 * a3
    i6 = a1 ** 6 + a2 ** 6 + a3 ** 6 - 10.0 * (c1 * c2 + c1 * c3 + c2 * c3)
    i9 = -(c1 - c2) * (c1 - c3) * (c2 - c3)
    i12 = -mu * (mu ** 3 + (6.0 * nu) ** 3)
    j12 = (
        c1 * c2 ** 3 + c1 ** 3 * c2 + c1 * c3 ** 3 + c1 ** 3 * c3 + c2 * c3 ** 3 + c2 ** 3 * c3
        + 2.0 * c1 * c2 * c3 ** 2 + 2.0 * c1 * c2 ** 2 * c3 + 2.0 * c1 ** 2 * c2 * c3
        - 4.0 * c1 ** 2 * c2 ** 2 - 4.0 * c1 ** 2 * c3 ** 2 - 4.0 * c2 ** 2 * c3 ** 2
    )
    return {"i6": i6, "i9": i9, "i12": i12, "j12": j12, "mu": mu, "nu": nu}


def _as_222(coeffs) -> np.ndarray:
    g = np.asarray(coeffs, dtype=np.complex128)
    if g.shape != (2, 2, 2):
        raise ValueError(f"expected a 2x2x2 tensor, got {g.shape}")
    return g


def hyperdet_222(coeffs) -> complex:
    g = _as_222(coeffs)

    def det2(a, b, c, d):
        return a * d - b * c

    first = det2(g[0, 0, 0], g[0, 1, 1], g[1, 0, 0], g[1, 1, 1]) + det2(g[0, 1, 0], g[0, 0, 1], g[1, 1, 0], g[1, 0, 1])
    second = det2(g[0, 0, 0], g[0, 0, 1], g[1, 0, 0], g[1, 0, 1]) * det2(g[0, 1, 0], g[0, 1, 1], g[1, 1, 0], g[1, 1, 1])
    return complex(first * first - 4.0 * second)


def three_tangle(coeffs) -> float:
    return 4.0 * abs(hyperdet_222(coeffs))


def concurrence_22(coeffs) -> float:
    g = np.asarray(coeffs, dtype=np.complex128)
    if g.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {g.shape}")
    return 2.0 * abs(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0])
