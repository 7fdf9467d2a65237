from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import SingularMatrixError, TensorFormatError

# Qutrit labeling: |-> -> 1, |0> -> 2, |+> -> 3 (1-based); 0-based positions below.
MINUS, ZERO, PLUS = 0, 1, 2

DET_FLOOR = 1e-12
SL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Tensor333:
    """Coefficients Gamma_ijk of sum Gamma_ijk |ijk>; immutable, complex128, shape (3, 3, 3)."""

    gamma: np.ndarray

    def __post_init__(self) -> None:
        g = np.array(self.gamma, dtype=np.complex128)
        if g.shape != (3, 3, 3):
            raise TensorFormatError(f"expected shape (3, 3, 3), got {g.shape}")
        bad = np.flatnonzero(~np.isfinite(g.reshape(-1)))
        if bad.size:
            raise TensorFormatError(f"non-finite coefficient at index {int(bad[0])}", index=int(bad[0]))
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    def entry(self, i: int, j: int, k: int) -> complex:
        return complex(self.gamma[i - 1, j - 1, k - 1])

    def flatten(self) -> np.ndarray:
        return self.gamma.reshape(27).copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.gamma.reshape(-1)))

    def is_zero(self) -> bool:
        return not np.any(self.gamma)

    def scaled(self, c: complex) -> "Tensor333":
        return Tensor333(self.gamma * c)

    def allclose(self, other: "Tensor333", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.gamma, other.gamma, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class LocalOp:
    """One invertible 3x3 matrix per leg; `sl` additionally pins every determinant to 1."""

    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray
    sl: bool = False

    def __post_init__(self) -> None:
        for leg, name in enumerate(("l1", "l2", "l3"), start=1):
            m = np.array(getattr(self, name), dtype=np.complex128)
            if m.shape != (3, 3):
                raise ValueError(f"leg {leg}: expected a 3x3 matrix, got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"leg {leg}: non-finite entries")
            det = np.linalg.det(m)
            if abs(det) <= DET_FLOOR:
                raise SingularMatrixError(f"leg {leg}: singular matrix (|det|={abs(det):.3e})", leg=leg)
            if self.sl and abs(det - 1.0) >= SL_TOL:
                raise ValueError(f"leg {leg}: det={det} is not 1 for an SL-flagged op")
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def legs(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.l1, self.l2, self.l3

    def dets(self) -> Tuple[complex, complex, complex]:
        return tuple(complex(np.linalg.det(m)) for m in self.legs)

    @classmethod
    def identity(cls) -> "LocalOp":
        eye = np.eye(3)
        return cls(eye, eye, eye, sl=True)


def compose(outer: LocalOp, inner: LocalOp) -> LocalOp:
    """Per-leg product outer_i @ inner_i (inner acts first)."""
    return LocalOp(*(a @ b for a, b in zip(outer.legs, inner.legs)), sl=outer.sl and inner.sl)


def tensor_from_coefficients(coeffs: Sequence[complex]) -> Tensor333:
    arr = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    if arr.size != 27:
        raise TensorFormatError(f"expected 27 coefficients, got {arr.size}")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise TensorFormatError(f"non-finite coefficient at index {int(bad[0])}", index=int(bad[0]))
    return Tensor333(arr.reshape(3, 3, 3))


def _assemble(entries: Dict[Tuple[int, int, int], float]) -> Tensor333:
    g = np.zeros((3, 3, 3), dtype=np.complex128)
    for pos, v in entries.items():
        g[pos] = v
    return Tensor333(g)


def assemble_psi0(a: float, b: float) -> Tensor333:
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("assemble_psi0: a and b must be finite")
    n0 = 1.0 / np.sqrt(2.0 + 4.0 * a * a + b * b)
    P, Z, M = PLUS, ZERO, MINUS
    return _assemble({
        (P, Z, M): n0,
        (M, Z, P): n0,
        (P, M, Z): n0 * a,
        (M, P, Z): n0 * a,
        (Z, P, M): n0 * a,
        (Z, M, P): n0 * a,
        (Z, Z, Z): n0 * b,
    })


def _psi_pm(c: float, d: float, e: float, up: int, down: int) -> Tensor333:
    if not all(np.isfinite(v) for v in (c, d, e)):
        raise ValueError("psi coefficients must be finite")
    n1 = 1.0 / np.sqrt(2.0 + 2.0 * c * c + d * d + e * e)
    Z = ZERO
    return _assemble({
        (up, up, down): n1,
        (down, up, up): n1,
        (up, Z, Z): n1 * c,
        (Z, Z, up): n1 * c,
        (up, down, up): n1 * d,
        (Z, up, Z): n1 * e,
    })


def assemble_psi_plus(c: float, d: float, e: float) -> Tensor333:
    return _psi_pm(c, d, e, PLUS, MINUS)


def assemble_psi_minus(c: float, d: float, e: float) -> Tensor333:
    return _psi_pm(c, d, e, MINUS, PLUS)


def to_kron_vector(t: Tensor333) -> np.ndarray:
    # Kronecker basis orders each site as (+1, 0, -1), i.e. reversed qutrit index
    return t.gamma[::-1, ::-1, ::-1].reshape(27).copy()


def from_kron_vector(v: np.ndarray) -> Tensor333:
    v = np.asarray(v).reshape(3, 3, 3)
    return Tensor333(v[::-1, ::-1, ::-1])


def apply_local(t: Tensor333, op: LocalOp) -> Tensor333:
    return Tensor333(np.einsum("ip,jq,kr,pqr->ijk", op.l1, op.l2, op.l3, t.gamma))


def random_sl3(seed: int, stream: Optional[int] = None) -> np.ndarray:
    rng = np.random.default_rng(seed if stream is None else [seed, stream])
    while True:
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        det = np.linalg.det(m)
        if abs(det) >= 1e-6:
            return m / det ** (1.0 / 3.0)


def random_sl_op(seed: int) -> LocalOp:
    return LocalOp(*(random_sl3(seed, stream=leg) for leg in range(3)), sl=True)


def cyclic_legs(t: Tensor333) -> Tensor333:
    """Gamma'_abc = Gamma_cab, so that f'(y, z, x) = f(x, y, z)."""
    return Tensor333(np.transpose(t.gamma, (1, 2, 0)))


def product_tensor(u: Sequence[complex], v: Sequence[complex], w: Sequence[complex]) -> Tensor333:
    return Tensor333(np.einsum("i,j,k->ijk", np.asarray(u), np.asarray(v), np.asarray(w)))


def nurmiev_tensor(a1: complex, a2: complex, a3: complex) -> Tensor333:
    """a1 sum x_i y_i z_i + a2 (x1y2z3 + x2y3z1 + x3y1z2) + a3 (x1y3z2 + x2y1z3 + x3y2z1)."""
    g = np.zeros((3, 3, 3), dtype=np.complex128)
    for i in range(3):
        g[i, i, i] = a1
        g[i, (i + 1) % 3, (i + 2) % 3] = a2
        g[i, (i + 2) % 3, (i + 1) % 3] = a3
    return Tensor333(g)
