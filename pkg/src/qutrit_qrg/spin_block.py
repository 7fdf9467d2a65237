"""Three-site spin-1 block: root conditions, eigenstate coefficients, renormalization factors.

Energies are in units of J. Single-site basis order is (+1, 0, -1), so
Sz = diag(1, 0, -1); three-site operators are Kronecker products with site 1
most significant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import RootFindingError, SingularBlock
from .tensor_core import Tensor333, assemble_psi0, assemble_psi_minus, assemble_psi_plus, to_kron_vector

SQ2 = np.sqrt(2.0)
SX = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]) / SQ2
SY = np.array([[0.0, -1j, 0.0], [1j, 0.0, -1j], [0.0, 1j, 0.0]]) / SQ2
SZ = np.diag([1.0, 0.0, -1.0])
ID3 = np.eye(3)

ROOT_IMAG_TOL = 1e-9
SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class Couplings:
    j: float
    delta: float
    d: float

    def __post_init__(self) -> None:
        for name in ("j", "delta", "d"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"coupling {name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.j <= 0.0:
            raise ValueError(f"J must be > 0, got {self.j}")


@dataclass(frozen=True)
class BlockSolution:
    delta: float
    d: float
    eps0: float
    eps1: float
    a: float
    b: float
    c: float
    d_coef: float
    e: float
    n0: float
    n1: float
    x_ren: float
    z_ren: float

    def psi0(self) -> Tensor333:
        return assemble_psi0(self.a, self.b)

    def psi_plus(self) -> Tensor333:
        return assemble_psi_plus(self.c, self.d_coef, self.e)

    def psi_minus(self) -> Tensor333:
        return assemble_psi_minus(self.c, self.d_coef, self.e)

    def abs_i6(self) -> float:
        """|I6| of psi0 from the closed form -8 N0^6 a^4."""
        return 8.0 * self.n0 ** 6 * self.a ** 4


def cubic_coefficients(delta: float, d: float) -> np.ndarray:
    return np.array([1.0, delta - 4.0 * d, 4.0 * d * d - 2.0 * d * delta - 6.0, 8.0 * d])


def quartic_coefficients(delta: float, d: float) -> np.ndarray:
    return np.array([
        1.0,
        2.0 * delta - 8.0 * d,
        22.0 * d ** 2 - 10.0 * d * delta - 5.0,
        -24.0 * d ** 3 + 14.0 * d ** 2 * delta + 24.0 * d - 6.0 * delta,
        9.0 * d ** 4 - 6.0 * delta * d ** 3 - 27.0 * d ** 2 + 14.0 * d * delta,
    ])


def companion_roots(coeffs: Sequence[float]) -> np.ndarray:
    """All roots of a polynomial (highest degree first) as companion-matrix eigenvalues."""
    p = np.asarray(coeffs, dtype=float)
    nz = np.flatnonzero(p != 0)
    if len(nz) == 0:
        raise ValueError("zero polynomial has no roots")
    p = p[nz[0]:]
    n = len(p) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    a = np.zeros((n, n))
    rng = np.arange(n - 1)
    a[rng + 1, rng] = 1.0
    a[0, :] = -p[1:] / p[0]
    return np.linalg.eigvals(a).astype(complex)


def _polish(coeffs: np.ndarray, root: float, iters: int = 3) -> float:
    dp = np.polyder(coeffs)
    best, best_res = root, abs(np.polyval(coeffs, root))
    x = root
    for _ in range(iters):
        slope = np.polyval(dp, x)
        if slope == 0.0:
            break
        x = x - np.polyval(coeffs, x) / slope
        res = abs(np.polyval(coeffs, x))
        if res < best_res:
            best, best_res = x, res
        else:
            break
    return float(best)


def smallest_real_root(coeffs: Sequence[float], what: str = "polynomial") -> float:
    coeffs = np.asarray(coeffs, dtype=float)
    roots = companion_roots(coeffs)
    real = [r.real for r in roots if abs(r.imag) < ROOT_IMAG_TOL * (1.0 + abs(r.real))]
    if not real:
        raise RootFindingError(f"{what} has no real root", roots=roots)
    return _polish(coeffs, min(real))


def eps0_smallest_root(delta: float, d: float) -> float:
    return smallest_real_root(cubic_coefficients(delta, d), "eps0 cubic")


def eps1_smallest_root(delta: float, d: float) -> float:
    return smallest_real_root(quartic_coefficients(delta, d), "eps1 quartic")


def block_solution(delta: float, d: float, tol: float = SINGULAR_TOL) -> BlockSolution:
    eps0 = eps0_smallest_root(delta, d)
    eps1 = eps1_smallest_root(delta, d)
    den_d = eps1 + 2.0 * delta - 3.0 * d
    den_e = eps1 - d
    for name, value in (("eps0", eps0), ("eps1 + 2*delta - 3*d", den_d), ("eps1 - d", den_e)):
        if abs(value) <= tol:
            raise SingularBlock(name, value)

    a = eps0 / 2.0 - d
    b = 2.0 * (1.0 - 2.0 * d / eps0)
    c = eps1 - 3.0 * d
    d_coef = 2.0 * c / den_d
    e = 2.0 * c / den_e
    n0 = 1.0 / np.sqrt(2.0 + 4.0 * a * a + b * b)
    n1 = 1.0 / np.sqrt(2.0 + 2.0 * c * c + d_coef * d_coef + e * e)
    x_ren = n0 * n1 * (a + c + b * c + a * d_coef + a * e)
    z_ren = n1 * n1 * (c * c + d_coef * d_coef)
    return BlockSolution(
        delta=float(delta), d=float(d),
        eps0=eps0, eps1=eps1,
        a=float(a), b=float(b), c=float(c), d_coef=float(d_coef), e=float(e),
        n0=float(n0), n1=float(n1),
        x_ren=float(x_ren), z_ren=float(z_ren),
    )


def _kron3(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.kron(np.kron(a, b), c)


def site_operator(op: np.ndarray, site: int) -> np.ndarray:
    """`op` on site 1, 2 or 3 of the block, identity elsewhere."""
    ops = [ID3, ID3, ID3]
    ops[site - 1] = op
    return _kron3(*ops)


def _pair(op: np.ndarray, i: int, j: int) -> np.ndarray:
    ops = [ID3, ID3, ID3]
    ops[i - 1] = op
    ops[j - 1] = op
    return _kron3(*ops)


def build_block_hamiltonian(c: Couplings) -> np.ndarray:
    h = np.zeros((27, 27), dtype=complex)
    for i, j in ((1, 2), (2, 3)):
        h += _pair(SX, i, j) + _pair(SY, i, j) + c.delta * _pair(SZ, i, j)
    for site in (1, 2, 3):
        h += c.d * site_operator(SZ @ SZ, site)
    return np.ascontiguousarray((c.j * h).real)


def total_sz_diagonal() -> np.ndarray:
    digits = np.array(np.unravel_index(np.arange(27), (3, 3, 3)))
    return (1 - digits).sum(axis=0)


def sector_indices(sz: int) -> np.ndarray:
    return np.flatnonzero(total_sz_diagonal() == sz)


def dense_eigh(m: np.ndarray, tol: float = 1e-12, max_sweeps: int = 64) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigen-decomposition of a real symmetric matrix, eigenvalues ascending."""
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    norm = float(np.linalg.norm(a))
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * max(1.0, norm):
        raise ValueError("dense_eigh: matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    target = tol * norm
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                cs = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * cs
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = cs * ap - sn * aq
                a[:, q] = sn * ap + cs * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = cs * ap - sn * aq
                a[q, :] = sn * ap + cs * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = cs * vp - sn * vq
                v[:, q] = sn * vp + cs * vq
    else:
        raise RuntimeError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sector_eigh(h: np.ndarray, sz: int) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of h restricted to total Sz = sz; eigenvectors embedded back into 27 components."""
    idx = sector_indices(sz)
    w, v = dense_eigh(h[np.ix_(idx, idx)])
    full = np.zeros((27, v.shape[1]))
    full[idx, :] = v
    return w, full


def embedding_operator(sol: BlockSolution) -> np.ndarray:
    """27x3 isometry T = |psi+><+1| + |psi0><0| + |psi-><-1|."""
    cols = [to_kron_vector(s).real for s in (sol.psi_plus(), sol.psi0(), sol.psi_minus())]
    return np.stack(cols, axis=1)


@dataclass
class OperatorReport:
    isometry: float
    eigen_residual: float
    energy: float
    spin: Dict[str, float] = field(default_factory=dict)

    @property
    def max_deviation(self) -> float:
        return max([self.isometry, self.eigen_residual, self.energy, *self.spin.values()])


def verify_renormalized_operators(sol: BlockSolution) -> OperatorReport:
    """Project edge-site spin operators and the block Hamiltonian through T and compare with closed forms."""
    t = embedding_operator(sol)
    h = build_block_hamiltonian(Couplings(1.0, sol.delta, sol.d))
    energies = np.diag([sol.eps1, sol.eps0, sol.eps1])

    spin: Dict[str, float] = {}
    for site in (1, 3):
        for name, op, factor in (("x", SX, sol.x_ren), ("y", SY, sol.x_ren), ("z", SZ, sol.z_ren)):
            projected = t.T @ site_operator(op, site) @ t
            spin[f"s{name}{site}"] = float(np.max(np.abs(projected - factor * op)))

    return OperatorReport(
        isometry=float(np.max(np.abs(t.T @ t - ID3))),
        eigen_residual=float(np.max(np.abs(h @ t - t @ energies))),
        energy=float(np.max(np.abs(t.T @ h @ t - energies))),
        spin=spin,
    )


@dataclass
class EDReport:
    eps0: float
    eps1: float
    eps0_deviation: float
    eps1_deviation: float
    doublet_splitting: float
    psi0_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.eps0_deviation, self.eps1_deviation, self.doublet_splitting, self.psi0_deviation)


def ed_check(sol: BlockSolution, j: float = 1.0) -> EDReport:
    """Exact diagonalization of the block in the Sz = 0, +1, -1 sectors against the root conditions."""
    h = build_block_hamiltonian(Couplings(j, sol.delta, sol.d))
    w0, v0 = sector_eigh(h, 0)
    wp, _ = sector_eigh(h, 1)
    wm, _ = sector_eigh(h, -1)

    psi0 = to_kron_vector(sol.psi0()).real
    ground = v0[:, 0]
    sign = 1.0 if float(np.dot(ground, psi0)) >= 0.0 else -1.0

    return EDReport(
        eps0=float(w0[0] / j),
        eps1=float(wp[0] / j),
        eps0_deviation=float(abs(w0[0] - j * sol.eps0)),
        eps1_deviation=float(abs(wp[0] - j * sol.eps1)),
        doublet_splitting=float(abs(wp[0] - wm[0])),
        psi0_deviation=float(np.max(np.abs(sign * ground - psi0))),
    )
