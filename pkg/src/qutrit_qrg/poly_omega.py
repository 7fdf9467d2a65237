"""Sparse polynomials in grouped, copy-indexed ternary variables, Cayley's Omega and the trace.

A polynomial lives on a declared `Universe` of variables (group, copy, index).
Terms are stored as a dense exponent matrix (one row per term, one column per
variable slot) next to a complex coefficient vector; rows are unique and kept
in lexicographic order, which makes the representation canonical.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import OmegaResidueError
from .tensor_core import Tensor333

GROUPS: Tuple[str, ...] = ("x", "y", "z", "xi", "eta", "zeta")
EXP_DTYPE = np.int16
_FACTORIALS = np.array([math.factorial(k) for k in range(21)], dtype=np.float64)

OpSpec = Sequence[Tuple[str, int]]


@dataclass(frozen=True)
class VarId:
    group: str
    copy: int
    index: int

    def __post_init__(self) -> None:
        if self.copy < 1:
            raise ValueError(f"copy must be >= 1, got {self.copy}")
        if self.index not in (1, 2, 3):
            raise ValueError(f"index must be 1, 2 or 3, got {self.index}")

    def __str__(self) -> str:
        return f"{self.group}{self.index}({self.copy})"


@dataclass(frozen=True)
class Universe:
    groups: Tuple[str, ...] = GROUPS
    copies: int = 3

    @property
    def size(self) -> int:
        return len(self.groups) * self.copies * 3

    def block_start(self, group: str, copy: int) -> int:
        if group not in self.groups:
            raise ValueError(f"group {group!r} not in universe {self.groups}")
        if not 1 <= copy <= self.copies:
            raise ValueError(f"copy {copy} outside 1..{self.copies}")
        return (self.groups.index(group) * self.copies + copy - 1) * 3

    def slot(self, v: VarId) -> int:
        return self.block_start(v.group, v.copy) + v.index - 1

    def var(self, slot: int) -> VarId:
        block, index = divmod(int(slot), 3)
        g, c = divmod(block, self.copies)
        return VarId(self.groups[g], c + 1, index + 1)

    def copy_mask(self, copy: int) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        for g in self.groups:
            s = self.block_start(g, copy)
            mask[s:s + 3] = True
        return mask

    def group_mask(self, group: str) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        for c in range(1, self.copies + 1):
            s = self.block_start(group, c)
            mask[s:s + 3] = True
        return mask


DEFAULT_UNIVERSE = Universe()


def _canonicalize(exps: np.ndarray, coeffs: np.ndarray, prune: float) -> Tuple[np.ndarray, np.ndarray]:
    if coeffs.size == 0:
        return exps[:0], coeffs[:0]
    uniq, inverse = np.unique(exps, axis=0, return_inverse=True)
    summed = np.zeros(uniq.shape[0], dtype=np.complex128)
    np.add.at(summed, inverse.reshape(-1), coeffs)
    keep = np.abs(summed) > prune
    return np.ascontiguousarray(uniq[keep]), summed[keep]


class SparsePoly:
    """Immutable sparse polynomial; every operation returns a new instance."""

    __slots__ = ("universe", "exps", "coeffs")

    def __init__(
        self,
        universe: Universe,
        exps: np.ndarray,
        coeffs: np.ndarray,
        *,
        prune: float = 0.0,
        canonical: bool = False,
    ) -> None:
        exps = np.asarray(exps, dtype=EXP_DTYPE).reshape(-1, universe.size)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if exps.shape[0] != coeffs.shape[0]:
            raise ValueError(f"{exps.shape[0]} exponent rows for {coeffs.shape[0]} coefficients")
        if np.any(exps < 0):
            raise ValueError("negative exponent")
        if not canonical:
            exps, coeffs = _canonicalize(exps, coeffs, prune)
        exps.setflags(write=False)
        coeffs.setflags(write=False)
        self.universe = universe
        self.exps = exps
        self.coeffs = coeffs

    # construction
    @classmethod
    def zero(cls, universe: Universe = DEFAULT_UNIVERSE) -> "SparsePoly":
        return cls(universe, np.zeros((0, universe.size)), np.zeros(0), canonical=True)

    @classmethod
    def constant(cls, c: complex, universe: Universe = DEFAULT_UNIVERSE) -> "SparsePoly":
        return cls(universe, np.zeros((1, universe.size)), np.array([c]))

    @classmethod
    def variable(cls, v: VarId, power: int = 1, universe: Universe = DEFAULT_UNIVERSE) -> "SparsePoly":
        e = np.zeros((1, universe.size))
        e[0, universe.slot(v)] = power
        return cls(universe, e, np.array([1.0]))

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[Tuple[Mapping[VarId, int], complex]],
        universe: Universe = DEFAULT_UNIVERSE,
    ) -> "SparsePoly":
        rows: List[np.ndarray] = []
        cs: List[complex] = []
        for monomial, c in terms:
            e = np.zeros(universe.size, dtype=EXP_DTYPE)
            for v, k in monomial.items():
                e[universe.slot(v)] += k
            rows.append(e)
            cs.append(c)
        if not rows:
            return cls.zero(universe)
        return cls(universe, np.stack(rows), np.array(cs))

    # inspection
    def __len__(self) -> int:
        return int(self.coeffs.shape[0])

    def __repr__(self) -> str:
        return f"SparsePoly(terms={len(self)})"

    def is_zero(self) -> bool:
        return len(self) == 0

    def degree(self) -> int:
        return int(self.exps.sum(axis=1).max()) if len(self) else 0

    def group_degree(self, group: str) -> int:
        if not len(self):
            return 0
        return int(self.exps[:, self.universe.group_mask(group)].sum(axis=1).max())

    def copies_used(self) -> Tuple[int, ...]:
        used = []
        for c in range(1, self.universe.copies + 1):
            if np.any(self.exps[:, self.universe.copy_mask(c)]):
                used.append(c)
        return tuple(used)

    def constant_term(self) -> complex:
        hit = ~np.any(self.exps, axis=1)
        return complex(self.coeffs[hit].sum()) if np.any(hit) else 0j

    def coefficient(self, monomial: Mapping[VarId, int]) -> complex:
        e = np.zeros(self.universe.size, dtype=EXP_DTYPE)
        for v, k in monomial.items():
            e[self.universe.slot(v)] = k
        hit = np.all(self.exps == e, axis=1)
        return complex(self.coeffs[hit].sum()) if np.any(hit) else 0j

    def evaluate(self, values: Mapping[VarId, complex]) -> complex:
        point = np.full(self.universe.size, np.nan, dtype=np.complex128)
        for v, x in values.items():
            point[self.universe.slot(v)] = x
        used = np.any(self.exps > 0, axis=0)
        missing = np.flatnonzero(used & np.isnan(point))
        if missing.size:
            raise KeyError(f"no value for {self.universe.var(missing[0])}")
        point = np.where(used, point, 1.0)
        monomials = np.prod(point[None, :] ** self.exps, axis=1)
        return complex(np.dot(self.coeffs, monomials))

    def max_abs_difference(self, other: "SparsePoly") -> float:
        diff = self - other
        return float(np.abs(diff.coeffs).max()) if len(diff) else 0.0

    # arithmetic
    def _check(self, other: "SparsePoly") -> None:
        if other.universe != self.universe:
            raise ValueError("polynomials live on different universes")

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        self._check(other)
        return SparsePoly(
            self.universe,
            np.concatenate([self.exps, other.exps]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __neg__(self) -> "SparsePoly":
        return SparsePoly(self.universe, self.exps, -self.coeffs, canonical=True)

    def __sub__(self, other: "SparsePoly") -> "SparsePoly":
        return self + (-other)

    def scale(self, c: complex) -> "SparsePoly":
        if c == 0:
            return SparsePoly.zero(self.universe)
        return SparsePoly(self.universe, self.exps, self.coeffs * c, canonical=True)

    def __mul__(self, other):
        if isinstance(other, SparsePoly):
            return poly_mul(self, other)
        return self.scale(complex(other))

    def __rmul__(self, other):
        return self.scale(complex(other))


def sum_polys(polys: Sequence[SparsePoly], universe: Universe = DEFAULT_UNIVERSE) -> SparsePoly:
    polys = [p for p in polys if len(p)]
    if not polys:
        return SparsePoly.zero(universe)
    return SparsePoly(
        polys[0].universe,
        np.concatenate([p.exps for p in polys]),
        np.concatenate([p.coeffs for p in polys]),
    )


def trilinear_form(t: Tensor333, copy: int = 1, universe: Universe = DEFAULT_UNIVERSE) -> SparsePoly:
    nz = np.argwhere(t.gamma != 0)
    e = np.zeros((nz.shape[0], universe.size), dtype=EXP_DTYPE)
    rows = np.arange(nz.shape[0])
    for axis, group in enumerate(("x", "y", "z")):
        e[rows, universe.block_start(group, copy) + nz[:, axis]] = 1
    return SparsePoly(universe, e, t.gamma[tuple(nz.T)])


def linear_pairing(a: str, b: str, copy: int, universe: Universe = DEFAULT_UNIVERSE) -> SparsePoly:
    """a . b = a_1 b_1 + a_2 b_2 + a_3 b_3 in the given copy."""
    e = np.zeros((3, universe.size), dtype=EXP_DTYPE)
    for i in range(3):
        e[i, universe.block_start(a, copy) + i] = 1
        e[i, universe.block_start(b, copy) + i] = 1
    return SparsePoly(universe, e, np.ones(3))


def poly_mul(p: SparsePoly, q: SparsePoly) -> SparsePoly:
    p._check(q)
    if p.is_zero() or q.is_zero():
        return SparsePoly.zero(p.universe)
    exps = (p.exps[:, None, :] + q.exps[None, :, :]).reshape(-1, p.universe.size)
    coeffs = np.multiply.outer(p.coeffs, q.coeffs).reshape(-1)
    return SparsePoly(p.universe, exps, coeffs)


def _differentiate(p: SparsePoly, orders: np.ndarray) -> SparsePoly:
    # orders: per-slot derivative counts
    if p.is_zero() or not np.any(orders):
        return p
    ok = np.all(p.exps >= orders, axis=1)
    if not np.any(ok):
        return SparsePoly.zero(p.universe)
    exps = p.exps[ok].astype(np.int64)
    coeffs = p.coeffs[ok].copy()
    for s in np.flatnonzero(orders):
        for t in range(int(orders[s])):
            coeffs *= exps[:, s] - t
    # subtracting the same vector from every row keeps rows unique and ordered
    return SparsePoly(p.universe, exps - orders, coeffs, canonical=True)


def poly_diff(p: SparsePoly, v: VarId, order: int = 1) -> SparsePoly:
    orders = np.zeros(p.universe.size, dtype=np.int64)
    orders[p.universe.slot(v)] = order
    return _differentiate(p, orders)


_PERMS: Tuple[Tuple[int, int, int], ...] = tuple(itertools.permutations(range(3)))


def _perm_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for i in range(3) for j in range(i + 1, 3) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def omega_patterns(power: int) -> Tuple[np.ndarray, np.ndarray]:
    """Omega^power as aggregated derivative patterns.

    Returns (counts, signs): counts[m, c, i] is how often copy position c
    differentiates index i in pattern m; signs[m] the summed permutation sign.
    """
    if power < 1:
        raise ValueError(f"Omega power must be >= 1, got {power}")
    acc: Dict[Tuple[int, ...], int] = {}
    for combo in itertools.product(range(len(_PERMS)), repeat=power):
        counts = np.zeros((3, 3), dtype=np.int64)
        sign = 1
        for s in combo:
            perm = _PERMS[s]
            sign *= _perm_sign(perm)
            for c in range(3):
                counts[c, perm[c]] += 1
        key = tuple(counts.reshape(-1))
        acc[key] = acc.get(key, 0) + sign
    keys = [k for k, s in acc.items() if s != 0]
    counts_arr = np.array(keys, dtype=np.int64).reshape(-1, 3, 3)
    signs = np.array([acc[k] for k in keys], dtype=np.int64)
    counts_arr.setflags(write=False)
    signs.setflags(write=False)
    return counts_arr, signs


def omega_apply(
    p: SparsePoly,
    group: str,
    copies: Tuple[int, int, int] = (1, 2, 3),
    power: int = 1,
) -> SparsePoly:
    """Naive Omega_group^power: power-fold sum over the six signed permutation triples."""
    if power < 1:
        raise ValueError(f"Omega power must be >= 1, got {power}")
    u = p.universe
    starts = [u.block_start(group, c) for c in copies]
    out = p
    for _ in range(power):
        parts = []
        for perm in _PERMS:
            orders = np.zeros(u.size, dtype=np.int64)
            for pos, idx in enumerate(perm):
                orders[starts[pos] + idx] += 1
            parts.append(_differentiate(out, orders).scale(_perm_sign(perm)))
        out = sum_polys(parts, u)
    return out


def trace_identify(p: SparsePoly, group: str) -> SparsePoly:
    """Identify every copy of `group` with copy 1 (x^(i) -> x) and merge terms."""
    u = p.universe
    exps = p.exps.astype(np.int64)
    target = u.block_start(group, 1)
    for c in range(2, u.copies + 1):
        s = u.block_start(group, c)
        exps[:, target:target + 3] += exps[:, s:s + 3]
        exps[:, s:s + 3] = 0
    return SparsePoly(u, exps, p.coeffs)


def trace_all(p: SparsePoly) -> SparsePoly:
    for g in p.universe.groups:
        p = trace_identify(p, g)
    return p


def with_copy(p: SparsePoly, copy: int) -> SparsePoly:
    """Move a copy-1 polynomial onto copy `copy`."""
    u = p.universe
    if copy == 1:
        return p
    if np.any(p.exps[:, ~u.copy_mask(1)]):
        raise ValueError("with_copy expects a polynomial in copy-1 variables only")
    exps = np.zeros_like(p.exps)
    for g in u.groups:
        src = u.block_start(g, 1)
        dst = u.block_start(g, copy)
        exps[:, dst:dst + 3] = p.exps[:, src:src + 3]
    return SparsePoly(u, exps, p.coeffs)


def rename_groups(p: SparsePoly, mapping: Mapping[str, str]) -> SparsePoly:
    """Substitute variable groups, e.g. {"x": "y", "y": "z", "z": "x"}; must be a permutation."""
    u = p.universe
    full = {g: mapping.get(g, g) for g in u.groups}
    if sorted(full.values()) != sorted(u.groups):
        raise ValueError(f"group substitution is not a permutation: {mapping}")
    exps = np.zeros_like(p.exps)
    for src_g, dst_g in full.items():
        for c in range(1, u.copies + 1):
            s = u.block_start(src_g, c)
            d = u.block_start(dst_g, c)
            exps[:, d:d + 3] = p.exps[:, s:s + 3]
    return SparsePoly(u, exps, p.coeffs)


def _check_factor_copies(factors: Sequence[SparsePoly]) -> Universe:
    if len(factors) != 3:
        raise ValueError(f"Omega acts on three copies; got {len(factors)} factors")
    u = factors[0].universe
    for copy, f in enumerate(factors, start=1):
        f._check(factors[0])
        if np.any(f.exps[:, ~u.copy_mask(copy)]):
            raise ValueError(f"factor {copy} uses variables outside copy {copy}")
    return u


def _check_spec(u: Universe, op_spec: OpSpec) -> None:
    groups = [g for g, _ in op_spec]
    if len(set(groups)) != len(groups):
        raise ValueError(f"repeated group in Omega axes: {groups}")
    for g, k in op_spec:
        if g not in u.groups:
            raise ValueError(f"unknown group {g!r}")
        if int(k) < 1:
            raise ValueError(f"Omega power must be >= 1, got {k} for {g}")


def omega_product(factors: Sequence[SparsePoly], op_spec: OpSpec) -> SparsePoly:
    """Omega operators of `op_spec` applied to factors[0]*factors[1]*factors[2], untraced.

    Factor k carries only copy-(k+1) variables, so each derivative pattern splits
    into three independent per-copy derivatives; the product is only formed for
    the differentiated factors.
    """
    u = _check_factor_copies(factors)
    _check_spec(u, op_spec)
    per_group = [omega_patterns(int(k)) for _, k in op_spec]
    cache: Dict[Tuple[int, bytes], SparsePoly] = {}
    parts: List[SparsePoly] = []
    for choice in itertools.product(*(range(len(signs)) for _, signs in per_group)):
        sign = 1
        derived = []
        for c in range(3):
            orders = np.zeros(u.size, dtype=np.int64)
            for (g, _), (counts, _signs), m in zip(op_spec, per_group, choice):
                s = u.block_start(g, c + 1)
                orders[s:s + 3] += counts[m, c]
            key = (c, orders.tobytes())
            if key not in cache:
                cache[key] = _differentiate(factors[c], orders)
            derived.append(cache[key])
        for (_counts, signs), m in zip(per_group, choice):
            sign *= int(signs[m])
        if any(d.is_zero() for d in derived):
            continue
        parts.append(poly_mul(poly_mul(derived[0], derived[1]), derived[2]).scale(sign))
    return sum_polys(parts, u)


def _fsum_complex(values: np.ndarray) -> complex:
    return complex(math.fsum(values.real), math.fsum(values.imag))


def factorized_omega_trace(factors: Sequence[SparsePoly], op_spec: OpSpec) -> complex:
    """Scalar tr Omega... (f1 f2 f3) without expanding the product.

    Every group in `op_spec` receives exactly `power` derivatives per copy, so a
    term of factor c survives only if its degree in each listed group equals the
    power; its fully differentiated value is coeff * prod(e!). The per-copy
    values are looked up for every aggregated derivative pattern and combined
    with the pattern signs.
    """
    u = _check_factor_copies(factors)
    _check_spec(u, op_spec)
    powers = {g: int(k) for g, k in op_spec}

    # mixed-radix code of a copy-local exponent pattern over the listed groups
    weights: Dict[str, np.ndarray] = {}
    w = 1
    for g, k in op_spec:
        weights[g] = w * (k + 1) ** np.arange(3, dtype=np.int64)
        w *= (k + 1) ** 3

    tables = []
    for copy, f in enumerate(factors, start=1):
        if f.is_zero():
            return 0j
        exps = f.exps.astype(np.int64)
        degs = {g: exps[:, u.block_start(g, copy):u.block_start(g, copy) + 3].sum(axis=1) for g in u.groups}
        annihilated = np.zeros(len(f), dtype=bool)
        for g, k in powers.items():
            annihilated |= degs[g] < k
        for g in u.groups:
            excess = degs[g] - powers.get(g, 0)
            bad = (excess > 0) & ~annihilated
            if np.any(bad):
                raise OmegaResidueError(g, int(excess[bad].max()))
        live = ~annihilated
        codes = np.zeros(int(live.sum()), dtype=np.int64)
        values = f.coeffs[live].copy()
        for g in powers:
            s = u.block_start(g, copy)
            block = exps[live, s:s + 3]
            codes += block @ weights[g]
            values *= np.prod(_FACTORIALS[block], axis=1)
        order = np.argsort(codes)
        tables.append((codes[order], values[order]))

    # enumerate the Cartesian product of per-group patterns, one code per copy
    codes = [np.zeros(1, dtype=np.int64) for _ in range(3)]
    signs = np.ones(1, dtype=np.int64)
    for g, k in op_spec:
        counts, gsigns = omega_patterns(int(k))
        for c in range(3):
            gc = counts[:, c, :] @ weights[g]
            codes[c] = (codes[c][:, None] + gc[None, :]).reshape(-1)
        signs = (signs[:, None] * gsigns[None, :]).reshape(-1)

    total = signs.astype(np.complex128)
    for c, (keys, values) in enumerate(tables):
        if keys.size == 0:
            return 0j
        pos = np.searchsorted(keys, codes[c])
        pos_c = np.minimum(pos, keys.size - 1)
        hit = keys[pos_c] == codes[c]
        total = total * np.where(hit, values[pos_c], 0.0)
    return _fsum_complex(total)


def naive_omega_trace(factors: Sequence[SparsePoly], op_spec: OpSpec) -> complex:
    """Reference pipeline: expand the product, apply omega_apply, trace, read the constant."""
    u = _check_factor_copies(factors)
    _check_spec(u, op_spec)
    p = poly_mul(poly_mul(factors[0], factors[1]), factors[2])
    for g, k in op_spec:
        p = omega_apply(p, g, (1, 2, 3), int(k))
    p = trace_all(p)
    for g in u.groups:
        d = p.group_degree(g)
        if d:
            raise OmegaResidueError(g, d)
    return p.constant_term()


def naive_omega_product(factors: Sequence[SparsePoly], op_spec: OpSpec) -> SparsePoly:
    u = _check_factor_copies(factors)
    _check_spec(u, op_spec)
    p = poly_mul(poly_mul(factors[0], factors[1]), factors[2])
    for g, k in op_spec:
        p = omega_apply(p, g, (1, 2, 3), int(k))
    return p
