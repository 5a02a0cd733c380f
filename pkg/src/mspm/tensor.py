"""Dense partially symmetric tensors.

A tensor in S^{d_1}(R^{m_1}) (x) ... (x) S^{d_l}(R^{m_l}) is stored with all
prod m_i^{d_i} entries.  Axes are grouped by block: the d_1 axes of block 1
come first, then the d_2 axes of block 2, and so on.  Every flattening and
vectorization in the package derives from this single axis order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class SymmetryType:
    """Block structure ``((d_1, m_1), ..., (d_l, m_l))`` of a tensor space.

    Blocks with ``d_i = 0`` are allowed so that contractions keep block
    indices aligned with the tensor they came from.  Use
    :meth:`check_standard` where the stricter ``d_i >= 1, m_i >= 2`` applies.
    """

    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self):
        blocks = tuple((int(d), int(m)) for d, m in self.blocks)
        for d, m in blocks:
            if d < 0 or m < 1:
                raise ValueError(f"invalid block (d={d}, m={m})")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def coerce(cls, obj) -> "SymmetryType":
        if isinstance(obj, SymmetryType):
            return obj
        if isinstance(obj, str):
            return cls.parse(obj)
        return cls(tuple(obj))

    @classmethod
    def parse(cls, text: str) -> "SymmetryType":
        """Parse ``"d1:m1,d2:m2,..."``."""
        blocks = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            d, _, m = part.partition(":")
            if not m:
                raise ValueError(f"expected d:m, got {part!r}")
            blocks.append((int(d), int(m)))
        if not blocks:
            raise ValueError("empty symmetry")
        return cls(tuple(blocks))

    def __str__(self):
        return ",".join(f"{d}:{m}" for d, m in self.blocks)

    def check_standard(self) -> "SymmetryType":
        for d, m in self.blocks:
            if d < 1:
                raise ValueError(f"block exponent must be >= 1, got {d}")
            if m < 2:
                raise ValueError(f"block dimension must be >= 2, got {m}")
        return self

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.blocks)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m for _, m in self.blocks)

    @property
    def order(self) -> int:
        return sum(self.exponents)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m for d, m in self.blocks for _ in range(d))

    @property
    def size(self) -> int:
        return math.prod(m**d for d, m in self.blocks)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(itertools.accumulate((d for d, _ in self.blocks), initial=0))[:-1]

    def block_axes(self, i: int) -> range:
        off = self.offsets[i]
        return range(off, off + self.blocks[i][0])

    def with_exponents(self, exps: Sequence[int]) -> "SymmetryType":
        if len(exps) != self.n_blocks:
            raise ValueError("exponent count does not match block count")
        return SymmetryType(tuple((int(a), m) for a, (_, m) in zip(exps, self.blocks)))

    def reduced(self, f: Sequence[int]) -> "SymmetryType":
        """Symmetry of ``T . (x) v^{f_i}``: exponents ``d_i - f_i``."""
        check_tuple(self, f)
        return self.with_exponents([d - fi for (d, _), fi in zip(self.blocks, f)])

    def active(self) -> tuple[int, ...]:
        """Indices of blocks with a positive exponent."""
        return tuple(i for i, (d, _) in enumerate(self.blocks) if d > 0)

    def compress(self) -> "SymmetryType":
        """Drop blocks with zero exponent (the array shape is unchanged)."""
        return SymmetryType(tuple(b for b in self.blocks if b[0] > 0))


def check_tuple(sym: SymmetryType, f: Sequence[int], *, proper: bool = False) -> tuple[int, ...]:
    """Validate a flattening tuple ``0 <= f_i <= d_i``.

    With ``proper=True`` also reject ``f = 0`` and ``f = d``.
    """
    f = tuple(int(x) for x in f)
    if len(f) != sym.n_blocks:
        raise ValueError(f"tuple {f} has wrong length for {sym.n_blocks} blocks")
    for fi, d in zip(f, sym.exponents):
        if not 0 <= fi <= d:
            raise ValueError(f"tuple {f} out of range for exponents {sym.exponents}")
    if proper and (all(x == 0 for x in f) or f == sym.exponents):
        raise ValueError(f"tuple {f} must differ from 0 and d={sym.exponents}")
    return f


class PSTensor:
    """Dense real tensor with a :class:`SymmetryType`.

    The value array is read-only; arithmetic returns new tensors.
    Construction checks within-block permutation invariance to a relative
    tolerance of ``1e-10`` unless ``check=False``.
    """

    __slots__ = ("symmetry", "values")

    def __init__(self, values, symmetry, *, check: bool = True, rtol: float = SYMMETRY_RTOL):
        sym = SymmetryType.coerce(symmetry)
        arr = np.array(values, dtype=np.float64)
        if arr.shape != sym.shape:
            raise ValueError(f"array shape {arr.shape} does not match symmetry shape {sym.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor has non-finite entries")
        if check:
            err = symmetry_defect(arr, sym)
            if err > rtol * max(np.linalg.norm(arr), np.finfo(float).tiny):
                raise ValueError(f"array is not invariant under within-block permutations (defect {err:.3e})")
        arr.flags.writeable = False
        self.symmetry = sym
        self.values = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray, sym: SymmetryType) -> "PSTensor":
        obj = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        if arr.flags.writeable:
            arr.flags.writeable = False
        obj.symmetry = sym
        obj.values = arr
        return obj

    @classmethod
    def zeros(cls, symmetry) -> "PSTensor":
        sym = SymmetryType.coerce(symmetry)
        return cls._wrap(np.zeros(sym.shape), sym)

    @property
    def shape(self):
        return self.values.shape

    def norm(self) -> float:
        return float(np.linalg.norm(self.values.ravel()))

    def scalar(self) -> float:
        if self.values.ndim != 0:
            raise ValueError("tensor is not of order 0")
        return float(self.values)

    def _check_same(self, other: "PSTensor"):
        if not isinstance(other, PSTensor):
            return NotImplemented
        if other.symmetry.shape != self.symmetry.shape or other.symmetry.compress() != self.symmetry.compress():
            raise ValueError("symmetry mismatch")
        return None

    def __add__(self, other):
        if self._check_same(other) is NotImplemented:
            return NotImplemented
        return PSTensor._wrap(self.values + other.values, self.symmetry)

    def __sub__(self, other):
        if self._check_same(other) is NotImplemented:
            return NotImplemented
        return PSTensor._wrap(self.values - other.values, self.symmetry)

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return PSTensor._wrap(float(alpha) * self.values, self.symmetry)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return self * (1.0 / float(alpha))

    def __neg__(self):
        return PSTensor._wrap(-self.values, self.symmetry)

    def __repr__(self):
        return f"PSTensor(symmetry={self.symmetry}, norm={self.norm():.6g})"


def symmetry_defect(arr: np.ndarray, sym: SymmetryType) -> float:
    """Largest Frobenius distance between ``arr`` and an adjacent-axis swap within a block.

    Adjacent transpositions generate each block's permutation group, so a
    zero defect means full partial symmetry.
    """
    worst = 0.0
    for i, (d, _) in enumerate(sym.blocks):
        axes = sym.block_axes(i)
        for p in list(axes)[:-1]:
            worst = max(worst, float(np.linalg.norm((arr - np.swapaxes(arr, p, p + 1)).ravel())))
    return worst


def as_factors(factors: Iterable, sym: SymmetryType | None = None) -> tuple:
    """Convert a factor tuple to float arrays, checking lengths against ``sym``.

    Entries may be ``None`` for blocks that are never contracted.
    """
    out = tuple(None if v is None else np.asarray(v, dtype=np.float64).reshape(-1) for v in factors)
    if sym is not None:
        if len(out) != sym.n_blocks:
            raise ValueError(f"expected {sym.n_blocks} factors, got {len(out)}")
        for v, m in zip(out, sym.dims):
            if v is not None and v.shape[0] != m:
                raise ValueError(f"factor of length {v.shape[0]} for block of dimension {m}")
    return out


def unit_factors(factors: Iterable, tol: float = 1e-12) -> tuple:
    """Validate that every factor has unit Euclidean norm."""
    out = as_factors(factors)
    for v in out:
        if v is not None and abs(np.linalg.norm(v) - 1.0) > tol:
            raise ValueError("factor vectors must have unit norm")
    return out


def rank_one_array(factors: Sequence[np.ndarray], exponents: Sequence[int]) -> np.ndarray:
    """Dense ``(x)_i v_i^{(x) a_i}`` as a flat vector in block-major order."""
    parts = [v for v, a in zip(factors, exponents) for _ in range(a)]
    if not parts:
        return np.ones(1)
    return reduce(np.kron, parts)


def make_rank_one(factors, exponents: Sequence[int], scale: float = 1.0) -> PSTensor:
    """Return ``scale * (x)_i (v^(i))^{(x) a_i}``.

    >>> make_rank_one(([1.0, 0.0], [0.0, 1.0]), (1, 1), 2.0).values
    array([[0., 2.],
           [0., 0.]])
    """
    factors = as_factors(factors)
    if len(factors) != len(exponents):
        raise ValueError("need one exponent per factor")
    if any(a < 0 for a in exponents):
        raise ValueError("exponents must be non-negative")
    sym = SymmetryType(tuple((a, v.shape[0]) for v, a in zip(factors, exponents)))
    vec = scale * rank_one_array(factors, exponents)
    return PSTensor._wrap(canonicalize(vec.reshape(sym.shape), sym), sym)


def vectorize(T: PSTensor) -> np.ndarray:
    """Row-major enumeration of all entries."""
    return T.values.reshape(-1)


def symmetrize(values, symmetry) -> PSTensor:
    """Orthogonal projection onto the partially symmetric subspace.

    Averages over all permutations of axes within each block.  The blocks'
    averaging operators commute, so they are applied one block at a time.
    """
    sym = SymmetryType.coerce(symmetry)
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != sym.shape:
        raise ValueError(f"array shape {arr.shape} does not match symmetry shape {sym.shape}")
    for i, (d, _) in enumerate(sym.blocks):
        if d < 2:
            continue
        axes = list(sym.block_axes(i))
        acc = np.zeros_like(arr)
        n = 0
        for perm in itertools.permutations(axes):
            order = list(range(arr.ndim))
            for src, dst in zip(axes, perm):
                order[src] = dst
            acc += np.transpose(arr, order)
            n += 1
        arr = acc / n
    return PSTensor._wrap(canonicalize(arr, sym), sym)


def canonicalize(arr: np.ndarray, sym: SymmetryType) -> np.ndarray:
    """Copy each entry from its sorted-index representative within every block.

    Floating-point averaging leaves last-bit differences between entries that
    should coincide; this makes within-block permutation invariance exact.
    """
    arr = np.asarray(arr)
    for i, (d, m) in enumerate(sym.blocks):
        if d < 2:
            continue
        grids = np.indices((m,) * d).reshape(d, -1)
        grids = np.sort(grids, axis=0).reshape((d,) + (m,) * d)
        off = sym.offsets[i]
        arr = arr[(slice(None),) * off + tuple(grids)]
    return arr


def contract_array(arr: np.ndarray, sym: SymmetryType, factors, counts: Sequence[int], lead: int = 0) -> np.ndarray:
    """Contract ``counts[i]`` axes of block ``i`` of a raw array with ``factors[i]``.

    ``lead`` leading axes (for example a stack index) are left untouched.
    Blocks are processed last to first so earlier axis positions stay put.
    """
    out = arr
    exps = list(sym.exponents)
    offs = sym.offsets
    for i in reversed(range(sym.n_blocks)):
        c = counts[i]
        if c == 0:
            continue
        v = factors[i]
        for _ in range(c):
            pos = lead + offs[i] + exps[i] - 1
            if pos == out.ndim - 1:
                out = out @ v
            else:
                out = np.tensordot(out, v, axes=([pos], [0]))
            exps[i] -= 1
    return out


def contract(T: PSTensor, factors, exponents: Sequence[int]) -> PSTensor:
    """Contraction ``T . (x)_i (v^(i))^{(x) f_i}``.

    The result lives in ``(x)_i S^{d_i - f_i}(R^{m_i})``; contracting with
    ``f = d`` gives an order-0 tensor (use :meth:`PSTensor.scalar`).
    """
    sym = T.symmetry
    f = check_tuple(sym, exponents)
    factors = as_factors(factors, sym)
    for v, fi in zip(factors, f):
        if fi > 0 and v is None:
            raise ValueError("missing factor for a contracted block")
    arr = contract_array(T.values, sym, factors, f)
    return PSTensor._wrap(np.asarray(arr), sym.reduced(f))


def full_contraction(T: PSTensor, factors) -> float:
    """``T . (x)_i (v^(i))^{(x) d_i}``."""
    return contract(T, factors, T.symmetry.exponents).scalar()


def flatten_permutation(sym: SymmetryType, f: Sequence[int]) -> list[int]:
    rows, cols = [], []
    for i, fi in enumerate(f):
        axes = list(sym.block_axes(i))
        rows.extend(axes[:fi])
        cols.extend(axes[fi:])
    return rows + cols


def flatten(T: PSTensor, f: Sequence[int]) -> np.ndarray:
    """Full (redundant) f-flattening.

    Rows are indexed by the first ``f_i`` axes of every block, columns by the
    remaining axes, both in block-major row-major order.
    """
    sym = T.symmetry
    f = check_tuple(sym, f)
    n_row = math.prod(m**fi for fi, m in zip(f, sym.dims))
    perm = flatten_permutation(sym, f)
    return np.transpose(T.values, perm).reshape(n_row, -1)


def axpy_rank_one(T: PSTensor, scale: float, factors) -> PSTensor:
    """``T + scale * (x)_i (v^(i))^{(x) d_i}``."""
    sym = T.symmetry
    factors = as_factors(factors, sym)
    if scale == 0.0:
        return T
    vec = rank_one_array(factors, sym.exponents)
    out = T.values.reshape(-1) + scale * vec
    return PSTensor._wrap(canonicalize(out.reshape(sym.shape), sym), sym)


def inner(A: PSTensor, B: PSTensor) -> float:
    return float(np.dot(vectorize(A), vectorize(B)))
