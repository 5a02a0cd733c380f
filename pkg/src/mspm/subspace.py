"""Orthonormal-slice subspaces and the deflated flattening factorization.

The working flattening of the residual tensor is kept as ``U C^{-1} V^T``
where ``U`` and ``V`` have orthonormal columns.  The columns of ``U``
reshaped to tensors are the orthonormal slices that the power method
searches; the columns of ``V`` are the matching basis of the complementary
(row space) side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.linalg import null_space

from .exceptions import DeflationError
from .tensor import PSTensor, SymmetryType, check_tuple, flatten

RankPolicy = Union[int, str]

FLAT_RATIO = 10.0


@dataclass
class SlicedSubspace:
    """An orthonormal family of ``r`` tensors sharing one symmetry type.

    ``symmetry`` only lists the blocks with a positive exponent; ``blocks``
    gives their positions in the parent tensor.  ``slices[j]`` is the j-th
    basis tensor.
    """

    symmetry: SymmetryType
    blocks: tuple[int, ...]
    slices: np.ndarray

    def __post_init__(self):
        self.slices = np.asarray(self.slices, dtype=np.float64)
        if self.slices.shape[1:] != self.symmetry.shape:
            raise ValueError("slice shape does not match the symmetry")
        if len(self.blocks) != self.symmetry.n_blocks:
            raise ValueError("block map length does not match the symmetry")

    @classmethod
    def from_matrix(cls, Q: np.ndarray, symmetry: SymmetryType, blocks: Sequence[int]) -> "SlicedSubspace":
        Q = np.asarray(Q, dtype=np.float64)
        return cls(symmetry, tuple(blocks), Q.T.reshape((Q.shape[1],) + symmetry.shape))

    @property
    def rank(self) -> int:
        return self.slices.shape[0]

    def matrix(self) -> np.ndarray:
        """Vectorized slices as columns."""
        return self.slices.reshape(self.rank, -1).T

    def gram(self) -> np.ndarray:
        M = self.matrix()
        return M.T @ M

    def slice(self, j: int) -> PSTensor:
        return PSTensor._wrap(self.slices[j], self.symmetry)

    def stacked_symmetry(self) -> SymmetryType:
        return SymmetryType(self.symmetry.blocks + ((1, self.rank),))

    def as_tensor(self) -> PSTensor:
        """The stacked tensor with the slice index as a final vector block."""
        arr = np.moveaxis(self.slices, 0, -1)
        return PSTensor._wrap(np.ascontiguousarray(arr), self.stacked_symmetry())


@dataclass
class DeflationState:
    """Factorization ``U C^{-1} V^T`` of the working f-flattening."""

    symmetry: SymmetryType
    f: tuple[int, ...]
    U: np.ndarray
    C: np.ndarray
    V: np.ndarray
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def dmf(self) -> tuple[int, ...]:
        return tuple(d - fi for d, fi in zip(self.symmetry.exponents, self.f))

    def flattening(self) -> np.ndarray:
        """Dense ``U C^{-1} V^T`` (test and diagnostic use)."""
        if self.rank == 0:
            return np.zeros((self.U.shape[0], self.V.shape[0]))
        return self.U @ np.linalg.solve(self.C, self.V.T)

    def copy(self) -> "DeflationState":
        return DeflationState(self.symmetry, self.f, self.U.copy(), self.C.copy(), self.V.copy(), self.singular_values)


def _row_symmetry(sym: SymmetryType, f: Sequence[int]) -> tuple[SymmetryType, tuple[int, ...]]:
    blocks = tuple(i for i, fi in enumerate(f) if fi > 0)
    return SymmetryType(tuple((f[i], sym.dims[i]) for i in blocks)), blocks


def estimate_rank(singular_values, policy: RankPolicy = "auto") -> int:
    """Pick a truncation rank.

    An integer policy is returned as is.  ``"auto"`` picks the index of the
    largest ratio ``s_i / s_{i+1}`` among values above ``sqrt(eps) * s_1``.

    >>> estimate_rank([1.0, 1.0, 1e-14])
    2
    """
    s = np.asarray(singular_values, dtype=np.float64)
    if s.size == 0 or not np.any(s > 0):
        raise ValueError("spectrum is identically zero")
    if not isinstance(policy, str):
        r = int(policy)
        if not 1 <= r <= s.size:
            raise ValueError(f"rank {r} outside 1..{s.size}")
        return r
    if policy != "auto":
        raise ValueError(f"unknown rank policy {policy!r}")
    if s.size == 1:
        return 1
    keep = s[:-1] > np.sqrt(np.finfo(float).eps) * s[0]
    with np.errstate(divide="ignore"):
        ratios = np.where(s[1:] > 0, s[:-1] / np.where(s[1:] > 0, s[1:], 1.0), np.inf)
    ratios = np.where(keep, ratios, -np.inf)
    best = int(np.argmax(ratios))
    # a flat spectrum without small values has no gap to find: keep it all
    if s[-1] > np.sqrt(np.finfo(float).eps) * s[0] and ratios[best] < FLAT_RATIO:
        return int(s.size)
    return best + 1


def numerical_rank(s: np.ndarray, shape) -> int:
    s = np.asarray(s)
    if s.size == 0 or s[0] == 0:
        return 0
    tol = max(shape) * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))


def extract(T: PSTensor, f: Sequence[int], rank_policy: RankPolicy = "auto"):
    """Truncated SVD of the f-flattening.

    Returns ``(state, subspace, singular_values)`` where ``state.C`` is the
    diagonal of reciprocal singular values and ``subspace`` holds ``U``'s
    columns as tensors.
    """
    sym = T.symmetry
    f = check_tuple(sym, f, proper=True)
    M = flatten(T, f)
    if not np.any(M):
        raise ValueError("cannot extract a subspace from the zero tensor")
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    r = estimate_rank(s, rank_policy)
    if not isinstance(rank_policy, str) and r > numerical_rank(s, M.shape):
        raise ValueError(f"requested rank {r} exceeds the numerical rank {numerical_rank(s, M.shape)}")
    state = DeflationState(sym, f, u[:, :r].copy(), np.diag(1.0 / s[:r]), vt[:r].T.copy(), s)
    return state, subspace_from_state(state), s


def subspace_from_state(state: DeflationState) -> SlicedSubspace:
    rsym, blocks = _row_symmetry(state.symmetry, state.f)
    return SlicedSubspace.from_matrix(state.U, rsym, blocks)


def complement_subspace(state: DeflationState) -> SlicedSubspace:
    """``V``'s columns as tensors of the complementary type ``d - f``."""
    rsym, blocks = _row_symmetry(state.symmetry, state.dmf)
    return SlicedSubspace.from_matrix(state.V, rsym, blocks)


def _as_vector(x) -> np.ndarray:
    if isinstance(x, PSTensor):
        return x.values.reshape(-1)
    return np.asarray(x, dtype=np.float64).reshape(-1)


def deflate(state: DeflationState, R_f, R_dmf, *, rel_tol: float = 1e-12):
    """Remove one rank-one term from the working flattening.

    ``R_f`` and ``R_dmf`` are the recovered row part and complement (tensors
    or their vectorizations).  Returns ``(lam, new_state)`` with the
    coefficient ``lam`` of ``vect(R_f) vect(R_dmf)^T`` in the flattening.
    """
    a_u = state.U.T @ _as_vector(R_f)
    a_v = state.V.T @ _as_vector(R_dmf)
    Ca = state.C @ a_u
    CTa = state.C.T @ a_v
    denom = float(a_v @ Ca)
    if abs(denom) < rel_tol * np.linalg.norm(state.C, 2):
        raise DeflationError(f"component not in the working subspace (a_v^T C a_u = {denom:.3e})")
    lam = 1.0 / denom
    r = state.rank
    if r == 1:
        n_row, n_col = state.U.shape[0], state.V.shape[0]
        new = DeflationState(state.symmetry, state.f, np.zeros((n_row, 0)), np.zeros((0, 0)), np.zeros((n_col, 0)), state.singular_values)
        return lam, new
    O_u = null_space(Ca[None, :])
    O_v = null_space(CTa[None, :])
    new = DeflationState(
        state.symmetry,
        state.f,
        state.U @ O_v,
        O_u.T @ state.C @ O_v,
        state.V @ O_u,
        state.singular_values,
    )
    return lam, new


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Principal angles between column spans (radians, ascending)."""
    from scipy.linalg import subspace_angles

    return np.sort(subspace_angles(A, B))
