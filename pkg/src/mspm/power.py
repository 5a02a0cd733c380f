"""Shifted partially symmetric higher-order power method (PS-HOPM).

Two kinds of targets share one iteration loop:

* a dense :class:`~mspm.tensor.PSTensor` with exponents ``a``;
* a :class:`~mspm.subspace.SlicedSubspace` ``S_1..S_r`` of type ``f``, on
  which the method runs on the implicit symmetrized tensor
  ``sym(sum_j S_j (x) S_j)`` of type ``2f`` without forming it.  Its
  objective is ``F_A(v) = sum_j <S_j, (x) v^f>^2`` in ``[0, 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .subspace import SlicedSubspace
from .tensor import PSTensor, SymmetryType, as_factors, contract_array


@dataclass
class PowerConfig:
    """Iteration limits and stopping rule.

    A run stops when the largest factor movement in a sweep drops below
    ``move_tol``.  It also stops at a rounding floor: the relative objective
    change is below ``value_tol``, the movement is below ``1e3 * move_tol``
    and it no longer shrinks.
    """

    max_iters: int = 5000
    move_tol: float = 1e-13
    value_tol: float = 1e-14
    kind: str = "pmi"
    block_order: Optional[Sequence[int]] = None
    trace: bool = False

    def __post_init__(self):
        if self.max_iters < 1 or self.move_tol <= 0 or self.value_tol <= 0:
            raise ValueError("iteration limits and tolerances must be positive")
        if self.kind not in ("pmi", "pmie"):
            raise ValueError(f"unknown iteration kind {self.kind!r}")


SHIFT_ALIASES = {"thm51": "norm_bound", "frobenius_thm51": "norm_bound", "prop53": "adaptive", "adaptive_prop53": "adaptive"}


@dataclass(frozen=True)
class ShiftPolicy:
    """How shifts are chosen.

    ``fixed`` uses ``gammas`` as given; ``norm_bound`` uses ``(a_i - 1)`` times a
    spectral-norm bound (the Frobenius norm for dense targets, 1 for
    subspace targets); ``adaptive`` is the adaptive rule for subspace targets.
    """

    kind: str = "adaptive"
    gammas: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("fixed", "norm_bound", "adaptive"):
            raise ValueError(f"unknown shift policy {self.kind!r}")
        if any(g < 0 for g in self.gammas):
            raise ValueError("shifts must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "ShiftPolicy":
        """Parse ``norm_bound``, ``adaptive`` or ``fixed:g1,g2,...``.

        The command-line tokens ``thm51`` and ``prop53`` are accepted as
        aliases of the first two.
        """
        text = text.strip()
        if text.startswith("fixed"):
            _, _, rest = text.partition(":")
            gammas = tuple(float(x) for x in rest.split(",") if x.strip())
            return cls("fixed", gammas)
        return cls(SHIFT_ALIASES.get(text, text))


def h_adaptive(nu: float) -> float:
    if nu <= 2.0 / 3.0:
        return 1.0 - nu / 2.0
    return math.sqrt(2.0 * nu * (1.0 - nu))


# --------------------------------------------------------------------------
# targets


class _DenseTarget:
    is_subspace = False

    def __init__(self, T: PSTensor):
        sym = T.symmetry
        if any(d < 1 for d in sym.exponents):
            raise ValueError("dense targets need positive exponents in every block")
        self.T = T
        self.sym = sym
        self.exps = sym.exponents
        self.dims = sym.dims
        self._cache = None

    def grad(self, i, factors):
        counts = list(self.exps)
        counts[i] -= 1
        g = contract_array(self.T.values, self.sym, factors, counts)
        self._cache = (i, g)
        return g

    def value(self, factors) -> float:
        return float(contract_array(self.T.values, self.sym, factors, self.exps))

    def value_after(self, i, v):
        if self._cache is not None and self._cache[0] == i and self.exps[i] == 1:
            return float(self._cache[1] @ v)
        return None

    def scale(self) -> float:
        return self.T.norm()


class _TildeTarget:
    is_subspace = True

    def __init__(self, S: SlicedSubspace):
        self.S = S
        self.sym = S.symmetry
        self.f = S.symmetry.exponents
        self.exps = tuple(2 * x for x in self.f)
        self.dims = S.symmetry.dims
        self._cache = None

    def partial(self, k, factors) -> np.ndarray:
        """``r x m_k`` matrix: each slice contracted on all but one axis of block k."""
        counts = list(self.f)
        counts[k] -= 1
        return contract_array(self.S.slices, self.sym, factors, counts, lead=1)

    def grad(self, k, factors):
        G = self.partial(k, factors)
        s = G @ factors[k]
        self._cache = (k, G)
        return G.T @ s

    def coefficients(self, factors) -> np.ndarray:
        return contract_array(self.S.slices, self.sym, factors, self.f, lead=1)

    def value(self, factors) -> float:
        s = self.coefficients(factors)
        return float(s @ s)

    def value_after(self, k, v):
        if self._cache is not None and self._cache[0] == k and self.f[k] == 1:
            s = self._cache[1] @ v
            return float(s @ s)
        return None

    def scale(self) -> float:
        return 1.0


Target = Union[PSTensor, SlicedSubspace]


def _make_target(target):
    if isinstance(target, (_DenseTarget, _TildeTarget)):
        return target
    if isinstance(target, SlicedSubspace):
        return _TildeTarget(target)
    if isinstance(target, PSTensor):
        return _DenseTarget(target)
    raise TypeError(f"unsupported target type {type(target).__name__}")


# --------------------------------------------------------------------------
# objectives


def objective_F(T: PSTensor, factors, shifts=None) -> float:
    """``<T, (x) v^a> + sum_i gamma_i ||v_i||^{a_i}``."""
    factors = as_factors(factors, T.symmetry)
    val = float(contract_array(T.values, T.symmetry, factors, T.symmetry.exponents))
    if shifts is not None:
        val += sum(g * float(np.linalg.norm(v)) ** a for g, v, a in zip(shifts, factors, T.symmetry.exponents))
    return val


def objective_FA(S: SlicedSubspace, factors) -> float:
    """``sum_j <S_j, (x) v^f>^2``; lies in ``[0, 1]`` for unit factors."""
    factors = as_factors(factors, S.symmetry)
    return _TildeTarget(S).value(factors)


def tilde_contract(S: SlicedSubspace, factors, k: int) -> np.ndarray:
    """Contraction of the implicit symmetrized tensor with all but one copy of block ``k``."""
    factors = as_factors(factors, S.symmetry)
    if S.symmetry.exponents[k] < 1:
        raise ValueError("block has zero exponent")
    return _TildeTarget(S).grad(k, factors)


def materialize_tilde(S: SlicedSubspace) -> PSTensor:
    """Dense symmetrized ``sum_j S_j (x) S_j`` regrouped by block (tiny cases only)."""
    from .tensor import symmetrize

    sym = S.symmetry
    n = sym.order
    arr = np.einsum("j...,j...->...", S.slices.reshape(S.rank, -1, 1), S.slices.reshape(S.rank, 1, -1))
    arr = arr.reshape(sym.shape + sym.shape)
    # regroup the axes of the two copies block by block
    order = []
    offs = sym.offsets
    for i, (d, _) in enumerate(sym.blocks):
        order += list(range(offs[i], offs[i] + d))
        order += list(range(n + offs[i], n + offs[i] + d))
    arr = np.transpose(arr, order)
    tsym = SymmetryType(tuple((2 * d, m) for d, m in sym.blocks))
    return symmetrize(arr, tsym)


# --------------------------------------------------------------------------
# shifts


def shifts_for(target, policy: ShiftPolicy, nu: Optional[float] = None, diagnostics: Optional[list] = None) -> list[float]:
    """Shifts for every block of ``target`` under ``policy``.

    For ``adaptive`` ``nu`` is the current ``F_A`` value; values outside
    ``[0, 1]`` are clamped and noted in ``diagnostics``.
    """
    t = _make_target(target)
    n = len(t.exps)
    if policy.kind == "fixed":
        g = list(policy.gammas)
        if len(g) == 1:
            g = g * n
        if len(g) != n:
            raise ValueError(f"need {n} fixed shifts, got {len(g)}")
        return [float(x) for x in g]
    if policy.kind == "norm_bound":
        bound = t.scale()
        return [(a - 1) * bound for a in t.exps]
    if not t.is_subspace:
        raise ValueError("the adaptive policy applies to subspace targets only")
    nu = 0.0 if nu is None else float(nu)
    if not 0.0 <= nu <= 1.0:
        if diagnostics is not None:
            diagnostics.append(f"nu={nu!r} clamped to [0, 1]")
        nu = min(max(nu, 0.0), 1.0)
    hv = h_adaptive(nu)
    return [0.0 if fi == 1 else math.sqrt((fi - 1) / fi) * hv for fi in t.f]


# --------------------------------------------------------------------------
# iterations


def _normalize(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(g)
    return g / n if n > 0 else v


def pmi_step(target, factors, shifts, *, order=None, on_block: Optional[Callable] = None) -> tuple:
    """One Gauss-Seidel sweep over the blocks.

    ``on_block(i, factors)`` is called after each block update.
    """
    t = _make_target(target)
    w = list(as_factors(factors))
    for i in order if order is not None else range(len(w)):
        g = t.grad(i, w)
        if shifts[i]:
            g = g + shifts[i] * w[i]
        w[i] = _normalize(g, w[i])
        if on_block is not None:
            on_block(i, tuple(w))
    return tuple(w)


class ContractionCounter:
    """Counts contractions that read the full input tensor."""

    def __init__(self):
        self.full = 0


def _pmie(arr, sym: SymmetryType, w: list, shifts, counter, root: bool):
    n = sym.n_blocks
    a = sym.exponents
    if n == 1:
        g = contract_array(arr, sym, w, [a[0] - 1])
        if root and counter is not None:
            counter.full += 1
        if shifts[0]:
            g = g + shifts[0] * w[0]
        return [_normalize(g, w[0])]
    k = n // 2
    U = contract_array(arr, sym, w, [0] * k + list(a[k:]))
    if root and counter is not None:
        counter.full += 1
    left = _pmie(U, SymmetryType(sym.blocks[:k]), w[:k], shifts[:k], counter, False)
    W = contract_array(arr, sym, left + w[k:], list(a[:k]) + [0] * (n - k))
    if root and counter is not None:
        counter.full += 1
    right = _pmie(W, SymmetryType(sym.blocks[k:]), w[k:], shifts[k:], counter, False)
    return left + right


def pmie_step(T: PSTensor, factors, shifts, *, counter: Optional[ContractionCounter] = None) -> tuple:
    """Recursive-halving sweep; same iterate as :func:`pmi_step` in exact arithmetic."""
    if isinstance(T, SlicedSubspace):
        raise ValueError("the halving sweep applies to dense targets only")
    w = list(as_factors(factors, T.symmetry))
    return tuple(_pmie(T.values, T.symmetry, w, list(shifts), counter, True))


# --------------------------------------------------------------------------
# driver


@dataclass
class PSVT:
    """Outcome of a power-method run.

    For subspace targets ``sigma`` is the ``F_A`` value; ``lifted_sigma`` and
    ``lifted_factors`` (row factors followed by the coefficient vector) form
    a singular tuple of the stacked slice tensor.
    """

    factors: tuple
    sigma: float
    residual: float
    iterations: int
    converged: bool
    lifted_factors: Optional[tuple] = None
    lifted_sigma: Optional[float] = None
    lifted_residual: Optional[float] = None
    trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def random_factors(dims: Sequence[int], rng: np.random.Generator) -> tuple:
    out = []
    for m in dims:
        x = rng.standard_normal(m)
        out.append(x / np.linalg.norm(x))
    return tuple(out)


def psvt_residual(target, psvt_or_factors, sigma: Optional[float] = None) -> float:
    """``max_j || T . v^{a - e_j} - sigma v_j ||``.

    For a subspace target this is the residual of the implicit symmetrized
    tensor.  ``sigma`` defaults to the full contraction.
    """
    t = _make_target(target)
    if isinstance(psvt_or_factors, PSVT):
        factors = psvt_or_factors.factors
        if sigma is None:
            sigma = psvt_or_factors.sigma
    else:
        factors = as_factors(psvt_or_factors)
    if sigma is None:
        sigma = t.value(factors)
    return max(float(np.linalg.norm(t.grad(j, factors) - sigma * factors[j])) for j in range(len(factors)))


def lift(S: SlicedSubspace, factors):
    """Singular tuple of the stacked slice tensor from a critical point of ``F_A``.

    Returns ``(lifted_factors, sigma, residual)`` where ``sigma = sqrt(F_A)``.
    """
    t = _TildeTarget(S)
    factors = as_factors(factors)
    s = t.coefficients(factors)
    sig = float(np.linalg.norm(s))
    if sig == 0:
        return tuple(factors) + (np.zeros_like(s),), 0.0, float("inf")
    w = s / sig
    res = 0.0
    for k in range(len(factors)):
        G = t.partial(k, factors)
        res = max(res, float(np.linalg.norm(G.T @ w - sig * factors[k])))
    return tuple(factors) + (w,), sig, res


def run_pshopm(
    target: Target,
    config: Optional[PowerConfig] = None,
    policy: Optional[ShiftPolicy] = None,
    init=None,
    rng=None,
) -> PSVT:
    """Iterate power sweeps from ``init`` (random unit vectors by default).

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed.
    """
    config = config or PowerConfig()
    t = _make_target(target)
    if policy is None:
        policy = ShiftPolicy("adaptive" if t.is_subspace else "norm_bound")
    if init is None or (isinstance(init, str) and init == "random"):
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        w = random_factors(t.dims, rng)
    else:
        w = as_factors(init)
        if len(w) != len(t.dims):
            raise ValueError("initial tuple has the wrong number of blocks")
        w = tuple(v / np.linalg.norm(v) for v in w)
    order = list(config.block_order) if config.block_order is not None else list(range(len(w)))
    use_pmie = config.kind == "pmie" and not t.is_subspace
    notes: list = []
    trace: list = []

    value = t.value(w)
    converged = False
    it = 0
    prev_move = np.inf
    adaptive = policy.kind == "adaptive"
    shifts = shifts_for(t, policy, value if adaptive else None, notes)
    for it in range(1, config.max_iters + 1):
        if adaptive:
            shifts = shifts_for(t, policy, value, notes)
        if use_pmie and order == list(range(len(w))):
            new = pmie_step(t.T, w, shifts)
            new_value = None
        else:
            new = pmi_step(t, w, shifts, order=order)
            new_value = t.value_after(order[-1], new[order[-1]])
        if new_value is None:
            new_value = t.value(new)
        move = max(float(np.linalg.norm(a - b)) for a, b in zip(new, w))
        dval = new_value - value
        w, value = new, new_value
        if config.trace:
            trace.append((it, value, move, tuple(shifts)))
        if move < config.move_tol or (
            abs(dval) <= config.value_tol * max(abs(value), np.finfo(float).tiny)
            and move < 1e3 * config.move_tol
            and move > 0.9 * prev_move
        ):
            converged = True
            break
        prev_move = move

    sigma = value
    residual = psvt_residual(t, w, sigma)
    out = PSVT(factors=tuple(w), sigma=sigma, residual=residual, iterations=it, converged=converged, trace=trace, notes=notes)
    if t.is_subspace:
        out.lifted_factors, out.lifted_sigma, out.lifted_residual = lift(t.S, w)
    return out


# --------------------------------------------------------------------------
# coherence bounds for F_A near planted components


def coherence(vectors: np.ndarray) -> float:
    """``max_{i != j} |<x_i, x_j>|`` over the rows of ``vectors``."""
    X = np.asarray(vectors, dtype=np.float64)
    if X.shape[0] < 2:
        return 0.0
    G = np.abs(X @ X.T)
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def sandwich_constant(block_factors: Sequence[np.ndarray], f: Sequence[int]) -> tuple[float, float, list[float]]:
    """Return ``(C, rho, rho_k)`` for planted factors.

    ``block_factors[k]`` is an ``r x m_k`` matrix of unit rows.  ``rho`` is the
    coherence of the rank-one tensors ``(x)_k v_k^{f_k}``, whose inner
    products are products of factor inner products.
    """
    r = block_factors[0].shape[0]
    G = np.ones((r, r))
    rho_k = []
    for X, fk in zip(block_factors, f):
        Gk = X @ X.T
        rho_k.append(coherence(X))
        if fk:
            G = G * Gk**fk
    G = np.abs(G)
    np.fill_diagonal(G, 0.0)
    rho = float(G.max()) if r > 1 else 0.0
    active = [rk for rk, fk in zip(rho_k, f) if fk]
    prod = math.prod(1 + (r - 1) * rk for rk in active)
    C = prod ** (1.0 / len(active)) / (1 - rho)
    return C, rho, rho_k
