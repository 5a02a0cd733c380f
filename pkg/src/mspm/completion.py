"""Recovery of the complementary factors of a found rank-one row part.

Given the factors of ``R_f = (x)_i v_i^{f_i}`` the remaining factors are
read off directly when every block appears in ``f``.  Otherwise they are
matched against a second orthonormal basis whose elements share known
factors with ``R_f``: the complementary basis of the same flattening (a
symmetry-breaking ``f``) or the basis of a partner flattening ``f'``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .exceptions import CompletionError
from .planner import DIRECT, PAIRED, SYMMETRY_BREAKING, FlatteningPlan
from .power import PowerConfig, ShiftPolicy, run_pshopm
from .subspace import DeflationState, SlicedSubspace, complement_subspace, subspace_from_state
from .tensor import SymmetryType, contract_array, rank_one_array


@dataclass
class MatchResult:
    """Rank-one element of a subspace with some factors prescribed."""

    factors: dict
    sigma: float
    coeffs: np.ndarray
    multiplicity: int
    fit: float
    spectrum: np.ndarray = field(default_factory=lambda: np.zeros(0))


def rank_one_factors(vec: np.ndarray, sym: SymmetryType) -> tuple[list[np.ndarray], float]:
    """Best rank-one factors of a partially symmetric tensor given as a vector.

    Each factor is the dominant left singular vector of the unfolding along
    one axis of its block.  Returns the unit factors and
    ``|<vec, (x) v^a>| / ||vec||``.
    """
    arr = np.asarray(vec, dtype=np.float64).reshape(sym.shape)
    out = []
    for i, (d, m) in enumerate(sym.blocks):
        A = np.moveaxis(arr, sym.offsets[i], 0).reshape(m, -1)
        u, _, _ = np.linalg.svd(A, full_matrices=False)
        out.append(u[:, 0])
    nrm = np.linalg.norm(arr)
    fit = abs(float(rank_one_array(out, sym.exponents) @ arr.reshape(-1))) / nrm if nrm > 0 else 0.0
    return out, fit


def matched_rank_one(
    basis: SlicedSubspace,
    known: Mapping[int, np.ndarray],
    *,
    tol_match: float = 1e-6,
    tol_r1: float = 1e-6,
    config: Optional[PowerConfig] = None,
    rng=None,
    max_restarts: int = 20,
) -> MatchResult:
    """Find the rank-one element of ``span(basis)`` with the ``known`` factors.

    ``known`` maps parent block ids to unit vectors.  Contracting each basis
    tensor with the known factors gives a matrix ``M`` with one column per
    basis element; the wanted completion is a left singular vector of ``M``
    with singular value one.  A repeated singular value one is resolved by a
    power-method search inside the corresponding singular subspace.
    """
    sym = basis.symmetry
    pos = {b: k for k, b in enumerate(basis.blocks)}
    for b in known:
        if b not in pos:
            raise ValueError(f"known block {b} does not occur in the basis")
    factors = [known.get(b) for b in basis.blocks]
    counts = [d if factors[k] is not None else 0 for k, d in enumerate(sym.exponents)]
    unknown = [k for k in range(sym.n_blocks) if factors[k] is None]
    arr = contract_array(basis.slices, sym, factors, counts, lead=1)
    M = arr.reshape(basis.rank, -1).T

    if not unknown:
        coeffs = M[0]
        sigma = float(np.linalg.norm(coeffs))
        if abs(sigma - 1.0) > tol_match:
            raise CompletionError("known factors inconsistent with subspace", sigma=sigma)
        return MatchResult(dict(known), sigma, coeffs / sigma, 1, 1.0, np.array([sigma]))

    u, s, vt = np.linalg.svd(M, full_matrices=False)
    if s[0] < 1.0 - tol_match or s[0] > 1.0 + tol_match:
        raise CompletionError("known factors inconsistent with subspace", sigma=float(s[0]), spectrum=s[:5].tolist())
    mult = int(np.sum(s >= 1.0 - tol_match))
    usym = SymmetryType(tuple(sym.blocks[k] for k in unknown))
    ublocks = tuple(basis.blocks[k] for k in unknown)

    vecs, fit = rank_one_factors(u[:, 0], usym)
    sigma, coeffs = float(s[0]), vt[0]
    if fit < 1.0 - tol_r1 and mult > 1:
        vecs, fit, sigma, coeffs = _search_span(u[:, :mult], M, usym, ublocks, tol_match, config, rng, max_restarts)
    if fit < 1.0 - tol_r1:
        raise CompletionError(
            "matched vector is not rank one", fit=fit, sigma=sigma, multiplicity=mult, spectrum=s[:5].tolist()
        )
    out = dict(known)
    out.update({b: v for b, v in zip(ublocks, vecs)})
    return MatchResult(out, sigma, coeffs, mult, fit, s)


def _search_span(Q, M, usym, ublocks, tol_match, config, rng, max_restarts):
    """Rank-one element of a multi-dimensional singular-value-one space."""
    sub = SlicedSubspace.from_matrix(Q, usym.compress(), ublocks)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    best = None
    for _ in range(max_restarts):
        p = run_pshopm(sub, config, ShiftPolicy("adaptive"), rng=rng)
        if best is None or p.sigma > best.sigma:
            best = p
        if p.sigma >= 1.0 - tol_match:
            break
    vecs = list(best.factors)
    x = rank_one_array(vecs, usym.exponents)
    c = M.T @ x
    sigma = float(np.linalg.norm(c))
    return vecs, float(np.sqrt(max(best.sigma, 0.0))), sigma, c / sigma if sigma > 0 else c


@dataclass
class CompletionContext:
    """Everything :func:`complete` needs besides the found row factors."""

    plan: FlatteningPlan
    state: DeflationState
    partner_state: Optional[DeflationState] = None
    tol_match: float = 1e-6
    tol_r1: float = 1e-6
    config: Optional[PowerConfig] = None
    rng: Optional[np.random.Generator] = None

    def __post_init__(self):
        if self.plan.mode == PAIRED and self.partner_state is None:
            raise ValueError("paired recovery needs the partner flattening state")


def complete(row_factors, ctx: CompletionContext):
    """Full factor tuple for one component.

    ``row_factors`` maps block id to vector for the blocks of ``f`` (a
    sequence aligned with the blocks having ``f_i > 0`` is accepted too).
    Returns ``(factors, diagnostics)`` with one unit vector per block.
    """
    plan = ctx.plan
    sym = ctx.state.symmetry
    f = plan.f
    if not isinstance(row_factors, Mapping):
        supp = [i for i, fi in enumerate(f) if fi > 0]
        row_factors = dict(zip(supp, row_factors))
    known = {int(b): np.asarray(v, dtype=np.float64) for b, v in row_factors.items()}
    diag: dict = {"mode": plan.mode, "steps": []}
    kw = dict(tol_match=ctx.tol_match, tol_r1=ctx.tol_r1, config=ctx.config, rng=ctx.rng)

    if plan.mode == DIRECT:
        pass
    elif plan.mode == SYMMETRY_BREAKING:
        basis = complement_subspace(ctx.state)
        res = matched_rank_one(basis, {b: known[b] for b in basis.blocks if b in known}, **kw)
        known.update(res.factors)
        diag["steps"].append(_step_diag("complement", res))
    else:
        pbasis = subspace_from_state(ctx.partner_state)
        res = matched_rank_one(pbasis, {b: known[b] for b in pbasis.blocks if b in known}, **kw)
        known.update(res.factors)
        diag["steps"].append(_step_diag("partner", res))
        if len(known) < sym.n_blocks:
            basis = complement_subspace(ctx.state)
            res = matched_rank_one(basis, {b: known[b] for b in basis.blocks if b in known}, **kw)
            known.update(res.factors)
            diag["steps"].append(_step_diag("complement", res))
    missing = [i for i in range(sym.n_blocks) if i not in known]
    if missing:
        raise CompletionError(f"blocks {missing} could not be recovered", **diag)
    return tuple(known[i] for i in range(sym.n_blocks)), diag


def _step_diag(name: str, res: MatchResult) -> dict:
    return {"basis": name, "sigma": res.sigma, "multiplicity": res.multiplicity, "fit": res.fit}
