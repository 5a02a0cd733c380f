"""The multi-subspace power method.

1. Flatten, truncate the SVD to rank ``r`` and keep ``U C^{-1} V^T``.
2. Run the power method on the span of ``U``'s columns until a point with
   ``F_A`` close to one is found (random restarts otherwise).
3. Complete the rank-one term, read off its coefficient and deflate.
4. Repeat until the working rank is zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .completion import CompletionContext, complete
from .exceptions import CompletionError, DeflationError
from .planner import PAIRED, FlatteningPlan, make_plan, optimal_plan
from .power import PowerConfig, ShiftPolicy, run_pshopm, sandwich_constant
from .subspace import DeflationState, deflate, extract, subspace_from_state
from .tensor import PSTensor, SymmetryType, canonicalize, rank_one_array

PlanSpec = Union[str, FlatteningPlan, Sequence]


@dataclass
class MSPMConfig:
    """Settings for :func:`decompose`.

    ``plan`` is ``"auto"``, a :class:`FlatteningPlan`, a tuple ``f`` or a
    pair ``(f, f')``.  Tolerances left as ``None`` are ``1e-6`` for noiseless
    input and grow with the spectral gap ratio ``s_{r+1} / s_r`` otherwise.
    """

    plan: PlanSpec = "auto"
    rank: Union[int, str] = "auto"
    power: PowerConfig = field(default_factory=PowerConfig)
    shifts: ShiftPolicy = field(default_factory=ShiftPolicy)
    accept_tol: Optional[float] = None
    tol_match: Optional[float] = None
    tol_r1: Optional[float] = None
    max_restarts: int = 100
    seed: Optional[int] = 0
    verify: bool = False

    def __post_init__(self):
        if self.max_restarts < 1:
            raise ValueError("max_restarts must be at least 1")
        for name in ("accept_tol", "tol_match", "tol_r1"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Component:
    lam: float
    factors: tuple


@dataclass
class DecompositionResult:
    symmetry: SymmetryType
    components: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.components)

    @property
    def status(self) -> str:
        return self.diagnostics.get("status", "complete")

    def lambdas(self) -> np.ndarray:
        return np.array([c.lam for c in self.components])

    def block_factors(self, i: int) -> np.ndarray:
        """``rank x m_i`` matrix of block-``i`` factors."""
        return np.array([c.factors[i] for c in self.components]).reshape(self.rank, self.symmetry.dims[i])

    def to_json(self) -> dict:
        return {
            "symmetry": [list(b) for b in self.symmetry.blocks],
            "rank": self.rank,
            "components": [
                {"lambda": float(c.lam), "factors": [np.asarray(v).tolist() for v in c.factors]} for c in self.components
            ],
            "diagnostics": _jsonable(self.diagnostics),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DecompositionResult":
        sym = SymmetryType(tuple(tuple(b) for b in obj["symmetry"]))
        comps = [Component(float(c["lambda"]), tuple(np.asarray(v, dtype=float) for v in c["factors"])) for c in obj["components"]]
        return cls(sym, comps, obj.get("diagnostics", {}))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def resolve_plan(sym: SymmetryType, spec: PlanSpec) -> FlatteningPlan:
    if isinstance(spec, FlatteningPlan):
        return spec
    if isinstance(spec, str):
        if spec != "auto":
            raise ValueError(f"unknown plan {spec!r}")
        return optimal_plan(sym)
    spec = list(spec)
    if spec and isinstance(spec[0], (list, tuple)):
        return make_plan(sym, spec[0], spec[1] if len(spec) > 1 else None)
    return make_plan(sym, spec)


def leading_sign(v: np.ndarray) -> float:
    """Sign of the first coordinate whose magnitude is within ``1e-6`` of the largest."""
    a = np.abs(v)
    k = int(np.argmax(a >= (1 - 1e-6) * a.max()))
    return 1.0 if v[k] >= 0 else -1.0


def canonical_signs(lam: float, factors: Sequence[np.ndarray], exponents: Sequence[int]):
    """Fix the sign ambiguity of a rank-one term.

    Every factor is flipped to a positive leading coordinate with the sign
    moved into ``lam``.  If some block has an odd exponent, the last such
    block then takes the sign of ``lam`` so that ``lam >= 0``.
    """
    out = []
    for v, a in zip(factors, exponents):
        s = leading_sign(v)
        if a % 2 == 1:
            lam *= s
        out.append(s * v)
    odd = [i for i, a in enumerate(exponents) if a % 2 == 1]
    if lam < 0 and odd:
        out[odd[-1]] = -out[odd[-1]]
        lam = -lam
    return lam, tuple(out)


def _scaled_tol(user: Optional[float], ratio: float) -> float:
    if user is not None:
        return user
    return float(min(max(10.0 * ratio, 1e-6), 0.5))


def _identity_error(old: DeflationState, new: DeflationState, lam: float, x: np.ndarray, y: np.ndarray) -> float:
    before = old.flattening()
    after = new.flattening()
    ref = np.linalg.norm(before)
    return float(np.linalg.norm(after - (before - lam * np.outer(x, y))) / (ref if ref > 0 else 1.0))


def decompose(T: PSTensor, config: Optional[MSPMConfig] = None) -> DecompositionResult:
    """Partially symmetric CP decomposition of ``T``.

    Runs until the working rank reaches zero.  If the restart budget for a
    component is exhausted or deflation degenerates the components found so
    far are returned with ``diagnostics["status"] == "partial"``.
    """
    config = config or MSPMConfig()
    sym = T.symmetry
    sym.check_standard()
    plan = resolve_plan(sym, config.plan)
    rng = np.random.default_rng(config.seed)

    state, _, s = extract(T, plan.f, config.rank)
    r = state.rank
    if r > plan.r_max:
        warnings.warn(f"rank {r} exceeds the generic recovery bound {plan.r_max} of plan {plan.describe()}")
    ratio = float(s[r] / s[r - 1]) if r < s.size else 0.0
    accept_tol = _scaled_tol(config.accept_tol, ratio)
    tol_match = _scaled_tol(config.tol_match, ratio)
    tol_r1 = _scaled_tol(config.tol_r1, ratio)

    partner_state = None
    if plan.mode == PAIRED:
        partner_state, _, _ = extract(T, plan.partner, r)

    exps = sym.exponents
    f = plan.f
    dmf = tuple(d - x for d, x in zip(exps, f))
    comps: list[Component] = []
    per_comp: list[dict] = []
    diagnostics: dict = {
        "plan": {"f": list(f), "partner": None if plan.partner is None else list(plan.partner), "mode": plan.mode, "r_max": plan.r_max},
        "rank": r,
        "singular_values": s[: min(s.size, r + 1)].tolist(),
        "gap_ratio": ratio,
        "accept_tol": accept_tol,
        "tol_match": tol_match,
        "tol_r1": tol_r1,
        "components": per_comp,
    }
    status = "complete"
    failure = None

    for _ in range(r):
        S = subspace_from_state(state)
        ctx = CompletionContext(plan, state, partner_state, tol_match, tol_r1, config.power, rng)
        found = None
        attempts = 0
        best_sigma = -1.0
        failures: list[str] = []
        while attempts < config.max_restarts:
            attempts += 1
            p = run_pshopm(S, config.power, config.shifts, rng=rng)
            best_sigma = max(best_sigma, p.sigma)
            if abs(p.sigma - 1.0) > accept_tol:
                continue
            row = dict(zip(S.blocks, p.factors))
            try:
                full, cdiag = complete(row, ctx)
            except CompletionError as exc:
                failures.append(str(exc))
                continue
            found = (p, full, cdiag)
            break
        if found is None:
            status = "partial"
            failure = {"reason": "restart budget exhausted", "best_sigma": best_sigma, "completion_failures": failures[-5:]}
            break
        p, full, cdiag = found
        x = rank_one_array(full, f)
        y = rank_one_array(full, dmf)
        try:
            lam, new_state = deflate(state, x, y)
        except DeflationError as exc:
            status = "partial"
            failure = {"reason": str(exc)}
            break
        info = {
            "sigma": p.sigma,
            "lifted_sigma": p.lifted_sigma,
            "residual": p.lifted_residual,
            "iterations": p.iterations,
            "converged": p.converged,
            "restarts": attempts - 1,
            "completion": cdiag,
        }
        if config.verify:
            info["identity_error"] = _identity_error(state, new_state, lam, x, y)
        state = new_state
        if partner_state is not None:
            fp = plan.partner
            try:
                lam_p, partner_state = deflate(
                    partner_state, rank_one_array(full, fp), rank_one_array(full, tuple(d - a for d, a in zip(exps, fp)))
                )
                info["partner_lambda"] = lam_p
            except DeflationError as exc:
                status = "partial"
                failure = {"reason": f"partner flattening: {exc}"}
                break
        lam, factors = canonical_signs(lam, full, exps)
        comps.append(Component(lam, factors))
        per_comp.append(info)

    diagnostics["status"] = status
    if failure is not None:
        diagnostics["failure"] = failure
    diagnostics["total_restarts"] = sum(c["restarts"] for c in per_comp)
    if len(comps) >= 2:
        blocks = [np.array([c.factors[i] for c in comps]) for i in range(sym.n_blocks)]
        C, rho, rho_k = sandwich_constant(blocks, f)
        diagnostics["coherence"] = {"C": C, "rho": rho, "rho_k": rho_k}
    result = DecompositionResult(sym, comps, diagnostics)
    diagnostics["relative_error"] = relative_error(T, result)
    return result


def reconstruct(result: DecompositionResult, symmetry=None) -> PSTensor:
    """Dense sum of the rank-one terms."""
    sym = SymmetryType.coerce(symmetry) if symmetry is not None else result.symmetry
    vec = np.zeros(sym.size)
    for c in result.components:
        vec += c.lam * rank_one_array(c.factors, sym.exponents)
    return PSTensor._wrap(canonicalize(vec.reshape(sym.shape), sym), sym)


def relative_error(T: PSTensor, result: DecompositionResult) -> float:
    """``||T - reconstruct(result)|| / ||T||``."""
    R = reconstruct(result, T.symmetry)
    nrm = T.norm()
    return float(np.linalg.norm((T.values - R.values).ravel()) / nrm) if nrm > 0 else float(R.norm())
