"""Synthetic instances, accuracy metrics and seeded experiment runs.

Every repetition draws from its own PCG64 stream spawned from the
experiment seed, so repetitions are reproducible one by one and
independent of the number of workers.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .decompose import Component, DecompositionResult, MSPMConfig, decompose, relative_error
from .power import PowerConfig
from .subspace import extract
from .tensor import PSTensor, SymmetryType, canonicalize, rank_one_array, symmetrize

FACTOR_LAWS = ("gaussian_unit", "stiefel_orthogonal")


@dataclass
class ExperimentSpec:
    """Synthetic experiment description.

    ``plan`` is ``"auto"``, a tuple ``f`` or a pair ``[f, f']``.  The
    decomposition is run with the planted rank unless ``rank_policy`` is
    ``"auto"``.
    """

    symmetry: SymmetryType
    rank: int
    factor_law: str = "gaussian_unit"
    lambda_law: str = "exp_uniform"
    noise: float = 0.0
    seed: int = 0
    plan: object = "auto"
    repetitions: int = 1
    rank_policy: object = "planted"

    def __post_init__(self):
        self.symmetry = SymmetryType.coerce(self.symmetry)
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.noise < 0:
            raise ValueError("noise level must be non-negative")
        if self.factor_law not in FACTOR_LAWS:
            raise ValueError(f"unknown factor law {self.factor_law!r}")
        if self.lambda_law not in ("exp_uniform", "ones"):
            raise ValueError(f"unknown weight law {self.lambda_law!r}")
        if self.factor_law == "stiefel_orthogonal" and self.rank > self.symmetry.dims[0]:
            raise ValueError("orthogonal factors need rank <= m_1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        if "noise" not in d and "eta" in d:
            d["noise"] = d.pop("eta")
        plan = d.get("plan", "auto")
        if isinstance(plan, list):
            d["plan"] = tuple(tuple(x) for x in plan) if plan and isinstance(plan[0], list) else tuple(plan)
        return cls(**d)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["symmetry"] = str(self.symmetry)
        return out

    def rep_rng(self, rep: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed).spawn(rep + 1)[rep]
        return np.random.Generator(np.random.PCG64(seq))


@dataclass
class Instance:
    tensor: PSTensor
    truth: list
    clean: PSTensor


def gen_instance(spec: ExperimentSpec, rep: int = 0, rng: Optional[np.random.Generator] = None) -> Instance:
    """Draw one planted instance.

    Weights are ``exp(2u - 1)`` with ``u`` uniform on ``[0, 1]``.  Factors
    are normalized Gaussian vectors, or orthonormal columns for block 1 under
    the orthogonal law.  Noise is a symmetrized Gaussian tensor scaled to
    exactly ``noise * ||T_true||``.
    """
    rng = rng if rng is not None else spec.rep_rng(rep)
    sym = spec.symmetry
    r = spec.rank
    if spec.lambda_law == "exp_uniform":
        lam = np.exp(2.0 * rng.uniform(size=r) - 1.0)
    else:
        lam = np.ones(r)
    blocks = []
    for i, m in enumerate(sym.dims):
        X = rng.standard_normal((r, m))
        if i == 0 and spec.factor_law == "stiefel_orthogonal":
            Q, _ = np.linalg.qr(X.T)
            X = Q.T
        blocks.append(X / np.linalg.norm(X, axis=1, keepdims=True))
    truth = [Component(float(lam[j]), tuple(b[j] for b in blocks)) for j in range(r)]
    vec = np.zeros(sym.size)
    for c in truth:
        vec += c.lam * rank_one_array(c.factors, sym.exponents)
    clean = PSTensor._wrap(canonicalize(vec.reshape(sym.shape), sym), sym)
    if spec.noise > 0:
        Z = symmetrize(rng.standard_normal(sym.shape), sym).values
        Z = Z * (spec.noise * clean.norm() / np.linalg.norm(Z))
        noisy = PSTensor._wrap(clean.values + Z, sym)
    else:
        noisy = clean
    return Instance(noisy, truth, clean)


def ascore(true_vectors, recovered_vectors) -> float:
    """Mean absolute cosine over a greedy matching.

    Each true vector, in order, takes the remaining recovered vector with the
    largest absolute cosine.
    """
    A = np.atleast_2d(np.asarray(true_vectors, dtype=np.float64))
    B = np.atleast_2d(np.asarray(recovered_vectors, dtype=np.float64))
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"count mismatch: {A.shape[0]} true vs {B.shape[0]} recovered")
    na = np.linalg.norm(A, axis=1, keepdims=True)
    nb = np.linalg.norm(B, axis=1, keepdims=True)
    A = np.divide(A, na, out=np.zeros_like(A), where=na > 0)
    B = np.divide(B, nb, out=np.zeros_like(B), where=nb > 0)
    cos = np.abs(A @ B.T)
    free = np.ones(B.shape[0], dtype=bool)
    total = 0.0
    for i in range(A.shape[0]):
        row = np.where(free, cos[i], -1.0)
        j = int(np.argmax(row))
        total += cos[i, j]
        free[j] = False
    return float(min(total / A.shape[0], 1.0))


def result_ascore(truth: Sequence[Component], result: DecompositionResult, block: int = 0) -> float:
    """Ascore on one block; missing components count as zero vectors."""
    A = np.array([c.factors[block] for c in truth])
    B = np.zeros_like(A)
    for j, c in enumerate(result.components[: len(truth)]):
        B[j] = c.factors[block]
    return ascore(A, B)


METRIC_COLUMNS = [
    "method",
    "seed",
    "rep",
    "wall_time",
    "ascore",
    "rel_error",
    "restarts",
    "iterations",
    "rank_found",
    "status",
    "log_time",
    "log_one_minus_ascore",
    "log_error",
]


@dataclass
class MetricRow:
    method: str
    seed: int
    rep: int
    wall_time: float
    ascore: float
    rel_error: float
    restarts: int
    iterations: int
    rank_found: int
    status: str

    def as_dict(self) -> dict:
        d = asdict(self)
        d["log_time"] = _log10(self.wall_time)
        d["log_one_minus_ascore"] = _log10(1.0 - self.ascore)
        d["log_error"] = _log10(self.rel_error)
        return d


def _log10(x: float) -> str:
    if not x > 0 or not math.isfinite(x):
        return ""
    return repr(math.log10(x))


def _mspm_config(spec: ExperimentSpec) -> MSPMConfig:
    rank = spec.rank if spec.rank_policy == "planted" else spec.rank_policy
    return MSPMConfig(plan=spec.plan, rank=rank, power=PowerConfig(), seed=spec.seed)


def run_rep(spec: ExperimentSpec, rep: int, method: str = "mspm", timing: bool = True):
    """Run one repetition; returns ``(MetricRow, instance, result)``."""
    if method != "mspm":
        raise ValueError(f"unknown method {method!r}")
    inst = gen_instance(spec, rep)
    cfg = _mspm_config(spec)
    cfg.seed = int(np.random.SeedSequence([spec.seed, rep]).generate_state(1)[0])
    t0 = time.perf_counter()
    try:
        res = decompose(inst.tensor, cfg)
        status = res.status
    except Exception as exc:  # recorded as a failed row, the run continues
        res = DecompositionResult(spec.symmetry, [], {"status": "failed", "error": repr(exc)})
        status = "failed"
    wall = time.perf_counter() - t0 if timing else 0.0
    comps = res.diagnostics.get("components", [])
    row = MetricRow(
        method=method,
        seed=spec.seed,
        rep=rep,
        wall_time=wall,
        ascore=result_ascore(inst.truth, res),
        rel_error=relative_error(inst.tensor, res),
        restarts=int(sum(c["restarts"] for c in comps)),
        iterations=int(sum(c["iterations"] for c in comps)),
        rank_found=res.rank,
        status=status,
    )
    return row, inst, res


def _rep_worker(args):
    spec, rep, method, timing = args
    return run_rep(spec, rep, method, timing)[0]


def run_experiment(spec: ExperimentSpec, method: str = "mspm", *, timing: bool = True, workers: int = 1) -> list[MetricRow]:
    """Run all repetitions and return one row per repetition, in order.

    With ``timing=False`` the wall time is reported as zero so the output is
    byte-for-byte reproducible.
    """
    jobs = [(spec, rep, method, timing) for rep in range(spec.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_rep_worker, jobs))
    return [_rep_worker(j) for j in jobs]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metrics_csv(rows: Sequence[MetricRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for row in rows:
        d = row.as_dict()
        w.writerow([_fmt(d[c]) for c in METRIC_COLUMNS])
    return buf.getvalue()


# --------------------------------------------------------------------------
# basin scan


@dataclass
class BasinResult:
    x: np.ndarray
    y: np.ndarray
    label: np.ndarray
    iterations: np.ndarray
    truth: list = field(default_factory=list)

    def frequencies(self) -> dict:
        vals, counts = np.unique(self.label, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "component", "iterations"])
        for x, y, c, n in zip(self.x, self.y, self.label, self.iterations):
            w.writerow([repr(float(x)), repr(float(y)), int(c), int(n)])
        return buf.getvalue()


def basin_instance(seed: int, m: int = 3, rank: int = 3):
    """Rank-``rank`` sum of unit rank-one terms in ``(R^m)^{(x)3}``."""
    spec = ExperimentSpec(SymmetryType(((1, m),) * 3), rank, lambda_law="ones", seed=seed)
    return gen_instance(spec)


def basin_target(T: PSTensor, rank: int = 3, f=(1, 1, 0)) -> np.ndarray:
    """Stacked orthonormal basis of the f-flattening's column space as a dense array."""
    _, S, _ = extract(T, f, rank)
    return S.as_tensor().values


def _top_pairs(A: np.ndarray, C: np.ndarray):
    M = np.einsum("ijk,nk->nij", A, C)
    u, _, vt = np.linalg.svd(M)
    return u[:, :, 0], vt[:, 0, :]


def _batched_hopm(A, a, b, c, max_iters, move_tol):
    """Unshifted power sweeps for many starting points at once (order-3, vector blocks)."""
    n = a.shape[0]
    iters = np.zeros(n, dtype=int)
    done = np.zeros(n, dtype=bool)
    for it in range(1, max_iters + 1):
        act = ~done
        if not act.any():
            break
        a0, b0, c0 = a[act], b[act], c[act]
        a1 = _unit(np.einsum("ijk,nj,nk->ni", A, b0, c0), a0)
        b1 = _unit(np.einsum("ijk,ni,nk->nj", A, a1, c0), b0)
        c1 = _unit(np.einsum("ijk,ni,nj->nk", A, a1, b1), c0)
        move = np.maximum.reduce([np.linalg.norm(a1 - a0, axis=1), np.linalg.norm(b1 - b0, axis=1), np.linalg.norm(c1 - c0, axis=1)])
        a[act], b[act], c[act] = a1, b1, c1
        iters[act] = it
        idx = np.flatnonzero(act)
        done[idx[move < move_tol]] = True
    return a, b, c, iters, done


def _unit(g, old):
    n = np.linalg.norm(g, axis=1, keepdims=True)
    return np.where(n > 0, g / np.where(n > 0, n, 1.0), old)


def basin_scan(seed: int = 0, grid: int = 100, *, max_iters: int = 5000, move_tol: float = 1e-12, match_tol: float = 1e-6) -> BasinResult:
    """Label each starting point of a grid by the component the power method reaches.

    The instance is a rank-3 sum of unit terms in ``(R^3)^{(x)3}`` and the
    target is the stacked orthonormal basis for ``f = (1, 1, 0)``.  The
    third vector starts at ``(1, x, y)`` normalized and the first two at the
    dominant singular pair of the target contracted with it.  Labels are
    1-based component indices, 0 for a converged run matching no planted
    pair and -1 for runs that did not converge.
    """
    inst = basin_instance(seed)
    A = basin_target(inst.tensor)
    xs = np.linspace(-1.0, 1.0, grid)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    x, y = X.ravel(), Y.ravel()
    c = np.stack([np.ones_like(x), x, y], axis=1)
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    a, b = _top_pairs(A, c)
    a, b, c, iters, done = _batched_hopm(A, a, b, c, max_iters, move_tol)
    Pa = np.array([t.factors[0] for t in inst.truth])
    Pb = np.array([t.factors[1] for t in inst.truth])
    score = np.abs(a @ Pa.T) * np.abs(b @ Pb.T)
    best = np.argmax(score, axis=1)
    label = np.where(score[np.arange(len(best)), best] >= 1 - match_tol, best + 1, 0)
    label = np.where(done, label, -1)
    return BasinResult(x, y, label, iters, inst.truth)
