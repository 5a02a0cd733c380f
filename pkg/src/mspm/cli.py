"""Command-line entry point.

Exit codes: 0 success, 2 partial decomposition, 3 input or format error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import ExperimentSpec, basin_scan, gen_instance, metrics_csv, run_experiment
from .decompose import MSPMConfig, decompose
from .exceptions import FormatError
from .io import read_tensor, write_tensor
from .planner import optimal_plan, plan_csv
from .power import PowerConfig, ShiftPolicy
from .tensor import SymmetryType

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_INPUT = 3


class InputError(Exception):
    pass


def _tuple(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def parse_flattening(text: str):
    """``"1,1,0"`` or ``"1,1,0;1,0,1"``."""
    parts = [p for p in text.split(";") if p.strip()]
    if not 1 <= len(parts) <= 2:
        raise ValueError(f"bad flattening {text!r}")
    tuples = [_tuple(p) for p in parts]
    return tuples[0] if len(tuples) == 1 else tuple(tuples)


def _symmetry(text: str) -> SymmetryType:
    try:
        return SymmetryType.parse(text).check_standard()
    except ValueError as exc:
        raise InputError(f"bad --symmetry: {exc}") from None


def cmd_plan(args) -> int:
    sym = _symmetry(args.symmetry)
    text = plan_csv(sym)
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"optimal: {optimal_plan(sym).describe()}", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    sym = _symmetry(args.symmetry)
    try:
        spec = ExperimentSpec(
            sym, args.rank, factor_law="stiefel_orthogonal" if args.orthogonal else "gaussian_unit", noise=args.noise, seed=args.seed
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    inst = gen_instance(spec)
    write_tensor(inst.tensor, args.out)
    if args.truth:
        truth = {
            "symmetry": [list(b) for b in sym.blocks],
            "rank": spec.rank,
            "components": [{"lambda": c.lam, "factors": [v.tolist() for v in c.factors]} for c in inst.truth],
        }
        Path(args.truth).write_text(json.dumps(truth))
    return EXIT_OK


def cmd_decompose(args) -> int:
    T = read_tensor(args.inp)
    try:
        plan = parse_flattening(args.flattening) if args.flattening else "auto"
        shifts = ShiftPolicy.parse(args.shift_policy)
        power = PowerConfig(max_iters=args.max_iters)
        rank = "auto" if args.rank is None else args.rank
        cfg = MSPMConfig(plan=plan, rank=rank, power=power, shifts=shifts, accept_tol=args.tol, seed=args.seed)
        res = decompose(T, cfg)
    except (ValueError, OverflowError) as exc:
        raise InputError(str(exc)) from None
    out = res.to_json()
    out["symmetry"] = str(T.symmetry)
    Path(args.out).write_text(json.dumps(out, indent=1))
    print(f"rank {res.rank}, relative error {res.diagnostics['relative_error']:.3e}, status {res.status}", file=sys.stderr)
    return EXIT_OK if res.status == "complete" else EXIT_PARTIAL


def cmd_bench(args) -> int:
    try:
        spec = ExperimentSpec.from_dict(json.loads(Path(args.config).read_text()))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"bad config: {exc}") from None
    rows = run_experiment(spec, timing=not args.no_timing, workers=args.workers)
    Path(args.out).write_text(metrics_csv(rows))
    return EXIT_OK if all(r.status == "complete" for r in rows) else EXIT_PARTIAL


def cmd_basin(args) -> int:
    if args.grid < 1:
        raise InputError("--grid must be positive")
    res = basin_scan(args.seed, args.grid)
    Path(args.out).write_text(res.to_csv())
    print(json.dumps(res.frequencies()), file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mspm", description="Partially symmetric tensor decomposition by the multi-subspace power method.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("plan", help="tabulate flattenings and rank bounds")
    q.add_argument("--symmetry", required=True, help="blocks as d1:m1,d2:m2,...")
    q.add_argument("--csv", help="write the table here instead of stdout")
    q.set_defaults(func=cmd_plan)

    q = sub.add_parser("synth", help="write a planted synthetic tensor")
    q.add_argument("--symmetry", required=True)
    q.add_argument("--rank", type=int, required=True)
    q.add_argument("--noise", type=float, default=0.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.add_argument("--truth", help="also write the planted components as JSON")
    q.add_argument("--orthogonal", action="store_true", help="orthonormal first-block factors")
    q.set_defaults(func=cmd_synth)

    q = sub.add_parser("decompose", help="decompose a tensor file")
    q.add_argument("--in", dest="inp", required=True)
    g = q.add_mutually_exclusive_group()
    g.add_argument("--rank", type=int)
    g.add_argument("--auto-rank", action="store_true")
    q.add_argument("--flattening", help="f1,f2,... optionally followed by ;f'1,f'2,...")
    q.add_argument("--shift-policy", default="prop53", help="thm51 (norm bound), prop53 (adaptive) or fixed:g1,g2,...")
    q.add_argument("--tol", type=float, help="acceptance tolerance on the singular value")
    q.add_argument("--max-iters", type=int, default=5000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_decompose)

    q = sub.add_parser("bench", help="run a seeded synthetic experiment")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--no-timing", action="store_true", help="report zero wall time for byte-stable output")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("basin", help="basin-of-attraction scan on a rank-3 3x3x3 tensor")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--grid", type=int, default=100)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_basin)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
