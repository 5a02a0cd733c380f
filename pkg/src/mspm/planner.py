"""Flattening combinatorics: counts, generic ranks and plan selection.

For a symmetry type with exponents ``d`` and dimensions ``m`` and a tuple
``f`` with ``0 <= f <= d``:

* ``n_row(f) = prod C(m_i + f_i - 1, f_i)`` distinct rows,
* ``n_col(f) = n_row(d - f)`` distinct columns,
* ``n_codim(f) = n_row(f) - 1 - sum_{f_i > 0} (m_i - 1)``, the codimension of
  the variety of rank-one tensors of type ``f`` in its ambient space,
* ``r(f)``, the largest rank for which the column space of a generic
  f-flattening contains no rank-one tensors besides the planted ones.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .tensor import SymmetryType, check_tuple

INT128_MAX = 2**127 - 1

DIRECT = "direct"
SYMMETRY_BREAKING = "symmetry_breaking"
PAIRED = "paired"
_MODE_RANK = {DIRECT: 0, SYMMETRY_BREAKING: 1, PAIRED: 2}


def _guard(n: int) -> int:
    if n > INT128_MAX:
        raise OverflowError(f"count {n} exceeds the 128-bit range")
    return n


def _sym(sym) -> SymmetryType:
    return SymmetryType.coerce(sym)


def count_rows(sym, f: Sequence[int]) -> int:
    sym = _sym(sym)
    f = check_tuple(sym, f)
    out = 1
    for fi, m in zip(f, sym.dims):
        out = _guard(out * math.comb(m + fi - 1, fi))
    return out


def count_cols(sym, f: Sequence[int]) -> int:
    sym = _sym(sym)
    f = check_tuple(sym, f)
    return count_rows(sym, [d - fi for d, fi in zip(sym.exponents, f)])


def codim(sym, f: Sequence[int]) -> int:
    sym = _sym(sym)
    f = check_tuple(sym, f)
    if not any(f):
        raise ValueError("codimension is undefined for f = 0")
    return count_rows(sym, f) - 1 - sum(m - 1 for fi, m in zip(f, sym.dims) if fi)


def _special_branch(sym: SymmetryType, f: tuple[int, ...]) -> bool:
    nz = [i for i, fi in enumerate(f) if fi]
    if len(nz) != 2 or any(f[i] != 1 for i in nz):
        return False
    return min(sym.dims[i] for i in nz) == 2


def r_of(sym, f: Sequence[int]) -> int:
    """Generic recovery rank of a single flattening."""
    sym = _sym(sym)
    f = check_tuple(sym, f, proper=True)
    c = codim(sym, f)
    if _special_branch(sym, f):
        c += 1
    return min(count_cols(sym, f), c)


def is_symmetry_breaking(sym, f: Sequence[int]) -> bool:
    sym = _sym(sym)
    f = check_tuple(sym, f)
    return any(0 < fi < d for fi, d in zip(f, sym.exponents))


def complement(sym, f: Sequence[int]) -> tuple[int, ...]:
    sym = _sym(sym)
    f = check_tuple(sym, f)
    return tuple(d - fi for d, fi in zip(sym.exponents, f))


def is_admissible_partner(sym, f: Sequence[int], g: Sequence[int]) -> bool:
    """Pair conditions for a non-symmetry-breaking ``f`` and partner ``g``.

    ``g`` must be a proper tuple distinct from ``d - f``, share at least one
    block with ``f`` and not be dominated by ``f`` componentwise.
    """
    sym = _sym(sym)
    f = check_tuple(sym, f, proper=True)
    try:
        g = check_tuple(sym, g, proper=True)
    except ValueError:
        return False
    if g == complement(sym, f):
        return False
    if not any(min(a, b) > 0 for a, b in zip(f, g)):
        return False
    if all(a >= b for a, b in zip(f, g)):
        return False
    return True


def mode_of(sym, f: Sequence[int]) -> str:
    sym = _sym(sym)
    f = check_tuple(sym, f, proper=True)
    if all(fi > 0 for fi in f):
        return DIRECT
    if is_symmetry_breaking(sym, f):
        return SYMMETRY_BREAKING
    return PAIRED


def covers(f: Sequence[int], g: Sequence[int]) -> bool:
    """True when every block appears in ``f`` or ``g``."""
    return all(a > 0 or b > 0 for a, b in zip(f, g))


def r_max_of(sym, f: Sequence[int], partner: Optional[Sequence[int]] = None, *, coverage_aware: bool = False) -> int:
    """Largest rank for which the full pipeline recovers a generic tensor.

    With ``coverage_aware=True`` the ``r(d - f)`` term of the paired case is
    dropped when ``f`` and the partner together touch every block, because the
    first two completion steps then fix all factors.
    """
    sym = _sym(sym)
    f = check_tuple(sym, f, proper=True)
    mode = mode_of(sym, f)
    if mode == DIRECT:
        return r_of(sym, f)
    dmf = complement(sym, f)
    if mode == SYMMETRY_BREAKING:
        return min(r_of(sym, f), r_of(sym, dmf))
    if partner is None:
        raise ValueError(f"tuple {f} is not symmetry breaking and needs a partner")
    g = check_tuple(sym, partner, proper=True)
    if not is_admissible_partner(sym, f, g):
        raise ValueError(f"{g} is not an admissible partner for {f}")
    out = min(r_of(sym, f), r_of(sym, g))
    if all(min(a, b) > 0 for a, b in zip(f, g)):
        return out
    if coverage_aware and covers(f, g):
        return out
    return min(out, r_of(sym, dmf))


def proper_tuples(sym) -> Iterator[tuple[int, ...]]:
    sym = _sym(sym)
    d = sym.exponents
    for f in itertools.product(*(range(di + 1) for di in d)):
        if any(f) and f != d:
            yield f


@dataclass(frozen=True)
class FlatteningPlan:
    """A flattening choice together with its recovery mode and rank bound."""

    f: tuple[int, ...]
    mode: str
    r_max: int
    r_max_literal: int
    partner: Optional[tuple[int, ...]] = None
    cost: int = 0

    def describe(self) -> str:
        fs = ",".join(map(str, self.f))
        if self.partner is not None:
            fs += ";" + ",".join(map(str, self.partner))
        return f"{fs} ({self.mode}, r_max={self.r_max})"


def make_plan(sym, f: Sequence[int], partner: Optional[Sequence[int]] = None) -> FlatteningPlan:
    """Build the plan for an explicit tuple (and partner when required).

    A partner passed for a tuple that does not need one is ignored.
    """
    sym = _sym(sym)
    f = check_tuple(sym, f, proper=True)
    mode = mode_of(sym, f)
    if mode != PAIRED:
        partner = None
    elif partner is None:
        partner = best_partner(sym, f)
        if partner is None:
            raise ValueError(f"no admissible partner exists for {f}")
    g = None if partner is None else tuple(int(x) for x in partner)
    cost = count_rows(sym, f) + (count_rows(sym, g) if g is not None else 0)
    return FlatteningPlan(
        f=f,
        mode=mode,
        r_max=r_max_of(sym, f, g, coverage_aware=True),
        r_max_literal=r_max_of(sym, f, g),
        partner=g,
        cost=cost,
    )


def _plan_key(p: FlatteningPlan):
    return (-p.r_max, _MODE_RANK[p.mode], p.cost, p.f, p.partner or ())


def best_partner(sym, f: Sequence[int]) -> Optional[tuple[int, ...]]:
    sym = _sym(sym)
    f = check_tuple(sym, f, proper=True)
    best = None
    for g in proper_tuples(sym):
        if not is_admissible_partner(sym, f, g):
            continue
        p = FlatteningPlan(
            f=f,
            mode=PAIRED,
            r_max=r_max_of(sym, f, g, coverage_aware=True),
            r_max_literal=0,
            partner=g,
            cost=count_rows(sym, f) + count_rows(sym, g),
        )
        if best is None or _plan_key(p) < _plan_key(best):
            best = p
    return None if best is None else best.partner


def candidate_plans(sym) -> Iterator[FlatteningPlan]:
    """Every single tuple and every admissible pair."""
    sym = _sym(sym)
    for f in proper_tuples(sym):
        if mode_of(sym, f) != PAIRED:
            yield make_plan(sym, f)
            continue
        for g in proper_tuples(sym):
            if is_admissible_partner(sym, f, g):
                yield make_plan(sym, f, g)


def optimal_plan(sym) -> FlatteningPlan:
    """Plan maximizing the coverage-aware ``r_max``.

    Ties prefer direct over symmetry-breaking over paired recovery, then the
    smaller total number of flattening rows, then the lexicographically
    smallest tuple.
    """
    sym = _sym(sym)
    best = None
    for p in candidate_plans(sym):
        if best is None or _plan_key(p) < _plan_key(best):
            best = p
    if best is None:
        raise ValueError(f"symmetry {sym} admits no flattening")
    return best


PLAN_COLUMNS = ["f", "n_row", "n_col", "n_codim", "r", "symmetry_breaking", "partner", "r_max", "r_max_literal"]


def plan_table(sym) -> list[dict]:
    """One row per proper tuple, with the best partner where one is needed."""
    sym = _sym(sym)
    rows = []
    for f in proper_tuples(sym):
        try:
            p = make_plan(sym, f)
        except ValueError:
            p = None
        rows.append(
            {
                "f": ",".join(map(str, f)),
                "n_row": count_rows(sym, f),
                "n_col": count_cols(sym, f),
                "n_codim": codim(sym, f),
                "r": r_of(sym, f),
                "symmetry_breaking": is_symmetry_breaking(sym, f),
                "partner": "" if p is None or p.partner is None else ",".join(map(str, p.partner)),
                "r_max": "" if p is None else p.r_max,
                "r_max_literal": "" if p is None else p.r_max_literal,
            }
        )
    return rows


def plan_csv(sym) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=PLAN_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in plan_table(sym):
        w.writerow({k: (str(v).lower() if isinstance(v, bool) else v) for k, v in row.items()})
    return buf.getvalue()
