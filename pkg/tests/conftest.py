"""Shared fixtures and brute-force oracles."""
import itertools
import math

import numpy as np
import pytest

from mspm.tensor import PSTensor, SymmetryType, make_rank_one, symmetrize

SQ2 = 1 / math.sqrt(2)
U = np.array([SQ2, SQ2])
V = np.array([SQ2, -SQ2])
E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


def odeco_vectors():
    """u(x)u(x)v + v(x)v(x)u as a 3-block tensor of vectors."""
    return make_rank_one((U, U, V), (1, 1, 1)) + make_rank_one((V, V, U), (1, 1, 1))


def odeco_sym():
    """The same tensor viewed in S^2(R^2) (x) R^2."""
    T = odeco_vectors()
    return PSTensor(T.values, [(2, 2), (1, 2)])


def nonorth_sym():
    """u(x)u(x)(1/sqrt3, 1) + e1(x)e1(x)(-2/sqrt3, 0) in S^2(R^2) (x) R^2."""
    c1 = np.array([1 / math.sqrt(3), 1.0])
    c2 = np.array([-2 / math.sqrt(3), 0.0])
    T = make_rank_one((U, c1), (2, 1)) + make_rank_one((E1, c2), (2, 1))
    return PSTensor(T.values, [(2, 2), (1, 2)])


def random_ps(sym, rng):
    sym = SymmetryType.coerce(sym)
    return symmetrize(rng.standard_normal(sym.shape), sym)


def random_unit(dims, rng):
    out = []
    for m in dims:
        x = rng.standard_normal(m)
        out.append(x / np.linalg.norm(x))
    return tuple(out)


def axis_blocks(sym):
    return [i for i, (d, _) in enumerate(sym.blocks) for _ in range(d)]


def naive_contract(T, factors, f):
    """Entry-by-entry contraction: sum over contracted indices with explicit loops.

    The first f_i axes of block i are contracted; the rest survive in order.
    """
    sym = T.symmetry
    arr = T.values
    owner = axis_blocks(sym)
    pos_in_block = []
    seen = {}
    for b in owner:
        pos_in_block.append(seen.get(b, 0))
        seen[b] = seen.get(b, 0) + 1
    contracted = [k for k, b in enumerate(owner) if pos_in_block[k] < f[b]]
    kept = [k for k in range(len(owner)) if k not in contracted]
    out_shape = tuple(sym.shape[k] for k in kept)
    out = np.zeros(out_shape)
    for idx in itertools.product(*(range(n) for n in sym.shape)):
        w = 1.0
        for k in contracted:
            w *= factors[owner[k]][idx[k]]
        out[tuple(idx[k] for k in kept)] += w * arr[idx]
    return out


def naive_flatten(T, f):
    """Flattening from explicit row/column index arithmetic."""
    sym = T.symmetry
    owner = axis_blocks(sym)
    pos = []
    seen = {}
    for b in owner:
        pos.append(seen.get(b, 0))
        seen[b] = seen.get(b, 0) + 1
    row_axes = [k for k in range(len(owner)) if pos[k] < f[owner[k]]]
    col_axes = [k for k in range(len(owner)) if pos[k] >= f[owner[k]]]
    nr = math.prod(sym.shape[k] for k in row_axes)
    nc = math.prod(sym.shape[k] for k in col_axes)
    M = np.zeros((nr, nc))
    for idx in itertools.product(*(range(n) for n in sym.shape)):
        r = 0
        for k in row_axes:
            r = r * sym.shape[k] + idx[k]
        c = 0
        for k in col_axes:
            c = c * sym.shape[k] + idx[k]
        M[r, c] = T.values[idx]
    return M


def naive_symmetrize(arr, sym):
    """Average over all products of within-block permutations, entry by entry."""
    sym = SymmetryType.coerce(sym)
    groups = [list(sym.block_axes(i)) for i in range(sym.n_blocks)]
    perms = [list(itertools.permutations(g)) for g in groups]
    out = np.zeros_like(arr)
    count = 0
    for combo in itertools.product(*perms):
        mapping = list(range(arr.ndim))
        for g, p in zip(groups, combo):
            for src, dst in zip(g, p):
                mapping[src] = dst
        for idx in itertools.product(*(range(n) for n in arr.shape)):
            out[idx] += arr[tuple(idx[mapping[k]] for k in range(arr.ndim))]
        count += 1
    return out / count


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
