import numpy as np
import pytest

from mspm.bench import ExperimentSpec, gen_instance
from mspm.completion import CompletionContext, complete, matched_rank_one, rank_one_factors
from mspm.exceptions import CompletionError
from mspm.planner import DIRECT, PAIRED, SYMMETRY_BREAKING, make_plan
from mspm.subspace import SlicedSubspace, extract
from mspm.tensor import SymmetryType, rank_one_array

from conftest import E1, E2, U, V


def _cos(a, b):
    return abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def _check_all(sym, f, partner, rank, seed, mode):
    inst = gen_instance(ExperimentSpec(sym, rank, seed=seed))
    plan = make_plan(sym, f, partner)
    assert plan.mode == mode
    state, _, _ = extract(inst.tensor, plan.f, rank)
    pstate = extract(inst.tensor, plan.partner, rank)[0] if plan.partner else None
    ctx = CompletionContext(plan, state, pstate, rng=np.random.default_rng(0))
    for c in inst.truth:
        row = {i: c.factors[i] for i, fi in enumerate(plan.f) if fi > 0}
        full, diag = complete(row, ctx)
        assert all(_cos(a, b) >= 1 - 1e-10 for a, b in zip(full, c.factors))
    return diag


def test_direct_returns_row_factors():
    diag = _check_all([(3, 4), (1, 3)], (2, 1), None, 3, 0, DIRECT)
    assert diag["steps"] == []


def test_symmetry_breaking_fills_missing_block():
    diag = _check_all([(1, 4), (2, 4), (1, 4)], (0, 1, 1), None, 3, 1, SYMMETRY_BREAKING)
    assert [s["basis"] for s in diag["steps"]] == ["complement"]


def test_paired_four_vectors():
    diag = _check_all([(1, 4)] * 4, (1, 1, 0, 0), (1, 0, 1, 0), 5, 2, PAIRED)
    assert [s["basis"] for s in diag["steps"]] == ["partner", "complement"]


def test_sequence_row_factors():
    sym = [(3, 4), (1, 3)]
    inst = gen_instance(ExperimentSpec(sym, 2, seed=4))
    plan = make_plan(sym, (2, 1))
    state, _, _ = extract(inst.tensor, plan.f, 2)
    full, _ = complete(list(inst.truth[0].factors), CompletionContext(plan, state))
    assert _cos(full[1], inst.truth[0].factors[1]) > 1 - 1e-12


def test_paired_needs_partner_state():
    sym = [(1, 3)] * 3
    plan = make_plan(sym, (1, 1, 0), (1, 0, 1))
    with pytest.raises(ValueError):
        CompletionContext(plan, None)


def _basis(tensors, sym):
    sym = SymmetryType.coerce(sym)
    Q, _ = np.linalg.qr(np.array([t.ravel() for t in tensors]).T)
    return SlicedSubspace.from_matrix(Q, sym, tuple(range(sym.n_blocks)))


class TestMatched:
    def test_nonorthogonal_complement(self):
        # span{u (x) u, e1 (x) e1}; knowing e1 forces e1 in the other slot
        B = _basis([np.outer(U, U), np.outer(E1, E1)], [(1, 2), (1, 2)])
        res = matched_rank_one(B, {0: E1})
        assert res.sigma == pytest.approx(1.0, abs=1e-12)
        assert _cos(res.factors[1], E1) > 1 - 1e-12

    def test_e2_completion(self):
        B = _basis([np.einsum("i,j->ij", U, E2), np.einsum("i,j->ij", E1, np.array([-np.sqrt(3) / 2, 0.5]))], [(1, 2), (1, 2)])
        res = matched_rank_one(B, {0: U})
        assert _cos(res.factors[1], E2) > 1 - 1e-12

    def test_inconsistent(self):
        B = _basis([np.outer(E1, E1)], [(1, 2), (1, 2)])
        with pytest.raises(CompletionError) as err:
            matched_rank_one(B, {0: E2})
        assert "sigma" in err.value.diagnostics

    def test_repeated_singular_value_search(self):
        a = np.array([1.0, 0, 0])
        b1, b2 = np.eye(3)[1], np.eye(3)[2]
        c1, c2 = np.array([1.0, 0, 0]), np.array([0.0, 1.0, 0])
        B = _basis([np.einsum("i,j,k->ijk", a, b1, c1), np.einsum("i,j,k->ijk", a, b2, c2)], [(1, 3)] * 3)
        res = matched_rank_one(B, {0: a}, rng=np.random.default_rng(1))
        assert res.multiplicity == 2
        assert res.fit > 1 - 1e-6
        pairs = [(b1, c1), (b2, c2)]
        assert any(_cos(res.factors[1], b) > 1 - 1e-6 and _cos(res.factors[2], c) > 1 - 1e-6 for b, c in pairs)

    def test_unknown_block_rejected(self):
        B = _basis([np.outer(E1, E1)], [(1, 2), (1, 2)])
        with pytest.raises(ValueError):
            matched_rank_one(B, {5: E1})


def test_rank_one_factors_fit():
    sym = SymmetryType(((2, 3), (1, 2)))
    x = rank_one_array((np.array([1.0, 2, 2]) / 3, E2), sym.exponents)
    vecs, fit = rank_one_factors(x, sym)
    assert fit == pytest.approx(1.0, abs=1e-12)
    y = x + rank_one_array((np.array([1.0, 0, 0]), E1), sym.exponents)
    assert rank_one_factors(y, sym)[1] < 0.99


def test_nonorthogonal_slices_match_e2():
    s3 = np.sqrt(3)
    S0 = np.array([[-s3 / 2, 1 / (2 * s3)], [1 / (2 * s3), 1 / (2 * s3)]])
    S1 = np.full((2, 2), 0.5)
    B = SlicedSubspace(SymmetryType(((2, 2),)), (0,), np.array([S0, S1]))
    assert np.allclose(B.gram(), np.eye(2), atol=1e-12)
    res = matched_rank_one(B, {0: U})
    assert res.sigma == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(res.coeffs, E2, atol=1e-12)
