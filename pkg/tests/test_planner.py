import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mspm.planner import (
    DIRECT,
    candidate_plans,
    PAIRED,
    SYMMETRY_BREAKING,
    codim,
    count_cols,
    count_rows,
    is_admissible_partner,
    is_symmetry_breaking,
    make_plan,
    optimal_plan,
    plan_csv,
    proper_tuples,
    r_max_of,
    r_of,
)

small_sym = st.lists(st.tuples(st.integers(1, 4), st.integers(2, 6)), min_size=1, max_size=4).filter(
    lambda b: any(d > 1 for d, _ in b) or len(b) > 1
)


class TestCounts:
    def test_two_one(self):
        sym = [(2, 100), (1, 50)]
        assert count_rows(sym, (1, 1)) == 5000
        assert count_cols(sym, (1, 1)) == 100
        assert codim(sym, (1, 1)) == 4851
        assert r_of(sym, (1, 1)) == 100

    def test_four_one(self):
        sym = [(4, 25), (1, 10)]
        assert count_rows(sym, (2, 1)) == 3250
        assert count_cols(sym, (2, 1)) == 325
        assert codim(sym, (2, 1)) == 3216
        assert r_of(sym, (2, 1)) == 325

    def test_full_tuple_has_one_column(self):
        assert count_cols([(3, 5), (2, 4)], (3, 2)) == 1

    def test_single_block_codim_zero(self):
        assert codim([(1, 7)], (1,)) == 0

    def test_codim_zero_tuple_rejected(self):
        with pytest.raises(ValueError):
            codim([(2, 3)], (0,))

    def test_overflow_reported(self):
        with pytest.raises(OverflowError):
            count_rows([(60, 10**6)], (60,))


class TestRank:
    def test_special_branch(self):
        sym = [(1, 2), (1, 5), (1, 4), (1, 4)]
        # n_codim = 10 - 1 - (1 + 4) = 4, plus one on the special branch
        assert codim(sym, (1, 1, 0, 0)) == 4
        assert r_of(sym, (1, 1, 0, 0)) == min(count_cols(sym, (1, 1, 0, 0)), 5)

    def test_special_branch_needs_dim_two(self):
        sym = [(1, 3), (1, 5), (1, 4)]
        assert r_of(sym, (1, 1, 0)) == min(count_cols(sym, (1, 1, 0)), codim(sym, (1, 1, 0)))

    def test_cor65_value(self):
        assert r_of([(4, 25), (1, 12)], (2, 1)) == math.comb(26, 2)

    def test_boundary_rejected(self):
        with pytest.raises(ValueError):
            r_of([(2, 3), (1, 3)], (0, 0))
        with pytest.raises(ValueError):
            r_of([(2, 3), (1, 3)], (2, 1))

    @settings(max_examples=60, deadline=None)
    @given(small_sym)
    def test_bounds(self, blocks):
        for f in proper_tuples(blocks):
            nr, nc, c = count_rows(blocks, f), count_cols(blocks, f), codim(blocks, f)
            assert c < nr
            assert r_of(blocks, f) <= min(nr, nc)


class TestSymmetryBreaking:
    def test_examples(self):
        assert is_symmetry_breaking([(1, 3), (2, 3), (1, 3)], (1, 1, 0))
        assert is_symmetry_breaking([(2, 3), (1, 3)], (1, 1))
        for f in proper_tuples([(1, 3)] * 4):
            assert not is_symmetry_breaking([(1, 3)] * 4, f)


class TestRmax:
    def test_direct(self):
        assert r_max_of([(2, 100), (1, 50)], (1, 1)) == 100
        assert r_max_of([(4, 25), (1, 10)], (2, 1)) == 325

    def test_paired_literal_and_coverage(self):
        sym = [(1, 100)] * 3
        assert r_of(sym, (1, 1, 0)) == 100
        assert r_of(sym, (1, 0, 1)) == 100
        assert r_max_of(sym, (1, 1, 0), (1, 0, 1)) == 0
        assert r_max_of(sym, (1, 1, 0), (1, 0, 1), coverage_aware=True) == 100

    def test_missing_partner(self):
        with pytest.raises(ValueError):
            r_max_of([(1, 4)] * 3, (1, 1, 0))

    def test_pair_conditions(self):
        sym = [(1, 4)] * 4
        assert is_admissible_partner(sym, (1, 1, 0, 0), (1, 0, 1, 0))
        assert not is_admissible_partner(sym, (1, 1, 0, 0), (0, 0, 1, 1))  # complement
        assert not is_admissible_partner(sym, (1, 1, 0, 0), (1, 0, 0, 0))  # dominated
        assert not is_admissible_partner(sym, (1, 1, 0, 0), (0, 0, 1, 0))  # nothing shared

    @settings(max_examples=40, deadline=None)
    @given(small_sym)
    def test_complement_symmetry(self, blocks):
        d = tuple(x for x, _ in blocks)
        for f in proper_tuples(blocks):
            if is_symmetry_breaking(blocks, f) and not all(f):
                g = tuple(a - b for a, b in zip(d, f))
                if not all(g):
                    assert r_max_of(blocks, f) == r_max_of(blocks, g)


def _brute_best(sym):
    best = 0
    for f in proper_tuples(sym):
        if all(f) or is_symmetry_breaking(sym, f):
            best = max(best, r_max_of(sym, f, coverage_aware=True))
            continue
        for g in proper_tuples(sym):
            if is_admissible_partner(sym, f, g):
                best = max(best, r_max_of(sym, f, g, coverage_aware=True))
    return best


class TestOptimalPlan:
    @pytest.mark.parametrize("n,k", [(3, 3), (5, 4), (10, 20), (2, 7), (7, 2)])
    def test_three_one(self, n, k):
        assert optimal_plan([(3, n), (1, k)]).f == (1, 1)
        assert optimal_plan([(2, n), (1, k)]).f == (1, 1)

    @pytest.mark.parametrize("k,f", [(5, (2, 1)), (14, (2, 1)), (15, (1, 1)), (40, (1, 1))])
    def test_four_one_crossover(self, k, f):
        assert optimal_plan([(4, 25), (1, k)]).f == f

    def test_asymmetric_needs_pair(self):
        p = optimal_plan([(1, 30)] * 3)
        assert p.mode == PAIRED and p.partner is not None
        assert p.r_max == 30

    def test_modes(self):
        assert make_plan([(2, 4), (1, 3)], (1, 1)).mode == DIRECT
        assert make_plan([(1, 3), (2, 3), (1, 3)], (1, 1, 0)).mode == SYMMETRY_BREAKING
        assert make_plan([(1, 3)] * 3, (1, 1, 0)).mode == PAIRED

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 3), st.integers(2, 5)), min_size=1, max_size=3).filter(lambda b: sum(d for d, _ in b) >= 2))
    def test_matches_brute_force(self, blocks):
        if not list(candidate_plans(blocks)):
            with pytest.raises(ValueError):
                optimal_plan(blocks)
            return
        assert optimal_plan(blocks).r_max == _brute_best(blocks)

    def test_matrix_has_no_plan(self):
        with pytest.raises(ValueError):
            optimal_plan([(1, 3), (1, 4)])


def test_fig2_piecewise_linear():
    ms = np.arange(2, 121)
    for f in [(1, 1), (2, 1), (3, 1), (1, 0), (2, 0), (3, 0)]:
        vals = []
        for m in ms:
            sym = [(4, 20), (1, int(m))]
            vals.append(r_max_of(sym, f) if f[1] else r_of(sym, f))
        second = np.diff(np.array(vals, dtype=float), 2)
        assert np.count_nonzero(second) <= 3, f


def test_plan_csv_columns():
    text = plan_csv([(2, 4), (1, 3)])
    header = text.splitlines()[0].split(",")
    assert header[:8] == ["f", "n_row", "n_col", "n_codim", "r", "symmetry_breaking", "partner", "r_max"]
    assert len(text.splitlines()) == 1 + 4
