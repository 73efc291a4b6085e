from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from closedtest.bounds import tau_upper
from closedtest.closure import ClosureTable, HypothesisFamily, adjust, build_closure, subset_indices
from closedtest.constraints import (DisjointSet, EqualityStructure, constrained_adjusted,
                                    deduplicated_table, distinct_closure, implication_closure,
                                    tau_upper_constrained)
from closedtest.errors import UnsupportedError


def pairwise_family(m, pvals=None):
    edges = tuple(combinations(range(1, m + 1), 2))
    pvals = pvals if pvals is not None else (0.5,) * len(edges)
    return HypothesisFamily(tuple(pvals), (), edges)


def test_disjoint_set():
    ds = DisjointSet(5)
    assert ds.union(0, 1) and ds.union(3, 4) and not ds.union(1, 0)
    assert ds.blocks() == ((0, 1), (2,), (3, 4))


def test_implication_closure_three_means(example_family):
    assert implication_closure({1, 2}, example_family) == {1, 2, 3}
    assert implication_closure({1}, example_family) == {1}
    assert implication_closure(set(), example_family) == frozenset()


def test_implication_closure_disjoint_components():
    fam = HypothesisFamily((0.5, 0.5), (), ((1, 2), (3, 4)))
    assert implication_closure({1, 2}, fam) == {1, 2}


def test_implication_closure_needs_structure():
    with pytest.raises(UnsupportedError):
        implication_closure({1}, HypothesisFamily((0.5,)))


@settings(max_examples=40)
@given(st.integers(3, 5), st.integers(0, 2 ** 32 - 1))
def test_closure_operator_laws(m, seed):
    fam = pairwise_family(m)
    n = fam.n
    rng = np.random.default_rng(seed)
    structure = EqualityStructure(fam)
    for _ in range(20):
        a = int(rng.integers(0, 1 << n))
        b = a | int(rng.integers(0, 1 << n))
        ca, cb = structure.closure(a), structure.closure(b)
        assert ca & a == a  # extensive
        assert structure.closure(ca) == ca  # idempotent
        assert ca & cb == ca  # monotone
        expected = oracles.implied(fam.edges, [i for i in range(n) if (a >> i) & 1])
        assert ca == sum(1 << i for i in expected)


def test_distinct_closure_three_means(example_family):
    groups = distinct_closure(example_family)
    reps = sorted(g.indices() for g in groups.values())
    assert reps == [(1,), (1, 2, 3), (2,), (3,)]
    full = [g for g in groups.values() if g.indices() == (1, 2, 3)][0]
    assert sorted(full.members) == [0b011, 0b101, 0b110, 0b111]


def test_distinct_closure_single():
    assert len(distinct_closure(HypothesisFamily((0.2,), (), (("a", "b"),)))) == 1


@pytest.mark.parametrize("m", [3, 4, 5])
def test_distinct_count_is_bell_minus_one(m):
    fam = pairwise_family(m)
    # independent grouping: implied-edge sets from boolean reachability
    groups = {oracles.implied(fam.edges, list(c))
              for size in range(1, fam.n + 1) for c in combinations(range(fam.n), size)}
    assert len(groups) == oracles.bell(m) - 1
    assert len(distinct_closure(fam)) == oracles.bell(m) - 1
    keys = list(distinct_closure(fam))
    assert len(set(keys)) == len(keys)


def test_example_constrained_bound(example_mc_table, example_family):
    assert tau_upper(example_mc_table, {1, 3}, 0.05) == 2
    assert tau_upper_constrained(example_mc_table, {1, 3}, 0.05, example_family) == 1


def test_free_combinations_unchanged():
    fam = HypothesisFamily((0.5,) * 3, (), ((1, 2), (3, 4), (4, 5)))
    rng = np.random.default_rng(1)
    for _ in range(50):
        local = rng.uniform(size=8) ** 3
        local[0] = np.nan
        table = ClosureTable(3, local)
        for q in range(1, 8):
            for alpha in (0.05, 0.3):
                assert tau_upper_constrained(table, q, alpha, fam) == tau_upper(table, q, alpha)


def _random_pairwise_table(rng, m, kind):
    n = m * (m - 1) // 2
    p = rng.uniform(size=n) ** rng.uniform(1, 6)
    fam = pairwise_family(m, tuple(p))
    return fam, build_closure(fam, kind)


def test_tau_constrained_matches_oracle():
    rng = np.random.default_rng(21)
    for _ in range(30):
        fam, table = _random_pairwise_table(rng, 4, "fisher")
        ref = {frozenset(subset_indices(mk)): float(table.local[mk]) for mk in range(1, 64)}
        for q in rng.integers(1, 64, size=6):
            for alpha in (0.05, 0.25):
                expected = oracles.tau_upper_constrained(ref, fam.edges, subset_indices(int(q)),
                                                         alpha)
                assert tau_upper_constrained(table, int(q), alpha, fam) == expected


def test_constraints_only_tighten():
    rng = np.random.default_rng(5)
    for _ in range(30):
        fam, table = _random_pairwise_table(rng, 4, "simes")
        cadj = constrained_adjusted(table, fam)
        masks = np.arange(1, 64)
        # dedup closed testing rejects everything the free version rejects
        assert np.all(cadj[masks] <= table.adjusted[masks])
        for q in range(1, 64):
            assert (tau_upper_constrained(table, q, 0.1, fam) <= tau_upper(table, q, 0.1))


def test_deduplicated_table_agrees():
    rng = np.random.default_rng(6)
    fam, table = _random_pairwise_table(rng, 4, "fisher")
    dedup = deduplicated_table(table, fam)
    cadj = constrained_adjusted(table, fam)
    np.testing.assert_array_equal(dedup.adjusted[1:], cadj[1:])
    for q in range(1, 64):
        assert tau_upper(dedup, q, 0.1) == tau_upper_constrained(table, q, 0.1, fam)


def test_example_dedup_rejections(example_mc_table, example_family):
    cadj = constrained_adjusted(example_mc_table, example_family)
    free = adjust(example_mc_table, 0.05)
    # {1,3} is tested as H123 once duplicates are merged
    assert not free.is_rejected({1, 3})
    assert cadj[0b101] <= 0.05
