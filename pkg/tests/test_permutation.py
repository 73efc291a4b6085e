from itertools import combinations

import numpy as np
import pytest

import oracles
from closedtest.errors import CapacityError, InvalidParameterError
from closedtest.permutation import (PermutationPlan, TwoGroupDataset,
                                    closed_bonferroni_permutation, permutation_distribution,
                                    permutation_marginal_pvalues, westfall_young_minp)

EXHAUSTIVE = PermutationPlan("exhaustive")


def tiny_dataset(seed, n_a=3, n_b=3, m=3, shift=(1.5, 0.0, 0.8)):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_a, m))
    b = rng.normal(size=(n_b, m)) + np.asarray(shift[:m])
    return TwoGroupDataset(a, b)


def test_identical_groups():
    x = np.array([[1.0, 2.0], [3.0, 5.0], [4.0, 4.0]])
    data = TwoGroupDataset(x, x.copy())
    for fn in (permutation_marginal_pvalues, westfall_young_minp, closed_bonferroni_permutation):
        assert np.all(fn(data, EXHAUSTIVE) == 1.0)


def test_two_by_two_binary():
    data = TwoGroupDataset([[0.0], [0.0]], [[1.0], [1.0]])
    assert permutation_marginal_pvalues(data, EXHAUSTIVE)[0] == pytest.approx(2 / 6)


def test_monte_carlo_close_to_exhaustive():
    data = TwoGroupDataset([[0.0], [0.0]], [[1.0], [1.0]])
    b = 10_000
    p = permutation_marginal_pvalues(data, PermutationPlan("monte-carlo", b, seed=4))[0]
    assert abs(p - 1 / 3) < 3 * np.sqrt((1 / 3) * (2 / 3) / b)


def test_monte_carlo_includes_identity():
    data = tiny_dataset(0)
    dist = permutation_distribution(data, PermutationPlan("monte-carlo", 500, seed=1))
    assert dist.shape == (501, 3)
    np.testing.assert_allclose(dist[0], permutation_distribution(data, EXHAUSTIVE)[0])


def test_monte_carlo_deterministic_across_workers():
    data = tiny_dataset(1, 6, 7)
    plan = PermutationPlan("monte-carlo", 150_000, seed=9)
    one = westfall_young_minp(data, plan, workers=1)
    many = westfall_young_minp(data, plan, workers=3)
    assert one.tobytes() == many.tobytes()


@pytest.mark.parametrize("seed", range(8))
def test_exhaustive_matches_oracle(seed):
    data = tiny_dataset(seed)
    marginal, minp, holm = oracles.permutation_oracle(data.group_a, data.group_b)
    np.testing.assert_array_equal(permutation_marginal_pvalues(data, EXHAUSTIVE), marginal)
    np.testing.assert_array_equal(westfall_young_minp(data, EXHAUSTIVE), minp)
    np.testing.assert_array_equal(closed_bonferroni_permutation(data, EXHAUSTIVE), holm)


def test_exhaustive_pvalues_on_grid():
    data = tiny_dataset(3, 4, 3)
    p = permutation_marginal_pvalues(data, EXHAUSTIVE)
    assert np.all(p > 0)
    for v in p:
        assert abs(v * 35 - round(v * 35)) < 1e-12


def test_single_variable_minp_is_marginal():
    data = tiny_dataset(4, m=1)
    np.testing.assert_array_equal(westfall_young_minp(data, EXHAUSTIVE),
                                  permutation_marginal_pvalues(data, EXHAUSTIVE))
    np.testing.assert_array_equal(closed_bonferroni_permutation(data, EXHAUSTIVE),
                                  permutation_marginal_pvalues(data, EXHAUSTIVE))


def test_duplicate_columns_no_penalty():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 1))
    b = rng.normal(size=(4, 1)) + 2
    data = TwoGroupDataset(np.hstack([a, a, a]), np.hstack([b, b, b]))
    np.testing.assert_array_equal(westfall_young_minp(data, EXHAUSTIVE),
                                  permutation_marginal_pvalues(data, EXHAUSTIVE))


@pytest.mark.parametrize("seed", range(20))
def test_minp_dominates_bonferroni(seed):
    data = tiny_dataset(100 + seed, 4, 4)
    minp = westfall_young_minp(data, EXHAUSTIVE)
    marginal = permutation_marginal_pvalues(data, EXHAUSTIVE)
    assert np.all(closed_bonferroni_permutation(data, EXHAUSTIVE) >= minp - 1e-15)
    assert np.all(minp >= marginal - 1e-15)
    order = np.argsort(marginal, kind="stable")
    assert np.all(np.diff(minp[order]) >= 0)


@pytest.mark.parametrize("seed", range(5))
def test_label_swap_invariance(seed):
    data = tiny_dataset(seed, 3, 4)
    for fn in (permutation_marginal_pvalues, westfall_young_minp, closed_bonferroni_permutation):
        np.testing.assert_array_equal(fn(data, EXHAUSTIVE), fn(data.swapped(), EXHAUSTIVE))


def test_marginal_pvalue_uniform_on_grid_two_by_two():
    # every labelling of the same pooled values is equally likely under the null
    rng = np.random.default_rng(17)
    pooled = rng.normal(size=(4, 2))
    counts = {}
    for chosen in combinations(range(4), 2):
        rest = [r for r in range(4) if r not in chosen]
        data = TwoGroupDataset(pooled[list(chosen)], pooled[rest])
        for v in permutation_marginal_pvalues(data, EXHAUSTIVE):
            key = round(v * 6)
            counts[key] = counts.get(key, 0) + 1
    # two variables x six labellings, p in {2/6, 4/6, 6/6} twice each per variable
    assert counts == {2: 4, 4: 4, 6: 4}


def test_capacity_and_validation():
    data = tiny_dataset(0, 12, 12, m=1)
    with pytest.raises(CapacityError, match="monte-carlo"):
        permutation_marginal_pvalues(data, EXHAUSTIVE)
    with pytest.raises(InvalidParameterError):
        PermutationPlan("bootstrap")
    with pytest.raises(InvalidParameterError):
        TwoGroupDataset(np.zeros((1, 2)), np.zeros((3, 2)))
    with pytest.raises(InvalidParameterError):
        TwoGroupDataset(np.zeros((3, 2)), np.zeros((3, 3)))
