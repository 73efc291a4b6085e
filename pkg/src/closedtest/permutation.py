"""Permutation p-values for two-group multivariate data.

All procedures share one set of label arrangements (the observed one is
always the first), so the marginal p-values, the step-down minP
adjustment and the closed Bonferroni adjustment are computed from a single
global permutation distribution.

The minP adjustment relies on subset pivotality.  Equal marginal
distributions across groups do not make the joint distributions equal
(two groups with identity and 0.5-correlated covariance are the textbook
case), in which event only :func:`closed_bonferroni_permutation` keeps
its familywise guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import CapacityError, InvalidParameterError
from .montecarlo import _chunk_sizes, _chunk_stream, _map_chunks
from .shortcuts import holm_shortcut

#: Relative slack under which two |t| values count as tied.
TIE_TOL = 1e-9


@dataclass(frozen=True)
class TwoGroupDataset:
    group_a: np.ndarray = field(repr=False)
    group_b: np.ndarray = field(repr=False)
    labels: tuple[str, ...] = ()
    group_names: tuple[str, str] = ("A", "B")

    def __post_init__(self):
        a = np.array(self.group_a, dtype=float)
        b = np.array(self.group_b, dtype=float)
        a = a[:, None] if a.ndim == 1 else a
        b = b[:, None] if b.ndim == 1 else b
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
            raise InvalidParameterError("both groups need the same number of variables")
        if a.shape[0] < 2 or b.shape[0] < 2:
            raise InvalidParameterError("each group needs at least two rows")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidParameterError("data must be finite")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "group_a", a)
        object.__setattr__(self, "group_b", b)
        labels = tuple(self.labels) or tuple(f"V{j}" for j in range(1, a.shape[1] + 1))
        if len(labels) != a.shape[1]:
            raise InvalidParameterError("one label per variable")
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return self.group_a.shape[1]

    def swapped(self) -> TwoGroupDataset:
        return TwoGroupDataset(self.group_b, self.group_a, self.labels, self.group_names[::-1])


@dataclass(frozen=True)
class PermutationPlan:
    mode: str = "exhaustive"
    count: int = 10_000
    seed: int = 0
    exhaustive_threshold: int = 20_000

    def __post_init__(self):
        if self.mode not in ("exhaustive", "monte-carlo"):
            raise InvalidParameterError(f"unknown permutation mode {self.mode!r}")
        if self.mode == "monte-carlo" and self.count < 1:
            raise InvalidParameterError("count must be positive")


def n_arrangements(n_a: int, n_b: int) -> int:
    return math.comb(n_a + n_b, n_a)


@lru_cache(maxsize=16)
def _exhaustive_indicator(total: int, n_a: int) -> np.ndarray:
    combos = np.array(list(combinations(range(total), n_a)), dtype=np.int64)
    ind = np.zeros((combos.shape[0], total))
    np.put_along_axis(ind, combos, 1.0, axis=1)
    ind.flags.writeable = False
    return ind


def _random_indicator(total: int, n_a: int, seed: int, k: int, rows: int) -> np.ndarray:
    rng = _chunk_stream(seed, k)
    perms = rng.permuted(np.tile(np.arange(total), (rows, 1)), axis=1)
    ind = np.zeros((rows, total))
    np.put_along_axis(ind, perms[:, :n_a], 1.0, axis=1)
    return ind


def arrangement_t(data: TwoGroupDataset, indicator: np.ndarray) -> np.ndarray:
    """Pooled two-sample |t| for every arrangement row of ``indicator``.

    A row marks which pooled observations go to the first group.  Zero
    pooled variance gives 0 when the data are constant and infinity
    otherwise.
    """
    x = np.vstack([data.group_a, data.group_b])
    x = x - x.mean(axis=0)
    total = x.shape[0]
    n_a = data.group_a.shape[0]
    n_b = total - n_a
    s, ss = x.sum(axis=0), (x ** 2).sum(axis=0)
    s_a = indicator @ x
    ss_a = indicator @ (x ** 2)
    s_b = s - s_a
    diff = s_a / n_a - s_b / n_b
    ssw = (ss_a - s_a ** 2 / n_a) + ((ss - ss_a) - s_b ** 2 / n_b)
    var = ssw / (total - 2)
    degenerate = ssw <= 1e-12 * ss
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.abs(diff) / np.sqrt(var * (1.0 / n_a + 1.0 / n_b))
    t = np.where(degenerate, np.where(ss > 0, np.inf, 0.0), t)
    return t


def _tie_floor(t: np.ndarray) -> np.ndarray:
    return np.where(np.isinf(t), t, t * (1.0 - TIE_TOL))


def permutation_distribution(data: TwoGroupDataset, plan: PermutationPlan,
                             workers: int = 1) -> np.ndarray:
    """|t| for each arrangement (rows) and variable (columns); row 0 is observed."""
    n_a, n_b = data.group_a.shape[0], data.group_b.shape[0]
    total = n_a + n_b
    if plan.mode == "exhaustive":
        count = n_arrangements(n_a, n_b)
        if count > plan.exhaustive_threshold:
            raise CapacityError(
                f"{count} arrangements exceed the exhaustive threshold of "
                f"{plan.exhaustive_threshold}; use a monte-carlo plan")
        return arrangement_t(data, _exhaustive_indicator(total, n_a))
    sizes = _chunk_sizes(plan.count)
    parts = _map_chunks(
        lambda k: arrangement_t(data, _random_indicator(total, n_a, plan.seed, k, sizes[k])),
        len(sizes), workers)
    identity = np.zeros((1, total))
    identity[0, :n_a] = 1.0
    return np.vstack([arrangement_t(data, identity)] + parts)


def _exceedance_counts(dist: np.ndarray, values: np.ndarray) -> np.ndarray:
    # per column: number of arrangements with |t| >= value (up to ties)
    out = np.empty(values.shape, dtype=np.int64)
    rows = dist.shape[0]
    for j in range(dist.shape[1]):
        col = np.sort(dist[:, j])
        out[..., j] = rows - np.searchsorted(col, _tie_floor(values[..., j]), side="left")
    return out


def permutation_marginal_pvalues(data: TwoGroupDataset, plan: PermutationPlan,
                                 workers: int = 1) -> np.ndarray:
    """Per-variable permutation p-values (observed arrangement included)."""
    dist = permutation_distribution(data, plan, workers)
    return _exceedance_counts(dist, dist[0]) / dist.shape[0]


def westfall_young_minp(data: TwoGroupDataset, plan: PermutationPlan,
                        workers: int = 1) -> np.ndarray:
    """Step-down minP adjusted p-values.

    Every arrangement is turned into a vector of marginal p-values against
    the same permutation distribution.  At step ``j`` of the ascending
    ordering of observed p-values, the adjusted p-value is the share of
    arrangements whose smallest p among the not-yet-stepped variables is at
    most the observed ``p_(j)``; a running maximum keeps the steps monotone.
    """
    dist = permutation_distribution(data, plan, workers)
    counts = _exceedance_counts(dist, dist)  # smaller count == smaller p
    observed = counts[0]
    order = np.argsort(observed, kind="stable")
    tail_min = np.minimum.accumulate(counts[:, order][:, ::-1], axis=1)[:, ::-1]
    hits = (tail_min <= observed[order]).sum(axis=0)
    adj_sorted = np.maximum.accumulate(hits / dist.shape[0])
    out = np.empty(data.m)
    out[order] = adj_sorted
    return out


def closed_bonferroni_permutation(data: TwoGroupDataset, plan: PermutationPlan,
                                  workers: int = 1) -> np.ndarray:
    """Holm's closure applied to the marginal permutation p-values."""
    return holm_shortcut(permutation_marginal_pvalues(data, plan, workers))
