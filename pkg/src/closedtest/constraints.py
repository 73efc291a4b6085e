"""Restricted combinations for families of pairwise-equality hypotheses.

Hypothesis ``i`` states ``mu_a == mu_b`` for one pair of parameters.  A set
of such hypotheses implies every equality inside the connected components
of its edges, so many intersections coincide: for three means,
``H12 = H13 = H23 = H123``.  Closed testing over the distinct hypotheses
only is still valid and can give tighter bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import _check_alpha
from .closure import ClosureTable, HypothesisFamily, as_mask, superset_max, subset_mask
from .errors import InvalidParameterError, UnsupportedError


class DisjointSet:
    """Union-find over ``0 .. size - 1`` with path halving and union by size."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.size = [1] * size

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        return True

    def blocks(self) -> tuple[tuple[int, ...], ...]:
        groups: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            groups.setdefault(self.find(x), []).append(x)
        return tuple(sorted(tuple(g) for g in groups.values()))


# canonical form: parameter positions grouped into sorted blocks, sorted by
# first element, singletons included
PartitionKey = tuple[tuple[int, ...], ...]


class EqualityStructure:
    """Edges of a pairwise-equality family over numbered parameters."""

    def __init__(self, family: HypothesisFamily):
        if family.edges is None:
            raise UnsupportedError("family carries no equality structure")
        params: dict[object, int] = {}
        for a, b in family.edges:
            params.setdefault(a, len(params))
            params.setdefault(b, len(params))
        self.n = family.n
        self.params = tuple(params)
        self.edges = tuple((params[a], params[b]) for a, b in family.edges)
        self._cache: dict[int, int] = {}

    def partition(self, mask: int) -> PartitionKey:
        ds = DisjointSet(len(self.params))
        for i, (a, b) in enumerate(self.edges):
            if (mask >> i) & 1:
                ds.union(a, b)
        return ds.blocks()

    def closure(self, mask: int) -> int:
        """Mask of every hypothesis implied by the hypotheses in ``mask``."""
        hit = self._cache.get(mask)
        if hit is not None:
            return hit
        ds = DisjointSet(len(self.params))
        for i, (a, b) in enumerate(self.edges):
            if (mask >> i) & 1:
                ds.union(a, b)
        out = 0
        for i, (a, b) in enumerate(self.edges):
            if ds.find(a) == ds.find(b):
                out |= 1 << i
        self._cache[mask] = out
        return out

    def closures(self) -> np.ndarray:
        """Closure of every mask ``0 .. 2**n - 1``."""
        return np.array([self.closure(m) for m in range(1 << self.n)], dtype=np.int64)

    def closed_masks(self) -> np.ndarray:
        """All fixed points of :meth:`closure`, including the empty set."""
        cl = self.closures()
        masks = np.arange(1 << self.n, dtype=np.int64)
        return masks[cl == masks]


def implication_closure(hyps, family: HypothesisFamily) -> frozenset[int]:
    """1-based indices of all hypotheses implied by ``hyps``.

    ``hyps`` is an iterable of 1-based indices or an int mask.
    """
    structure = EqualityStructure(family)
    mask = int(hyps) if isinstance(hyps, (int, np.integer)) else subset_mask(hyps)
    if mask >> family.n:
        raise InvalidParameterError("hypothesis index out of range")
    closed = structure.closure(mask)
    return frozenset(i + 1 for i in range(family.n) if (closed >> i) & 1)


@dataclass(frozen=True)
class DistinctHypothesis:
    key: PartitionKey
    representative: int
    members: tuple[int, ...]

    def indices(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.representative.bit_length())
                     if (self.representative >> i) & 1)


def distinct_closure(family: HypothesisFamily) -> dict[PartitionKey, DistinctHypothesis]:
    """Group all nonempty intersections by the partition they induce.

    Each group is represented by its implication closure (the largest
    member), and the result is ordered by representative mask.
    """
    structure = EqualityStructure(family)
    groups: dict[int, list[int]] = {}
    for mask in range(1, 1 << family.n):
        groups.setdefault(structure.closure(mask), []).append(mask)
    out = {}
    for rep in sorted(groups):
        key = structure.partition(rep)
        out[key] = DistinctHypothesis(key, rep, tuple(groups[rep]))
    return out


def deduplicated_table(table: ClosureTable, family: HypothesisFamily) -> ClosureTable:
    """Table in which every intersection carries the local p of its closure.

    Local p-values are thereby those of the full implied hypothesis (any two
    of the three three-mean equalities are tested as ``H123``).
    """
    if table.n != family.n:
        raise InvalidParameterError("table and family sizes differ")
    cl = EqualityStructure(family).closures()
    local = np.array(table.local)
    local[1:] = local[cl[1:]]
    return ClosureTable(table.n, local, table.labels, table.test)


def constrained_adjusted(table: ClosureTable, family: HypothesisFamily) -> np.ndarray:
    """Adjusted p-values of closed testing over distinct hypotheses only.

    Entry ``mask`` is the largest local p over closed supersets of the
    closure of ``mask``.
    """
    structure = EqualityStructure(family)
    cl = structure.closures()
    vals = np.zeros(1 << table.n)
    closed = structure.closed_masks()[1:]
    vals[closed] = table.local[closed]
    adj = superset_max(vals, table.n)[cl]
    adj[0] = np.nan
    return adj


def tau_upper_constrained(table: ClosureTable, subset, alpha: float,
                          family: HypothesisFamily) -> int:
    """True-null bound in ``subset`` respecting the logical constraints.

    Maximizes ``|M & subset|`` over logically closed configurations ``M``
    that closed testing over distinct hypotheses does not reject; the empty
    configuration contributes 0.
    """
    _check_alpha(alpha)
    mask = as_mask(subset, table.n)
    structure = EqualityStructure(family)
    adj = constrained_adjusted(table, family)
    best = 0
    for m in structure.closed_masks()[1:]:
        if adj[m] > alpha:
            best = max(best, bin(int(m) & mask).count("1"))
    return best
