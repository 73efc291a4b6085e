"""Closed testing over the full lattice of intersection hypotheses.

Subsets of the hypotheses ``1..n`` are encoded as integer bit masks: bit
``i - 1`` is set when hypothesis ``i`` belongs to the subset.  A
:class:`ClosureTable` stores one local p-value per nonempty mask in a flat
array of length ``2**n`` (slot 0, the empty set, holds NaN).

Public functions that take a subset accept either an ``int`` mask or an
iterable of 1-based hypothesis indices.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CapacityError, InvalidParameterError, InvalidQueryError
from .stats import chi_square_sf, clamp_pvalues

#: Largest family that :func:`build_closure` enumerates by default.
DEFAULT_MAX_N = 24

LOCAL_TESTS = ("bonferroni", "simes", "fisher-chisq", "fisher-montecarlo", "external")


# -- subset helpers ---------------------------------------------------------

def subset_mask(indices: Iterable[int]) -> int:
    """Bit mask for a collection of 1-based hypothesis indices."""
    mask = 0
    for i in indices:
        i = int(i)
        if i < 1:
            raise InvalidQueryError(f"hypothesis indices are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def subset_indices(mask: int) -> tuple[int, ...]:
    """1-based hypothesis indices contained in ``mask``, ascending."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def as_mask(subset, n: int) -> int:
    mask = int(subset) if isinstance(subset, (int, np.integer)) else subset_mask(subset)
    if mask <= 0 or mask >= (1 << n):
        raise InvalidQueryError(f"subset {subset!r} is empty or outside 1..{n}")
    return mask


def popcounts(n: int) -> np.ndarray:
    """Subset sizes for every mask ``0 .. 2**n - 1``."""
    pc = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pc[1 << i:1 << (i + 1)] = pc[:1 << i] + 1
    return pc


def submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` (including 0 and ``mask``) as an int64 array."""
    out = np.zeros(1, dtype=np.int64)
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            out = np.concatenate([out, out | (1 << bit)])
        bit += 1
    return np.sort(out)


def superset_max(values: np.ndarray, n: int) -> np.ndarray:
    """For every mask, the max of ``values`` over all of its supersets."""
    out = np.array(values, dtype=float, copy=True)
    cube = out.reshape((2,) * n) if n else out
    # axis 0 of the reshaped cube is the most significant bit
    for axis in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[axis], hi[axis] = slice(0, 1), slice(1, 2)
        np.maximum(cube[tuple(lo)], cube[tuple(hi)], out=cube[tuple(lo)])
    return out


# -- local tests on a single intersection -----------------------------------

def fisher_statistic(pvals: Sequence[float]) -> float:
    """Fisher combination statistic ``-2 * sum(log p)``.

    Zero p-values are floored at the smallest positive normal double.
    """
    p = np.asarray(pvals, dtype=float)
    if p.size == 0:
        raise InvalidParameterError("need at least one p-value")
    _check_p(p)
    return float(-2.0 * np.log(clamp_pvalues(p)).sum())


def bonferroni_local_p(pvals: Sequence[float]) -> float:
    p = np.asarray(pvals, dtype=float)
    if p.size == 0:
        raise InvalidParameterError("need at least one p-value")
    _check_p(p)
    return float(min(1.0, p.size * p.min()))


def simes_local_p(pvals: Sequence[float]) -> float:
    """Simes intersection p-value ``min_i m * p_(i) / i``."""
    p = np.asarray(pvals, dtype=float)
    if p.size == 0:
        raise InvalidParameterError("need at least one p-value")
    _check_p(p)
    m = p.size
    ps = np.sort(p, kind="stable")
    return float(min(1.0, (m * ps / np.arange(1, m + 1)).min()))


def fisher_chisq_local_p(pvals: Sequence[float]) -> float:
    return chi_square_sf(fisher_statistic(pvals), 2 * len(pvals))


def _check_p(p: np.ndarray):
    if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidParameterError("p-values must lie in [0, 1]")


# -- families, tests and tables ---------------------------------------------

@dataclass(frozen=True)
class HypothesisFamily:
    """Elementary p-values plus labels and optional equality structure.

    ``edges`` gives, for each hypothesis, the pair of parameters it declares
    equal; it switches on the logical-constraint machinery in
    :mod:`closedtest.constraints`.
    """

    pvalues: tuple[float, ...]
    labels: tuple[str, ...] = ()
    edges: tuple[tuple[object, object], ...] | None = None

    def __post_init__(self):
        p = tuple(float(v) for v in self.pvalues)
        if not p:
            raise InvalidParameterError("family needs at least one hypothesis")
        _check_p(np.asarray(p))
        object.__setattr__(self, "pvalues", p)
        labels = tuple(str(x) for x in self.labels) or tuple(
            f"H{i}" for i in range(1, len(p) + 1))
        if len(labels) != len(p):
            raise InvalidParameterError("labels and p-values differ in length")
        object.__setattr__(self, "labels", labels)
        if self.edges is not None:
            edges = tuple((a, b) for a, b in self.edges)
            if len(edges) != len(p):
                raise InvalidParameterError("need one edge per hypothesis")
            if any(a == b for a, b in edges):
                raise InvalidParameterError("an equality hypothesis needs two distinct parameters")
            object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return len(self.pvalues)


@dataclass(frozen=True)
class LocalTest:
    """Which test to apply to each intersection hypothesis.

    ``fisher-montecarlo`` needs ``config`` (a
    :class:`closedtest.montecarlo.ResamplingConfig`); ``external`` needs
    ``source``, either a callable taking a frozenset of 1-based indices or a
    mapping keyed by such frozensets (or int masks).
    """

    kind: str
    config: object = None
    source: Callable | Mapping | None = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in LOCAL_TESTS:
            raise InvalidParameterError(
                f"unknown local test {self.kind!r}; expected one of {LOCAL_TESTS}")
        if self.kind == "fisher-montecarlo" and self.config is None:
            raise InvalidParameterError("fisher-montecarlo needs a ResamplingConfig")
        if self.kind == "external" and self.source is None:
            raise InvalidParameterError("external local test needs a source")

    @classmethod
    def of(cls, kind: str, **kwargs) -> LocalTest:
        aliases = {"fisher": "fisher-chisq", "fisher-mc": "fisher-montecarlo"}
        return cls(aliases.get(kind, kind), **kwargs)


@dataclass(frozen=True, eq=False)
class ClosureTable:
    """Local p-values for all nonempty intersections of ``n`` hypotheses.

    The underlying array is read-only; the closure-adjusted p-values are
    computed on first access and cached.
    """

    n: int
    local: np.ndarray = field(repr=False)
    labels: tuple[str, ...] = ()
    test: str = "external"

    def __post_init__(self):
        arr = np.array(self.local, dtype=float)
        if arr.shape != (1 << self.n,):
            raise InvalidParameterError(f"expected {1 << self.n} entries, got {arr.shape}")
        body = arr[1:]
        if np.any(np.isnan(body)) or np.any(body < 0) or np.any(body > 1):
            raise InvalidParameterError("local p-values must lie in [0, 1]")
        arr[0] = np.nan
        arr.flags.writeable = False
        object.__setattr__(self, "local", arr)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"H{i}" for i in range(1, self.n + 1)))

    def local_p(self, subset) -> float:
        return float(self.local[as_mask(subset, self.n)])

    @cached_property
    def adjusted(self) -> np.ndarray:
        adj = superset_max(np.nan_to_num(self.local, nan=0.0), self.n)
        adj[0] = np.nan
        adj.flags.writeable = False
        return adj

    @cached_property
    def sizes(self) -> np.ndarray:
        pc = popcounts(self.n)
        pc.flags.writeable = False
        return pc

    def masks(self) -> range:
        return range(1, 1 << self.n)


def _all_subsets_bonferroni(p: np.ndarray, pc: np.ndarray) -> np.ndarray:
    n = p.size
    minp = np.full(1 << n, np.inf)
    for i in range(n):
        minp[1 << i:1 << (i + 1)] = np.minimum(minp[:1 << i], p[i])
    minp[0] = 1.0
    return np.minimum(1.0, pc * minp)


def _all_subsets_simes(p: np.ndarray, pc: np.ndarray) -> np.ndarray:
    n = p.size
    masks = np.arange(1 << n, dtype=np.int64)
    best = np.full(1 << n, np.inf)
    rank = np.zeros(1 << n, dtype=np.int64)
    # visit hypotheses in ascending p, ties by index
    for i in np.argsort(p, kind="stable"):
        has = ((masks >> i) & 1).astype(bool)
        rank += has
        cand = np.where(has, pc * p[i] / np.maximum(rank, 1), np.inf)
        np.minimum(best, cand, out=best)
    return np.minimum(1.0, best)


def _all_subsets_fisher(p: np.ndarray, pc: np.ndarray) -> np.ndarray:
    n = p.size
    terms = -2.0 * np.log(clamp_pvalues(p))
    stat = np.zeros(1 << n)
    for i in range(n):
        stat[1 << i:1 << (i + 1)] = stat[:1 << i] + terms[i]
    out = np.ones(1 << n)
    for m in range(1, n + 1):
        sel = pc == m
        out[sel] = chi_square_sf(stat[sel], 2 * m)
    return out


def _external(source, n: int) -> np.ndarray:
    out = np.full(1 << n, np.nan)
    for mask in range(1, 1 << n):
        key = frozenset(subset_indices(mask))
        if callable(source):
            val = source(key)
        else:
            val = source[key] if key in source else source.get(mask)
        if val is None:
            raise InvalidQueryError(f"external source has no p-value for {sorted(key)}")
        out[mask] = float(val)
    return out


def build_closure(family: HypothesisFamily | Sequence[float], test: LocalTest | str,
                  max_n: int = DEFAULT_MAX_N) -> ClosureTable:
    """Evaluate ``test`` on every nonempty intersection of ``family``.

    Raises
    ------
    CapacityError
        If the family has more than ``max_n`` hypotheses.  The elementary
        adjusted p-values for Bonferroni, Simes and chi-square Fisher local
        tests are still available through :mod:`closedtest.shortcuts`.
    """
    if not isinstance(family, HypothesisFamily):
        family = HypothesisFamily(tuple(family))
    if isinstance(test, str):
        test = LocalTest.of(test)
    n = family.n
    if n > max_n:
        raise CapacityError(
            f"{n} hypotheses exceed the enumeration limit of {max_n}; use the "
            "holm/hommel/fisher shortcuts for elementary adjusted p-values or raise max_n")
    p = np.asarray(family.pvalues)
    pc = popcounts(n)
    if test.kind == "bonferroni":
        local = _all_subsets_bonferroni(p, pc)
    elif test.kind == "simes":
        local = _all_subsets_simes(p, pc)
    elif test.kind == "fisher-chisq":
        local = _all_subsets_fisher(p, pc)
    elif test.kind == "fisher-montecarlo":
        from .montecarlo import simulate_composite_pvalues

        local = simulate_composite_pvalues(p, test.config, workers=test.workers)
    else:
        local = _external(test.source, n)
    return ClosureTable(n, local, family.labels, test.kind)


# -- adjusted p-values --------------------------------------------------------

def adjusted_p(table: ClosureTable, subset) -> float:
    """Closure-adjusted p-value: the largest local p over all supersets."""
    return float(table.adjusted[as_mask(subset, table.n)])


def adjusted_p_direct(table: ClosureTable, subset) -> float:
    """Same as :func:`adjusted_p` but by scanning supersets explicitly."""
    mask = as_mask(subset, table.n)
    full = (1 << table.n) - 1
    rest = full & ~mask
    return float(max(table.local[mask | s] for s in submasks(rest)))


@dataclass(frozen=True, eq=False)
class AdjustedResult:
    """Adjusted p-values for every intersection, optionally with decisions."""

    table: ClosureTable
    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise InvalidParameterError(f"alpha must be in (0, 1), got {self.alpha}")

    @property
    def adjusted(self) -> np.ndarray:
        return self.table.adjusted

    @cached_property
    def rejected(self) -> np.ndarray | None:
        if self.alpha is None:
            return None
        rej = self.table.adjusted <= self.alpha
        rej[0] = False
        return rej

    def p(self, subset) -> float:
        return adjusted_p(self.table, subset)

    def is_rejected(self, subset) -> bool:
        if self.alpha is None:
            raise InvalidParameterError("no alpha was given")
        return bool(self.rejected[as_mask(subset, self.table.n)])

    def elementary(self) -> np.ndarray:
        """Adjusted p-values of the ``n`` elementary hypotheses."""
        return np.array([self.table.adjusted[1 << i] for i in range(self.table.n)])


def adjust(table: ClosureTable, alpha: float | None = None) -> AdjustedResult:
    return AdjustedResult(table, alpha)


def closed_elementary(pvals: Sequence[float], test: str) -> np.ndarray:
    """Elementary adjusted p-values by full enumeration of the closure."""
    table = build_closure(HypothesisFamily(tuple(pvals)), test)
    return adjust(table).elementary()
