"""Closure shortcuts for elementary adjusted p-values.

Each function returns exactly what full enumeration of the closure would
give for its local test, without building the ``2**n - 1`` table.
"""

import numpy as np

from .errors import InvalidParameterError
from .stats import chi_square_sf, clamp_pvalues


def _as_pvals(pvals) -> np.ndarray:
    p = np.asarray(pvals, dtype=float).ravel()
    if p.size == 0:
        raise InvalidParameterError("need at least one p-value")
    if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidParameterError("p-values must lie in [0, 1]")
    return p


def holm_shortcut(pvals) -> np.ndarray:
    """Holm step-down adjusted p-values (closed Bonferroni), O(n log n)."""
    p = _as_pvals(pvals)
    n = p.size
    order = np.argsort(p, kind="stable")
    steps = (n - np.arange(n)) * p[order]
    adj = np.empty(n)
    adj[order] = np.minimum(1.0, np.maximum.accumulate(steps))
    return adj


def hommel_shortcut(pvals) -> np.ndarray:
    """Hommel adjusted p-values (closed Simes), O(n^2).

    For each size ``m`` of the largest intersection still to be considered,
    the Simes p-value of the worst intersection containing a hypothesis is
    either ``m * p`` (hypothesis joined with the ``m - 1`` largest p-values)
    or the Simes value of those ``m - 1`` largest p-values on their own.
    """
    p = _as_pvals(pvals)
    n = p.size
    order = np.argsort(p, kind="stable")
    ps = p[order]
    i = np.arange(1, n + 1)
    q = np.full(n, (n * ps / i).min())
    adj = q.copy()
    for m in range(n - 1, 1, -1):
        # the m - 1 largest p-values, Simes-weighted within a set of size m
        tail = ps[n - m + 1:]
        q1 = (m * tail / np.arange(2, m + 1)).min()
        head = n - m + 1
        q[:head] = np.minimum(m * ps[:head], q1)
        q[head:] = q[head - 1]
        np.maximum(adj, q, out=adj)
    adj = np.minimum(1.0, np.maximum(adj, ps))
    out = np.empty(n)
    out[order] = adj
    return out


def fisher_shortcut_independent(pvals) -> np.ndarray:
    """Closed Fisher combination (chi-square reference) adjusted p-values.

    Among intersections of size ``m`` that contain hypothesis ``i``, the local
    p-value is largest when ``i`` is joined with the ``m - 1`` other
    hypotheses having the largest p-values.  Prefix sums over the p-values
    in descending order give every candidate in O(1), so the whole vector
    costs ``n^2`` survival-function evaluations.
    """
    p = _as_pvals(pvals)
    n = p.size
    order = np.argsort(-p, kind="stable")
    terms = -2.0 * np.log(clamp_pvalues(p[order]))
    prefix = np.concatenate([[0.0], np.cumsum(terms)])
    adj_sorted = np.zeros(n)
    for m in range(1, n + 1):
        # positions < m are already among the m largest: one shared candidate
        stat = np.concatenate([[prefix[m]], terms[m:] + prefix[m - 1]])
        sf = chi_square_sf(stat, 2 * m)
        np.maximum(adj_sorted[:m], sf[0], out=adj_sorted[:m])
        np.maximum(adj_sorted[m:], sf[1:], out=adj_sorted[m:])
    out = np.empty(n)
    out[order] = adj_sorted
    return out
