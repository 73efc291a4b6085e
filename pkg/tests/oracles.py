"""Slow, independent reference implementations used as test oracles.

Nothing here imports the code under test; everything is enumerated from the
definitions with plain Python loops and scipy distributions.
"""

import math
from itertools import combinations

import numpy as np
from scipy import stats


def all_subsets(n):
    for size in range(1, n + 1):
        yield from (frozenset(c) for c in combinations(range(1, n + 1), size))


def bonferroni(ps):
    return min(1.0, len(ps) * min(ps))


def simes(ps):
    ps = sorted(ps)
    m = len(ps)
    return min(1.0, min(m * p / (i + 1) for i, p in enumerate(ps)))


def fisher_chisq(ps):
    stat = -2.0 * sum(math.log(max(p, np.finfo(float).tiny)) for p in ps)
    return float(stats.chi2.sf(stat, 2 * len(ps)))


LOCAL = {"bonferroni": bonferroni, "simes": simes, "fisher": fisher_chisq}


def local_table(pvals, local):
    return {s: local([pvals[i - 1] for i in s]) for s in all_subsets(len(pvals))}


def adjusted(table, subset):
    subset = frozenset(subset)
    return max(p for s, p in table.items() if s >= subset)


def closed_elementary(pvals, local):
    table = local_table(pvals, local)
    return [adjusted(table, {i}) for i in range(1, len(pvals) + 1)]


def tau_upper(table, query, alpha):
    best = 0
    for s in table:
        if s <= frozenset(query) and adjusted(table, s) > alpha:
            best = max(best, len(s))
    return best


# -- equality constraints ------------------------------------------------------

def implied(edges, chosen):
    """Hypotheses implied by ``chosen`` (0-based), by boolean reachability."""
    params = sorted({p for e in edges for p in e})
    idx = {p: k for k, p in enumerate(params)}
    reach = np.eye(len(params), dtype=bool)
    for h in chosen:
        a, b = idx[edges[h][0]], idx[edges[h][1]]
        reach[a, b] = reach[b, a] = True
    for k in range(len(params)):
        reach |= reach[:, [k]] & reach[[k], :]
    return frozenset(h for h, (a, b) in enumerate(edges) if reach[idx[a], idx[b]])


def bell(m):
    row = [1]
    for _ in range(m - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


def tau_upper_constrained(table, edges, query, alpha):
    """``table`` maps frozensets of 1-based indices to local p-values."""
    n = len(edges)
    closed = [frozenset(h + 1 for h in implied(edges, [i - 1 for i in s]))
              for s in table]
    closed = {s for s in closed}
    best = 0
    for m in closed:
        supers = [c for c in closed if c >= m]
        if max(table[c] for c in supers) > alpha:
            best = max(best, len(m & frozenset(query)))
    assert all(1 <= i <= n for c in closed for i in c)
    return best


# -- permutation ----------------------------------------------------------------

TIE = 1e-9


def abs_t(a, b):
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    ssw = sum((v - ma) ** 2 for v in a) + sum((v - mb) ** 2 for v in b)
    spread = sum((v - (sum(a) + sum(b)) / (na + nb)) ** 2 for v in a + b)
    if ssw <= 1e-12 * spread:
        return 0.0 if spread == 0 else math.inf
    var = ssw / (na + nb - 2)
    return abs(ma - mb) / math.sqrt(var * (1 / na + 1 / nb))


def _ge(x, y):
    return x >= y if math.isinf(y) else x >= y * (1 - TIE)


def permutation_oracle(group_a, group_b):
    """Marginal, minP step-down and Holm adjusted p-values by enumeration."""
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    pooled = np.vstack([a, b])
    total, na, m = pooled.shape[0], a.shape[0], a.shape[1]
    arrangements = []
    for chosen in combinations(range(total), na):
        rest = [r for r in range(total) if r not in chosen]
        arrangements.append([abs_t(pooled[list(chosen), j], pooled[rest, j]) for j in range(m)])
    count = len(arrangements)

    def pval(j, t):
        return sum(_ge(arr[j], t) for arr in arrangements) / count

    marginal = [pval(j, arrangements[0][j]) for j in range(m)]
    order = sorted(range(m), key=lambda j: (marginal[j], j))
    perm_p = [[pval(j, arr[j]) for j in range(m)] for arr in arrangements]
    minp = []
    running = 0.0
    for step, j in enumerate(order):
        remaining = order[step:]
        share = sum(min(pp[r] for r in remaining) <= marginal[j] for pp in perm_p) / count
        running = max(running, share)
        minp.append((j, running))
    minp_out = [0.0] * m
    for j, v in minp:
        minp_out[j] = v
    holm = [0.0] * m
    running = 0.0
    for step, j in enumerate(order):
        running = max(running, min(1.0, (m - step) * marginal[j]))
        holm[j] = running
    return marginal, minp_out, holm
