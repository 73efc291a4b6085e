"""Monte-Carlo null distributions for Fisher statistics of correlated z's.

Under the global null the z-statistics are ``MVN(0, R)``.  Simulated
two-sided p-values give simulated Fisher statistics ``C_I`` for every
nonempty subset ``I`` at once, and the local p-value of subset ``I`` is
``(#{C_I >= c_I} + 1) / (B + 1)``.

Replicates are drawn in fixed-size chunks.  Chunk ``k`` gets its own
Philox (counter-based) stream keyed by ``(seed, k)``, so results do not
depend on how chunks are spread across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DecompositionError, InvalidParameterError
from .stats import clamp_pvalues

#: Replicates per random stream.  Part of the reproducibility contract.
CHUNK = 1 << 16
# simulated statistics held in memory at once (rows * subsets)
_MAX_CELLS = 1 << 22


def as_correlation(matrix, tol: float = 1e-12) -> np.ndarray:
    """Validate a correlation matrix (symmetric, unit diagonal) and return it."""
    r = np.array(matrix, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] == 0:
        raise InvalidParameterError(f"correlation matrix must be square, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise InvalidParameterError("correlation matrix has non-finite entries")
    if np.max(np.abs(r - r.T)) > tol:
        raise InvalidParameterError("correlation matrix is not symmetric")
    if np.max(np.abs(np.diag(r) - 1.0)) > tol:
        raise InvalidParameterError("correlation matrix needs a unit diagonal")
    return r


def cholesky(cov, tol: float = 1e-10) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == cov`` for a PSD matrix.

    Positive definite input goes through LAPACK.  Singular PSD input (the
    pairwise contrasts of three means, for instance) falls back to an
    outer-product factorization that sets a column to zero whenever its
    pivot vanishes.

    Raises
    ------
    DecompositionError
        If the matrix is indefinite; ``err.minor`` is the order of the first
        leading principal minor that fails.
    """
    a = np.array(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError("matrix must be square")
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        raise InvalidParameterError("matrix must be symmetric")
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    d = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(np.diag(a)))))
    eps = tol * scale
    low = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        col = a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]
        if pivot > eps:
            root = np.sqrt(pivot)
            low[j, j] = root
            low[j + 1:, j] = col / root
        elif pivot >= -eps and np.all(np.abs(col) <= np.sqrt(eps)):
            continue
        else:
            raise DecompositionError(
                f"matrix is not positive semi-definite: leading minor of order {j + 1} "
                f"fails (pivot {pivot:.3g})", minor=j + 1)
    return low


@dataclass(frozen=True)
class ResamplingConfig:
    correlation: np.ndarray = field(repr=False)
    replications: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "correlation", as_correlation(self.correlation))
        if int(self.replications) != self.replications or self.replications < 1000:
            raise InvalidParameterError("replications must be an integer >= 1000")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def dim(self) -> int:
        return self.correlation.shape[0]


def _subset_sums(terms: np.ndarray) -> np.ndarray:
    # column mask holds sum of terms over the bits of mask; same addition
    # order for observed and simulated rows
    rows, d = terms.shape
    out = np.zeros((rows, 1 << d))
    for i in range(d):
        out[:, 1 << i:1 << (i + 1)] = out[:, :1 << i] + terms[:, i:i + 1]
    return out


def fisher_subset_statistics(pvals) -> np.ndarray:
    """Fisher statistic of every subset mask ``0 .. 2**d - 1`` (0 for the empty set)."""
    p = np.atleast_2d(np.asarray(pvals, dtype=float))
    out = _subset_sums(-2.0 * np.log(clamp_pvalues(p)))
    return out[0] if np.ndim(pvals) == 1 else out


def _chunk_stream(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))


def _chunk_sizes(replications: int) -> list[int]:
    full, rest = divmod(replications, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _simulated_terms(low: np.ndarray, seed: int, k: int, rows: int) -> np.ndarray:
    g = _chunk_stream(seed, k).standard_normal((rows, low.shape[0]))
    z = g @ low.T
    p = special.erfc(np.abs(z) / np.sqrt(2.0))
    return -2.0 * np.log(clamp_pvalues(p))


def _map_chunks(fn, n_chunks: int, workers: int):
    if workers <= 1 or n_chunks <= 1:
        return [fn(k) for k in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_chunks)))


def simulate_composite_pvalues(observed, cfg: ResamplingConfig, workers: int = 1) -> np.ndarray:
    """Monte-Carlo Fisher p-value for every subset of the observed p-values.

    Parameters
    ----------
    observed : array_like
        Elementary two-sided p-values, one per row of ``cfg.correlation``.
    cfg : ResamplingConfig
    workers : int
        Threads used to process chunks.  Output is identical for any value.

    Returns
    -------
    numpy.ndarray
        Length ``2**d`` array indexed by subset mask; slot 0 is NaN.
    """
    obs = np.asarray(observed, dtype=float).ravel()
    d = cfg.dim
    if obs.size != d:
        raise InvalidParameterError(
            f"{obs.size} observed p-values for a {d}x{d} correlation matrix")
    if np.any(np.isnan(obs)) or np.any(obs < 0) or np.any(obs > 1):
        raise InvalidParameterError("p-values must lie in [0, 1]")
    low = cholesky(cfg.correlation)
    c_obs = fisher_subset_statistics(obs)
    sizes = _chunk_sizes(cfg.replications)
    block = max(1, _MAX_CELLS >> d)

    def count(k):
        terms = _simulated_terms(low, cfg.seed, k, sizes[k])
        hits = np.zeros(1 << d, dtype=np.int64)
        for start in range(0, terms.shape[0], block):
            stats = _subset_sums(terms[start:start + block])
            hits += (stats >= c_obs).sum(axis=0)
        return hits

    hits = np.sum(_map_chunks(count, len(sizes), workers), axis=0)
    out = (hits + 1) / (cfg.replications + 1)
    out[0] = np.nan
    return out


class CompositeNull:
    """Stored null distribution of all subset Fisher statistics.

    Simulates once and then answers any number of observed p-vectors, which
    is what repeated-dataset studies need.  For a given config it returns
    exactly what :func:`simulate_composite_pvalues` returns.
    """

    def __init__(self, cfg: ResamplingConfig, workers: int = 1):
        self.cfg = cfg
        d = cfg.dim
        if (cfg.replications << d) > (1 << 28):
            raise InvalidParameterError("replications * 2**dim too large to store")
        low = cholesky(cfg.correlation)
        sizes = _chunk_sizes(cfg.replications)
        parts = _map_chunks(
            lambda k: _subset_sums(_simulated_terms(low, cfg.seed, k, sizes[k])),
            len(sizes), workers)
        self.sorted_stats = np.sort(np.concatenate(parts), axis=0)

    def pvalues(self, observed) -> np.ndarray:
        """Local p-values by subset mask; 2-D input gives one row per vector."""
        c_obs = np.atleast_2d(fisher_subset_statistics(observed))
        if c_obs.shape[1] != self.sorted_stats.shape[1]:
            raise InvalidParameterError("observed vector has the wrong dimension")
        b = self.cfg.replications
        out = np.empty(c_obs.shape)
        for mask in range(c_obs.shape[1]):
            below = np.searchsorted(self.sorted_stats[:, mask], c_obs[:, mask], side="left")
            out[:, mask] = (b - below + 1) / (b + 1)
        out[:, 0] = np.nan
        return out[0] if np.ndim(observed) == 1 else out
