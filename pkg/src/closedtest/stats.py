"""Elementary test statistics and the distribution functions behind them.

Everything here is a pure function of its arguments.  Functions accept
scalars or array-likes; scalar input gives a Python ``float`` back.
"""

import math

import numpy as np
from scipy import special
from scipy import stats as sps

from .errors import InvalidParameterError, ZeroVarianceError

#: Floor applied to p-values before taking logarithms.
P_FLOOR = float(np.finfo(float).tiny)

_SQRT2 = math.sqrt(2.0)
# rows * terms per block in the even-df survival function
_BLOCK = 1 << 21


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def clamp_pvalues(p):
    """Clip p-values into ``[P_FLOOR, 1]`` so that ``log(p)`` is finite."""
    return np.clip(np.asarray(p, dtype=float), P_FLOOR, 1.0)


def pairwise_contrast_z(y_i: float, y_j: float, sigma: float = 1.0) -> float:
    """z-statistic for the difference of two independent N(mu, sigma^2) draws."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    return (y_i - y_j) / (sigma * _SQRT2)


def two_sided_z_pvalue(z):
    """Two-sided standard normal p-value, ``2 * (1 - Phi(|z|))``.

    Evaluated as ``erfc(|z| / sqrt(2))`` which keeps full relative precision
    deep in the tail.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidParameterError("z must be finite")
    return _out(special.erfc(np.abs(z) / _SQRT2))


def _even_df_sf(x: np.ndarray, k: int) -> np.ndarray:
    # exp(-h) * sum_{j<k} h^j / j!  with h = x/2, summed in log space
    h = x / 2.0
    out = np.ones_like(h)
    pos = h > 0
    if not pos.any():
        return out
    hp = h[pos]
    j = np.arange(k, dtype=float)
    lgam = special.gammaln(j + 1.0)
    logh = np.log(hp)
    res = np.empty_like(hp)
    step = max(1, _BLOCK // k)
    for start in range(0, hp.size, step):
        sl = slice(start, start + step)
        terms = logh[sl, None] * j[None, :] - lgam[None, :]
        res[sl] = np.exp(special.logsumexp(terms, axis=1) - hp[sl])
    out[pos] = np.minimum(res, 1.0)
    return out


def chi_square_sf(x, df: int):
    """Survival function of the chi-square distribution.

    For even ``df = 2k`` the closed form
    ``exp(-x/2) * sum_{j<k} (x/2)^j / j!`` is used.  Odd ``df`` falls back to
    the regularized upper incomplete gamma function.

    Parameters
    ----------
    x : float or array_like
        Nonnegative statistic value(s).
    df : int
        Positive degrees of freedom.
    """
    if int(df) != df or df < 1:
        raise InvalidParameterError(f"df must be a positive integer, got {df}")
    df = int(df)
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise InvalidParameterError("chi-square statistic must be nonnegative")
    flat = arr.reshape(-1)
    if df % 2 == 0:
        res = _even_df_sf(flat, df // 2)
    else:
        res = special.gammaincc(df / 2.0, flat / 2.0)
    return _out(res.reshape(arr.shape))


def _pooled_parts(group_a, group_b):
    a = np.asarray(group_a, dtype=float).ravel()
    b = np.asarray(group_b, dtype=float).ravel()
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise InvalidParameterError("each group needs at least two observations")
    # centering guards the sums of squares against a large common offset
    shift = np.concatenate([a, b]).mean()
    a = a - shift
    b = b - shift
    diff = a.mean() - b.mean()
    ssw = ((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum()
    return diff, ssw / (na + nb - 2), na, nb


def pooled_t(group_a, group_b) -> float:
    """Equal-variance two-sample t statistic.

    Returns 0 for 0/0 (no mean difference, no spread) and a signed infinity
    when the groups differ but the pooled variance is zero.
    """
    diff, var, na, nb = _pooled_parts(group_a, group_b)
    if var <= 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return float(diff / math.sqrt(var * (1.0 / na + 1.0 / nb)))


def two_sample_t_pvalue(group_a, group_b) -> float:
    """Two-sided pooled-variance t-test p-value with ``n_a + n_b - 2`` df."""
    diff, var, na, nb = _pooled_parts(group_a, group_b)
    if var <= 0:
        raise ZeroVarianceError("pooled variance is zero")
    t = diff / math.sqrt(var * (1.0 / na + 1.0 / nb))
    return float(min(1.0, 2.0 * sps.t.sf(abs(t), na + nb - 2)))
