"""Confidence bounds on the number of true nulls inside a query subset.

Sets that closed testing does not reject are closed under taking subsets,
so the plausible values of the true-null count in ``I`` always form an
interval ``{0, ..., tau_upper}``.  Only the upper end needs reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closure import ClosureTable, as_mask, subset_indices, submasks
from .errors import CapacityError, InvalidParameterError

#: Largest query subset scanned by brute force.
MAX_QUERY = 20


def _check_alpha(alpha: float):
    if not 0 < alpha < 1:
        raise InvalidParameterError(f"alpha must be in (0, 1), got {alpha}")


def _query(table: ClosureTable, subset) -> tuple[int, np.ndarray]:
    mask = as_mask(subset, table.n)
    if bin(mask).count("1") > MAX_QUERY:
        raise CapacityError(f"query subsets are limited to {MAX_QUERY} hypotheses")
    subs = submasks(mask)[1:]
    return mask, subs


def tau_upper(table: ClosureTable, subset, alpha: float) -> int:
    """Upper (1 - alpha) confidence bound on the number of true nulls in ``subset``.

    The largest ``|J|`` over nonempty ``J`` within ``subset`` that closed
    testing fails to reject, or 0 if all of them are rejected.  Rejection
    uses the closure over the whole family.
    """
    _check_alpha(alpha)
    _, subs = _query(table, subset)
    keep = table.adjusted[subs] > alpha
    return int(table.sizes[subs][keep].max(initial=0))


def claim_adjusted_p(table: ClosureTable, subset, k: int) -> float:
    """Adjusted p-value for the claim "at least ``k`` false nulls in ``subset``".

    The claim holds at familywise level alpha iff every ``J`` within
    ``subset`` of size ``|subset| - k + 1`` is rejected.
    """
    mask, subs = _query(table, subset)
    size = bin(mask).count("1")
    if not 1 <= k <= size:
        raise InvalidParameterError(f"k must be in 1..{size}, got {k}")
    sel = subs[table.sizes[subs] == size - k + 1]
    return float(table.adjusted[sel].max())


def claim_profile(table: ClosureTable, subset) -> list[float]:
    """``claim_adjusted_p`` for ``k = 1 .. |subset|`` from one scan."""
    mask, subs = _query(table, subset)
    size = bin(mask).count("1")
    adj = table.adjusted[subs]
    sizes = table.sizes[subs]
    return [float(adj[sizes == size - k + 1].max()) for k in range(1, size + 1)]


@dataclass(frozen=True)
class TauBound:
    query: tuple[int, ...]
    alpha: float
    tau_upper: int
    false_lower: int
    claim_adjusted: tuple[tuple[int, float], ...]

    @property
    def confidence_set(self) -> tuple[int, ...]:
        return tuple(range(self.tau_upper + 1))

    def to_dict(self) -> dict:
        return {
            "subset": list(self.query),
            "alpha": self.alpha,
            "tau_upper": self.tau_upper,
            "false_lower": self.false_lower,
            "claims": [{"k": k, "p": p} for k, p in self.claim_adjusted],
        }


def confidence_report(table: ClosureTable, subset, alpha: float) -> TauBound:
    _check_alpha(alpha)
    mask = as_mask(subset, table.n)
    tau = tau_upper(table, mask, alpha)
    claims = tuple(enumerate(claim_profile(table, mask), start=1))
    return TauBound(subset_indices(mask), alpha, tau, len(claims) - tau, claims)


def claim_sentence(bound: TauBound, labels) -> str:
    """Plain-language summary of the strongest claims in ``bound``."""
    names = ", ".join(labels[i - 1] for i in bound.query)
    lines = []
    for k, p in bound.claim_adjusted:
        what = "at least one alternative" if k == 1 else f"at least {k} alternatives"
        lines.append(
            f"For familywise significance levels as low as {p:.3g}, there is {what} "
            f"among {{{names}}}.")
    return "\n".join(lines)
