"""Closed testing: adjusted p-values for every intersection hypothesis,
confidence bounds on the number of true nulls, logical constraints, and
Monte-Carlo and permutation local tests."""

from .bounds import TauBound, claim_adjusted_p, confidence_report, tau_upper
from .closure import (AdjustedResult, ClosureTable, HypothesisFamily, LocalTest, adjust,
                      adjusted_p, bonferroni_local_p, build_closure, fisher_statistic,
                      simes_local_p, subset_indices, subset_mask)
from .constraints import (distinct_closure, implication_closure, tau_upper_constrained)
from .errors import (CapacityError, ClosedTestError, DecompositionError, InvalidParameterError,
                     InvalidQueryError, ParseError, UnsupportedError, ZeroVarianceError)
from .montecarlo import CompositeNull, ResamplingConfig, cholesky, simulate_composite_pvalues
from .permutation import (PermutationPlan, TwoGroupDataset, closed_bonferroni_permutation,
                          permutation_marginal_pvalues, westfall_young_minp)
from .shortcuts import fisher_shortcut_independent, hommel_shortcut, holm_shortcut
from .stats import (chi_square_sf, pairwise_contrast_z, two_sample_t_pvalue,
                    two_sided_z_pvalue)

__version__ = "0.1.0"
