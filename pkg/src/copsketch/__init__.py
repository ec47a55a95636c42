"""Streaming empirical-copula summaries with a D-vine construction on top.

The package keeps space-bounded quantile summaries over a stream of pairs
(or over every adjacent pair of a wider stream) and answers copula, marginal
quantile and marginal CDF queries with additive error guarantees, without
ever holding the stream in memory.  Exact brute-force counterparts live in
:mod:`copsketch.exact` so every approximate answer can be checked against
ground truth on streams small enough to materialise.
"""

from .copula import (
    CopulaQueryResult,
    CopulaSummary,
    FrozenCopulaEvaluator,
    SizeReport,
    SummaryFormatError,
    SummaryInvariantError,
)
from .estimators import StreamingCopula, StreamingDVine
from .exact import (
    DataBuffer,
    ExactCopulaEvaluator,
    copula_evaluator,
    empirical_cdf,
    empirical_copula,
    empirical_copula_factored,
    empirical_inverse_cdf,
    n1_exact,
)
from .gk import (
    GkTuple,
    QuantileSummary,
    RankBounds,
    ceil_rank,
    merge,
    merge_many,
    tuples_from_rank_bounds,
)
from .streamgen import (
    gaussian_pair_array,
    gaussian_pair_stream,
    gaussian_tri_array,
    gaussian_tri_stream,
    validate_correlation_triple,
)
from .vine import (
    DVineModel,
    DVineSketch,
    PairSpec,
    conditional_copula,
    conditioning_sets,
    exact_vine,
    h_integral,
    h_integral_second,
    summary_vine,
)

__version__ = "0.1.0"

__all__ = [
    "CopulaQueryResult",
    "CopulaSummary",
    "DVineModel",
    "DVineSketch",
    "DataBuffer",
    "ExactCopulaEvaluator",
    "FrozenCopulaEvaluator",
    "GkTuple",
    "PairSpec",
    "QuantileSummary",
    "RankBounds",
    "SizeReport",
    "StreamingCopula",
    "StreamingDVine",
    "SummaryFormatError",
    "SummaryInvariantError",
    "ceil_rank",
    "conditional_copula",
    "conditioning_sets",
    "copula_evaluator",
    "empirical_cdf",
    "empirical_copula",
    "empirical_copula_factored",
    "empirical_inverse_cdf",
    "exact_vine",
    "gaussian_pair_array",
    "gaussian_pair_stream",
    "gaussian_tri_array",
    "gaussian_tri_stream",
    "h_integral",
    "h_integral_second",
    "merge",
    "merge_many",
    "n1_exact",
    "summary_vine",
    "tuples_from_rank_bounds",
    "validate_correlation_triple",
    "__version__",
]
