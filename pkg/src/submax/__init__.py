"""Large-average and ANOVA-fit submatrices of Gaussian random matrices."""

__version__ = "0.1.0"

from .core import (
    DataMatrix,
    PlantedSignal,
    SubmatrixIndex,
    anova_residual,
    embed_signal,
    gaussian_matrix,
    submatrix_average,
)
from .errors import (
    BudgetError,
    DomainError,
    InvalidArgumentError,
    MatrixFormatError,
    NoRootError,
    SubmaxError,
)
from .search import (
    SearchConfig,
    SearchResult,
    alternating_search_once,
    exhaustive_max_average,
    exhaustive_min_anova,
    max_k_statistic,
    multi_restart_search,
)
from .thresholds import (
    IntervalBound,
    ThresholdQuery,
    anova_threshold,
    asymptotic_s,
    chi2_left_right_check,
    chi2_upper_tail_bound,
    h_of_tau,
    log_phi,
    prob_bound_anova,
    prob_bound_avg,
    rect_anova_bound,
    rect_anova_threshold,
    rect_avg_bound,
    rect_avg_threshold,
    solve_s,
    theorem1_interval,
)

__all__ = [
    "__version__",
    "DataMatrix",
    "PlantedSignal",
    "SubmatrixIndex",
    "anova_residual",
    "embed_signal",
    "gaussian_matrix",
    "submatrix_average",
    "BudgetError",
    "DomainError",
    "InvalidArgumentError",
    "MatrixFormatError",
    "NoRootError",
    "SubmaxError",
    "SearchConfig",
    "SearchResult",
    "alternating_search_once",
    "exhaustive_max_average",
    "exhaustive_min_anova",
    "max_k_statistic",
    "multi_restart_search",
    "IntervalBound",
    "ThresholdQuery",
    "anova_threshold",
    "asymptotic_s",
    "chi2_left_right_check",
    "chi2_upper_tail_bound",
    "h_of_tau",
    "log_phi",
    "prob_bound_anova",
    "prob_bound_avg",
    "rect_anova_bound",
    "rect_anova_threshold",
    "rect_avg_bound",
    "rect_avg_threshold",
    "solve_s",
    "theorem1_interval",
]
