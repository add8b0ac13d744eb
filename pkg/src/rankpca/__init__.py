"""Rank-based sparse principal component analysis.

Estimates the latent correlation matrix of non-Gaussian data through
Spearman's rho and the rank-to-correlation sine transform, extracts sparse
leading eigenvectors with truncated power iteration (plus PMD and SPCA
alternates), projects estimates onto the PSD cone under the max norm, and
ships a replicated simulation harness with support-recovery metrics.
"""

from ._kernels import BACKEND as kernel_backend
from .errors import (
    AllZeroSolution,
    ConfigError,
    DegenerateColumn,
    DegenerateIterate,
    InvalidData,
    InvalidDimension,
    InvalidInput,
    InvalidRadius,
    InvalidVector,
    NotConverged,
    NotPsd,
    NumericalError,
    RankPCAError,
)
from .evaluate import (
    ExperimentConfig,
    ExperimentResult,
    RateCheckResult,
    ReplicationSummary,
    RocCurve,
    SupportMetrics,
    default_grid,
    oracle_delta,
    rate_check,
    replicate_experiment,
    roc_curve,
    sin_angle,
    support_metrics,
)
from .psd import PsdProjectionResult, clip_eigenvalues, project_psd_maxnorm, scaled_covariance
from .ranks import (
    CorrelationEstimate,
    CovarianceEstimate,
    MarginalMoments,
    compute_ranks,
    marginal_moments,
    normal_scores,
    pearson_correlation,
    rank_matrix,
    sine_transform,
    spearman_correlation,
    spearman_covariance,
    spearman_rho_matrix,
)
from .simulate import (
    ContaminationSpec,
    SyntheticModel,
    TransformSet,
    contaminate,
    contaminate_with_rng,
    inverse_transform,
    rng_from,
    sample_gaussian_copula,
    sample_latent,
    synthesize_model,
)
from .solvers import (
    PowerIterationResult,
    SolverOptions,
    SparseEigenResult,
    deflate,
    find_truncation_level,
    pmd_rank_one,
    power_init,
    resolve_init,
    shift_to_psd,
    solve_component,
    spca_leading,
    top_m_eigenvectors,
    truncate,
    truncated_power,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "kernel_backend",
    # errors
    "RankPCAError",
    "InvalidData",
    "DegenerateColumn",
    "InvalidDimension",
    "InvalidRadius",
    "InvalidVector",
    "InvalidInput",
    "DegenerateIterate",
    "AllZeroSolution",
    "NumericalError",
    "NotPsd",
    "NotConverged",
    "ConfigError",
    # rank statistics
    "MarginalMoments",
    "CorrelationEstimate",
    "CovarianceEstimate",
    "compute_ranks",
    "rank_matrix",
    "marginal_moments",
    "spearman_rho_matrix",
    "sine_transform",
    "spearman_correlation",
    "spearman_covariance",
    "pearson_correlation",
    "normal_scores",
    # PSD projection
    "PsdProjectionResult",
    "clip_eigenvalues",
    "project_psd_maxnorm",
    "scaled_covariance",
    # solvers
    "SolverOptions",
    "SparseEigenResult",
    "PowerIterationResult",
    "truncate",
    "find_truncation_level",
    "truncated_power",
    "pmd_rank_one",
    "spca_leading",
    "deflate",
    "top_m_eigenvectors",
    "power_init",
    "resolve_init",
    "shift_to_psd",
    "solve_component",
    # simulation
    "SyntheticModel",
    "TransformSet",
    "ContaminationSpec",
    "synthesize_model",
    "inverse_transform",
    "sample_gaussian_copula",
    "sample_latent",
    "contaminate",
    "contaminate_with_rng",
    "rng_from",
    # evaluation
    "SupportMetrics",
    "RocCurve",
    "ReplicationSummary",
    "ExperimentConfig",
    "ExperimentResult",
    "RateCheckResult",
    "sin_angle",
    "support_metrics",
    "roc_curve",
    "oracle_delta",
    "default_grid",
    "replicate_experiment",
    "rate_check",
]
