"""sparselr: sparse parameter recovery on low-rank designs with missing entries.

Completion (soft-impute with quick/accurate budgets), sparse solvers (LASSO
coordinate descent, iterative adaptive hard thresholding), three end-to-end
recovery pipelines, deviation/bound diagnostics, synthetic data generators,
and a benchmark harness with a CLI.
"""

from .bench import (
    AllFailedError,
    BenchConfig,
    BenchmarkReport,
    CvResult,
    Method,
    MethodRecord,
    cross_validate,
    default_seeds,
    rmse,
    run_benchmark,
    run_method,
    support_f1,
)
from .completion import (
    Budget,
    CompletionCache,
    CompletionConfig,
    CompletionResult,
    DegenerateInputError,
    MaskedMatrix,
    eval_objective,
    quick_complete,
    soft_impute,
)
from .diagnostics import (
    AuditParams,
    BoundAudit,
    BoundInputs,
    ErrorBounds,
    ReProbeReport,
    check_lower_re,
    deviation_lhs,
    deviation_scale,
    deviation_scale_gram,
    deviation_scale_labels,
    error_bounds,
    gap_opnorm,
    run_bound_audit,
)
from .linalg import SvdFactors, least_squares, nuclear_norm, operator_norm, svd, svt
from .pipelines import (
    EmptySupportError,
    FinalSolver,
    PipelineParams,
    RecoveryResult,
    augmented_four_step,
    embed_support,
    four_step,
    restrict_columns,
    two_step,
)
from .solvers import (
    DivergenceRiskWarning,
    ImatConfig,
    LassoConfig,
    SparseVector,
    imatcs,
    lasso,
    support,
)
from .synth import (
    ExperimentSpec,
    Instance,
    apply_bernoulli_mask,
    gen_labels,
    gen_low_rank,
    gen_sparse_beta,
    generate_instance,
    load_instance,
    save_instance,
    split_train_test,
)

__version__ = "0.1.0"

__all__ = [
    "AllFailedError",
    "AuditParams",
    "BenchConfig",
    "BenchmarkReport",
    "BoundAudit",
    "BoundInputs",
    "Budget",
    "CompletionCache",
    "CompletionConfig",
    "CompletionResult",
    "CvResult",
    "DegenerateInputError",
    "DivergenceRiskWarning",
    "EmptySupportError",
    "ErrorBounds",
    "ExperimentSpec",
    "FinalSolver",
    "ImatConfig",
    "Instance",
    "LassoConfig",
    "MaskedMatrix",
    "Method",
    "MethodRecord",
    "PipelineParams",
    "ReProbeReport",
    "RecoveryResult",
    "SparseVector",
    "SvdFactors",
    "apply_bernoulli_mask",
    "augmented_four_step",
    "check_lower_re",
    "cross_validate",
    "default_seeds",
    "deviation_lhs",
    "deviation_scale",
    "deviation_scale_gram",
    "deviation_scale_labels",
    "embed_support",
    "error_bounds",
    "eval_objective",
    "four_step",
    "gap_opnorm",
    "gen_labels",
    "gen_low_rank",
    "gen_sparse_beta",
    "generate_instance",
    "imatcs",
    "lasso",
    "least_squares",
    "load_instance",
    "nuclear_norm",
    "operator_norm",
    "quick_complete",
    "restrict_columns",
    "rmse",
    "run_bound_audit",
    "run_benchmark",
    "run_method",
    "save_instance",
    "soft_impute",
    "split_train_test",
    "support",
    "support_f1",
    "svd",
    "svt",
    "two_step",
]
