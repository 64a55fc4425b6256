"""Quantile-adaptive model-free variable screening."""

from .evaluation import (
    BenchmarkReport,
    CriteriaSummary,
    ReplicationResult,
    minimum_model_size,
    proportion_selected,
    run_benchmark,
)
from .quantreg import (
    CheckLossProblem,
    FitResult,
    check_loss,
    fit_least_squares,
    fit_weighted_qr,
    sample_quantile,
)
from .screening import (
    QuantileScreener,
    ScreeningConfig,
    ScreeningResult,
    marginal_utility,
    rank_and_select,
    screen,
)
from .simulate import (
    DesignSpec,
    ExampleInstance,
    gen_example1,
    gen_example2,
    gen_example3,
    gen_example4,
    make_example,
    sample_ar1_gaussian,
)
from .spline import BSplineBasis, FeatureScaler, fit_scaler, make_basis
from .survival import (
    DegenerateNeighborhoodError,
    KaplanMeierCurve,
    KernelSpec,
    UnreachableQuantileError,
    fit_km,
    ipw_weights,
    km_quantile,
    local_ipw_weights,
    local_km,
)

__version__ = "0.1.0"

__all__ = [
    "BSplineBasis",
    "BenchmarkReport",
    "CheckLossProblem",
    "CriteriaSummary",
    "DegenerateNeighborhoodError",
    "DesignSpec",
    "ExampleInstance",
    "FeatureScaler",
    "FitResult",
    "KaplanMeierCurve",
    "KernelSpec",
    "QuantileScreener",
    "ReplicationResult",
    "ScreeningConfig",
    "ScreeningResult",
    "UnreachableQuantileError",
    "check_loss",
    "fit_km",
    "fit_least_squares",
    "fit_scaler",
    "fit_weighted_qr",
    "gen_example1",
    "gen_example2",
    "gen_example3",
    "gen_example4",
    "ipw_weights",
    "km_quantile",
    "local_ipw_weights",
    "local_km",
    "make_basis",
    "make_example",
    "marginal_utility",
    "minimum_model_size",
    "proportion_selected",
    "rank_and_select",
    "run_benchmark",
    "sample_ar1_gaussian",
    "sample_quantile",
    "screen",
]
