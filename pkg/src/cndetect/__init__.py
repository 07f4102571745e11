"""Detection of jump discontinuities in the n-th derivative of sampled data."""
from .core_approx import (
    ApproxConfig,
    ConfigError,
    CoupledFit,
    IllConditionedError,
    RankDeficiencyError,
    SampleSeries,
    SampleWindow,
    WindowOutOfBoundsError,
    center_window,
    constraint_matrix,
    nullspace_basis,
    selector_vector,
    solve_coupled,
    vandermonde,
)
from .detector import DetectionReport, PointDiagnostics, detect, estimate_noise_sigma, find_knots, scan
from .errors import (
    analytic_combined_error,
    approximation_error,
    combined_error,
    extrapolation_error,
)
from .taylor import DeltaEstimate, delta_taylor, propagate_covariance, significance

__version__ = "0.1.0"
