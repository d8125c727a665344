"""Largest-eigenvalue laws of the generalized Cauchy random matrix ensemble."""

from .errors import (
    DegenerateChain,
    DomainError,
    GCyEError,
    IllConditioned,
    NoConvergence,
    NumericalError,
    PoleError,
    TruncationWarning,
)
from .fredholm import (
    DerivativeBundle,
    GapResult,
    Quadrature,
    build_quadrature,
    cdf_largest,
    gap_derivatives,
    gap_log_derivative,
    gap_nystrom,
    gap_series,
)
from .kernels import (
    EnsembleConfig,
    KernelHandle,
    SParam,
    correlation_matrix,
    eval_pq_limit,
    eval_pq_scaled,
    kernel_eval,
    limit_pq_recurrence_residual,
    phi_psi_recurrence_residual,
)
from .painleve import (
    ResidualReport,
    SigmaSample,
    ThetaSample,
    rescaled_expansion_check,
    sigma_from_gap,
    sigma_pvi_residual,
    theta_from_gap,
    theta_pv_residual,
)
from .ratelab import RateTable, cdf_rate, derivative_bound_scan, kernel_rate
from .sampler import ChainConfig, SampleBatch, ks_distance, log_density, run_chain
from .specfun import hyp1f1, hyp2f1_terminating, log_gamma, pochhammer
from .unitary import (
    cayley_angle,
    correspondence_check,
    correspondence_ratio,
    cot_half,
    kernel_u_finite,
    kernel_u_limit,
    smallest_angle_survival,
)

__version__ = "0.1.0"
