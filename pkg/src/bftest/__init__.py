"""Bilinear-form tests for (non)linear parameter hypotheses under extremum
estimation, an invariance-corrected variant, a numeric auditor for the
reparametrization conditions behind the correction, and a Monte Carlo
harness for empirical-size studies.
"""

from .chisq import chisq_critical_value, chisq_survival
from .estimators import FitOptions, FitResult, fit_restricted, fit_unrestricted
from .exceptions import (
    BFTestError,
    ConfigurationError,
    DimensionMismatchError,
    DomainViolationError,
    NegativeStatisticWarning,
    NotConvergedError,
    RankDeficientError,
    SingularKError,
    SingularMatrixError,
)
from .linalg import greville_identity_residual, pinv_full_row_rank, solve_symmetric
from .models import (
    ExtremumModel,
    LinearGaussianModel,
    estimate_error_variance,
    fd_check_hessian,
    fd_check_score,
)
from .montecarlo import (
    ALL_STATISTICS,
    CellCounts,
    CellResult,
    SimulationConfig,
    SizeTable,
    generate_dataset,
    run_cell,
    run_experiment,
)
from .restrictions import (
    ConditionCheck,
    ConditionReport,
    Reparametrization,
    Restriction,
    audit_conditions,
    gregory_veall_pair,
    identity_reparametrization,
    linear_restriction,
    power_pair,
    power_reparametrization,
    power_restriction,
)
from .statistics import (
    TestMatrices,
    TestReport,
    bilinear_form,
    bilinear_form_corrected,
    distance_metric,
    lagrange_multiplier,
    statistic_matrices,
    wald,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_STATISTICS",
    "BFTestError",
    "CellCounts",
    "CellResult",
    "ConditionCheck",
    "ConditionReport",
    "ConfigurationError",
    "DimensionMismatchError",
    "DomainViolationError",
    "ExtremumModel",
    "FitOptions",
    "FitResult",
    "LinearGaussianModel",
    "NegativeStatisticWarning",
    "NotConvergedError",
    "RankDeficientError",
    "Reparametrization",
    "Restriction",
    "SimulationConfig",
    "SingularKError",
    "SingularMatrixError",
    "SizeTable",
    "TestMatrices",
    "TestReport",
    "audit_conditions",
    "bilinear_form",
    "bilinear_form_corrected",
    "chisq_critical_value",
    "chisq_survival",
    "distance_metric",
    "estimate_error_variance",
    "fd_check_hessian",
    "fd_check_score",
    "fit_restricted",
    "fit_unrestricted",
    "generate_dataset",
    "gregory_veall_pair",
    "greville_identity_residual",
    "identity_reparametrization",
    "lagrange_multiplier",
    "linear_restriction",
    "pinv_full_row_rank",
    "power_pair",
    "power_reparametrization",
    "power_restriction",
    "run_cell",
    "run_experiment",
    "solve_symmetric",
    "statistic_matrices",
    "wald",
]
