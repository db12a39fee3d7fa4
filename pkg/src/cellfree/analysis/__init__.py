"""Closed-form performance expressions and their Monte Carlo counterparts."""

from .coverage import (
    CoverageEstimate,
    collocated_array_size,
    converged_theta,
    cooperative_error_samples,
    coverage_cellfree_mc,
    coverage_collocated,
    coverage_collocated_mc,
    coverage_smallcell,
    critical_beta,
    device_gain_law,
    single_ap_error,
)
from .detection_error import WsApprox, detection_error_closed_form, error_probability, ws_params
from .random_matrix import DeterministicEquivalents, asymptotic_mse, deterministic_equivalents

__all__ = [
    "CoverageEstimate",
    "DeterministicEquivalents",
    "WsApprox",
    "asymptotic_mse",
    "collocated_array_size",
    "converged_theta",
    "cooperative_error_samples",
    "coverage_cellfree_mc",
    "coverage_collocated",
    "coverage_collocated_mc",
    "coverage_smallcell",
    "critical_beta",
    "detection_error_closed_form",
    "deterministic_equivalents",
    "device_gain_law",
    "error_probability",
    "single_ap_error",
    "ws_params",
]
