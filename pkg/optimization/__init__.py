"""Continuous proportional-fair power/bandwidth allocation and its grid oracle."""

from .pf_solver import FeasibilityResult, feasibility_check, kkt_residuals, rate, snr_for_ratio, solve
from .oracle import brute_force_oracle

__all__ = [
    'FeasibilityResult',
    'feasibility_check',
    'kkt_residuals',
    'rate',
    'snr_for_ratio',
    'solve',
    'brute_force_oracle',
]
