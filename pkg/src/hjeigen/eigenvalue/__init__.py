from .checks import (
    Comparison,
    CoerciveLimitResult,
    ClarkeSupVerdict,
    MonotonicityVerdict,
    clarke_sup_equality_check,
    coercive_limit,
    compare_all,
    monotonicity_check,
)
from .minimax import minimax_1d
from .pde import pde_eigenvalue
from .report import EigenvalueReport, rough_bounds
from .smooth import minimax_smooth

__all__ = [
    "ClarkeSupVerdict",
    "CoerciveLimitResult",
    "Comparison",
    "EigenvalueReport",
    "MonotonicityVerdict",
    "clarke_sup_equality_check",
    "coercive_limit",
    "compare_all",
    "minimax_1d",
    "minimax_smooth",
    "monotonicity_check",
    "pde_eigenvalue",
    "rough_bounds",
]
