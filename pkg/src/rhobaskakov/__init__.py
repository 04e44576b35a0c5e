"""Numerical laboratory for rho-generalized Baskakov operators."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ContractError,
    DomainError,
    NumericError,
    RhoBaskakovError,
    TruncationError,
    UsageError,
)
from .operators import OperatorSpec, TruncationPolicy, apply, apply_many, build_weight_table, weight  # noqa: E402
from .report import ExperimentReport  # noqa: E402
from .rho import RhoMap, builtin_catalog, get_rho, invert_numeric, validate_rho  # noqa: E402
