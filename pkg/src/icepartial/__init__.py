"""Partial player effects for hockey goal data.

Builds signed indicator designs from goal-by-goal event logs, fits sparse
regularized logistic models (MAP via coordinate descent, full posteriors via
Gibbs sampling), and turns the fitted effects into decisions: player
comparisons, matchup probabilities, and salary-constrained line optimization.
"""

from icepartial.errors import (
    DegenerateDesign,
    DimensionMismatch,
    EmptyInput,
    IcepartialError,
    InconsistentPosition,
    InfeasibleRoster,
    InvalidConfig,
    MalformedEvent,
    OverlappingLines,
    RosterTooLarge,
    SolverFailure,
    TooManyCoefficients,
    UnknownColumn,
    UnknownPlayer,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateDesign",
    "DimensionMismatch",
    "EmptyInput",
    "IcepartialError",
    "InconsistentPosition",
    "InfeasibleRoster",
    "InvalidConfig",
    "MalformedEvent",
    "OverlappingLines",
    "RosterTooLarge",
    "SolverFailure",
    "TooManyCoefficients",
    "UnknownColumn",
    "UnknownPlayer",
    "__version__",
]
