"""Exception types shared across the package."""

from __future__ import annotations


class IcepartialError(Exception):
    """Base class for all package errors. Carries a short machine code."""

    code = "error"


class MalformedEvent(IcepartialError):
    """A goal-event row that violates the CSV contract."""

    code = "malformed_event"

    def __init__(self, row: int, reason: str):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class EmptyInput(IcepartialError):
    code = "empty_input"


class InconsistentPosition(IcepartialError):
    """Same player id tagged with different positions across events."""

    code = "inconsistent_position"


class DimensionMismatch(IcepartialError):
    code = "dimension_mismatch"


class UnknownColumn(IcepartialError):
    code = "unknown_column"


class UnknownPlayer(IcepartialError):
    code = "unknown_player"


class OverlappingLines(IcepartialError):
    """Two opposing lines share a strict subset of players."""

    code = "overlapping_lines"


class InfeasibleRoster(IcepartialError):
    """Roster cannot field a position-legal line at all."""

    code = "infeasible_roster"


class InvalidConfig(IcepartialError):
    code = "invalid_config"


class SolverFailure(IcepartialError):
    """Numerical failure inside an estimator (non-SPD system, NaN)."""

    code = "solver_failure"


class TooManyCoefficients(IcepartialError):
    """Oracle asked to enumerate more free coefficients than it supports."""

    code = "too_many_coefficients"


class RosterTooLarge(IcepartialError):
    """Enumeration oracle asked to cover an oversized roster."""

    code = "roster_too_large"


class DegenerateDesign(IcepartialError):
    """Regression input with no usable variation (constant salaries, n too small)."""

    code = "degenerate_design"
