"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``RejectedInput`` and ``ParseError`` are
usage/input errors (2), ``ResourceLimit`` and ``ConstructionError`` are
resource or budget exhaustion (3).
"""

from __future__ import annotations


class WorkbenchError(Exception):
    pass


class RejectedInput(WorkbenchError, ValueError):
    """An argument violates an operation's precondition."""


class ParseError(RejectedInput):
    def __init__(self, message: str, position: str | None = None):
        self.position = position
        where = f" at {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class ResourceLimit(WorkbenchError, RuntimeError):
    """A configured size bound was exceeded."""


class ConstructionError(WorkbenchError, RuntimeError):
    """A builder could not finish within its budget.

    For the catalogued classes this signals a budget that is too small,
    never a mathematical impossibility.
    """


class ChainError(RejectedInput):
    """An extensible chain violates one of its invariants."""

    def __init__(self, invariant: str, where: tuple, message: str):
        self.invariant = invariant
        self.where = where
        super().__init__(f"{invariant} violated at {where}: {message}")
