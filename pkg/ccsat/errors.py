"""Exception hierarchy. Library code raises these; only the CLI turns them into exit codes."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ccsat.theory import NotSimple


class CcsatError(Exception):
    """Base class for every error raised by ccsat."""


class TheoryError(CcsatError, ValueError):
    """A c-atom, clause or theory violates its construction invariants."""


class FormatError(CcsatError):
    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.line = line

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"line {self.line}: {self.message}"


class BudgetExceeded(CcsatError):
    def __init__(self, required: int, budget: int, what: str = "expansion") -> None:
        super().__init__(f"{what} needs {required} clauses, budget is {budget}")
        self.required = required
        self.budget = budget


class NotSimpleError(CcsatError):
    def __init__(self, verdict: NotSimple) -> None:
        super().__init__(f"theory is not simple: {verdict}")
        self.verdict = verdict


class ValidationFailed(CcsatError):
    """A model does not decode to a valid solution (encoder or solver bug)."""


class GeneratorError(CcsatError, ValueError):
    """Generator parameters admit no instance."""
