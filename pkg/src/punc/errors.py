"""Exception types and the structured violation record used by validators."""

from __future__ import annotations

from dataclasses import dataclass


class PuncError(ValueError):
    """Base class for every error raised by this package."""


class DimensionError(PuncError):
    """Shape mismatch, non-square input or a matrix exceeding the size cap."""


class NotHermitianError(PuncError):
    pass


class ConvergenceError(PuncError):
    pass


class StructureError(PuncError):
    """Malformed tree or DAG: duplicate variables, unknown ids, cycles, wrong patterns."""


class AssignmentError(PuncError):
    """Partial or out-of-range assignment, or a query that does not partition the variables."""


class ConversionError(PuncError):
    """The input circuit does not have the structure a conversion requires."""


class NormalizerError(PuncError):
    pass


class StateSpaceError(PuncError):
    pass


class ParseError(PuncError):
    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass(frozen=True)
class Violation:
    """One failed invariant. ``where`` names the node/unit/element concerned."""

    kind: str
    where: str
    residual: float = 0.0
    message: str = ""

    def __str__(self) -> str:
        text = f"{self.kind} at {self.where}"
        if self.residual:
            text += f" (residual {self.residual:.3g})"
        if self.message:
            text += f": {self.message}"
        return text


class InvalidCircuitError(PuncError):
    def __init__(self, violations: list[Violation], what: str = "circuit"):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid {what}: {lines}{more}")


def require_valid(violations: list[Violation], what: str = "circuit") -> None:
    if violations:
        raise InvalidCircuitError(violations, what)
