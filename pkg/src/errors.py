"""Error types raised by the toolkit, each carrying its CLI exit code."""

from typing import Any, Dict, List, Optional


class StackelbergError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1
    kind = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form written to error.json."""
        payload: Dict[str, Any] = {
            "error": self.kind,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        if self.details:
            payload["details"] = self.details
        return payload


class ConfigurationError(StackelbergError):
    """Invalid inputs detected before or while setting up a solve."""

    exit_code = 2
    kind = "configuration"


class ScenarioError(ConfigurationError):
    """
    A scenario file failed schema or semantic validation.

    Holds every problem found, each prefixed with its field path.
    """

    kind = "validation"

    def __init__(self, errors: List[str], path: Optional[str] = None):
        summary = f"{len(errors)} validation error(s)"
        if path:
            summary += f" in {path}"
        super().__init__(summary)
        self.errors = list(errors)
        self.path = path

    def __str__(self) -> str:
        return self.message + ":\n" + "\n".join(f"  - {e}" for e in self.errors)

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload["errors"] = self.errors
        if self.path:
            payload["path"] = self.path
        return payload


class MeshError(ConfigurationError):
    """Malformed or non-conforming triangulation."""

    kind = "mesh"


class DomainError(StackelbergError, ValueError):
    """Density argument outside [0, rho_max]."""

    exit_code = 2
    kind = "domain"


class NumericalFailure(StackelbergError):
    """A solver produced non-finite values."""

    exit_code = 3
    kind = "numerical_failure"

    def __init__(self, message: str, step: Optional[int] = None, **details: Any):
        if step is not None:
            details["step"] = step
        super().__init__(message, **details)
        self.step = step


# exit code for a run that finished with a best-so-far result after its budget ran out
BUDGET_EXHAUSTED_EXIT = 4
