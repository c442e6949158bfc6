# src/core/errors.py

from typing import Any


class ElemLamError(Exception):
    """Base class for domain errors. ``code`` is stable and machine readable."""

    code = "error"

    def __init__(self, message: str, *, code: str | None = None, **details: Any):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details

    def as_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {"error": self.code}
        record.update(self.details)
        record["message"] = str(self)
        return record


class ParseError(ElemLamError):
    code = "parse"


class TypeFormationError(ElemLamError):
    code = "ill-formed-type"


class DerivationError(ElemLamError):
    """A node violates its typing rule. ``path`` locates it from the root."""

    code = "derivation"

    def __init__(self, message: str, *, code: str, path: str = "root", **details: Any):
        super().__init__(message, code=code, **details)
        self.path = path
        self.details["path"] = path

    def at(self, path: str) -> "DerivationError":
        self.path = path
        self.details["path"] = path
        return self


class RankError(ElemLamError):
    code = "rank-level"


class FuelExhausted(ElemLamError):
    code = "fuel-exhausted"

    def __init__(self, message: str, *, partial: Any = None, steps: int = 0, **details: Any):
        super().__init__(message, steps=steps, **details)
        self.partial = partial
        self.steps = steps


class Undecided(ElemLamError):
    code = "undecided"


class BudgetExceeded(ElemLamError):
    code = "budget-exceeded"


class ArityError(ElemLamError):
    code = "arity"


class StdTermError(ElemLamError):
    code = "unsupported-instance"


class PreconditionError(ElemLamError):
    code = "precondition"


class BoundViolation(ElemLamError):
    code = "bound-violation"


class InvariantError(ElemLamError):
    code = "invariant"
