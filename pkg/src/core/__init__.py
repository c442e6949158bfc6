# src/core/__init__.py

from src.core.config import *
from src.core.errors import (
    ElemLamError,
    ParseError,
    TypeFormationError,
    DerivationError,
    RankError,
    FuelExhausted,
    Undecided,
    BudgetExceeded,
    ArityError,
    StdTermError,
    PreconditionError,
    BoundViolation,
    InvariantError,
)
