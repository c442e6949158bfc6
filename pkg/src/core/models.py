# src/core/models.py

from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Any, Literal, Optional

from src.core.config import DEFAULT_FUEL, NODE_BUDGET

RULE_NAMES = {
    "Ax", "ImpI", "ImpE", "ProdI", "ProdEL", "ProdER", "AllI", "AllEClosed", "AllEFlat",
}

STD_NAMES = (
    "suc", "add", "mul", "cd", "pred", "sub", "chi0", "t0", "cu", "subt", "cu_iter", "chi0_lifted",
)

DERIVATION_SUFFIXES = (".drv", ".json")


class DerivationRecord(BaseModel):
    """One node of the JSON derivation format."""
    model_config = ConfigDict(extra="forbid")

    rule: str
    ctx: dict[str, str] = {}
    term: str
    type: str
    subst: Optional[str] = None
    kids: list["DerivationRecord"] = []

    @field_validator('rule')
    @classmethod
    def validate_rule(cls, v: str) -> str:
        if v not in RULE_NAMES:
            raise ValueError(f'unknown rule {v!r}; expected one of {", ".join(sorted(RULE_NAMES))}')
        return v


def _require_suffix(v: str, suffixes: tuple[str, ...], what: str) -> str:
    if not v.endswith(suffixes):
        raise ValueError(f'{what} must end with {" or ".join(suffixes)}')
    return v


class CheckCommand(BaseModel):
    """check: validate a derivation file."""
    path: str

    @field_validator('path')
    @classmethod
    def validate_path(cls, v: str) -> str:
        return _require_suffix(v, DERIVATION_SUFFIXES, 'derivation file')


class NormalizeCommand(BaseModel):
    path: str = Field(..., min_length=1)
    fuel: int = Field(DEFAULT_FUEL, ge=1)
    max_nodes: int = Field(NODE_BUDGET, ge=1)


class EqCheckCommand(BaseModel):
    path_a: str = Field(..., min_length=1)
    path_b: str = Field(..., min_length=1)
    eta: bool = False
    fuel: int = Field(DEFAULT_FUEL, ge=1)


class StdCommand(BaseModel):
    name: Literal[STD_NAMES]  # type: ignore[valid-type]
    k: int = Field(0, ge=0, le=6)
    ell: int = Field(0, ge=0, le=6)
    emit: Literal["term", "derivation"] = "term"


class CompileCommand(BaseModel):
    def_path: str
    emit: Literal["term", "derivation", "report"] = "term"
    k: Optional[int] = Field(None, ge=0, le=6)

    @field_validator('def_path')
    @classmethod
    def validate_def_path(cls, v: str) -> str:
        return _require_suffix(v, (".elem",), 'definition file')


class RunCommand(BaseModel):
    def_path: str
    args: list[int] = []
    fuel: int = Field(DEFAULT_FUEL, ge=1)
    via: Literal["top", "lemma"] = "lemma"
    k: int = Field(0, ge=0, le=6)
    param: Optional[int] = Field(None, ge=0)
    report: bool = False

    @field_validator('def_path')
    @classmethod
    def validate_def_path(cls, v: str) -> str:
        return _require_suffix(v, (".elem",), 'definition file')

    @field_validator('args', mode='before')
    @classmethod
    def parse_args(cls, v: Any) -> Any:
        # "5,3" -> [5, 3]
        if isinstance(v, str):
            v = v.strip()
            if not v:
                return []
            try:
                return [int(part) for part in v.split(",")]
            except ValueError:
                raise ValueError('args must be comma separated natural numbers')
        return v

    @field_validator('args')
    @classmethod
    def validate_args(cls, v: list[int]) -> list[int]:
        if any(n < 0 for n in v):
            raise ValueError('args must be natural numbers')
        return v


class CutElimCommand(BaseModel):
    deriv_path: str
    to_rank: int = Field(1, ge=1)
    report: bool = False

    @field_validator('deriv_path')
    @classmethod
    def validate_deriv_path(cls, v: str) -> str:
        return _require_suffix(v, DERIVATION_SUFFIXES, 'derivation file')


class SoundEvalCommand(BaseModel):
    deriv_path: str
    arg: int = Field(..., ge=0)
    report: bool = False

    @field_validator('deriv_path')
    @classmethod
    def validate_deriv_path(cls, v: str) -> str:
        return _require_suffix(v, DERIVATION_SUFFIXES, 'derivation file')


def render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.2f}"
    if isinstance(value, list):
        return ",".join(render_value(v) for v in value)
    return str(value)


class KeyValueRecord(BaseModel):
    """Line-oriented key=value rendering."""

    def as_line(self) -> str:
        return " ".join(f"{k}={render_value(v)}" for k, v in self.model_dump(exclude_none=True).items())


class PassRecord(KeyValueRecord):
    """Telemetry of one pipeline pass."""
    name: str
    m: int
    k: int
    size: int
    nodes: int
    rss_mb: Optional[float] = None


class CompileReport(KeyValueRecord):
    arity: int
    k: int
    ell: int
    r: int
    s: Optional[int] = None
    etas: list[str] = []
    size: int
    nodes: int
