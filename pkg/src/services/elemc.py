# src/services/elemc.py

"""Elementary recursive function definitions: the AST, its s-expression
syntax, the reference interpreter and the tower arithmetic used to size
compiled parameters.

    zero | succ | add | sub | mul | (proj i n) | (comp g h1 ... hm) | (bsum g) | (bprod g)

In ``(bsum g)`` the first argument of g is the summation index and the
compiled function takes the bound as its last argument:
bsum(g)(y⃗, x) = Σ_{i<x} g(i, y⃗).
"""

import logging
from dataclasses import dataclass
from typing import Union

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError

from src.core.config import TOWER_BIT_BUDGET
from src.core.errors import ArityError, BudgetExceeded, ParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Succ:
    pass


@dataclass(frozen=True)
class Add:
    pass


@dataclass(frozen=True)
class Sub:
    pass


@dataclass(frozen=True)
class Mul:
    pass


@dataclass(frozen=True)
class Proj:
    i: int
    n: int


@dataclass(frozen=True)
class Comp:
    g: "ElemExpr"
    hs: tuple["ElemExpr", ...]


@dataclass(frozen=True)
class BSum:
    g: "ElemExpr"


@dataclass(frozen=True)
class BProd:
    g: "ElemExpr"


ElemExpr = Union[Zero, Succ, Add, Sub, Mul, Proj, Comp, BSum, BProd]

_BASE_ARITY = {Zero: 0, Succ: 1, Add: 2, Sub: 2, Mul: 2}


def arity(e: ElemExpr) -> int:
    """Arity of ``e``; raises ArityError when the definition is ill-formed."""
    if type(e) in _BASE_ARITY:
        return _BASE_ARITY[type(e)]
    if isinstance(e, Proj):
        if not 0 <= e.i < e.n:
            raise ArityError(f"projection index {e.i} out of range for arity {e.n}", i=e.i, n=e.n)
        return e.n
    if isinstance(e, Comp):
        if not e.hs:
            raise ArityError("composition needs at least one inner function")
        if arity(e.g) != len(e.hs):
            raise ArityError(
                f"outer function takes {arity(e.g)} arguments, got {len(e.hs)}",
                expected=arity(e.g), got=len(e.hs),
            )
        inner = {arity(h) for h in e.hs}
        if len(inner) != 1:
            raise ArityError("inner functions of a composition must share their arity", arities=sorted(inner))
        return inner.pop()
    if isinstance(e, (BSum, BProd)):
        n = arity(e.g)
        if n < 1:
            raise ArityError("bounded sums and products need the index argument")
        return n
    raise ArityError(f"not an elementary definition: {e!r}")


# DSL

elem_grammar = r"""
    ?start : expr

    ?expr : "zero" -> zero
          | "succ" -> succ
          | "add" -> add
          | "sub" -> sub
          | "mul" -> mul
          | "(" "proj" INT INT ")" -> proj
          | "(" "comp" expr expr+ ")" -> comp
          | "(" "bsum" expr ")" -> bsum
          | "(" "bprod" expr ")" -> bprod

    COMMENT : /;[^\n]*/

    %import common.INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

elem_parser = Lark(elem_grammar, parser="lalr")


@v_args(inline=True)
class ElemTransformer(Transformer):
    def zero(self):
        return Zero()

    def succ(self):
        return Succ()

    def add(self):
        return Add()

    def sub(self):
        return Sub()

    def mul(self):
        return Mul()

    def proj(self, i, n):
        return Proj(int(i), int(n))

    def comp(self, g, *hs):
        return Comp(g, tuple(hs))

    def bsum(self, g):
        return BSum(g)

    def bprod(self, g):
        return BProd(g)


def parse_elem(text: str) -> ElemExpr:
    try:
        e = ElemTransformer().transform(elem_parser.parse(text))
    except LarkError as ex:
        raise ParseError(f"invalid definition: {ex}", code="elem-syntax") from ex
    arity(e)
    return e


def format_elem(e: ElemExpr) -> str:
    if isinstance(e, Proj):
        return f"(proj {e.i} {e.n})"
    if isinstance(e, Comp):
        return "(comp " + " ".join(format_elem(x) for x in (e.g, *e.hs)) + ")"
    if isinstance(e, BSum):
        return f"(bsum {format_elem(e.g)})"
    if isinstance(e, BProd):
        return f"(bprod {format_elem(e.g)})"
    return type(e).__name__.lower()


# Oracle

def eval_oracle(e: ElemExpr, args: list[int]) -> int:
    """Standard semantics over the naturals."""
    n = arity(e)
    if len(args) != n:
        raise ArityError(f"expected {n} arguments, got {len(args)}", expected=n, got=len(args))
    if isinstance(e, Zero):
        return 0
    if isinstance(e, Succ):
        return args[0] + 1
    if isinstance(e, Add):
        return args[0] + args[1]
    if isinstance(e, Sub):
        return max(args[0] - args[1], 0)
    if isinstance(e, Mul):
        return args[0] * args[1]
    if isinstance(e, Proj):
        return args[e.i]
    if isinstance(e, Comp):
        return eval_oracle(e.g, [eval_oracle(h, args) for h in e.hs])
    *ys, x = args
    if isinstance(e, BSum):
        return sum(eval_oracle(e.g, [i, *ys]) for i in range(x))
    result = 1
    for i in range(x):
        result *= eval_oracle(e.g, [i, *ys])
    return result


# Towers

def two_tower(k: int, n: int) -> int:
    """2_k(n) with 2_0(n) = n and 2_{k+1}(n) = 2^{2_k(n)}."""
    value = n
    for _ in range(k):
        if value > TOWER_BIT_BUDGET:
            raise BudgetExceeded(
                "tower exceeds the big-integer budget", k=k, n=n, bits=TOWER_BIT_BUDGET,
            )
        value = 1 << value
    return value


def tower_at_least(k: int, n: int, value: int) -> bool:
    """Decide value ≤ 2_k(n) without building the tower."""
    current = n
    for _ in range(k):
        # 2^current > value from here on
        if current >= value.bit_length():
            return True
        current = 1 << current
    return value <= current


def _arity_increment(m: int) -> int:
    """d(m): m · y ≤ 2_d(y) for every y."""
    if m <= 1:
        return 0
    d = 2
    while two_tower(d, 1) < m:
        d += 1
    return d


def growth_bound(e: ElemExpr) -> int:
    """A tower height s with eval_oracle(e, n⃗) ≤ 2_s(Σn⃗)."""
    if isinstance(e, (Zero, Proj, Add, Sub)):
        return 0
    if isinstance(e, (Succ, Mul)):
        return 1
    if isinstance(e, Comp):
        return growth_bound(e.g) + inner_growth(e)
    if isinstance(e, (BSum, BProd)):
        return growth_bound(e.g) + 2
    raise ArityError(f"not an elementary definition: {e!r}")


def inner_growth(e: Comp) -> int:
    """s with Σ h_i(n⃗) ≤ 2_s(Σn⃗) over the inner functions of a composition."""
    return max(growth_bound(h) for h in e.hs) + _arity_increment(len(e.hs))
