# src/calculus/parser.py

"""Concrete syntax for terms and types, and their printers.

Terms:  x | \\x y. t | t t | <t, t> | fst t | snd t | #n | (t)
Types:  a0_b | T -> T | T * T | forall a1_b. T | Nat0 | Nat1 | N(T) | (T)
"""

import logging

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError

from src.core.errors import ParseError
from src.calculus.terms import (
    App,
    Lam,
    Pair,
    ProjL,
    ProjR,
    Term,
    Var,
    encode_numeral,
    lams,
)
from src.calculus.types import (
    NAT0,
    NAT1,
    Arrow,
    Forall,
    Prod,
    TVar,
    Type,
    N,
    type_eq,
    un_n,
)

logger = logging.getLogger(__name__)

term_grammar = r"""
    ?start : term

    ?term : lam
          | app
          | app lam -> app

    lam : ("\\" | "λ") IDENT+ "." term

    ?app : app operand -> app
         | operand

    ?operand : atom
             | "fst" operand -> fst
             | "snd" operand -> snd

    ?atom : IDENT -> var
          | "#" INT -> numeral
          | "<" term "," term ">" -> pair
          | "(" term ")"

    IDENT : /[A-Za-z_][A-Za-z0-9_']*/

    %import common.INT
    %import common.WS
    %ignore WS
"""

type_grammar = r"""
    ?start : type

    ?type : forall
          | arrow

    forall : "forall" TYVAR "." type

    ?arrow : prod "->" type -> arrow
           | prod

    ?prod : prod "*" atom -> prod
          | atom

    ?atom : TYVAR -> tyvar
          | "Nat0" -> nat0
          | "Nat1" -> nat1
          | "N" "(" type ")" -> ntype
          | "(" type ")"

    TYVAR : /a[0-9]+_[A-Za-z0-9_']+/

    %import common.WS
    %ignore WS
"""

term_parser = Lark(term_grammar, parser="lalr")
type_parser = Lark(type_grammar, parser="lalr")


@v_args(inline=True)
class TermTransformer(Transformer):
    def var(self, name):
        return Var(str(name))

    def numeral(self, n):
        return encode_numeral(int(n))

    def pair(self, left, right):
        return Pair(left, right)

    def fst(self, arg):
        return ProjL(arg)

    def snd(self, arg):
        return ProjR(arg)

    def app(self, fun, arg):
        return App(fun, arg)

    def lam(self, *children):
        *names, body = children
        return lams([str(n) for n in names], body)


def _tyvar(token: str) -> TVar:
    level, _, name = token[1:].partition("_")
    return TVar(name, int(level))


@v_args(inline=True)
class TypeTransformer(Transformer):
    def tyvar(self, token):
        return _tyvar(str(token))

    def nat0(self):
        return NAT0

    def nat1(self):
        return NAT1

    def ntype(self, inner):
        return N(inner)

    def arrow(self, dom, cod):
        return Arrow(dom, cod)

    def prod(self, left, right):
        return Prod(left, right)

    def forall(self, token, body):
        return Forall(_tyvar(str(token)), body)


def parse_term(text: str) -> Term:
    try:
        return TermTransformer().transform(term_parser.parse(text))
    except LarkError as e:
        raise ParseError(f"invalid term: {e}", code="term-syntax") from e


def parse_type(text: str) -> Type:
    try:
        return TypeTransformer().transform(type_parser.parse(text))
    except LarkError as e:
        raise ParseError(f"invalid type: {e}", code="type-syntax") from e


def numeral_literal(t: Term) -> int | None:
    """n when ``t`` is literally λf.λx.f^n x (two binders)."""
    if not (isinstance(t, Lam) and isinstance(t.body, Lam)):
        return None
    f, x = t.bound, t.body.bound
    body = t.body.body
    if f == x:
        return 0 if isinstance(body, Var) and body.name == x else None
    n = 0
    while isinstance(body, App) and isinstance(body.fun, Var) and body.fun.name == f:
        body = body.arg
        n += 1
    if isinstance(body, Var) and body.name == x:
        return n
    return None


_TOP, _FUN, _ARG, _OPERAND = range(4)


def format_term(t: Term, sugar: bool = True) -> str:
    """Print a term; with ``sugar`` numerals are written #n."""
    parts: list[str] = []
    stack: list = [(t, _TOP)]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        node, ctx = item
        if sugar:
            n = numeral_literal(node)
            if n is not None:
                parts.append(f"#{n}")
                continue
        if isinstance(node, Var):
            parts.append(node.name)
        elif isinstance(node, Lam):
            names = [node.bound]
            body = node.body
            while isinstance(body, Lam) and not (sugar and numeral_literal(body) is not None):
                names.append(body.bound)
                body = body.body
            paren = ctx != _TOP
            if paren:
                stack.append(")")
            stack.append((body, _TOP))
            stack.append("\\" + " ".join(names) + ". ")
            if paren:
                parts.append("(")
        elif isinstance(node, App):
            paren = ctx in (_ARG, _OPERAND)
            if paren:
                stack.append(")")
            stack.append((node.arg, _ARG))
            stack.append(" ")
            stack.append((node.fun, _FUN))
            if paren:
                parts.append("(")
        elif isinstance(node, (ProjL, ProjR)):
            paren = ctx == _ARG
            if paren:
                stack.append(")")
            stack.append((node.arg, _OPERAND))
            parts.append("(" if paren else "")
            parts.append("fst " if isinstance(node, ProjL) else "snd ")
        else:
            stack.append(">")
            stack.append((node.right, _TOP))
            stack.append(", ")
            stack.append((node.left, _TOP))
            parts.append("<")
    return "".join(parts)


def format_tvar(a: TVar) -> str:
    return f"a{a.level}_{a.name}"


def format_type(t: Type, sugar: bool = True) -> str:
    if sugar:
        if type_eq(t, NAT0):
            return "Nat0"
        if type_eq(t, NAT1):
            return "Nat1"
        inner = un_n(t)
        if inner is not None:
            return f"N({format_type(inner, sugar)})"
    if isinstance(t, TVar):
        return format_tvar(t)
    if isinstance(t, Forall):
        return f"forall {format_tvar(t.var)}. {format_type(t.body, sugar)}"
    if isinstance(t, Arrow):
        dom = format_type(t.dom, sugar)
        if _is_compound(t.dom, sugar, (Arrow, Forall)):
            dom = f"({dom})"
        return f"{dom} -> {format_type(t.cod, sugar)}"
    left = format_type(t.left, sugar)
    right = format_type(t.right, sugar)
    if _is_compound(t.left, sugar, (Arrow, Forall)):
        left = f"({left})"
    if _is_compound(t.right, sugar, (Arrow, Forall, Prod)):
        right = f"({right})"
    return f"{left} * {right}"


def _is_compound(t: Type, sugar: bool, kinds: tuple) -> bool:
    if sugar and (type_eq(t, NAT0) or type_eq(t, NAT1) or un_n(t) is not None):
        return False
    return isinstance(t, kinds)
