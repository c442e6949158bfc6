# src/calculus/typing_rules.py

"""Typing derivations: rules, validated constructors, checking, rank,
weakening, type substitution through derivations, and cut (substitution of a
derivation for an assumption)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Mapping

from frozendict import frozendict

from src.core.errors import DerivationError, ParseError, PreconditionError
from src.core.models import DerivationRecord
from src.calculus.terms import (
    App,
    Lam,
    Pair,
    ProjL,
    ProjR,
    Term,
    Var,
    alpha_eq,
    fresh_name,
)
from src.calculus.types import (
    Arrow,
    Forall,
    Prod,
    TVar,
    Type,
    fresh_tvar,
    ftv,
    is_closed,
    is_flat,
    is_well_formed,
    min_level,
    rank,
    type_eq,
    type_substitute,
    type_substitute_many,
    un_n,
)
from src.calculus.parser import format_term, format_type, parse_term, parse_type

logger = logging.getLogger(__name__)


class Rule(str, Enum):
    AX = "Ax"
    IMP_I = "ImpI"
    IMP_E = "ImpE"
    PROD_I = "ProdI"
    PROD_EL = "ProdEL"
    PROD_ER = "ProdER"
    ALL_I = "AllI"
    ALL_E_CLOSED = "AllEClosed"
    ALL_E_FLAT = "AllEFlat"


UNARY = {Rule.IMP_I, Rule.PROD_EL, Rule.PROD_ER, Rule.ALL_I, Rule.ALL_E_CLOSED, Rule.ALL_E_FLAT}
BINARY = {Rule.IMP_E, Rule.PROD_I}
ALL_E = {Rule.ALL_E_CLOSED, Rule.ALL_E_FLAT}

Context = frozendict
EMPTY: Context = frozendict()


def context(**types: Type) -> Context:
    return frozendict(types)


def ctx_eq(a: Mapping[str, Type], b: Mapping[str, Type]) -> bool:
    if a is b:
        return True
    if a.keys() != b.keys():
        return False
    return all(a[k] is b[k] or type_eq(a[k], b[k]) for k in a)


def ctx_ftv(ctx: Mapping[str, Type]) -> frozenset[TVar]:
    result: frozenset[TVar] = frozenset()
    for t in ctx.values():
        result |= ftv(t)
    return result


def context_rank(ctx: Mapping[str, Type]) -> int:
    """rk(Γ): maximum rank of the context's types, 0 when empty."""
    return max((rank(t) for t in ctx.values()), default=0)


def is_subcontext(small: Mapping[str, Type], big: Mapping[str, Type]) -> bool:
    return all(k in big and (small[k] is big[k] or type_eq(small[k], big[k])) for k in small)


@dataclass(frozen=True, slots=True, eq=False)
class Derivation:
    """A node of a typing derivation concluding ``ctx ⊢ term : type``.

    ``subst`` is the instantiating type of the ∀E rules. The ∀I eigenvariable
    is the bound variable of the conclusion.
    """

    rule: Rule
    ctx: Context
    term: Term
    type: Type
    kids: tuple["Derivation", ...] = ()
    subst: Type | None = None
    height: int = field(init=False, repr=False)
    nodes: int = field(init=False, repr=False)

    def __post_init__(self):
        if self.kids:
            object.__setattr__(self, "height", 1 + max(k.height for k in self.kids))
            object.__setattr__(self, "nodes", 1 + sum(k.nodes for k in self.kids))
        else:
            object.__setattr__(self, "height", 0)
            object.__setattr__(self, "nodes", 1)

    @property
    def eigenvariable(self) -> TVar | None:
        if self.rule == Rule.ALL_I and isinstance(self.type, Forall):
            return self.type.var
        return None


def iter_nodes(d: Derivation) -> Iterator[tuple[str, Derivation]]:
    """Preorder traversal yielding (path, node)."""
    stack = [("root", d)]
    while stack:
        path, node = stack.pop()
        yield path, node
        for i in range(len(node.kids) - 1, -1, -1):
            stack.append((f"{path}/{i}", node.kids[i]))


def _fail(code: str, message: str, **details) -> DerivationError:
    return DerivationError(message, code=code, **details)


def _same_term(a: Term, b: Term) -> bool:
    return a is b or alpha_eq(a, b)


def _check_node(d: Derivation) -> None:
    """Check one rule instance against its premises and side conditions."""
    rule = d.rule
    if not isinstance(rule, Rule):
        raise _fail("unknown-rule", f"unknown rule {rule!r}")
    arity = 0 if rule == Rule.AX else 1 if rule in UNARY else 2
    if len(d.kids) != arity:
        raise _fail("arity", f"{rule.value} expects {arity} premise(s), got {len(d.kids)}")
    if not is_well_formed(d.type):
        raise _fail("ill-formed-type", f"conclusion type {format_type(d.type)} has no level")

    if rule == Rule.AX:
        if not isinstance(d.term, Var):
            raise _fail("subject-mismatch", "axiom subject must be a variable")
        if d.term.name not in d.ctx:
            raise _fail("axiom-miss", f"variable {d.term.name} is not in the context")
        if not type_eq(d.ctx[d.term.name], d.type):
            raise _fail("axiom-type", f"context assigns {d.term.name} a different type")
        return

    kids = d.kids
    if rule == Rule.IMP_I:
        (body,) = kids
        if not (isinstance(d.term, Lam) and _same_term(d.term.body, body.term)):
            raise _fail("subject-mismatch", "→I subject must be the abstraction of the premise subject")
        x = d.term.bound
        if not isinstance(d.type, Arrow):
            raise _fail("imp-intro-type", "→I concludes an arrow type")
        if x not in body.ctx or not type_eq(body.ctx[x], d.type.dom):
            raise _fail("imp-intro-context", f"premise context must assign {x} the domain type")
        if not ctx_eq(body.ctx, d.ctx.set(x, body.ctx[x])):
            raise _fail("imp-intro-context", "premise context must extend the conclusion context by the bound variable")
        if not type_eq(body.type, d.type.cod):
            raise _fail("imp-intro-type", "→I codomain must be the premise type")
        return

    if rule == Rule.ALL_I:
        (body,) = kids
        _require_same_subject_and_ctx(d, body)
        if not isinstance(d.type, Forall):
            raise _fail("all-intro-shape", "∀I concludes a quantified type")
        alpha = d.type.var
        if not type_eq(body.type, d.type.body):
            raise _fail("all-intro-shape", "∀I body must be the premise type")
        if alpha in ctx_ftv(d.ctx):
            raise _fail("eigenvariable-free", f"eigenvariable a{alpha.level}_{alpha.name} is free in the context")
        return

    if rule in ALL_E:
        (prem,) = kids
        _require_same_subject_and_ctx(d, prem)
        sigma = d.subst
        if sigma is None:
            raise _fail("missing-subst", "∀E needs the instantiating type")
        if not isinstance(prem.type, Forall):
            raise _fail("all-elim-shape", "∀E premise must have a quantified type")
        alpha = prem.type.var
        if not is_well_formed(sigma):
            raise _fail("ill-formed-type", "instantiating type has no level")
        if rule == Rule.ALL_E_CLOSED:
            if not is_closed(sigma):
                raise _fail("not-closed", "∀E-closed instantiates with a closed type only")
            if min_level(sigma) > alpha.level:
                raise _fail("level-too-high", f"instantiating type must have level ≤ {alpha.level}")
        else:
            if alpha.level != 0:
                raise _fail("not-flat", "∀E-flat instantiates level-0 quantifiers only")
            if not is_flat(sigma):
                raise _fail("not-flat", "∀E-flat instantiates with a flat type only")
        if not type_eq(d.type, type_substitute(prem.type.body, alpha, sigma)):
            raise _fail("all-elim-type", "∀E conclusion must be the instantiated body")
        return

    if rule == Rule.IMP_E:
        fun, arg = kids
        if not (isinstance(d.term, App) and _same_term(d.term.fun, fun.term) and _same_term(d.term.arg, arg.term)):
            raise _fail("subject-mismatch", "→E subject must apply the premise subjects")
        if not (ctx_eq(d.ctx, fun.ctx) and ctx_eq(d.ctx, arg.ctx)):
            raise _fail("context-mismatch", "→E premises share the conclusion context")
        if not isinstance(fun.type, Arrow):
            raise _fail("imp-elim-shape", "→E function premise must have an arrow type")
        if not type_eq(fun.type.dom, arg.type):
            raise _fail("imp-elim-argument", "→E argument type differs from the domain")
        if not type_eq(fun.type.cod, d.type):
            raise _fail("imp-elim-type", "→E conclusion must be the codomain")
        return

    if rule == Rule.PROD_I:
        left, right = kids
        if not (isinstance(d.term, Pair) and _same_term(d.term.left, left.term) and _same_term(d.term.right, right.term)):
            raise _fail("subject-mismatch", "×I subject must pair the premise subjects")
        if not (ctx_eq(d.ctx, left.ctx) and ctx_eq(d.ctx, right.ctx)):
            raise _fail("context-mismatch", "×I premises share the conclusion context")
        if not (isinstance(d.type, Prod) and type_eq(d.type.left, left.type) and type_eq(d.type.right, right.type)):
            raise _fail("prod-intro-type", "×I concludes the product of the premise types")
        return

    (pair,) = kids
    want = ProjL if rule == Rule.PROD_EL else ProjR
    if not (isinstance(d.term, want) and _same_term(d.term.arg, pair.term)):
        raise _fail("subject-mismatch", "×E subject must project the premise subject")
    if not ctx_eq(d.ctx, pair.ctx):
        raise _fail("context-mismatch", "×E premise shares the conclusion context")
    if not isinstance(pair.type, Prod):
        raise _fail("prod-elim-shape", "×E premise must have a product type")
    side = pair.type.left if rule == Rule.PROD_EL else pair.type.right
    if not type_eq(side, d.type):
        raise _fail("prod-elim-type", "×E concludes the projected component type")


def _require_same_subject_and_ctx(d: Derivation, prem: Derivation) -> None:
    if not _same_term(d.term, prem.term):
        raise _fail("subject-mismatch", f"{d.rule.value} keeps the subject unchanged")
    if not ctx_eq(d.ctx, prem.ctx):
        raise _fail("context-mismatch", f"{d.rule.value} keeps the context unchanged")


def check_derivation(d: Derivation) -> None:
    """Raise DerivationError naming the first (preorder) bad node and its path."""
    seen_ctx: set[int] = set()
    for path, node in iter_nodes(d):
        if id(node.ctx) not in seen_ctx:
            seen_ctx.add(id(node.ctx))
            for name, t in node.ctx.items():
                if not is_well_formed(t):
                    raise _fail("ill-formed-type", f"context type of {name} has no level").at(path)
        try:
            _check_node(node)
        except DerivationError as e:
            raise e.at(path)


def is_valid(d: Derivation) -> bool:
    try:
        check_derivation(d)
    except DerivationError:
        return False
    return True


# 検証付きコンストラクタ

def _make(rule: Rule, ctx: Context, term: Term, typ: Type, kids=(), subst=None) -> Derivation:
    d = Derivation(rule, ctx, term, typ, tuple(kids), subst)
    _check_node(d)
    return d


def axiom(ctx: Context, name: str) -> Derivation:
    if name not in ctx:
        raise _fail("axiom-miss", f"variable {name} is not in the context")
    return _make(Rule.AX, ctx, Var(name), ctx[name])


def imp_intro(ctx: Context, name: str, body: Derivation) -> Derivation:
    if name not in body.ctx:
        raise _fail("imp-intro-context", f"premise context must assign {name}")
    return _make(Rule.IMP_I, ctx, Lam(name, body.term), Arrow(body.ctx[name], body.type), (body,))


def imp_elim(fun: Derivation, arg: Derivation) -> Derivation:
    if not isinstance(fun.type, Arrow):
        raise _fail("imp-elim-shape", "→E function premise must have an arrow type")
    return _make(Rule.IMP_E, fun.ctx, App(fun.term, arg.term), fun.type.cod, (fun, arg))


def prod_intro(left: Derivation, right: Derivation) -> Derivation:
    return _make(Rule.PROD_I, left.ctx, Pair(left.term, right.term), Prod(left.type, right.type), (left, right))


def prod_elim(pair: Derivation, side: str) -> Derivation:
    if not isinstance(pair.type, Prod):
        raise _fail("prod-elim-shape", "×E premise must have a product type")
    if side == "l":
        return _make(Rule.PROD_EL, pair.ctx, ProjL(pair.term), pair.type.left, (pair,))
    return _make(Rule.PROD_ER, pair.ctx, ProjR(pair.term), pair.type.right, (pair,))


def all_intro(body: Derivation, alpha: TVar) -> Derivation:
    return _make(Rule.ALL_I, body.ctx, body.term, Forall(alpha, body.type), (body,))


def all_elim(prem: Derivation, sigma: Type) -> Derivation:
    """∀E; level-0 quantifiers take the flat rule, higher ones the closed rule."""
    if not isinstance(prem.type, Forall):
        raise _fail("all-elim-shape", "∀E premise must have a quantified type")
    alpha = prem.type.var
    rule = Rule.ALL_E_FLAT if alpha.level == 0 else Rule.ALL_E_CLOSED
    typ = type_substitute(prem.type.body, alpha, sigma)
    return _make(rule, prem.ctx, prem.term, typ, (prem,), sigma)


def numeral_derivation(n: int, xi: Type, ctx: Context = EMPTY) -> Derivation:
    """⊢ λs.λz. s^n z : N(ξ), of height n + 2."""
    inner = ctx.set("s", Arrow(xi, xi)).set("z", xi)
    s = axiom(inner, "s")
    body = axiom(inner, "z")
    for _ in range(n):
        body = imp_elim(s, body)
    mid = ctx.set("s", Arrow(xi, xi))
    return imp_intro(ctx, "s", imp_intro(mid, "z", body))


# Rebuilding a derivation under a new context, term renaming and type substitution.

_HOLE = object()
Hook = Callable[[Derivation, Context], Derivation]


def _rebuild(
    d: Derivation,
    ctx: Context,
    names: Mapping[str, object] | None = None,
    tsub: Mapping[TVar, Type] | None = None,
    avoid: frozenset[str] = frozenset(),
    hook: Hook | None = None,
) -> Derivation:
    """Recompute ``d`` bottom up over new conclusions.

    ``names`` renames term variables; a name mapped to the hole marker is
    replaced by ``hook(node, ctx)``. λ-binders in ``avoid`` are primed and
    ∀I eigenvariables that clash with the new context or ``tsub`` are renamed.
    """
    names = dict(names or {})
    tsub = dict(tsub or {})
    results: list[Derivation] = []
    # (enter?, node, ctx, names, tsub, extra)
    stack: list[tuple] = [(True, d, ctx, names, tsub, None)]
    while stack:
        enter, node, c, nm, ts, extra = stack.pop()
        if enter:
            if node.rule == Rule.AX:
                target = nm.get(node.term.name, node.term.name)
                if target is _HOLE:
                    results.append(hook(node, c))
                else:
                    results.append(axiom(c, target))
                continue
            if node.rule == Rule.IMP_I:
                x = node.term.bound
                rho = type_substitute_many(node.kids[0].ctx[x], ts)
                new_x = x
                renamed = {v for v in nm.values() if isinstance(v, str)}
                if x in avoid or x in renamed:
                    taken = set(avoid) | set(c.keys()) | set(node.term.fv) | renamed
                    new_x = fresh_name(x, taken)
                inner = dict(nm)
                if new_x != x:
                    inner[x] = new_x
                else:
                    inner.pop(x, None)
                stack.append((False, node, c, nm, ts, new_x))
                stack.append((True, node.kids[0], c.set(new_x, rho), inner, ts, None))
                continue
            if node.rule == Rule.ALL_I:
                alpha = node.type.var
                inner_ts = {a: s for a, s in ts.items() if a != alpha}
                clash = ctx_ftv(c)
                for s in inner_ts.values():
                    clash |= ftv(s)
                new_alpha = alpha
                if alpha in clash:
                    new_alpha = fresh_tvar(alpha, clash | {alpha})
                    inner_ts[alpha] = new_alpha
                stack.append((False, node, c, nm, ts, new_alpha))
                stack.append((True, node.kids[0], c, nm, inner_ts, None))
                continue
            stack.append((False, node, c, nm, ts, None))
            for kid in reversed(node.kids):
                stack.append((True, kid, c, nm, ts, None))
            continue

        rule = node.rule
        if rule == Rule.IMP_I:
            results.append(imp_intro(c, extra, results.pop()))
        elif rule == Rule.ALL_I:
            results.append(all_intro(results.pop(), extra))
        elif rule in ALL_E:
            results.append(all_elim(results.pop(), type_substitute_many(node.subst, ts)))
        elif rule == Rule.IMP_E:
            arg = results.pop()
            results.append(imp_elim(results.pop(), arg))
        elif rule == Rule.PROD_I:
            right = results.pop()
            results.append(prod_intro(results.pop(), right))
        elif rule == Rule.PROD_EL:
            results.append(prod_elim(results.pop(), "l"))
        else:
            results.append(prod_elim(results.pop(), "r"))
    return results[0]


def reseat(d: Derivation, ctx: Context) -> Derivation:
    """Re-derive ``d`` in ``ctx``; ``ctx`` must agree with ``d.ctx`` on the subject's free variables."""
    if ctx_eq(d.ctx, ctx):
        return d
    return _rebuild(d, ctx)


def weaken(d: Derivation, ctx: Context) -> Derivation:
    """Weakening: from Γ ⊢ r : τ and Γ ⊆ Γ' derive Γ' ⊢ r : τ."""
    if ctx_eq(d.ctx, ctx):
        return d
    if not is_subcontext(d.ctx, ctx):
        raise PreconditionError("weakening needs a larger context", code="not-a-supercontext")
    return _rebuild(d, ctx)


def rename_free(d: Derivation, old: str, new: str) -> Derivation:
    """Γ, new:ρ ⊢ r[old:=new] : τ from Γ, old:ρ ⊢ r : τ; ``new`` must be unused in Γ."""
    if new in d.ctx:
        raise PreconditionError(f"{new} is already in the context", code="rename-clash")
    ctx = d.ctx.delete(old).set(new, d.ctx[old])
    return _rebuild(d, ctx, names={old: new})


def substitute_type_in_derivation(d: Derivation, alpha: TVar, sigma: Type) -> Derivation:
    """Γ[α:=σ] ⊢ r : τ[α:=σ] from Γ ⊢ r : τ."""
    tsub = {alpha: sigma}
    ctx = frozendict({k: type_substitute_many(t, tsub) for k, t in d.ctx.items()})
    return _rebuild(d, ctx, tsub=tsub)


def cut(body: Derivation, name: str, arg: Derivation) -> Derivation:
    """From Γ, x:ρ ⊢ s : σ and Γ ⊢ r : ρ derive Γ ⊢ s[x:=r] : σ."""
    if name not in body.ctx or not type_eq(body.ctx[name], arg.type):
        raise PreconditionError(f"cut formula for {name} does not match the argument type", code="cut-mismatch")
    if not ctx_eq(body.ctx, arg.ctx.set(name, body.ctx[name])):
        raise PreconditionError("cut premises disagree on the context", code="cut-mismatch")

    def plug(node: Derivation, here: Context) -> Derivation:
        return _rebuild(arg, here)

    return _rebuild(body, arg.ctx, names={name: _HOLE}, avoid=arg.term.fv, hook=plug)


# JSON format

def to_record(d: Derivation) -> DerivationRecord:
    return DerivationRecord(
        rule=d.rule.value,
        ctx={k: format_type(d.ctx[k], sugar=False) for k in sorted(d.ctx)},
        term=format_term(d.term, sugar=False),
        type=format_type(d.type, sugar=False),
        subst=None if d.subst is None else format_type(d.subst, sugar=False),
        kids=[to_record(k) for k in d.kids],
    )


def from_record(record: DerivationRecord) -> Derivation:
    """Build the tree as written; rule side conditions are left to check_derivation."""
    try:
        rule = Rule(record.rule)
    except ValueError as e:
        raise ParseError(f"unknown rule {record.rule}", code="derivation-syntax") from e
    return Derivation(
        rule,
        frozendict({k: parse_type(v) for k, v in record.ctx.items()}),
        parse_term(record.term),
        parse_type(record.type),
        tuple(from_record(k) for k in record.kids),
        None if record.subst is None else parse_type(record.subst),
    )


def dump_derivation(d: Derivation) -> str:
    return to_record(d).model_dump_json(indent=2, exclude_none=True)


def load_derivation(text: str) -> Derivation:
    try:
        record = DerivationRecord.model_validate_json(text)
    except ValueError as e:
        raise ParseError(f"invalid derivation document: {e}", code="derivation-syntax") from e
    return from_record(record)


def nat_shape(t: Type) -> bool:
    """True when ``t`` is N(α) for a type variable α."""
    return isinstance(un_n(t), TVar)
