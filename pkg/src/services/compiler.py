# src/services/compiler.py

"""Compile elementary definitions to typed terms.

compile_lemma(e, k) gives a closed t with

    ⊢ t : η⃗ → (Nat0^(k+ℓ))ⁿ → Nat0^(k)

such that t L̄…L̄ n̄⃗ ≃βη f(n⃗) whenever L ≥ 2_r(Σn⃗). compile_top removes
the parameter by building it from the inputs at level 1 and wraps the
result in the η-expansion λn⃗sz. T n⃗ s z, giving ⊢ T : Nat1ⁿ → Nat0.
"""

import logging
from dataclasses import dataclass

from cachetools import LRUCache, cached

from src.core.config import DEFAULT_FUEL, NODE_BUDGET
from src.core.errors import ArityError, FuelExhausted, InvariantError
from src.core.models import CompileReport
from src.calculus.builders import (
    Builder,
    app,
    build_closed,
    fst,
    gen,
    inst,
    lams,
    numeral,
    pair,
    use,
    var,
)
from src.calculus.parser import format_type, numeral_literal
from src.calculus.reduction import normalize
from src.calculus.terms import Term, apps, decode_numeral, encode_numeral, eta_contract, free_vars
from src.calculus.types import A0, NAT1, Arrow, Prod, Type, N, is_closed, is_flat, is_level, nat0_tower, tower, type_eq, un_n
from src.calculus.typing_rules import Derivation, Rule, check_derivation, iter_nodes
from src.services.elemc import (
    Add,
    BProd,
    BSum,
    Comp,
    ElemExpr,
    Mul,
    Proj,
    Sub,
    Succ,
    Zero,
    arity,
    growth_bound,
    inner_growth,
    two_tower,
)
from src.services.stdterms import basic, cd_at, cd_chain, numeral_at, subt, subtraction, sum_step

logger = logging.getLogger(__name__)

LEMMA_CACHE: LRUCache = LRUCache(maxsize=256)


@dataclass(frozen=True, eq=False)
class CompiledFn:
    """A compiled definition with the bookkeeping of the construction."""

    expr: ElemExpr
    derivation: Derivation
    k: int
    ell: int
    r: int
    etas: tuple[Type, ...]

    @property
    def term(self) -> Term:
        return self.derivation.term

    @property
    def arity(self) -> int:
        return arity(self.expr)


@dataclass(frozen=True, eq=False)
class TopCompiled:
    expr: ElemExpr
    derivation: Derivation
    lemma: CompiledFn
    r: int

    @property
    def term(self) -> Term:
        return self.derivation.term

    @property
    def arity(self) -> int:
        return arity(self.expr)

    @property
    def s(self) -> int:
        return self.r // 2


def is_eta(t: Type, k: int) -> bool:
    """η ::= Nat0^(k) | N(η) | N(η×η)"""
    if type_eq(t, nat0_tower(k)):
        return True
    inner = un_n(t)
    if inner is None:
        return False
    if isinstance(inner, Prod):
        return is_eta(inner.left, k) and is_eta(inner.right, k)
    return is_eta(inner, k)


def _base_instance(k: int) -> Type | None:
    return None if k == 0 else nat0_tower(k - 1)


def _inputs(n: int, k: int, prefix: str = "n") -> list[tuple[str, Type]]:
    return [(f"{prefix}{j}", nat0_tower(k)) for j in range(n)]


@cached(LEMMA_CACHE)
def compile_lemma(e: ElemExpr, k: int) -> CompiledFn:
    n = arity(e)
    if isinstance(e, Zero):
        result = CompiledFn(e, build_closed(numeral_at(0, k)), k, 0, 0, ())
    elif isinstance(e, (Succ, Add, Mul)):
        name = {Succ: "suc", Add: "add", Mul: "mul"}[type(e)]
        result = CompiledFn(e, basic(name, _base_instance(k)).derivation, k, 0, 0, ())
    elif isinstance(e, Sub):
        if k == 0:
            d = build_closed(lams(
                [("n", nat0_tower(1)), ("c", nat0_tower(1))],
                app(use(subtraction().derivation), app(use(cd_at(0).derivation), var("n")), var("c")),
            ))
            result = CompiledFn(e, d, 0, 1, 0, ())
        else:
            result = CompiledFn(e, subt(k).derivation, k, 0, 0, (nat0_tower(k + 1),))
    elif isinstance(e, Proj):
        result = CompiledFn(e, build_closed(lams(_inputs(n, k), var(f"n{e.i}"))), k, 0, 0, ())
    elif isinstance(e, Comp):
        result = _compile_comp(e, k)
    elif isinstance(e, (BSum, BProd)):
        result = _compile_bounded(e, k)
    else:
        raise ArityError(f"not an elementary definition: {e!r}")
    logger.debug(f"compiled {type(e).__name__} at k={k}: ell={result.ell} r={result.r}")
    return result


def _compile_comp(e: Comp, k: int) -> CompiledFn:
    outer = compile_lemma(e.g, k)
    inner = [compile_lemma(h, k + outer.ell) for h in e.hs]
    ell = outer.ell + max(c.ell for c in inner)
    r = max([outer.r + inner_growth(e)] + [c.r for c in inner])
    n = arity(e)

    vs = [(f"v{j}", eta) for j, eta in enumerate(outer.etas)]
    ws = [[(f"w{i}_{j}", eta) for j, eta in enumerate(c.etas)] for i, c in enumerate(inner)]
    ns = _inputs(n, k + ell)

    def inner_call(i: int, c: CompiledFn) -> Builder:
        casted = [cd_chain(var(x), k + ell, k + outer.ell + c.ell) for x, _ in ns]
        return app(use(c.derivation), *[var(w) for w, _ in ws[i]], *casted)

    body = app(
        use(outer.derivation),
        *[var(v) for v, _ in vs],
        *[inner_call(i, c) for i, c in enumerate(inner)],
    )
    binders = vs + [w for group in ws for w in group] + ns
    etas = outer.etas + tuple(eta for c in inner for eta in c.etas)
    return CompiledFn(e, build_closed(lams(binders, body)), k, ell, r, etas)


def _compile_bounded(e: BSum | BProd, k: int) -> CompiledFn:
    g = compile_lemma(e.g, k + 1)
    mode = "sum" if isinstance(e, BSum) else "prod"
    step = sum_step(mode, g, k)
    big = k + g.ell + 1
    a_t = nat0_tower(big)
    iter_t = N(Prod(a_t, a_t))

    ws = [(f"w{j}", eta) for j, eta in enumerate(g.etas)]
    ns = [(f"n{j}", a_t) for j in range(arity(e) - 1)]
    binders = [("u", iter_t), ("v", nat0_tower(big + 1))] + ws + ns + [("m", a_t)]

    start = pair(numeral_at(0 if mode == "sum" else 1, big), numeral_at(0, big))
    p = app(use(step.derivation), var("v"), *[var(w) for w, _ in ws], *[var(x) for x, _ in ns], var("m"))
    body = cd_chain(fst(app(var("u"), p, start)), big, k)
    etas = (iter_t, nat0_tower(big + 1)) + g.etas
    r = max(g.r, growth_bound(e.g))
    return CompiledFn(e, build_closed(lams(binders, body)), k, g.ell + 1, r, etas)


def _parameter(eta: Type, s: int, ins: list[str]) -> Builder:
    """N = (…((S #2) #2)…#2) with S the sum of the inputs at η^(s)."""
    below = tower(eta, s - 1)
    if ins:
        add = use(basic("add", below).derivation)
        acc = inst(var(ins[-1]), below)
        for x in reversed(ins[:-1]):
            acc = app(add, inst(var(x), below), acc)
    else:
        acc = numeral(0, below)
    # each pair of #2 peels one N off η^(j)
    for j in range(s, 0, -1):
        inner = un_n(tower(eta, j - 1))
        if inner is None:
            raise InvariantError("parameter type is not a numeral type", eta=format_type(eta))
        acc = app(acc, numeral(2, Arrow(inner, inner)), numeral(2, inner))
    return acc


def compile_top(e: ElemExpr) -> TopCompiled:
    lemma = compile_lemma(e, 1)
    r = max(2, lemma.r + lemma.r % 2)
    s = r // 2
    n = arity(e)
    ins = [f"n{j}" for j in range(n)]
    binders = [(x, NAT1) for x in ins]

    inputs = [inst(var(x), nat0_tower(lemma.ell)) for x in ins]
    body = app(
        use(cd_at(0).derivation),
        app(use(lemma.derivation), *[_parameter(eta, s, ins) for eta in lemma.etas], *inputs),
    )
    t = build_closed(lams(binders, body))

    wrapper = lams(
        binders,
        gen(A0, lams(
            [("s", Arrow(A0, A0)), ("z", A0)],
            app(inst(app(use(t), *[var(x) for x in ins]), A0), var("s"), var("z")),
        )),
    )
    logger.info(f"compile_top: arity={n} ell={lemma.ell} r={r} etas={len(lemma.etas)}")
    return TopCompiled(e, build_closed(wrapper), lemma, r)


def audit_top(c: TopCompiled) -> None:
    """Check closedness, the derivation and the instantiation discipline."""
    if free_vars(c.term):
        raise InvariantError("compiled term is not closed", free=sorted(free_vars(c.term)))
    check_derivation(c.derivation)
    for path, node in iter_nodes(c.derivation):
        if node.rule == Rule.ALL_E_CLOSED and not (is_closed(node.subst) and is_level(node.subst, 1)):
            raise InvariantError("∀E-closed outside closed level-1 types", path=path)
        if node.rule == Rule.ALL_E_FLAT and not is_flat(node.subst):
            raise InvariantError("∀E-flat outside flat types", path=path)
    for eta in c.lemma.etas:
        if not is_eta(eta, c.lemma.k):
            raise InvariantError("parameter type outside the η grammar", eta=format_type(eta))


def _run(term: Term, fuel: int) -> Term:
    result = normalize(term, fuel, max_nodes=NODE_BUDGET)
    if result.exhausted:
        raise FuelExhausted("no normal form within fuel", partial=result.term, steps=result.steps)
    return result.term


def _check_args(n: int, args: list[int]) -> None:
    if len(args) != n:
        raise ArityError(f"expected {n} arguments, got {len(args)}", expected=n, got=len(args))


def run_compiled(c: TopCompiled, args: list[int], fuel: int = DEFAULT_FUEL) -> int:
    """Apply to numerals, normalize and decode; the normal form must be a numeral."""
    _check_args(c.arity, args)
    nf = _run(apps(c.term, *[encode_numeral(a) for a in args]), fuel)
    value = numeral_literal(nf)
    if value is None:
        raise InvariantError("normal form is not a numeral", code="non-numeral")
    return value


def default_parameter(c: CompiledFn, args: list[int]) -> int:
    """The sufficient parameter 2_r(Σn⃗); 0 when there is nothing to fill."""
    if not c.etas:
        return 0
    return two_tower(c.r, sum(args))


def run_lemma(c: CompiledFn, param: int, args: list[int], fuel: int = DEFAULT_FUEL) -> int:
    _check_args(c.arity, args)
    params = [encode_numeral(param)] * len(c.etas)
    nf = _run(apps(c.term, *params, *[encode_numeral(a) for a in args]), fuel)
    value = decode_numeral(eta_contract(nf))
    if value is None:
        raise InvariantError("normal form is not a numeral", code="non-numeral")
    return value


def compile_report(c: CompiledFn | TopCompiled) -> CompileReport:
    lemma = c.lemma if isinstance(c, TopCompiled) else c
    return CompileReport(
        arity=c.arity,
        k=lemma.k,
        ell=lemma.ell,
        r=c.r,
        s=c.s if isinstance(c, TopCompiled) else None,
        etas=[format_type(eta) for eta in lemma.etas],
        size=c.term.size,
        nodes=c.derivation.nodes,
    )
