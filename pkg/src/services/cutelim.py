# src/services/cutelim.py

"""Height and cut-rank annotated derivations and the normalization
pipeline built on them.

A RankedDerivation is a derivation of level ≤ 1 types together with a
height bound m and a cut-rank bound k: every →E node applies an argument
of rank < k, and the tree is no higher than m. The passes here lower the
cut-rank by inversion and cut, reach quasinormal form at rank 1 and
finish with pair projections only, which is how a term of type
Nat1 → Nat0 is evaluated in elementary space.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import psutil

from src.core.config import AUDIT_FUEL, NODE_BUDGET
from src.core.errors import (
    BoundViolation,
    BudgetExceeded,
    DerivationError,
    InvariantError,
    PreconditionError,
)
from src.core.models import PassRecord
from src.calculus.reduction import is_normal, normalize, step
from src.calculus.terms import (
    App,
    Lam,
    Pair,
    ProjL,
    ProjR,
    Term,
    decode_numeral,
    encode_numeral,
    eta_contract,
    fresh_name,
    is_lambda_free,
    leaf_count,
    substitute,
)
from src.calculus.types import NAT0, NAT1, Arrow, TVar, Type, is_flat, rank, type_eq
from src.calculus.typing_rules import (
    ALL_E,
    Context,
    Derivation,
    Rule,
    all_elim,
    all_intro,
    axiom,
    check_derivation,
    context_rank,
    cut as cut_derivation,
    imp_elim,
    imp_intro,
    iter_nodes,
    numeral_derivation,
    prod_elim,
    prod_intro,
    rename_free,
    substitute_type_in_derivation,
    weaken,
)
from src.services.elemc import tower_at_least

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RankedDerivation:
    """Γ ⊢ᵐₖ r : τ"""

    derivation: Derivation
    m: int
    k: int

    @property
    def term(self) -> Term:
        return self.derivation.term

    @property
    def ctx(self) -> Context:
        return self.derivation.ctx

    @property
    def type(self) -> Type:
        return self.derivation.type


def _node_types(d: Derivation):
    yield d.type
    yield from d.ctx.values()
    if d.subst is not None:
        yield d.subst


def cut_rank(d: Derivation) -> int:
    """Least k with rank(σ) < k for every →E argument type σ."""
    k = 0
    for _, node in iter_nodes(d):
        if node.rule == Rule.IMP_E:
            k = max(k, rank(node.kids[1].type) + 1)
    return k


def annotate(d: Derivation) -> RankedDerivation:
    """Least height and cut-rank; raises RankError on a level-2 type."""
    for _, node in iter_nodes(d):
        for t in _node_types(node):
            rank(t)
    return RankedDerivation(d, d.height, cut_rank(d))


def check_ranked(rd: RankedDerivation) -> None:
    d = rd.derivation
    check_derivation(d)
    for path, node in iter_nodes(d):
        for t in _node_types(node):
            rank(t)
        if node.rule == Rule.IMP_E:
            r = rank(node.kids[1].type)
            if r >= rd.k:
                raise DerivationError(
                    f"cut of rank {r} not allowed at cut-rank {rd.k}", code="cut-too-big", path=path,
                )
    if d.height > rd.m:
        raise DerivationError(f"height {d.height} exceeds the bound {rd.m}", code="height-too-big")
    if leaf_count(d.term) > 2 ** rd.m:
        raise BoundViolation("subject larger than 2^m", m=rd.m, size=leaf_count(d.term))


def weaken_ranked(rd: RankedDerivation, ctx: Context, m: int, k: int) -> RankedDerivation:
    if m < rd.m or k < rd.k:
        raise PreconditionError("weakening cannot lower height or cut-rank", m=m, k=k)
    for t in ctx.values():
        rank(t)
    return RankedDerivation(weaken(rd.derivation, ctx), m, k)


def subst_flat_ranked(rd: RankedDerivation, alpha: TVar, sigma: Type) -> RankedDerivation:
    """Γ[α:=σ] ⊢ᵐₖ t : τ[α:=σ] for a flat σ; ranks are unchanged."""
    if alpha.level != 0 or not is_flat(sigma):
        raise PreconditionError("only flat types replace level-0 variables", code="not-flat")
    return RankedDerivation(substitute_type_in_derivation(rd.derivation, alpha, sigma), rd.m, rd.k)


# Bottom-up rewriting

def _with_kids(d: Derivation, kids: list[Derivation]) -> Derivation:
    """Same conclusion over new premises; the subject follows the premises."""
    rule = d.rule
    if rule == Rule.IMP_I:
        term: Term = Lam(d.term.bound, kids[0].term)
    elif rule == Rule.IMP_E:
        term = App(kids[0].term, kids[1].term)
    elif rule == Rule.PROD_I:
        term = Pair(kids[0].term, kids[1].term)
    elif rule == Rule.PROD_EL:
        term = ProjL(kids[0].term)
    elif rule == Rule.PROD_ER:
        term = ProjR(kids[0].term)
    elif rule == Rule.AX:
        return d
    else:
        term = kids[0].term
    if all(a is b for a, b in zip(kids, d.kids)):
        return d
    return Derivation(rule, d.ctx, term, d.type, tuple(kids), d.subst)


def _map_up(d: Derivation, fn: Callable[[Derivation], Derivation]) -> Derivation:
    results: list[Derivation] = []
    stack: list[tuple[bool, Derivation]] = [(True, d)]
    while stack:
        enter, node = stack.pop()
        if enter:
            stack.append((False, node))
            for kid in reversed(node.kids):
                stack.append((True, kid))
            continue
        n = len(node.kids)
        kids = results[len(results) - n:] if n else []
        if n:
            del results[len(results) - n:]
        results.append(fn(_with_kids(node, kids)))
    return results[0]


def _is_quantifier_redex(d: Derivation) -> bool:
    return d.rule in ALL_E and d.kids[0].rule == Rule.ALL_I


def _is_pair_redex(d: Derivation) -> bool:
    return d.rule in (Rule.PROD_EL, Rule.PROD_ER) and d.kids[0].rule == Rule.PROD_I


def _contract_quantifier(d: Derivation) -> Derivation:
    intro = d.kids[0]
    return substitute_type_in_derivation(intro.kids[0], intro.type.var, d.subst)


def _contract_pair(d: Derivation) -> Derivation:
    return d.kids[0].kids[0 if d.rule == Rule.PROD_EL else 1]


def _remove_quantifier_redexes(d: Derivation) -> Derivation:
    return _map_up(d, lambda n: _contract_quantifier(n) if _is_quantifier_redex(n) else n)


def remove_alli_alles(rd: RankedDerivation) -> RankedDerivation:
    """No ∀I directly under a ∀E; the conclusion stays, m and k do not grow."""
    return RankedDerivation(_remove_quantifier_redexes(rd.derivation), rd.m, rd.k)


def _preprocess(d: Derivation) -> Derivation:
    def fix(n: Derivation) -> Derivation:
        if _is_quantifier_redex(n):
            return _contract_quantifier(n)
        if _is_pair_redex(n):
            return _contract_pair(n)
        return n
    return _map_up(d, fix)


def preprocess(rd: RankedDerivation) -> RankedDerivation:
    """Remove ∀I-∀E redexes and contract projections of pairs."""
    return RankedDerivation(_preprocess(rd.derivation), rd.m, rd.k)


def is_preprocessed(d: Derivation) -> bool:
    return not any(_is_quantifier_redex(n) or _is_pair_redex(n) for _, n in iter_nodes(d))


def cut(body: RankedDerivation, name: str, arg: RankedDerivation) -> RankedDerivation:
    """Γ ⊢^{m+m'}ₖ s[x:=r] : σ from Γ,x:ρ ⊢ᵐₖ s : σ and Γ ⊢^{m'}ₖ r : ρ."""
    if body.k != arg.k:
        raise PreconditionError("cut premises must share the cut-rank", code="cut-mismatch")
    d = cut_derivation(body.derivation, name, arg.derivation)
    return RankedDerivation(d, body.m + arg.m, body.k)


# Inversion

def _spine(d: Derivation) -> tuple[Derivation, list[Derivation]]:
    """Head derivation and the elimination nodes above it, innermost first."""
    elims: list[Derivation] = []
    node = d
    while node.rule in (Rule.IMP_E, Rule.PROD_EL, Rule.PROD_ER) or node.rule in ALL_E:
        elims.append(node)
        node = node.kids[0]
    elims.reverse()
    return node, elims


def _binders(t: Term) -> set[str]:
    names: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Lam):
            names.add(u.bound)
            stack.append(u.body)
        elif isinstance(u, App):
            stack += [u.fun, u.arg]
        elif isinstance(u, Pair):
            stack += [u.left, u.right]
        elif isinstance(u, (ProjL, ProjR)):
            stack.append(u.arg)
    return names


def _replay(head: Derivation, elims: list[Derivation], ctx: Context) -> Derivation:
    d = head
    for e in elims:
        if e.rule == Rule.IMP_E:
            d = imp_elim(d, weaken(e.kids[1], ctx))
        elif e.rule == Rule.PROD_EL:
            d = prod_elim(d, "l")
        elif e.rule == Rule.PROD_ER:
            d = prod_elim(d, "r")
        else:
            d = all_elim(d, e.subst)
    return d


def _invert(d: Derivation, k: int) -> tuple[str, Derivation]:
    if d.rule == Rule.IMP_I:
        return d.term.bound, d.kids[0]
    head, elims = _spine(d)
    if head.rule == Rule.AX:
        raise InvariantError("variable head of arrow type under a low-rank context", code="impossible-case")
    if head.rule != Rule.IMP_I or not elims or elims[0].rule != Rule.IMP_E:
        raise InvariantError(f"unexpected head {head.rule.value} in inversion", code="impossible-case")
    ctx = d.ctx
    first, rest = elims[0], elims[1:]
    s_d = first.kids[1]
    y = head.term.bound
    r_d = head.kids[0]
    taken = set(ctx) | _binders(r_d.term)
    taken |= {n for e in rest if e.rule == Rule.IMP_E for n in e.kids[1].term.fv}
    if y in taken:
        y_new = fresh_name(y, taken | set(r_d.ctx))
        r_d = rename_free(r_d, y, y_new)
        y = y_new
    tau = r_d.ctx[y]
    inner_ctx = ctx.set(y, tau)
    x, t_d = _invert(_replay(r_d, rest, inner_ctx), k)
    if x == y or x in ctx:
        x_new = fresh_name(x, set(t_d.ctx) | set(ctx) | {y})
        t_d = rename_free(t_d, x, x_new)
        x = x_new
    rho = t_d.ctx[x]
    outer = ctx.set(x, rho)
    return x, imp_elim(imp_intro(outer, y, t_d), weaken(s_d, outer))


def invert(rd: RankedDerivation) -> tuple[str, RankedDerivation]:
    """Γ, x:ρ ⊢ t' : σ with λx.t' ≃β t, from Γ ⊢ t : ρ→σ."""
    d = rd.derivation
    if not isinstance(d.type, Arrow):
        raise PreconditionError("inversion needs an arrow type", code="not-an-arrow")
    if context_rank(d.ctx) > rd.k:
        raise PreconditionError("context rank exceeds the cut-rank", code="context-rank", k=rd.k)
    if rank(d.type.dom) < rd.k:
        raise PreconditionError("argument rank below the cut-rank", code="argument-rank", k=rd.k)
    if not is_preprocessed(d):
        raise PreconditionError("derivation has quantifier or pair redexes", code="not-preprocessed")
    x, body = _invert(d, rd.k)
    # 末尾の引数が最も高いと (λy.t') s の包み直しで高さが伸びる
    if body.height > rd.m:
        raise BoundViolation(f"invert: height {body.height} exceeds {rd.m}", m=rd.m, height=body.height)
    return x, RankedDerivation(body, rd.m, rd.k)


# Cut-rank reduction

def _reduce(d: Derivation, k: int) -> Derivation:
    """Eliminate →E cuts of rank k, leaving cut-rank ≤ k."""
    def fix(node: Derivation) -> Derivation:
        if node.rule != Rule.IMP_E:
            return node
        fun, arg = node.kids
        if rank(arg.type) < k:
            return node
        fun = _preprocess(fun)
        if context_rank(fun.ctx) > k:
            raise PreconditionError("context rank exceeds the target cut-rank", code="context-rank", k=k)
        x, body = _invert(fun, k)
        return cut_derivation(body, x, arg)
    return _map_up(d, fix)


def _audit_exponential(before: int, after: int, what: str) -> None:
    if not tower_at_least(1, before, after):
        raise BoundViolation(f"{what}: height {after} exceeds 2^{before}", m=before, height=after)


def reduce_rank(rd: RankedDerivation) -> RankedDerivation:
    """Γ ⊢^{2^m}ₖ t' : ρ with t' ≃β t, from Γ ⊢ᵐ_{k+1} t : ρ."""
    if rd.k < 1:
        raise PreconditionError("cut-rank is already 0", code="rank-zero")
    k = rd.k - 1
    if context_rank(rd.ctx) > k or rank(rd.type) > k + 1:
        raise PreconditionError("context or conclusion rank too high for the reduction", code="rank-bound", k=k)
    d = _reduce(rd.derivation, k)
    _audit_exponential(rd.m, d.height, "reduce_rank")
    if d.nodes > NODE_BUDGET:
        raise BudgetExceeded("derivation exceeds the node budget", nodes=d.nodes, max_nodes=NODE_BUDGET)
    logger.info(f"reduce_rank: k {rd.k} -> {k}, height {rd.m} -> {d.height}, nodes {d.nodes}")
    return RankedDerivation(d, d.height, k)


def cut_elim_to_rank1(
    rd: RankedDerivation, on_pass: Optional[Callable[[RankedDerivation], None]] = None,
) -> RankedDerivation:
    """Iterate reduce_rank down to cut-rank 1; the height stays below 2_(k-1)(m)."""
    if rd.ctx:
        raise PreconditionError("cut elimination to rank 1 needs a closed context", code="open-context")
    if rank(rd.type) > 2:
        raise PreconditionError("conclusion must have rank ≤ 2, as N(α) does", code="rank-bound")
    start, levels = rd.m, rd.k - 1
    while rd.k > 1:
        rd = reduce_rank(rd)
        if on_pass is not None:
            on_pass(rd)
    if levels > 0 and not tower_at_least(levels, start, rd.m):
        raise BoundViolation(f"height {rd.m} exceeds 2_{levels}({start})", m=start, height=rd.m)
    return rd


# Quasinormal terms

def is_quasinormal(t: Term) -> bool:
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, App):
            if isinstance(u.fun, Lam):
                return False
            stack += [u.fun, u.arg]
        elif isinstance(u, (ProjL, ProjR)):
            if isinstance(u.arg, Pair) and not (is_lambda_free(u.arg.left) and is_lambda_free(u.arg.right)):
                return False
            stack.append(u.arg)
        elif isinstance(u, Lam):
            stack.append(u.body)
        elif isinstance(u, Pair):
            stack += [u.left, u.right]
    return True


def quasinormalize(rd: RankedDerivation) -> RankedDerivation:
    """Γ ⊢^{2^m}₁ t' : τ with t' quasinormal and t' ≃β t."""
    if rd.k > 1:
        raise PreconditionError("quasinormalization needs cut-rank ≤ 1", code="rank-bound", k=rd.k)

    def fix(node: Derivation) -> Derivation:
        if node.rule == Rule.IMP_E and node.kids[0].rule == Rule.IMP_I:
            lam_d, arg = node.kids
            return cut_derivation(lam_d.kids[0], lam_d.term.bound, arg)
        if _is_pair_redex(node):
            pair = node.kids[0].term
            if not (is_lambda_free(pair.left) and is_lambda_free(pair.right)):
                return _contract_pair(node)
        return node

    d = _map_up(_remove_quantifier_redexes(rd.derivation), fix)
    if not is_quasinormal(d.term):
        raise InvariantError("quasinormalization left a β-redex", code="not-quasinormal")
    _audit_exponential(rd.m, d.height, "quasinormalize")
    return RankedDerivation(d, d.height, rd.k)


def finish_quasinormal(t: Term) -> Term:
    """Contract the remaining λ-free pair projections; the term never grows."""
    if not is_quasinormal(t):
        raise PreconditionError("term is not quasinormal", code="not-quasinormal")
    limit = t.size
    peak = limit
    while True:
        nxt = step(t)
        if nxt is None:
            break
        t = nxt
        peak = max(peak, t.size)
        if t.size > limit:
            raise BoundViolation("finishing a quasinormal term grew it", size=t.size, limit=limit)
    logger.debug(f"finish_quasinormal: peak size {peak} of {limit}")
    return t


# Evaluation through cut elimination

def _rss_mb() -> float:
    return psutil.Process().memory_info().rss / (1024 * 1024)


def _pass_record(name: str, rd: RankedDerivation) -> PassRecord:
    return PassRecord(
        name=name, m=rd.m, k=rd.k, size=rd.term.size, nodes=rd.derivation.nodes, rss_mb=_rss_mb(),
    )


def _plug_numerals(d: Derivation, x: str, n: int) -> tuple[Derivation, list[Type]]:
    """Replace every instantiated occurrence x : N(ξ) by a derivation of n̄ : N(ξ)."""
    xis: list[Type] = []

    def go(node: Derivation, ctx: Context, bound: bool) -> Derivation:
        rule = node.rule
        if not bound and rule in ALL_E and node.kids[0].rule == Rule.AX and node.kids[0].term.name == x:
            xis.append(node.subst)
            return numeral_derivation(n, node.subst, ctx)
        if rule == Rule.AX:
            if not bound and node.term.name == x:
                raise PreconditionError(f"occurrence of {x} is not instantiated", code="bare-input")
            return axiom(ctx, node.term.name)
        if rule == Rule.IMP_I:
            y = node.term.bound
            body = node.kids[0]
            return imp_intro(ctx, y, go(body, ctx.set(y, body.ctx[y]), bound or y == x))
        kids = [go(kid, ctx, bound) for kid in node.kids]
        if rule == Rule.IMP_E:
            return imp_elim(*kids)
        if rule == Rule.PROD_I:
            return prod_intro(*kids)
        if rule == Rule.PROD_EL:
            return prod_elim(kids[0], "l")
        if rule == Rule.PROD_ER:
            return prod_elim(kids[0], "r")
        if rule == Rule.ALL_I:
            return all_intro(kids[0], node.type.var)
        return all_elim(kids[0], node.subst)

    return go(d, d.ctx.delete(x), False), xis


@dataclass
class SoundnessReport:
    value: int
    direct: int
    occurrences: int
    xi_rank: int
    passes: list[PassRecord] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return self.value == self.direct


def _decode(t: Term) -> int:
    value = decode_numeral(eta_contract(t))
    if value is None:
        raise InvariantError("normal form is not a numeral", code="non-numeral")
    return value


def soundness_pipeline(d: Derivation, n: int, fuel: int = AUDIT_FUEL) -> SoundnessReport:
    """Evaluate x:Nat1 ⊢ t' : Nat0 at x = n̄ by cut elimination, with per-pass telemetry."""
    check_derivation(d)
    if len(d.ctx) != 1 or not all(type_eq(t, NAT1) for t in d.ctx.values()):
        raise PreconditionError("expected a single input of type Nat1", code="input-context")
    if not type_eq(d.type, NAT0):
        raise PreconditionError("expected a conclusion of type Nat0", code="conclusion-type")
    if not is_normal(d.term):
        raise PreconditionError("subject must be normal", code="not-normal")
    (x,) = d.ctx.keys()
    size0 = d.term.size

    plugged, xis = _plug_numerals(_remove_quantifier_redexes(d), x, n)
    rd = annotate(plugged)
    xi_rank = max((rank(xi) for xi in xis), default=0)
    passes = [_pass_record("plug", rd)]
    bound = len(xis) * (n + 2) + 2 * size0
    if rd.m > bound:
        raise BoundViolation(f"plugged height {rd.m} exceeds {bound}", m=rd.m, bound=bound)

    if rd.k > 1:
        rd = cut_elim_to_rank1(rd, on_pass=lambda r: passes.append(_pass_record("reduce_rank", r)))
    rd = quasinormalize(rd)
    passes.append(_pass_record("quasinormalize", rd))
    value = _decode(finish_quasinormal(rd.term))

    direct_result = normalize(substitute(d.term, x, encode_numeral(n)), fuel)
    if direct_result.exhausted:
        direct = value
        logger.warning("direct evaluation ran out of fuel; cross-check skipped")
    else:
        direct = _decode(direct_result.term)
    report = SoundnessReport(value, direct, len(xis), xi_rank, passes)
    logger.info(f"soundness pipeline: value={value} direct={direct} occurrences={len(xis)}")
    return report


def evaluate_via_cutelim(d: Derivation, n: int) -> int:
    report = soundness_pipeline(d, n)
    if not report.agree:
        raise InvariantError(
            "cut elimination disagrees with direct normalization", value=report.value, direct=report.direct,
        )
    return report.value
