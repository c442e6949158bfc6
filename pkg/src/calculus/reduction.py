# src/calculus/reduction.py

"""β and projection conversions under the normal-order strategy, fuel-bounded
normalization, equality checks, and reduction that carries a typing
derivation along."""

import logging
import math
from dataclasses import dataclass

from src.core.config import DEFAULT_FUEL
from src.core.errors import BudgetExceeded, FuelExhausted, InvariantError, Undecided
from src.calculus.terms import (
    App,
    Lam,
    Pair,
    ProjL,
    ProjR,
    Term,
    Var,
    alpha_eq,
    decode_numeral,
    eta_contract,
    substitute,
)
from src.calculus.typing_rules import (
    ALL_E,
    Derivation,
    Rule,
    all_elim,
    all_intro,
    cut,
    imp_elim,
    imp_intro,
    prod_elim,
    prod_intro,
    substitute_type_in_derivation,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizeResult:
    term: Term
    steps: int
    exhausted: bool = False

    @property
    def normal(self) -> bool:
        return not self.exhausted


def is_redex(t: Term) -> bool:
    if isinstance(t, App):
        return isinstance(t.fun, Lam)
    if isinstance(t, (ProjL, ProjR)):
        return isinstance(t.arg, Pair)
    return False


def _children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (App,)):
        return (t.fun, t.arg)
    if isinstance(t, Pair):
        return (t.left, t.right)
    if isinstance(t, Lam):
        return (t.body,)
    if isinstance(t, (ProjL, ProjR)):
        return (t.arg,)
    return ()


def redex_path(t: Term) -> tuple[int, ...] | None:
    """Position of the leftmost-outermost redex, as child indices from the root."""
    stack: list[tuple[Term, tuple[int, ...]]] = [(t, ())]
    while stack:
        node, path = stack.pop()
        if is_redex(node):
            return path
        kids = _children(node)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((kids[i], path + (i,)))
    return None


def is_normal(t: Term) -> bool:
    return redex_path(t) is None


def contract(t: Term) -> Term:
    if isinstance(t, App) and isinstance(t.fun, Lam):
        return substitute(t.fun.body, t.fun.bound, t.arg)
    if isinstance(t, ProjL) and isinstance(t.arg, Pair):
        return t.arg.left
    if isinstance(t, ProjR) and isinstance(t.arg, Pair):
        return t.arg.right
    raise InvariantError("not a redex")


def _replace_child(t: Term, i: int, new: Term) -> Term:
    if isinstance(t, App):
        return App(new, t.arg) if i == 0 else App(t.fun, new)
    if isinstance(t, Pair):
        return Pair(new, t.right) if i == 0 else Pair(t.left, new)
    if isinstance(t, Lam):
        return Lam(t.bound, new)
    if isinstance(t, ProjL):
        return ProjL(new)
    return ProjR(new)


def _at(t: Term, path: tuple[int, ...]) -> list[Term]:
    spine = [t]
    for i in path:
        spine.append(_children(spine[-1])[i])
    return spine


def step(t: Term) -> Term | None:
    """Contract the leftmost-outermost redex; None when ``t`` is normal."""
    path = redex_path(t)
    if path is None:
        return None
    spine = _at(t, path)
    new = contract(spine[-1])
    for depth in range(len(path) - 1, -1, -1):
        new = _replace_child(spine[depth], path[depth], new)
    return new


def check_growth(t: Term, max_nodes: int) -> None:
    """Reject left-nested numeral chains whose value exceeds ``max_nodes``.

    ``#a #b`` is the numeral b^a, so ``((#a #b) #c)`` denotes c^(b^a).
    """
    spine: list[Term] = []
    head = t
    while isinstance(head, App):
        spine.append(head.arg)
        head = head.fun
    if not spine:
        return
    values = [decode_numeral(head)] + [decode_numeral(a) for a in reversed(spine)]
    if any(v is None for v in values):
        return
    limit = math.log2(max_nodes)
    value = values[0]
    for base in values[1:]:
        if base >= 2 and value * math.log2(base) > limit:
            logger.warning(f"Numeral chain of length {len(values)} exceeds the node budget {max_nodes}")
            raise BudgetExceeded(
                f"numeral tower of length {len(values)} exceeds the node budget",
                max_nodes=max_nodes,
            )
        value = base ** value
    if value + 2 > max_nodes:
        raise BudgetExceeded("numeral result exceeds the node budget", max_nodes=max_nodes)


# Normalizer frames and tasks
_F_APP, _F_FST, _F_SND = range(3)
_EVAL, _BUILD = range(2)


def normalize(t: Term, fuel: int = DEFAULT_FUEL, *, max_nodes: int | None = None) -> NormalizeResult:
    """Normal-order normalization with a step budget.

    The head is reduced to weak head form through a spine of application and
    projection frames; the head's inside is normalized first, then the
    arguments from the innermost out, which is leftmost-outermost order.
    On exhaustion the partially reduced term is returned.
    """
    if max_nodes is not None:
        check_growth(t, max_nodes)
    steps = 0
    exhausted = False
    out: list[Term] = []
    tasks: list[tuple] = [(_EVAL, t)]
    while tasks:
        task = tasks.pop()
        if task[0] == _BUILD:
            _, head, frames, inner = task
            nargs = sum(1 for kind, _ in frames if kind == _F_APP)
            args = out[len(out) - nargs:] if nargs else []
            if nargs:
                del out[len(out) - nargs:]
            if isinstance(head, Lam) and inner:
                cur: Term = Lam(head.bound, out.pop())
            elif isinstance(head, Pair) and inner:
                right = out.pop()
                cur = Pair(out.pop(), right)
            else:
                cur = head
            ai = 0
            for kind, _ in reversed(frames):
                if kind == _F_APP:
                    cur = App(cur, args[ai])
                    ai += 1
                elif kind == _F_FST:
                    cur = ProjL(cur)
                else:
                    cur = ProjR(cur)
            if max_nodes is not None and cur.size > max_nodes:
                raise BudgetExceeded("normal form exceeds the node budget", max_nodes=max_nodes, steps=steps)
            out.append(cur)
            continue

        cur = task[1]
        if exhausted:
            out.append(cur)
            continue
        frames: list[tuple[int, Term | None]] = []
        while True:
            if isinstance(cur, App):
                frames.append((_F_APP, cur.arg))
                cur = cur.fun
            elif isinstance(cur, ProjL):
                frames.append((_F_FST, None))
                cur = cur.arg
            elif isinstance(cur, ProjR):
                frames.append((_F_SND, None))
                cur = cur.arg
            elif isinstance(cur, Lam) and frames and frames[-1][0] == _F_APP:
                if steps >= fuel:
                    exhausted = True
                    break
                _, arg = frames.pop()
                cur = substitute(cur.body, cur.bound, arg)
                steps += 1
                if max_nodes is not None and cur.size > max_nodes:
                    raise BudgetExceeded("term exceeds the node budget", max_nodes=max_nodes, steps=steps)
            elif isinstance(cur, Pair) and frames and frames[-1][0] in (_F_FST, _F_SND):
                if steps >= fuel:
                    exhausted = True
                    break
                kind, _ = frames.pop()
                cur = cur.left if kind == _F_FST else cur.right
                steps += 1
            else:
                break
        # head internals first, then arguments from the innermost frame out
        inner = isinstance(cur, (Lam, Pair))
        tasks.append((_BUILD, cur, frames, inner))
        for kind, arg in frames:
            if kind == _F_APP:
                tasks.append((_EVAL, arg))
        if isinstance(cur, Lam):
            tasks.append((_EVAL, cur.body))
        elif isinstance(cur, Pair):
            tasks.append((_EVAL, cur.right))
            tasks.append((_EVAL, cur.left))
    if exhausted:
        logger.info(f"Fuel exhausted after {steps} steps")
    return NormalizeResult(out[0], steps, exhausted)


def normal_form(t: Term, fuel: int = DEFAULT_FUEL) -> Term:
    result = normalize(t, fuel)
    if result.exhausted:
        raise FuelExhausted("no normal form within fuel", partial=result.term, steps=result.steps)
    return result.term


def _nf_or_undecided(t: Term, fuel: int) -> Term:
    result = normalize(t, fuel)
    if result.exhausted:
        raise Undecided(f"side did not normalize within {fuel} steps", fuel=fuel)
    return result.term


def beta_eq(t1: Term, t2: Term, fuel: int = DEFAULT_FUEL) -> bool:
    return alpha_eq(_nf_or_undecided(t1, fuel), _nf_or_undecided(t2, fuel))


def beta_eta_normal_form(t: Term, fuel: int = DEFAULT_FUEL) -> Term:
    """Normalize, then η-contract; repeat while contraction exposes a redex."""
    nf = eta_contract(_nf_or_undecided(t, fuel))
    while not is_normal(nf):
        nf = eta_contract(_nf_or_undecided(nf, fuel))
    return nf


def beta_eta_eq(t1: Term, t2: Term, fuel: int = DEFAULT_FUEL) -> bool:
    return alpha_eq(beta_eta_normal_form(t1, fuel), beta_eta_normal_form(t2, fuel))


# Reduction carried through derivations

def _expose(d: Derivation, target: Rule) -> Derivation:
    """Push ∀E through ∀I until ``d`` ends in ``target`` (ImpI, ProdI or AllI)."""
    if d.rule == target:
        return d
    if d.rule in ALL_E:
        inner = _expose(d.kids[0], Rule.ALL_I)
        body = inner.kids[0]
        exposed = substitute_type_in_derivation(body, inner.type.var, d.subst)
        return _expose(exposed, target)
    raise InvariantError(f"cannot expose {target.value} under {d.rule.value}")


def _contract_derivation(d: Derivation) -> Derivation:
    """Contract the redex that is the subject of ``d``."""
    if d.rule == Rule.ALL_I:
        return all_intro(_contract_derivation(d.kids[0]), d.type.var)
    if d.rule in ALL_E:
        return all_elim(_contract_derivation(d.kids[0]), d.subst)
    if d.rule == Rule.IMP_E:
        fun = _expose(d.kids[0], Rule.IMP_I)
        return cut(fun.kids[0], fun.term.bound, d.kids[1])
    if d.rule in (Rule.PROD_EL, Rule.PROD_ER):
        p = _expose(d.kids[0], Rule.PROD_I)
        return p.kids[0] if d.rule == Rule.PROD_EL else p.kids[1]
    raise InvariantError(f"no redex under {d.rule.value}")


def _kid_for(d: Derivation, i: int) -> int | None:
    """Premise index holding term child ``i``, or None when the rule keeps the subject."""
    if d.rule in (Rule.ALL_I, Rule.ALL_E_CLOSED, Rule.ALL_E_FLAT):
        return None
    if d.rule in (Rule.IMP_E, Rule.PROD_I):
        return i
    return 0


def _with_kid(d: Derivation, index: int, new: Derivation) -> Derivation:
    kids = list(d.kids)
    kids[index] = new
    rule = d.rule
    if rule == Rule.IMP_I:
        return imp_intro(d.ctx, d.term.bound, new)
    if rule == Rule.IMP_E:
        return imp_elim(kids[0], kids[1])
    if rule == Rule.PROD_I:
        return prod_intro(kids[0], kids[1])
    if rule == Rule.PROD_EL:
        return prod_elim(new, "l")
    if rule == Rule.PROD_ER:
        return prod_elim(new, "r")
    if rule == Rule.ALL_I:
        return all_intro(new, d.type.var)
    if rule in ALL_E:
        return all_elim(new, d.subst)
    raise InvariantError(f"{rule.value} has no premises")


def step_derivation(d: Derivation, path: tuple[int, ...] | None = None) -> Derivation | None:
    """Transport one leftmost-outermost step; None when the subject is normal."""
    if path is None:
        path = redex_path(d.term)
    if path is None:
        return None
    spine: list[tuple[Derivation, int]] = []
    node = d
    depth = 0
    while depth < len(path):
        index = _kid_for(node, path[depth])
        if index is None:
            spine.append((node, 0))
            node = node.kids[0]
            continue
        spine.append((node, index))
        node = node.kids[index]
        depth += 1
    new = _contract_derivation(node)
    for parent, index in reversed(spine):
        new = _with_kid(parent, index, new)
    return new


def reduce_with_derivation(d: Derivation, fuel: int = DEFAULT_FUEL) -> Derivation:
    """Subject reduction, executed: the returned derivation types the normal form."""
    steps = 0
    while True:
        path = redex_path(d.term)
        if path is None:
            logger.debug(f"Derivation normalized in {steps} steps")
            return d
        if steps >= fuel:
            raise FuelExhausted("derivation did not normalize within fuel", partial=d, steps=steps)
        d = step_derivation(d, path)
        steps += 1
