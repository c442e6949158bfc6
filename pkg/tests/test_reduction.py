# tests/test_reduction.py

import pytest
from conftest import random_expr

from src.core.errors import BudgetExceeded, FuelExhausted, Undecided
from src.calculus.builders import app, build_closed, fst, numeral, pair, use
from src.calculus.parser import parse_term
from src.calculus.reduction import (
    beta_eq,
    beta_eta_eq,
    check_growth,
    is_normal,
    normal_form,
    normalize,
    redex_path,
    reduce_with_derivation,
    step,
    step_derivation,
)
from src.calculus.terms import (
    App,
    Lam,
    Pair,
    ProjL,
    ProjR,
    Var,
    alpha_eq,
    apps,
    decode_numeral,
    encode_numeral,
    eta_contract,
    substitute,
)
from src.calculus.types import A0, NAT0, N, type_eq
from src.calculus.typing_rules import check_derivation
from src.services.compiler import compile_lemma
from src.services.elemc import eval_oracle, format_elem
from src.services.stdterms import basic, cd_at, numeral_at

OMEGA = "(\\x. x x) (\\x. x x)"


def test_single_beta_step():
    result = normalize(parse_term("(\\x. x) y"))
    assert result.normal
    assert result.steps == 1
    assert alpha_eq(result.term, Var("y"))


def test_projections():
    assert alpha_eq(normal_form(parse_term("fst <a, b>")), Var("a"))
    assert alpha_eq(normal_form(parse_term("snd <a, b>")), Var("b"))


def test_normal_order_discards_unused_argument():
    t = parse_term(f"(\\x. y) ({OMEGA})")
    assert alpha_eq(normal_form(t, fuel=10), Var("y"))


def test_leftmost_outermost_step():
    t = parse_term("(\\x. y) ((\\z. z) w)")
    assert redex_path(t) == ()
    assert alpha_eq(step(t), Var("y"))
    assert step(Var("y")) is None


def test_redex_under_binder():
    t = parse_term("\\u. f ((\\z. z) u)")
    assert redex_path(t) == (0, 1)
    assert not is_normal(t)


def test_church_arithmetic():
    add = basic("add").term
    mul = basic("mul").term
    assert decode_numeral(normal_form(apps(add, encode_numeral(2), encode_numeral(3)))) == 5
    assert decode_numeral(normal_form(apps(mul, encode_numeral(2), encode_numeral(3)))) == 6


def test_fuel_exhaustion():
    result = normalize(parse_term(OMEGA), fuel=10)
    assert result.exhausted
    assert result.steps == 10
    with pytest.raises(FuelExhausted) as exc:
        normal_form(parse_term(OMEGA), fuel=10)
    assert exc.value.steps == 10


def test_equality_checks():
    assert beta_eq(parse_term("(\\x. x) y"), parse_term("y"))
    assert not beta_eq(parse_term("\\x. f x"), parse_term("f"))
    assert beta_eta_eq(parse_term("\\x. f x"), parse_term("f"))
    with pytest.raises(Undecided):
        beta_eq(parse_term(OMEGA), parse_term("y"), fuel=20)


def test_numeral_exponentiation():
    # #a #b = b^a
    assert decode_numeral(normal_form(parse_term("#2 #3"))) == 9
    assert decode_numeral(normal_form(parse_term("(#2 #2) #2"))) == 16


@pytest.mark.slow
def test_super_elementary_growth_at_desk_scale():
    result = normalize(parse_term("((#2 #2) #2) #2"), max_nodes=1_000_000)
    assert result.normal
    assert decode_numeral(result.term) == 65536


def test_growth_guard_rejects_the_next_tower():
    with pytest.raises(BudgetExceeded):
        check_growth(parse_term("(((#2 #2) #2) #2) #2"), 1_000_000)
    with pytest.raises(BudgetExceeded):
        normalize(parse_term("(((#2 #2) #2) #2) #2"), max_nodes=1_000_000)
    check_growth(parse_term("(#2 #2) #2"), 1_000_000)


def test_subject_reduction_carries_the_derivation():
    add = basic("add", A0)
    d = build_closed(app(use(add.derivation), numeral(2, A0), numeral(3, A0)))
    nf = reduce_with_derivation(d)
    check_derivation(nf)
    assert is_normal(nf.term)
    assert decode_numeral(nf.term) == 5
    assert type_eq(nf.type, N(A0))
    assert step_derivation(nf) is None


def test_derivation_steps_follow_term_steps():
    d = build_closed(app(use(basic("suc", A0).derivation), numeral(1, A0)))
    stepped = step_derivation(d)
    check_derivation(stepped)
    assert alpha_eq(stepped.term, step(d.term))


def innermost_normal_form(t):
    """Arguments first; terminates on typeable terms."""
    if isinstance(t, Var):
        return t
    if isinstance(t, Lam):
        return Lam(t.bound, innermost_normal_form(t.body))
    if isinstance(t, Pair):
        return Pair(innermost_normal_form(t.left), innermost_normal_form(t.right))
    if isinstance(t, (ProjL, ProjR)):
        arg = innermost_normal_form(t.arg)
        if isinstance(arg, Pair):
            return arg.left if isinstance(t, ProjL) else arg.right
        return type(t)(arg)
    fun = innermost_normal_form(t.fun)
    arg = innermost_normal_form(t.arg)
    if isinstance(fun, Lam):
        return innermost_normal_form(substitute(fun.body, fun.bound, arg))
    return App(fun, arg)


def test_innermost_and_normal_order_agree(rng):
    for _ in range(30):
        n = rng.choice([1, 2])
        e = random_expr(rng, n, 2)
        args = [rng.randrange(3) for _ in range(n)]
        t = apps(compile_lemma(e, 0).term, *[encode_numeral(a) for a in args])
        assert alpha_eq(innermost_normal_form(t), normal_form(t)), format_elem(e)


def test_innermost_and_normal_order_agree_on_pairs():
    for text in ("fst <(\\x. x) a, b>", "snd <a, #2 #2>", "(\\p. fst p) <#1, #2>"):
        t = parse_term(text)
        assert alpha_eq(innermost_normal_form(t), normal_form(t))


def test_subject_reduction_on_random_derivations(rng):
    for _ in range(20):
        n = rng.choice([1, 2])
        e = random_expr(rng, n, 2)
        args = [rng.randrange(3) for _ in range(n)]
        c = compile_lemma(e, 0)
        d = build_closed(app(use(c.derivation), *[numeral_at(a, 0) for a in args]))
        nf = reduce_with_derivation(d)
        check_derivation(nf)
        assert is_normal(nf.term)
        assert type_eq(nf.type, d.type)
        assert nf.ctx == d.ctx
        assert decode_numeral(eta_contract(nf.term)) == eval_oracle(e, args), format_elem(e)


def test_subject_reduction_through_cast_down():
    d = build_closed(app(use(cd_at(0).derivation), numeral(3, NAT0)))
    nf = reduce_with_derivation(d)
    check_derivation(nf)
    assert is_normal(nf.term)
    assert type_eq(nf.type, NAT0)
    assert decode_numeral(eta_contract(nf.term)) == 3


def test_subject_reduction_through_a_projection():
    d = build_closed(fst(pair(numeral(1, A0), numeral(2, A0))))
    nf = reduce_with_derivation(d)
    check_derivation(nf)
    assert type_eq(nf.type, N(A0))
    assert decode_numeral(nf.term) == 1
