# tests/test_compiler.py

import itertools

import pytest
from conftest import random_expr

from src.core.errors import ArityError
from src.calculus.terms import free_vars
from src.calculus.types import NAT1, NAT0, arrows, nat0_tower, type_eq
from src.calculus.typing_rules import check_derivation
from src.services.compiler import (
    audit_top,
    compile_lemma,
    compile_report,
    compile_top,
    default_parameter,
    is_eta,
    run_compiled,
    run_lemma,
)
from src.services.elemc import (
    Add,
    BProd,
    BSum,
    Comp,
    Mul,
    Proj,
    Sub,
    Succ,
    Zero,
    arity,
    eval_oracle,
    format_elem,
)

TRIANGLE = BSum(Proj(0, 1))
FACTORIAL = BProd(Comp(Succ(), (Proj(0, 1),)))


def lemma_type(c):
    n = arity(c.expr)
    return arrows(*c.etas, *[nat0_tower(c.k + c.ell)] * n, nat0_tower(c.k))


@pytest.mark.parametrize("e", [
    Zero(), Succ(), Add(), Mul(), Sub(), Proj(1, 3),
    Comp(Add(), (Proj(0, 1), Proj(0, 1))),
    Comp(Succ(), (Sub(),)),
    Comp(Sub(), (Sub(), Proj(1, 2))),
    TRIANGLE,
    FACTORIAL,
])
@pytest.mark.parametrize("k", [0, 1])
def test_lemma_shape(e, k):
    c = compile_lemma(e, k)
    check_derivation(c.derivation)
    assert not free_vars(c.term)
    assert type_eq(c.derivation.type, lemma_type(c))
    for eta in c.etas:
        assert is_eta(eta, k)


def test_lemma_bookkeeping():
    sub0 = compile_lemma(Sub(), 0)
    assert (sub0.ell, sub0.etas) == (1, ())
    sub1 = compile_lemma(Sub(), 1)
    assert sub1.ell == 0
    assert len(sub1.etas) == 1 and type_eq(sub1.etas[0], nat0_tower(2))
    tri = compile_lemma(TRIANGLE, 0)
    assert tri.ell == 1
    assert len(tri.etas) == 2
    assert compile_lemma(FACTORIAL, 0).r == 1


def test_eta_grammar():
    assert is_eta(nat0_tower(1), 1)
    assert is_eta(nat0_tower(3), 1)
    assert not is_eta(nat0_tower(0), 1)
    assert not is_eta(NAT1, 0)


def test_sub_at_level_zero():
    c = compile_lemma(Sub(), 0)
    for n, m in itertools.product(range(9), repeat=2):
        assert run_lemma(c, 0, [n, m]) == max(n - m, 0)


def test_sub_under_composition():
    # (x ∸ y) ∸ y と (x ∸ y) + 1
    twice = compile_lemma(Comp(Sub(), (Sub(), Proj(1, 2))), 0)
    plus_one = compile_lemma(Comp(Succ(), (Sub(),)), 0)
    for x, y in itertools.product(range(4), repeat=2):
        assert run_lemma(twice, max(x, y), [x, y]) == max(x - 2 * y, 0)
        assert run_lemma(plus_one, 0, [x, y]) == max(x - y, 0) + 1


@pytest.mark.parametrize("x", range(4))
def test_triangular_numbers(x):
    c = compile_lemma(TRIANGLE, 0)
    assert default_parameter(c, [x]) == x
    assert run_lemma(c, default_parameter(c, [x]), [x]) == eval_oracle(TRIANGLE, [x])


@pytest.mark.slow
def test_triangular_numbers_slow():
    c = compile_lemma(TRIANGLE, 0)
    assert run_lemma(c, 4, [4]) == 6


@pytest.mark.parametrize("x", range(3))
def test_factorial(x):
    c = compile_lemma(FACTORIAL, 0)
    assert run_lemma(c, default_parameter(c, [x]), [x]) == eval_oracle(FACTORIAL, [x])


@pytest.mark.slow
def test_factorial_slow():
    c = compile_lemma(FACTORIAL, 0)
    assert run_lemma(c, default_parameter(c, [3]), [3]) == 6


def test_parameter_free_fragment_matches_the_oracle(rng):
    for _ in range(200):
        n = rng.choice([0, 1, 2])
        e = random_expr(rng, n, 3)
        c = compile_lemma(e, 0)
        assert c.etas == ()
        for args in itertools.product(range(3), repeat=n):
            assert run_lemma(c, 0, list(args)) == eval_oracle(e, list(args)), format_elem(e)


@pytest.mark.parametrize("e", [Succ(), Add(), Mul()])
def test_top_level_base_functions(e):
    c = compile_top(e)
    audit_top(c)
    assert type_eq(c.derivation.type, arrows(*[NAT1] * arity(e), NAT0))
    for args in itertools.product(range(9), repeat=arity(e)):
        assert run_compiled(c, list(args)) == eval_oracle(e, list(args))


def test_top_level_sub_on_small_inputs():
    c = compile_top(Sub())
    audit_top(c)
    assert c.s == 1
    for args in ([0, 0], [1, 0], [0, 1]):
        assert run_compiled(c, args) == eval_oracle(Sub(), args)


def test_top_level_projection_and_composition():
    double = Comp(Add(), (Proj(0, 1), Proj(0, 1)))
    for e in (Proj(0, 1), double):
        c = compile_top(e)
        audit_top(c)
        for x in range(4):
            assert run_compiled(c, [x]) == eval_oracle(e, [x])


def test_top_level_bounded_sum_is_well_typed():
    c = compile_top(TRIANGLE)
    audit_top(c)
    assert type_eq(c.derivation.type, arrows(NAT1, NAT0))
    assert c.r == 2


@pytest.mark.parametrize("e", [BSum(Proj(0, 2)), BProd(Comp(Succ(), (Proj(0, 2),)))])
def test_top_level_bounded_forms_with_a_side_argument(e):
    c = compile_top(e)
    audit_top(c)
    assert type_eq(c.derivation.type, arrows(NAT1, NAT1, NAT0))


def test_bounded_sum_lemma_above_level_zero():
    c = compile_lemma(BSum(Proj(0, 2)), 1)
    check_derivation(c.derivation)
    assert type_eq(c.derivation.type, lemma_type(c))
    for eta in c.etas:
        assert is_eta(eta, 1)


def test_higher_sub_lemma_after_top_level_sub():
    compile_top(Sub())
    for k in (1, 2, 3):
        c = compile_lemma(Sub(), k)
        check_derivation(c.derivation)
        assert type_eq(c.derivation.type, lemma_type(c))


@pytest.mark.slow
@pytest.mark.parametrize("x", range(2))
def test_top_level_triangular_numbers(x):
    assert run_compiled(compile_top(TRIANGLE), [x]) == eval_oracle(TRIANGLE, [x])


def test_run_checks_arity():
    with pytest.raises(ArityError):
        run_compiled(compile_top(Add()), [1])
    with pytest.raises(ArityError):
        run_lemma(compile_lemma(Add(), 0), 0, [1, 2, 3])


def test_compile_report():
    line = compile_report(compile_top(Add())).as_line()
    assert "arity=2" in line
    assert "s=1" in line
    report = compile_report(compile_lemma(TRIANGLE, 0))
    assert report.s is None
    assert len(report.etas) == 2


def test_parameter_free_fragment_one_level_up(rng):
    for _ in range(50):
        n = rng.choice([1, 2])
        e = random_expr(rng, n, 2)
        c = compile_lemma(e, 1)
        check_derivation(c.derivation)
        for args in itertools.product(range(3), repeat=n):
            assert run_lemma(c, 0, list(args)) == eval_oracle(e, list(args)), format_elem(e)


def test_sub_one_level_up():
    c = compile_lemma(Sub(), 1)
    for n, m in itertools.product(range(4), repeat=2):
        assert run_lemma(c, max(n - m, 0), [n, m]) == max(n - m, 0)


def test_sub_parameter_is_monotone():
    c = compile_lemma(Sub(), 1)
    for n, m in itertools.product(range(3), repeat=2):
        low = max(n - m, 0)
        assert run_lemma(c, low, [n, m]) == run_lemma(c, low + 1, [n, m]) == low


def test_bounded_sum_parameter_is_monotone():
    c = compile_lemma(TRIANGLE, 0)
    for x in range(3):
        assert run_lemma(c, x, [x]) == run_lemma(c, x + 1, [x]) == eval_oracle(TRIANGLE, [x])


@pytest.mark.slow
@pytest.mark.parametrize("x", range(2))
def test_bounded_sum_one_level_up(x):
    c = compile_lemma(TRIANGLE, 1)
    assert run_lemma(c, default_parameter(c, [x]), [x]) == eval_oracle(TRIANGLE, [x])
