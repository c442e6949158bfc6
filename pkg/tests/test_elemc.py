# tests/test_elemc.py

import itertools

import pytest
from conftest import random_expr

from src.core.errors import ArityError, BudgetExceeded, ParseError
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
    growth_bound,
    inner_growth,
    parse_elem,
    tower_at_least,
    two_tower,
)

TRIANGLE = BSum(Proj(0, 1))
FACTORIAL = BProd(Comp(Succ(), (Proj(0, 1),)))


def test_parse_base_functions():
    assert parse_elem("zero") == Zero()
    assert parse_elem("sub") == Sub()
    assert parse_elem("(proj 1 3)") == Proj(1, 3)


def test_parse_nested_with_comments():
    text = """
    ; (x + 1) * y
    (comp mul
          (comp succ (proj 0 2))
          (proj 1 2))
    """
    e = parse_elem(text)
    assert e == Comp(Mul(), (Comp(Succ(), (Proj(0, 2),)), Proj(1, 2)))
    assert arity(e) == 2


def test_format_parses_back():
    for e in (TRIANGLE, FACTORIAL, Comp(Add(), (Proj(0, 2), Proj(1, 2))), Zero()):
        assert parse_elem(format_elem(e)) == e


def test_syntax_errors():
    with pytest.raises(ParseError) as exc:
        parse_elem("(comp add")
    assert exc.value.code == "elem-syntax"
    with pytest.raises(ParseError):
        parse_elem("(proj x 2)")


@pytest.mark.parametrize("text", [
    "(proj 2 2)",
    "(comp add (proj 0 1))",
    "(comp succ (proj 0 1) (proj 0 1))",
    "(comp add (proj 0 1) (proj 0 2))",
    "(bsum zero)",
])
def test_arity_errors(text):
    with pytest.raises(ArityError):
        parse_elem(text)


def test_oracle_base_functions():
    assert eval_oracle(Sub(), [5, 3]) == 2
    assert eval_oracle(Sub(), [3, 5]) == 0
    assert eval_oracle(Mul(), [3, 4]) == 12
    assert eval_oracle(Proj(1, 3), [7, 8, 9]) == 8
    assert eval_oracle(Zero(), []) == 0


def test_oracle_bounded_sums_and_products():
    assert [eval_oracle(TRIANGLE, [x]) for x in range(6)] == [0, 0, 1, 3, 6, 10]
    assert [eval_oracle(FACTORIAL, [x]) for x in range(6)] == [1, 1, 2, 6, 24, 120]
    # 添字が先頭、上限が末尾
    weighted = BSum(Mul())
    assert eval_oracle(weighted, [2, 3]) == 2 * (0 + 1 + 2)


def test_oracle_checks_arity():
    with pytest.raises(ArityError):
        eval_oracle(Add(), [1])


def test_two_tower():
    assert two_tower(0, 5) == 5
    assert two_tower(1, 3) == 8
    assert two_tower(2, 1) == 4
    assert two_tower(3, 1) == 16
    assert two_tower(4, 1) == 65536
    with pytest.raises(BudgetExceeded):
        two_tower(6, 1)


def test_tower_at_least_without_building():
    assert tower_at_least(2, 1, 4)
    assert not tower_at_least(2, 1, 5)
    assert tower_at_least(10, 3, 10 ** 100)
    assert tower_at_least(0, 7, 7)
    assert not tower_at_least(0, 7, 8)


def test_growth_bounds_of_known_shapes():
    assert growth_bound(Add()) == 0
    assert growth_bound(Mul()) == 1
    assert growth_bound(TRIANGLE) == 2
    assert inner_growth(Comp(Add(), (Proj(0, 1), Proj(0, 1)))) == 2
    assert inner_growth(Comp(Succ(), (Proj(0, 1),))) == 0


def test_growth_bound_dominates_the_oracle(rng):
    for _ in range(200):
        n = rng.choice([1, 2])
        e = random_expr(rng, n, 2, bounded=True)
        s = growth_bound(e)
        for args in itertools.product(range(3), repeat=n):
            value = eval_oracle(e, list(args))
            assert tower_at_least(s, sum(args), value), (format_elem(e), args, value)
