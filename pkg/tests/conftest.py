# tests/conftest.py

import random

import pytest

from src.calculus.reduction import normal_form
from src.calculus.terms import Term, decode_numeral, eta_contract
from src.services.elemc import Add, BProd, BSum, Comp, Mul, Proj, Succ, Zero


def value_of(t: Term, fuel: int = 1_000_000) -> int | None:
    """Normalize, η-contract and read back a numeral."""
    return decode_numeral(eta_contract(normal_form(t, fuel)))


def random_expr(rng: random.Random, n: int, depth: int, bounded: bool = False):
    """A random elementary definition of arity ``n``.

    Without ``bounded`` the result stays in the parameter-free fragment
    (no sub, no bounded sums or products).
    """
    base = []
    if n == 0:
        base.append(Zero())
    if n == 1:
        base.append(Succ())
    if n == 2:
        base += [Add(), Mul()]
    base += [Proj(i, n) for i in range(n)]
    if depth <= 0 or rng.random() < 0.3:
        if base:
            return rng.choice(base)
        return Comp(Succ(), (random_expr(rng, n, 0, bounded),))
    if bounded and n >= 1 and rng.random() < 0.3:
        g = random_expr(rng, n, depth - 1, bounded)
        return rng.choice([BSum, BProd])(g)
    m = rng.choice([1, 2])
    g = random_expr(rng, m, depth - 1, bounded)
    hs = tuple(random_expr(rng, n, depth - 1, bounded) for _ in range(m))
    return Comp(g, hs)


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def write_file(tmp_path):
    def write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write
