# tests/test_types.py

import random

import pytest

from src.core.errors import RankError
from src.calculus.types import (
    A0,
    A1,
    NAT0,
    NAT1,
    Arrow,
    Forall,
    Prod,
    TVar,
    N,
    TowerType,
    arrows,
    ftv,
    is_flat,
    is_level,
    is_well_formed,
    min_level,
    nat0_tower,
    rank,
    tower,
    type_eq,
    type_substitute,
    un_n,
)


def test_levels():
    assert is_level(A0, 0)
    assert not is_level(A0, 1)
    assert min_level(NAT0) == 1
    assert is_level(NAT0, 1) and is_level(NAT0, 3)
    assert min_level(NAT1) == 2
    assert is_level(Arrow(A0, A0), 0)


def test_ill_formed_types():
    # 層の混在
    assert not is_well_formed(Arrow(A0, A1))
    # 量化子の本体に別の変数
    assert not is_well_formed(Forall(TVar("b", 1), TVar("c", 0)))
    assert is_well_formed(Arrow(NAT0, N(NAT0)))


def test_flat_types():
    assert is_flat(A0)
    assert is_flat(Prod(A0, Prod(A0, TVar("b", 0))))
    assert not is_flat(Arrow(A0, A0))
    assert not is_flat(A1)


def test_rank_examples():
    assert rank(Prod(A0, A0)) == 0
    assert rank(Arrow(A0, A0)) == 1
    assert rank(NAT0) == 2
    assert rank(Arrow(NAT0, NAT0)) == 3
    assert rank(N(NAT0)) == 4


def test_rank_needs_low_level():
    with pytest.raises(RankError):
        rank(NAT1)


def test_type_eq_up_to_bound_renaming():
    b = TVar("b", 0)
    assert type_eq(Forall(b, N(b)), NAT0)
    assert not type_eq(Forall(TVar("b", 1), N(TVar("b", 1))), NAT0)
    assert not type_eq(A0, TVar("a", 1))


def test_substitution_renames_binder_on_capture():
    b, c = TVar("b", 1), TVar("c", 1)
    t = type_substitute(Forall(b, Arrow(b, c)), c, b)
    assert isinstance(t, Forall)
    assert t.var != b
    assert t.body.cod == b
    assert ftv(t) == frozenset({b})


def test_numeral_types():
    assert un_n(N(A0)) == A0
    assert un_n(Arrow(A0, A0)) is None
    assert tower(A0, 2) == N(N(A0))
    assert nat0_tower(0) is NAT0
    assert TowerType(A0, 3).expand() == tower(A0, 3)
    assert arrows(A0, A0, A0) == Arrow(A0, Arrow(A0, A0))


def _random_type(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice([A0, TVar("b", 0), NAT0])
    kind = rng.choice(["arrow", "prod", "n"])
    if kind == "arrow":
        return Arrow(_random_type(rng, depth - 1), _random_type(rng, depth - 1))
    if kind == "prod":
        return Prod(_random_type(rng, depth - 1), _random_type(rng, depth - 1))
    return N(_random_type(rng, depth - 1))


def _random_flat(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.4:
        return rng.choice([A0, TVar("b", 0)])
    return Prod(_random_flat(rng, depth - 1), _random_flat(rng, depth - 1))


def test_flat_substitution_keeps_rank():
    rng = random.Random(7)
    for _ in range(1000):
        tau = _random_type(rng, 4)
        sigma = _random_flat(rng, 3)
        if not is_well_formed(tau) or min_level(tau) > 1:
            continue
        assert rank(type_substitute(tau, A0, sigma)) == rank(tau)
