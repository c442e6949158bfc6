# src/calculus/types.py

"""Leveled types: level-tagged variables, arrows, products and stratified
quantifiers ∀α_k.τ_k whose body mentions no variable other than α_k."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Union

from cachetools import LRUCache, cached

from src.core.errors import RankError, TypeFormationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class TVar:
    name: str
    level: int


@dataclass(frozen=True, slots=True)
class Arrow:
    dom: "Type"
    cod: "Type"


@dataclass(frozen=True, slots=True)
class Prod:
    left: "Type"
    right: "Type"


@dataclass(frozen=True, slots=True)
class Forall:
    var: TVar
    body: "Type"


Type = Union[TVar, Arrow, Prod, Forall]


def ftv(t: Type) -> frozenset[TVar]:
    if isinstance(t, TVar):
        return frozenset((t,))
    if isinstance(t, Arrow):
        return ftv(t.dom) | ftv(t.cod)
    if isinstance(t, Prod):
        return ftv(t.left) | ftv(t.right)
    return ftv(t.body) - {t.var}


def is_closed(t: Type) -> bool:
    return not ftv(t)


def fresh_tvar(base: TVar, avoid: set[TVar] | frozenset[TVar]) -> TVar:
    name = base.name + "'"
    while TVar(name, base.level) in avoid:
        name += "'"
    return TVar(name, base.level)


def type_substitute_many(t: Type, sub: Mapping[TVar, Type]) -> Type:
    if not sub:
        return t
    if isinstance(t, TVar):
        return sub.get(t, t)
    if isinstance(t, Arrow):
        dom = type_substitute_many(t.dom, sub)
        cod = type_substitute_many(t.cod, sub)
        return t if dom is t.dom and cod is t.cod else Arrow(dom, cod)
    if isinstance(t, Prod):
        left = type_substitute_many(t.left, sub)
        right = type_substitute_many(t.right, sub)
        return t if left is t.left and right is t.right else Prod(left, right)
    body_ftv = ftv(t.body)
    inner = {a: s for a, s in sub.items() if a != t.var and a in body_ftv}
    if not inner:
        return t
    var = t.var
    captured: set[TVar] = set()
    for s in inner.values():
        captured |= ftv(s)
    if var in captured:
        var = fresh_tvar(t.var, captured | body_ftv)
        inner[t.var] = var
    return Forall(var, type_substitute_many(t.body, inner))


def type_substitute(t: Type, alpha: TVar, sigma: Type) -> Type:
    """τ[α := σ] on free occurrences of α."""
    return type_substitute_many(t, {alpha: sigma})


def type_eq(a: Type, b: Type) -> bool:
    """Structural equality up to renaming of quantified variables."""
    return _type_eq(a, b, {}, {}, 0)


def _type_eq(a: Type, b: Type, ma: dict, mb: dict, depth: int) -> bool:
    if a is b and not ma and not mb:
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, TVar):
        la, lb = ma.get(a), mb.get(b)
        if la is None and lb is None:
            return a == b
        return la == lb
    if isinstance(a, Arrow):
        return _type_eq(a.dom, b.dom, ma, mb, depth) and _type_eq(a.cod, b.cod, ma, mb, depth)
    if isinstance(a, Prod):
        return _type_eq(a.left, b.left, ma, mb, depth) and _type_eq(a.right, b.right, ma, mb, depth)
    if a.var.level != b.var.level:
        return False
    return _type_eq(a.body, b.body, {**ma, a.var: depth}, {**mb, b.var: depth}, depth + 1)


# Level intervals: (lo, hi) with hi None for unbounded; None when no level fits.
LEVEL_CACHE: LRUCache = LRUCache(maxsize=8192)


@cached(LEVEL_CACHE)
def level_range(t: Type) -> tuple[int, int | None] | None:
    if isinstance(t, TVar):
        return (t.level, t.level)
    if isinstance(t, (Arrow, Prod)):
        a = level_range(t.dom if isinstance(t, Arrow) else t.left)
        b = level_range(t.cod if isinstance(t, Arrow) else t.right)
        if a is None or b is None:
            return None
        lo = max(a[0], b[0])
        if a[1] is None:
            hi = b[1]
        elif b[1] is None:
            hi = a[1]
        else:
            hi = min(a[1], b[1])
        if hi is not None and hi < lo:
            return None
        return (lo, hi)
    k = t.var.level
    if not ftv(t.body) <= {t.var} or not is_level(t.body, k):
        return None
    return (k + 1, None)


def is_level(t: Type, n: int) -> bool:
    r = level_range(t)
    return r is not None and r[0] <= n and (r[1] is None or n <= r[1])


def min_level(t: Type) -> int | None:
    r = level_range(t)
    return None if r is None else r[0]


def is_well_formed(t: Type) -> bool:
    return level_range(t) is not None


def is_flat(t: Type) -> bool:
    if isinstance(t, TVar):
        return t.level == 0
    if isinstance(t, Prod):
        return is_flat(t.left) and is_flat(t.right)
    return False


def require_well_formed(t: Type) -> Type:
    if not is_well_formed(t):
        raise TypeFormationError("type has no level (interleaved quantifier or mixed levels)")
    return t


def rank(t: Type) -> int:
    """Rank of a type of level ≤ 1: arrows add one on the left, ∀ is transparent."""
    if not (is_level(t, 0) or is_level(t, 1)):
        raise RankError("rank is defined for types of level 0 or 1 only", level=min_level(t))
    return _rank(t)


def _rank(t: Type) -> int:
    if isinstance(t, TVar):
        return 0
    if isinstance(t, Prod):
        return max(_rank(t.left), _rank(t.right))
    if isinstance(t, Arrow):
        return max(_rank(t.dom) + 1, _rank(t.cod))
    return _rank(t.body)


def N(t: Type) -> Type:
    """Numeral type (τ→τ)→(τ→τ)."""
    return Arrow(Arrow(t, t), Arrow(t, t))


def un_n(t: Type) -> Type | None:
    """Return τ when ``t`` is N(τ)."""
    if (
        isinstance(t, Arrow)
        and isinstance(t.dom, Arrow)
        and isinstance(t.cod, Arrow)
        and type_eq(t.dom.dom, t.dom.cod)
        and type_eq(t.dom.dom, t.cod.dom)
        and type_eq(t.dom.dom, t.cod.cod)
    ):
        return t.dom.dom
    return None


A0 = TVar("a", 0)
A1 = TVar("a", 1)
NAT0: Type = Forall(A0, N(A0))
NAT1: Type = Forall(A1, N(A1))


def tower(base: Type, k: int) -> Type:
    """τ^(k): τ^(0) = τ, τ^(k+1) = N(τ^(k))."""
    for _ in range(k):
        base = N(base)
    return base


def nat0_tower(k: int) -> Type:
    return tower(NAT0, k)


def arrows(*types: Type) -> Type:
    """τ1 → τ2 → ... → τn (right nested)."""
    result = types[-1]
    for t in reversed(types[:-1]):
        result = Arrow(t, result)
    return result


@dataclass(frozen=True, slots=True)
class TowerType:
    base: Type
    k: int

    def expand(self) -> Type:
        return tower(self.base, self.k)
