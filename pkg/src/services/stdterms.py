# src/services/stdterms.py

"""Named arithmetic terms with their derivations: the base functions,
typecasts, predecessor and subtraction, the conditionals, and the
building blocks of bounded sums.

Nat0^(k) is written T^(k) in the docstrings below.
"""

from __future__ import annotations

import logging
from functools import partial
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Literal, Optional

from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from src.core.config import STDTERM_CACHE_SIZE
from src.core.errors import StdTermError
from src.calculus.builders import (
    Builder,
    app,
    build_closed,
    fst,
    gen,
    inst,
    lam,
    lams,
    numeral,
    pair,
    snd,
    use,
    var,
)
from src.calculus.terms import Term
from src.calculus.types import (
    A0,
    NAT0,
    Arrow,
    Prod,
    Type,
    N,
    is_well_formed,
    nat0_tower,
)
from src.calculus.typing_rules import Derivation

if TYPE_CHECKING:
    from src.services.compiler import CompiledFn

logger = logging.getLogger(__name__)

A = A0

# Caches (各ビルダーはキーに関数名のタグを付ける)
BASIC_CACHE: LRUCache = LRUCache(maxsize=STDTERM_CACHE_SIZE)
CAST_CACHE: LRUCache = LRUCache(maxsize=STDTERM_CACHE_SIZE)
COND_CACHE: LRUCache = LRUCache(maxsize=STDTERM_CACHE_SIZE)


@dataclass(frozen=True, eq=False)
class NamedTerm:
    """A closed term with its derivation and documented behaviour.

    ``requires`` is the large-parameter side condition on the numeral
    arguments; ``semantics`` gives the expected numeral result.
    """

    name: str
    derivation: Derivation
    law: str
    requires: Optional[Callable[..., bool]] = None
    semantics: Optional[Callable[..., int]] = None

    @property
    def term(self) -> Term:
        return self.derivation.term

    @property
    def type(self) -> Type:
        return self.derivation.type


def _closed(b: Builder) -> Derivation:
    return build_closed(b)


def numeral_at(n: int, k: int) -> Builder:
    """n̄ : T^(k); at k = 0 the numeral is generalized over α0."""
    if k == 0:
        return gen(A, numeral(n, A))
    return numeral(n, nat0_tower(k - 1))


def _n(v: str) -> Builder:
    """A Nat0 variable instantiated at α0."""
    return inst(var(v), A)


@cached(BASIC_CACHE, key=partial(hashkey, "basic"))
def basic(name: Literal["suc", "add", "mul"], tau: Optional[Type] = None) -> NamedTerm:
    """suc, add and mul at N(τ), or uniformly at Nat0 when τ is None."""
    if tau is not None and not is_well_formed(tau):
        raise StdTermError(f"no {name} instance at an ill-formed type", name=name)
    s, z = ("s", Arrow(A, A)), ("z", A)
    if tau is None:
        if name == "suc":
            b = lam("n", NAT0, gen(A, lams([s, z], app(var("s"), app(_n("n"), var("s"), var("z"))))))
        elif name == "add":
            b = lams(
                [("m", NAT0), ("n", NAT0)],
                gen(A, lams([s, z], app(_n("m"), var("s"), app(_n("n"), var("s"), var("z"))))),
            )
        elif name == "mul":
            b = lams([("m", NAT0), ("n", NAT0)], gen(A, lam("s", Arrow(A, A), app(_n("m"), app(_n("n"), var("s"))))))
        else:
            raise StdTermError(f"unknown base function {name}", name=name)
    else:
        nt = N(tau)
        s, z = ("s", Arrow(tau, tau)), ("z", tau)
        if name == "suc":
            b = lams([("n", nt), s, z], app(var("s"), app(var("n"), var("s"), var("z"))))
        elif name == "add":
            b = lams([("m", nt), ("n", nt), s, z], app(var("m"), var("s"), app(var("n"), var("s"), var("z"))))
        elif name == "mul":
            b = lams([("m", nt), ("n", nt), s], app(var("m"), app(var("n"), var("s"))))
        else:
            raise StdTermError(f"unknown base function {name}", name=name)
    semantics = {
        "suc": lambda n: n + 1,
        "add": lambda m, n: m + n,
        "mul": lambda m, n: m * n,
    }[name]
    return NamedTerm(name, _closed(b), f"{name} computes on numerals", semantics=semantics)


@cached(CAST_CACHE, key=partial(hashkey, "cast_down"))
def cast_down(tau: Optional[Type] = None) -> NamedTerm:
    """cd = λn. n suc #0 at N(N(τ)) → N(τ), or N(Nat0) → Nat0 when τ is None."""
    if tau is None:
        arg_t = N(NAT0)
        suc = basic("suc")
        zero = numeral_at(0, 0)
    else:
        if not is_well_formed(tau):
            raise StdTermError("no cd instance at an ill-formed type", name="cd")
        arg_t = N(N(tau))
        suc = basic("suc", tau)
        zero = numeral(0, tau)
    b = lam("n", arg_t, app(var("n"), use(suc.derivation), zero))
    return NamedTerm("cd", _closed(b), "cd n ≃β n", semantics=lambda n: n)


def cd_at(j: int) -> NamedTerm:
    """cd : T^(j+1) → T^(j)."""
    return cast_down(None if j == 0 else nat0_tower(j - 1))


def cd_chain(b: Builder, high: int, low: int) -> Builder:
    """Cast a T^(high) builder down to T^(low)."""
    for j in range(high - 1, low - 1, -1):
        b = app(use(cd_at(j).derivation), b)
    return b


@cached(CAST_CACHE, key=partial(hashkey, "predecessor"))
def predecessor() -> NamedTerm:
    """pred = λn. Gen α0 λsz. snd (n P ⟨z,z⟩) with P = λp.⟨s (fst p), fst p⟩."""
    pair_t = Prod(A, A)
    step = lam("p", pair_t, pair(app(var("s"), fst(var("p"))), fst(var("p"))))
    b = lam(
        "n",
        NAT0,
        gen(A, lams(
            [("s", Arrow(A, A)), ("z", A)],
            snd(app(inst(var("n"), pair_t), step, pair(var("z"), var("z")))),
        )),
    )
    return NamedTerm("pred", _closed(b), "pred (n+1) ≃βη n and pred 0 ≃βη 0", semantics=lambda n: max(n - 1, 0))


@cached(CAST_CACHE, key=partial(hashkey, "subtraction"))
def subtraction() -> NamedTerm:
    """sub = λmn. n pred m : Nat0 → N(Nat0) → Nat0."""
    b = lams([("m", NAT0), ("n", N(NAT0))], app(var("n"), use(predecessor().derivation), var("m")))
    return NamedTerm("sub", _closed(b), "sub m n ≃βη m ∸ n", semantics=lambda m, n: max(m - n, 0))


@cached(COND_CACHE, key=partial(hashkey, "chi_zero"))
def chi_zero(tau: Type) -> NamedTerm:
    """χ0 = λnxy. n (λz.y) x : N(τ) → τ → τ → τ."""
    b = lams([("n", N(tau)), ("x", tau), ("y", tau)], app(var("n"), lam("z", tau, var("y")), var("x")))
    return NamedTerm(
        "chi0", _closed(b), "χ0 0 x y ≃β x and χ0 (n+1) x y ≃β y",
        semantics=lambda n, x, y: x if n == 0 else y,
    )


@cached(COND_CACHE, key=partial(hashkey, "t_zero"))
def t_zero(k: int) -> NamedTerm:
    """T0 : T^(k) → T^(k+1) → T^(k+1), with T0 0 m ≃βη m and T0 (n+1) m ≃βη m+1.

    T0 = λn x s z s' z'. χ0 n (x s z s' z') (s (x s z) s' z').
    """
    b_t = nat0_tower(k)
    head = [("n", b_t), ("x", N(b_t)), ("s", Arrow(b_t, b_t)), ("z", b_t)]
    xsz = app(var("x"), var("s"), var("z"))
    if k == 0:
        body = gen(A, lams(
            [("s'", Arrow(A, A)), ("z'", A)],
            app(
                use(chi_zero(A).derivation),
                inst(var("n"), A),
                app(inst(xsz, A), var("s'"), var("z'")),
                app(inst(app(var("s"), xsz), A), var("s'"), var("z'")),
            ),
        ))
        b = lams(head, body)
    else:
        c_t = nat0_tower(k - 1)
        b = lams(
            head + [("s'", Arrow(c_t, c_t)), ("z'", c_t)],
            app(
                use(chi_zero(c_t).derivation),
                var("n"),
                app(xsz, var("s'"), var("z'")),
                app(var("s"), xsz, var("s'"), var("z'")),
            ),
        )
    return NamedTerm(
        f"t0_{k}", _closed(b), "T0 0 m ≃βη m and T0 (n+1) m ≃βη m+1",
        semantics=lambda n, m: m if n == 0 else m + 1,
    )


@cached(CAST_CACHE, key=partial(hashkey, "cast_up"))
def cast_up(k: int) -> NamedTerm:
    """cu_k : T^(k+2) → T^(k) → T^(k+1); cu_k m n ≃βη n when m ≥ n.

    cu_0 = λmn. m (λx. T0 (sub n x) x) #0
    cu_k = λmn. m (λx. T0 (subt_k (cd m) n (cd x)) x) #0   (k ≥ 1)
    """
    if k < 0:
        raise StdTermError("cu is indexed by k ≥ 0", name="cu", k=k)
    x_t = nat0_tower(k + 1)
    if k == 0:
        diff = app(use(subtraction().derivation), var("n"), var("x"))
    else:
        diff = app(
            use(subt(k).derivation),
            app(use(cd_at(k + 1).derivation), var("m")),
            var("n"),
            app(use(cd_at(k).derivation), var("x")),
        )
    step = lam("x", x_t, app(use(t_zero(k).derivation), diff, var("x")))
    b = lams(
        [("m", nat0_tower(k + 2)), ("n", nat0_tower(k))],
        app(var("m"), step, numeral_at(0, k + 1)),
    )
    return NamedTerm(
        f"cu_{k}", _closed(b), "cu m n ≃βη n as long as m ≥ n",
        requires=lambda m, n: m >= n,
        semantics=lambda m, n: n,
    )


@cached(CAST_CACHE, key=partial(hashkey, "subt"))
def subt(k: int) -> NamedTerm:
    """subt_k : T^(k+1) → T^(k) → T^(k) → T^(k); subt_k L n c ≃βη n ∸ c when L ≥ n ∸ c.

    subt_1     = λmnc. cu_0 m (sub (cd n) c)
    subt_{k+1} = λm n1 n2. cu_k m (subt_k (cd m) (cd n1) (cd n2))
    """
    if k < 1:
        raise StdTermError("subt is defined for k ≥ 1; use sub (cd n) at k = 0", name="subt", k=k)
    if k == 1:
        b = lams(
            [("m", nat0_tower(2)), ("n", nat0_tower(1)), ("c", nat0_tower(1))],
            app(
                use(cast_up(0).derivation),
                var("m"),
                app(use(subtraction().derivation), app(use(cd_at(0).derivation), var("n")), var("c")),
            ),
        )
    else:
        j = k - 1
        cd_j = use(cd_at(j).derivation)
        b = lams(
            [("m", nat0_tower(k + 1)), ("n1", nat0_tower(k)), ("n2", nat0_tower(k))],
            app(
                use(cast_up(j).derivation),
                var("m"),
                app(
                    use(subt(j).derivation),
                    app(use(cd_at(k).derivation), var("m")),
                    app(cd_j, var("n1")),
                    app(cd_j, var("n2")),
                ),
            ),
        )
    return NamedTerm(
        f"subt_{k}", _closed(b), "subt L n c ≃βη n ∸ c as long as L ≥ n ∸ c",
        requires=lambda m, n, c: m >= max(n - c, 0),
        semantics=lambda m, n, c: max(n - c, 0),
    )


@cached(CAST_CACHE, key=partial(hashkey, "cast_up_iter"))
def cast_up_iter(ell: int, k: int) -> NamedTerm:
    """cu^ℓ_k : T^(k+ℓ+1) → T^(k) → T^(k+ℓ).

    cu^0 = λmn.n and cu^{ℓ+1} = λmn. cu_{k+ℓ} m (cu^ℓ (cd m) n).
    """
    if ell < 0 or k < 0:
        raise StdTermError("cu^ℓ_k needs ℓ, k ≥ 0", name="cu_iter", ell=ell, k=k)
    binders = [("m", nat0_tower(k + ell + 1)), ("n", nat0_tower(k))]
    if ell == 0:
        b = lams(binders, var("n"))
    else:
        j = ell - 1
        b = lams(
            binders,
            app(
                use(cast_up(k + j).derivation),
                var("m"),
                app(use(cast_up_iter(j, k).derivation), app(use(cd_at(k + ell).derivation), var("m")), var("n")),
            ),
        )
    return NamedTerm(
        f"cu^{ell}_{k}", _closed(b), "cu^ℓ m n ≃βη n as long as m ≥ n",
        requires=lambda m, n: ell == 0 or m >= n,
        semantics=lambda m, n: n,
    )


@cached(COND_CACHE, key=partial(hashkey, "chi_zero_lifted"))
def chi_zero_lifted(k: int, ell: int) -> NamedTerm:
    """χ̃0 = λnxysz. χ0 n (xsz) (ysz) : (T^(K))³ → T^(K) with K = k+ℓ+1."""
    big = k + ell + 1
    b_t = nat0_tower(big - 1)
    nb = N(b_t)
    b = lams(
        [("n", nb), ("x", nb), ("y", nb), ("s", Arrow(b_t, b_t)), ("z", b_t)],
        app(
            use(chi_zero(b_t).derivation),
            var("n"),
            app(var("x"), var("s"), var("z")),
            app(var("y"), var("s"), var("z")),
        ),
    )
    return NamedTerm(
        f"chi0~_{big}", _closed(b), "χ̃0 0 i j ≃βη i and χ̃0 (n+1) i j ≃βη j",
        semantics=lambda n, i, j: i if n == 0 else j,
    )


def sum_step(mode: Literal["sum", "prod"], g: "CompiledFn", k: int) -> NamedTerm:
    """The iterated step of a bounded sum or product over ``g`` compiled at k+1.

    λ v w⃗ n⃗ m. P  with
      P = λp. ⟨T (fst p) (snd p), suc (snd p)⟩
      T = λxy. χ̃0 (subt v m y) x (op x (cu^ℓ v (t_g w⃗ y n⃗)))
    where op is add for sums and mul for products. Iterating P from ⟨0,0⟩
    (sums) or ⟨1,0⟩ (products) accumulates g(i, n⃗) for i < m in the left
    component, given a large enough parameter for v and w⃗.
    """
    ell = g.ell
    big = k + ell + 1
    a_t = nat0_tower(big)
    below = nat0_tower(big - 1)
    pair_t = Prod(a_t, a_t)
    ws = [f"w{i}" for i in range(len(g.etas))]
    ns = [f"n{i}" for i in range(g.arity - 1)]
    binders = [("v", nat0_tower(big + 1))]
    binders += list(zip(ws, g.etas))
    binders += [(n, a_t) for n in ns]
    binders += [("m", a_t)]

    g_value = app(use(g.derivation), *[var(w) for w in ws], var("y"), *[var(n) for n in ns])
    lifted = app(use(cast_up_iter(ell, k + 1).derivation), var("v"), g_value)
    op = basic("add" if mode == "sum" else "mul", below)
    accumulate = app(use(op.derivation), var("x"), lifted)
    t_body = app(
        use(chi_zero_lifted(k, ell).derivation),
        app(use(subt(big).derivation), var("v"), var("m"), var("y")),
        var("x"),
        accumulate,
    )
    t = lams([("x", a_t), ("y", a_t)], t_body)
    step = lam(
        "p",
        pair_t,
        pair(app(t, fst(var("p")), snd(var("p"))), app(use(basic("suc", below).derivation), snd(var("p")))),
    )
    return NamedTerm(
        f"{mode}_step",
        _closed(lams(binders, step)),
        "⟨s, i⟩ ↦ ⟨s ∘ g(i, n⃗), i+1⟩ if i < m else ⟨s, i+1⟩",
    )


STD_BUILDERS: dict[str, Callable[[int, int], NamedTerm]] = {
    "suc": lambda k, ell: basic("suc", None if k == 0 else nat0_tower(k - 1)),
    "add": lambda k, ell: basic("add", None if k == 0 else nat0_tower(k - 1)),
    "mul": lambda k, ell: basic("mul", None if k == 0 else nat0_tower(k - 1)),
    "cd": lambda k, ell: cd_at(k),
    "pred": lambda k, ell: predecessor(),
    "sub": lambda k, ell: subtraction(),
    "chi0": lambda k, ell: chi_zero(nat0_tower(k)),
    "t0": lambda k, ell: t_zero(k),
    "cu": lambda k, ell: cast_up(k),
    "subt": lambda k, ell: subt(k),
    "cu_iter": lambda k, ell: cast_up_iter(ell, k),
    "chi0_lifted": lambda k, ell: chi_zero_lifted(k, ell),
}


def named(name: str, k: int = 0, ell: int = 0) -> NamedTerm:
    """Look up a named term by its CLI name; k picks the Nat0^(k) instance."""
    try:
        builder = STD_BUILDERS[name]
    except KeyError:
        raise StdTermError(f"unknown named term {name}", name=name)
    return builder(k, ell)


def get_cache_stats() -> dict:
    """Get cache statistics for monitoring."""
    return {
        "basic_cache_size": len(BASIC_CACHE),
        "cast_cache_size": len(CAST_CACHE),
        "cond_cache_size": len(COND_CACHE),
    }
