# src/calculus/builders.py

"""Combinators that build derivations from the outside in.

A builder receives the context it is used in and returns a checked
derivation. Composing builders mirrors writing the term.
"""

from typing import Callable

from src.calculus.types import TVar, Type
from src.calculus.typing_rules import (
    EMPTY,
    Context,
    Derivation,
    all_elim,
    all_intro,
    axiom,
    imp_elim,
    imp_intro,
    numeral_derivation,
    prod_elim,
    prod_intro,
    reseat,
)

Builder = Callable[[Context], Derivation]


def var(name: str) -> Builder:
    return lambda ctx: axiom(ctx, name)


def lam(name: str, rho: Type, body: Builder) -> Builder:
    return lambda ctx: imp_intro(ctx, name, body(ctx.set(name, rho)))


def lams(binders: list[tuple[str, Type]], body: Builder) -> Builder:
    for name, rho in reversed(binders):
        body = lam(name, rho, body)
    return body


def app(fun: Builder, *args: Builder) -> Builder:
    def build(ctx: Context) -> Derivation:
        d = fun(ctx)
        for a in args:
            d = imp_elim(d, a(ctx))
        return d
    return build


def pair(left: Builder, right: Builder) -> Builder:
    return lambda ctx: prod_intro(left(ctx), right(ctx))


def fst(p: Builder) -> Builder:
    return lambda ctx: prod_elim(p(ctx), "l")


def snd(p: Builder) -> Builder:
    return lambda ctx: prod_elim(p(ctx), "r")


def gen(alpha: TVar, body: Builder) -> Builder:
    return lambda ctx: all_intro(body(ctx), alpha)


def inst(body: Builder, *sigmas: Type) -> Builder:
    def build(ctx: Context) -> Derivation:
        d = body(ctx)
        for sigma in sigmas:
            d = all_elim(d, sigma)
        return d
    return build


def use(d: Derivation) -> Builder:
    """Use a closed derivation in any context."""
    return lambda ctx: reseat(d, ctx)


def numeral(n: int, tau: Type) -> Builder:
    return lambda ctx: numeral_derivation(n, tau, ctx)


def build_closed(b: Builder) -> Derivation:
    return b(EMPTY)
