# src/calculus/terms.py

"""Untyped lambda terms with pairs.

Nodes are immutable and cache their free variables, node count and leaf
count at construction. Every traversal here is iterative: numerals such as
#65536 are trees of that depth.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Union

logger = logging.getLogger(__name__)


def _union(a: frozenset[str], b: frozenset[str]) -> frozenset[str]:
    if b <= a:
        return a
    if a <= b:
        return b
    return a | b


@dataclass(frozen=True, slots=True, eq=False)
class Var:
    name: str
    fv: frozenset[str] = field(init=False, repr=False)
    size: int = field(init=False, repr=False)
    leaves: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset((self.name,)))
        object.__setattr__(self, "size", 1)
        object.__setattr__(self, "leaves", 1)


@dataclass(frozen=True, slots=True, eq=False)
class App:
    fun: "Term"
    arg: "Term"
    fv: frozenset[str] = field(init=False, repr=False)
    size: int = field(init=False, repr=False)
    leaves: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", _union(self.fun.fv, self.arg.fv))
        object.__setattr__(self, "size", 1 + self.fun.size + self.arg.size)
        object.__setattr__(self, "leaves", self.fun.leaves + self.arg.leaves)


@dataclass(frozen=True, slots=True, eq=False)
class Lam:
    bound: str
    body: "Term"
    fv: frozenset[str] = field(init=False, repr=False)
    size: int = field(init=False, repr=False)
    leaves: int = field(init=False, repr=False)

    def __post_init__(self):
        fv = self.body.fv
        if self.bound in fv:
            fv = fv - {self.bound}
        object.__setattr__(self, "fv", fv)
        object.__setattr__(self, "size", 1 + self.body.size)
        object.__setattr__(self, "leaves", self.body.leaves)


@dataclass(frozen=True, slots=True, eq=False)
class Pair:
    left: "Term"
    right: "Term"
    fv: frozenset[str] = field(init=False, repr=False)
    size: int = field(init=False, repr=False)
    leaves: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", _union(self.left.fv, self.right.fv))
        object.__setattr__(self, "size", 1 + self.left.size + self.right.size)
        object.__setattr__(self, "leaves", self.left.leaves + self.right.leaves)


@dataclass(frozen=True, slots=True, eq=False)
class ProjL:
    arg: "Term"
    fv: frozenset[str] = field(init=False, repr=False)
    size: int = field(init=False, repr=False)
    leaves: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.arg.fv)
        object.__setattr__(self, "size", 1 + self.arg.size)
        object.__setattr__(self, "leaves", self.arg.leaves)


@dataclass(frozen=True, slots=True, eq=False)
class ProjR:
    arg: "Term"
    fv: frozenset[str] = field(init=False, repr=False)
    size: int = field(init=False, repr=False)
    leaves: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.arg.fv)
        object.__setattr__(self, "size", 1 + self.arg.size)
        object.__setattr__(self, "leaves", self.arg.leaves)


Term = Union[Var, App, Lam, Pair, ProjL, ProjR]


def free_vars(t: Term) -> frozenset[str]:
    return t.fv


def size(t: Term) -> int:
    """Number of constructor nodes."""
    return t.size


def leaf_count(t: Term) -> int:
    """Number of variable occurrences."""
    return t.leaves


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    """Prime ``base`` until it avoids every name in ``avoid``."""
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


def apps(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def lams(names: str | list[str], body: Term) -> Term:
    if isinstance(names, str):
        names = names.split()
    for n in reversed(names):
        body = Lam(n, body)
    return body


# Rebuild opcodes
_VISIT, _APP, _LAM, _PAIR, _FST, _SND = range(6)


def substitute_many(t: Term, sub: Mapping[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution.

    Bound variables that would capture a free variable of a substituted term
    are primed. Subterms without free occurrences of the substituted names are
    shared, not copied.
    """
    if not sub or t.fv.isdisjoint(sub):
        return t
    out: list[Term] = []
    stack: list[tuple] = [(_VISIT, t, sub)]
    while stack:
        op, node, env = stack.pop()
        if op == _VISIT:
            if not env or node.fv.isdisjoint(env):
                out.append(node)
            elif isinstance(node, Var):
                out.append(env[node.name])
            elif isinstance(node, App):
                stack.append((_APP, None, None))
                stack.append((_VISIT, node.arg, env))
                stack.append((_VISIT, node.fun, env))
            elif isinstance(node, Pair):
                stack.append((_PAIR, None, None))
                stack.append((_VISIT, node.right, env))
                stack.append((_VISIT, node.left, env))
            elif isinstance(node, ProjL):
                stack.append((_FST, None, None))
                stack.append((_VISIT, node.arg, env))
            elif isinstance(node, ProjR):
                stack.append((_SND, None, None))
                stack.append((_VISIT, node.arg, env))
            else:
                body_fv = node.body.fv
                inner = {k: v for k, v in env.items() if k != node.bound and k in body_fv}
                if not inner:
                    out.append(node)
                    continue
                bound = node.bound
                if any(bound in v.fv for v in inner.values()):
                    avoid: set[str] = set(body_fv)
                    for v in inner.values():
                        avoid |= v.fv
                    bound = fresh_name(node.bound, avoid)
                    inner[node.bound] = Var(bound)
                stack.append((_LAM, bound, None))
                stack.append((_VISIT, node.body, inner))
        elif op == _APP:
            arg = out.pop()
            out.append(App(out.pop(), arg))
        elif op == _PAIR:
            right = out.pop()
            out.append(Pair(out.pop(), right))
        elif op == _FST:
            out.append(ProjL(out.pop()))
        elif op == _SND:
            out.append(ProjR(out.pop()))
        else:
            out.append(Lam(node, out.pop()))
    return out[0]


def substitute(t: Term, x: str, s: Term) -> Term:
    """t[x := s]"""
    return substitute_many(t, {x: s})


def rename_bound(t: Lam, new: str) -> Lam:
    """Alpha-rename the outer binder of ``t`` to ``new`` (must be fresh for the body)."""
    if new == t.bound:
        return t
    return Lam(new, substitute(t.body, t.bound, Var(new)))


def alpha_eq(t1: Term, t2: Term) -> bool:
    if t1 is t2:
        return True
    if t1.size != t2.size or t1.fv != t2.fv:
        return False
    stack: list[tuple[Term, Term, dict, dict, int]] = [(t1, t2, {}, {}, 0)]
    while stack:
        a, b, ma, mb, depth = stack.pop()
        if a is b and not ma and not mb:
            continue
        if type(a) is not type(b) or a.size != b.size:
            return False
        if isinstance(a, Var):
            la, lb = ma.get(a.name), mb.get(b.name)
            if la is None and lb is None:
                if a.name != b.name:
                    return False
            elif la != lb:
                return False
        elif isinstance(a, App):
            stack.append((a.arg, b.arg, ma, mb, depth))
            stack.append((a.fun, b.fun, ma, mb, depth))
        elif isinstance(a, Pair):
            stack.append((a.right, b.right, ma, mb, depth))
            stack.append((a.left, b.left, ma, mb, depth))
        elif isinstance(a, (ProjL, ProjR)):
            stack.append((a.arg, b.arg, ma, mb, depth))
        else:
            na = dict(ma)
            nb = dict(mb)
            na[a.bound] = depth
            nb[b.bound] = depth
            stack.append((a.body, b.body, na, nb, depth + 1))
    return True


def encode_numeral(n: int, f: str = "f", x: str = "x") -> Term:
    """λf.λx. f^n x"""
    if n < 0:
        raise ValueError("numerals are natural numbers")
    body: Term = Var(x)
    fun = Var(f)
    for _ in range(n):
        body = App(fun, body)
    return Lam(f, Lam(x, body))


def decode_numeral(t: Term) -> int | None:
    """Read back λf.λx. f^n x up to alpha; λx.x reads as 1."""
    if not isinstance(t, Lam):
        return None
    f = t.bound
    inner = t.body
    if isinstance(inner, Var):
        return 1 if inner.name == f else None
    if not isinstance(inner, Lam):
        return None
    x = inner.bound
    body = inner.body
    if f == x:
        return 0 if isinstance(body, Var) and body.name == x else None
    n = 0
    while isinstance(body, App):
        if not (isinstance(body.fun, Var) and body.fun.name == f):
            return None
        body = body.arg
        n += 1
    if isinstance(body, Var) and body.name == x:
        return n
    return None


def eta_contract(t: Term) -> Term:
    """Exhaustive η-contraction: λx. r x ▷ r when x ∉ fv(r)."""
    out: list[Term] = []
    stack: list[tuple] = [(_VISIT, t, None)]
    while stack:
        op, node, extra = stack.pop()
        if op == _VISIT:
            if isinstance(node, Var):
                out.append(node)
            elif isinstance(node, App):
                stack.append((_APP, node, None))
                stack.append((_VISIT, node.arg, None))
                stack.append((_VISIT, node.fun, None))
            elif isinstance(node, Pair):
                stack.append((_PAIR, node, None))
                stack.append((_VISIT, node.right, None))
                stack.append((_VISIT, node.left, None))
            elif isinstance(node, ProjL):
                stack.append((_FST, node, None))
                stack.append((_VISIT, node.arg, None))
            elif isinstance(node, ProjR):
                stack.append((_SND, node, None))
                stack.append((_VISIT, node.arg, None))
            else:
                stack.append((_LAM, node, None))
                stack.append((_VISIT, node.body, None))
        elif op == _APP:
            arg = out.pop()
            fun = out.pop()
            out.append(node if fun is node.fun and arg is node.arg else App(fun, arg))
        elif op == _PAIR:
            right = out.pop()
            left = out.pop()
            out.append(node if left is node.left and right is node.right else Pair(left, right))
        elif op == _FST:
            arg = out.pop()
            out.append(node if arg is node.arg else ProjL(arg))
        elif op == _SND:
            arg = out.pop()
            out.append(node if arg is node.arg else ProjR(arg))
        else:
            body = out.pop()
            if (
                isinstance(body, App)
                and isinstance(body.arg, Var)
                and body.arg.name == node.bound
                and node.bound not in body.fun.fv
            ):
                out.append(body.fun)
            else:
                out.append(node if body is node.body else Lam(node.bound, body))
    return out[0]


def is_lambda_free(t: Term) -> bool:
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Lam):
            return False
        if isinstance(node, (App, Pair)):
            stack.extend((node.fun, node.arg) if isinstance(node, App) else (node.left, node.right))
        elif isinstance(node, (ProjL, ProjR)):
            stack.append(node.arg)
    return True
