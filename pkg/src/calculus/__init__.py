# src/calculus/__init__.py

from src.calculus.terms import Term, Var, App, Lam, Pair, ProjL, ProjR
from src.calculus.types import Type, TVar, Arrow, Prod, Forall, NAT0, NAT1
from src.calculus.typing_rules import Derivation, Rule, check_derivation
from src.calculus.parser import parse_term, parse_type, format_term, format_type
from src.calculus.reduction import normalize, normal_form
