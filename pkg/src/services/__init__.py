# src/services/__init__.py

from src.services.elemc import (
    parse_elem,
    format_elem,
    eval_oracle,
    two_tower,
    growth_bound,
)
from src.services.stdterms import (
    named,
    get_cache_stats,
)
from src.services.compiler import (
    compile_lemma,
    compile_top,
    audit_top,
    run_compiled,
    run_lemma,
)
from src.services.cutelim import (
    annotate,
    reduce_rank,
    cut_elim_to_rank1,
    soundness_pipeline,
    evaluate_via_cutelim,
)

__all__ = [
    "parse_elem",
    "format_elem",
    "eval_oracle",
    "two_tower",
    "growth_bound",
    "named",
    "get_cache_stats",
    "compile_lemma",
    "compile_top",
    "audit_top",
    "run_compiled",
    "run_lemma",
    "annotate",
    "reduce_rank",
    "cut_elim_to_rank1",
    "soundness_pipeline",
    "evaluate_via_cutelim",
]
