# src/cli.py

"""Command line interface.

Every command validates its flags into a command model before touching
any file, prints key=value lines on stdout and reports domain errors as
one ``error=<code> ...`` line on stderr.
"""

import functools
import logging
from pathlib import Path
from typing import Callable

import click
from pydantic import ValidationError

from src.core.config import IS_PRODUCTION
from src.core.errors import ElemLamError, InvariantError
from src.core.models import (
    CheckCommand,
    CompileCommand,
    CutElimCommand,
    EqCheckCommand,
    NormalizeCommand,
    RunCommand,
    SoundEvalCommand,
    StdCommand,
    STD_NAMES,
    render_value,
)
from src.calculus.parser import format_term, format_type, parse_term
from src.calculus.reduction import beta_eq, beta_eta_eq, normalize
from src.calculus.typing_rules import check_derivation, dump_derivation, load_derivation
from src.services.compiler import (
    compile_lemma,
    compile_report,
    compile_top,
    default_parameter,
    run_compiled,
    run_lemma,
)
from src.services.cutelim import annotate, check_ranked, reduce_rank, soundness_pipeline
from src.services.elemc import parse_elem
from src.services.stdterms import named

logger = logging.getLogger(__name__)


def emit(**fields) -> None:
    for key, value in fields.items():
        if value is not None:
            click.echo(f"{key}={render_value(value)}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ElemLamError(f"cannot read {path}: {e.strerror}", code="io", path=path) from e


def _validated(model, **values):
    try:
        return model(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise click.UsageError(problems)


def handle_errors(fn: Callable) -> Callable:
    """Map domain errors to exit code 1 with a structured diagnostic."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ElemLamError as e:
            record = e.as_record()
            click.echo(" ".join(f"{k}={render_value(v)}" for k, v in record.items() if k != "message"), err=True)
            click.echo(f"message={record['message']}", err=True)
            raise click.exceptions.Exit(1)
        except (click.ClickException, click.exceptions.Exit):
            raise
        except Exception as e:
            logger.error(f"Unhandled exception: {type(e).__name__}: {e}", exc_info=True)
            # 本番環境では詳細を出さない
            if IS_PRODUCTION:
                click.echo("error=internal", err=True)
            else:
                click.echo(f"error=internal type={type(e).__name__} message={e}", err=True)
            raise click.exceptions.Exit(1)
    return wrapper


@click.group()
def cli():
    """Elementary second-order lambda calculus toolkit."""


@cli.command()
@click.argument("path")
@handle_errors
def check(path):
    """Validate a derivation file."""
    cmd = _validated(CheckCommand, path=path)
    d = load_derivation(_read(cmd.path))
    check_derivation(d)
    emit(status="ok", term=format_term(d.term), type=format_type(d.type), height=d.height, nodes=d.nodes)


@cli.command("normalize")
@click.argument("path")
@click.option("--fuel", type=int, default=None, help="Step budget.")
@click.option("--max-nodes", type=int, default=None, help="Node budget for intermediate terms.")
@handle_errors
def normalize_cmd(path, fuel, max_nodes):
    """Normalize the term in a file (normal order)."""
    values = {"path": path}
    if fuel is not None:
        values["fuel"] = fuel
    if max_nodes is not None:
        values["max_nodes"] = max_nodes
    cmd = _validated(NormalizeCommand, **values)
    result = normalize(parse_term(_read(cmd.path)), cmd.fuel, max_nodes=cmd.max_nodes)
    emit(
        status="normal" if result.normal else "exhausted",
        steps=result.steps,
        normal_form=format_term(result.term),
    )


@cli.command()
@click.argument("path_a")
@click.argument("path_b")
@click.option("--eta", is_flag=True, help="Compare up to βη.")
@click.option("--fuel", type=int, default=None)
@handle_errors
def eqcheck(path_a, path_b, eta, fuel):
    """Decide β (or βη) equality of two terms."""
    values = {"path_a": path_a, "path_b": path_b, "eta": eta}
    if fuel is not None:
        values["fuel"] = fuel
    cmd = _validated(EqCheckCommand, **values)
    a, b = parse_term(_read(cmd.path_a)), parse_term(_read(cmd.path_b))
    equal = beta_eta_eq(a, b, cmd.fuel) if cmd.eta else beta_eq(a, b, cmd.fuel)
    emit(equal=equal)


@cli.command()
@click.option("--name", required=True, type=click.Choice(STD_NAMES))
@click.option("--k", "k", type=int, default=0, show_default=True)
@click.option("--ell", type=int, default=0, show_default=True)
@click.option("--emit", "emit_kind", type=click.Choice(["term", "derivation"]), default="term")
@handle_errors
def std(name, k, ell, emit_kind):
    """Print a named arithmetic term."""
    cmd = _validated(StdCommand, name=name, k=k, ell=ell, emit=emit_kind)
    t = named(cmd.name, cmd.k, cmd.ell)
    if cmd.emit == "derivation":
        click.echo(dump_derivation(t.derivation))
    else:
        emit(name=t.name, term=format_term(t.term), type=format_type(t.type))


@cli.command("compile")
@click.option("--def", "def_path", required=True, help="Definition file (.elem).")
@click.option("--emit", "emit_kind", type=click.Choice(["term", "derivation", "report"]), default="term")
@click.option("--k", "k", type=int, default=None, help="Compile the parameterized form at level k.")
@handle_errors
def compile_cmd(def_path, emit_kind, k):
    """Compile an elementary definition."""
    cmd = _validated(CompileCommand, def_path=def_path, emit=emit_kind, k=k)
    e = parse_elem(_read(cmd.def_path))
    c = compile_top(e) if cmd.k is None else compile_lemma(e, cmd.k)
    if cmd.emit == "derivation":
        click.echo(dump_derivation(c.derivation))
    elif cmd.emit == "report":
        click.echo(compile_report(c).as_line())
    else:
        emit(term=format_term(c.term), type=format_type(c.derivation.type))


@cli.command()
@click.option("--def", "def_path", required=True, help="Definition file (.elem).")
@click.option("--args", "args", default="", help="Comma separated inputs, e.g. 5,3.")
@click.option("--fuel", type=int, default=None)
@click.option("--via", type=click.Choice(["top", "lemma"]), default="lemma", show_default=True)
@click.option("--k", "k", type=int, default=0, show_default=True)
@click.option("--param", type=int, default=None, help="Parameter numeral for the parameterized form.")
@click.option("--report", is_flag=True)
@handle_errors
def run(def_path, args, fuel, via, k, param, report):
    """Evaluate a compiled definition on numerals."""
    values = {"def_path": def_path, "args": args, "via": via, "k": k, "param": param, "report": report}
    if fuel is not None:
        values["fuel"] = fuel
    cmd = _validated(RunCommand, **values)
    e = parse_elem(_read(cmd.def_path))
    if cmd.via == "top":
        value = run_compiled(compile_top(e), cmd.args, cmd.fuel)
        used = None
    else:
        c = compile_lemma(e, cmd.k)
        used = cmd.param if cmd.param is not None else default_parameter(c, cmd.args)
        value = run_lemma(c, used, cmd.args, cmd.fuel)
    if cmd.report:
        emit(value=value, via=cmd.via, param=used)
    else:
        click.echo(str(value))


@cli.command()
@click.option("--derivation", "deriv_path", required=True)
@click.option("--to-rank", type=int, default=1, show_default=True)
@click.option("--report", is_flag=True, help="Print per-pass telemetry.")
@handle_errors
def cutelim(deriv_path, to_rank, report):
    """Lower the cut-rank of a derivation."""
    cmd = _validated(CutElimCommand, deriv_path=deriv_path, to_rank=to_rank, report=report)
    rd = annotate(load_derivation(_read(cmd.deriv_path)))
    check_ranked(rd)
    passes = [rd]
    while rd.k > cmd.to_rank:
        rd = reduce_rank(rd)
        passes.append(rd)
    if cmd.report:
        for i, p in enumerate(passes):
            emit(**{"pass": i, "m": p.m, "k": p.k, "size": p.term.size, "nodes": p.derivation.nodes})
    emit(status="ok", m=rd.m, k=rd.k, term=format_term(rd.term))


@cli.command()
@click.option("--derivation", "deriv_path", required=True)
@click.option("--arg", "arg", type=int, required=True)
@click.option("--report", is_flag=True)
@handle_errors
def soundeval(deriv_path, arg, report):
    """Evaluate x:Nat1 ⊢ t : Nat0 at a numeral through cut elimination."""
    cmd = _validated(SoundEvalCommand, deriv_path=deriv_path, arg=arg, report=report)
    d = load_derivation(_read(cmd.deriv_path))
    result = soundness_pipeline(d, cmd.arg)
    if not result.agree:
        raise InvariantError("pipeline and direct evaluation disagree", code="disagreement")
    if cmd.report:
        for record in result.passes:
            click.echo(record.as_line())
        emit(value=result.value, direct=result.direct, occurrences=result.occurrences, xi_rank=result.xi_rank)
    else:
        click.echo(str(result.value))


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="elemlam", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return rv if isinstance(rv, int) else 0
