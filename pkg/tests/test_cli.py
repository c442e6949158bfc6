# tests/test_cli.py

import pytest
from click.testing import CliRunner

from src.cli import cli, main
from src.calculus.builders import app, build_closed, lam, numeral, use, var
from src.calculus.reduction import reduce_with_derivation
from src.calculus.types import A0, NAT1, N
from src.calculus.typing_rules import context, dump_derivation, numeral_derivation
from src.services.compiler import compile_top
from src.services.elemc import Proj

OMEGA = "(\\x. x x) (\\x. x x)"


@pytest.fixture
def runner():
    return CliRunner()


def lines(text):
    return text.strip().splitlines()


def test_check(runner, write_file):
    path = write_file("two.json", dump_derivation(numeral_derivation(2, A0)))
    result = runner.invoke(cli, ["check", path])
    assert result.exit_code == 0
    out = lines(result.stdout)
    assert out[0] == "status=ok"
    assert "height=4" in out
    assert "type=N(a0_a)" in out


def test_check_rejects_bad_suffix(runner, write_file):
    path = write_file("two.txt", "{}")
    result = runner.invoke(cli, ["check", path])
    assert result.exit_code == 2


def test_check_missing_file(runner, tmp_path):
    result = runner.invoke(cli, ["check", str(tmp_path / "missing.json")])
    assert result.exit_code == 1
    err = lines(result.stderr)
    assert err[0].startswith("error=io")
    assert err[1].startswith("message=")


def test_check_invalid_derivation(runner, write_file):
    path = write_file("bad.json", '{"rule": "Ax", "ctx": {"x": "a0_a"}, "term": "y", "type": "a0_a"}')
    result = runner.invoke(cli, ["check", path])
    assert result.exit_code == 1
    assert "error=axiom-miss" in result.stderr


def test_normalize(runner, write_file):
    path = write_file("t.lam", "(\\x. x) y")
    result = runner.invoke(cli, ["normalize", path])
    assert result.exit_code == 0
    assert lines(result.stdout) == ["status=normal", "steps=1", "normal_form=y"]


def test_normalize_out_of_fuel(runner, write_file):
    path = write_file("omega.lam", OMEGA)
    result = runner.invoke(cli, ["normalize", path, "--fuel", "10"])
    assert result.exit_code == 0
    out = lines(result.stdout)
    assert out[0] == "status=exhausted"
    assert out[1] == "steps=10"


def test_eqcheck(runner, write_file):
    a = write_file("a.lam", "\\x. f x")
    b = write_file("b.lam", "f")
    assert lines(runner.invoke(cli, ["eqcheck", a, b]).stdout) == ["equal=false"]
    assert lines(runner.invoke(cli, ["eqcheck", a, b, "--eta"]).stdout) == ["equal=true"]


def test_std(runner):
    result = runner.invoke(cli, ["std", "--name", "add"])
    assert result.exit_code == 0
    out = lines(result.stdout)
    assert out[0] == "name=add"
    assert out[2] == "type=Nat0 -> Nat0 -> Nat0"


def test_std_unsupported_instance(runner):
    result = runner.invoke(cli, ["std", "--name", "subt", "--k", "0"])
    assert result.exit_code == 1
    assert result.stderr.startswith("error=unsupported-instance")


def test_std_unknown_name(runner):
    result = runner.invoke(cli, ["std", "--name", "nope"])
    assert result.exit_code == 2


def test_compile_report(runner, write_file):
    path = write_file("add.elem", "add")
    result = runner.invoke(cli, ["compile", "--def", path, "--emit", "report"])
    assert result.exit_code == 0
    assert "arity=2" in result.stdout
    assert "s=1" in result.stdout


def test_compile_lemma_form(runner, write_file):
    path = write_file("add.elem", "add")
    result = runner.invoke(cli, ["compile", "--def", path, "--k", "0"])
    assert result.exit_code == 0
    assert "type=Nat0 -> Nat0 -> Nat0" in lines(result.stdout)


def test_run(runner, write_file):
    path = write_file("add.elem", "add")
    assert runner.invoke(cli, ["run", "--def", path, "--args", "2,3"]).stdout.strip() == "5"
    assert runner.invoke(cli, ["run", "--def", path, "--args", "2,3", "--via", "top"]).stdout.strip() == "5"
    result = runner.invoke(cli, ["run", "--def", path, "--args", "2,3", "--report"])
    assert lines(result.stdout) == ["value=5", "via=lemma", "param=0"]


def test_run_bad_arguments(runner, write_file):
    path = write_file("add.elem", "add")
    assert runner.invoke(cli, ["run", "--def", path, "--args", "2,x"]).exit_code == 2
    result = runner.invoke(cli, ["run", "--def", path, "--args", "2"])
    assert result.exit_code == 1
    assert result.stderr.startswith("error=arity")


def test_cutelim(runner, write_file):
    d = build_closed(app(lam("x", N(A0), var("x")), numeral(1, A0)))
    path = write_file("redex.json", dump_derivation(d))
    result = runner.invoke(cli, ["cutelim", "--derivation", path, "--report"])
    assert result.exit_code == 0
    out = lines(result.stdout)
    assert "status=ok" in out
    assert "k=1" in out
    assert out.count("status=ok") == 1


def test_soundeval(runner, write_file):
    d = app(use(compile_top(Proj(0, 1)).derivation), var("x"))(context(x=NAT1))
    path = write_file("ident.json", dump_derivation(reduce_with_derivation(d)))
    result = runner.invoke(cli, ["soundeval", "--derivation", path, "--arg", "2"])
    assert result.exit_code == 0
    assert result.stdout.strip() == "2"
    result = runner.invoke(cli, ["soundeval", "--derivation", path, "--arg", "2", "--report"])
    out = lines(result.stdout)
    assert "value=2" in out
    assert "direct=2" in out
    assert out[0].startswith("name=plug")


def test_main_returns_exit_codes(write_file):
    assert main(["std", "--name", "suc"]) == 0
    assert main(["std", "--name", "subt", "--k", "0"]) == 1
    assert main(["check", write_file("x.txt", "")]) == 2


def test_std_subtraction_family_in_one_process(runner):
    for args, name in (
        (["--name", "sub"], "sub"),
        (["--name", "subt", "--k", "2"], "subt_2"),
        (["--name", "pred"], "pred"),
        (["--name", "cu", "--k", "1"], "cu_1"),
        (["--name", "subt", "--k", "1"], "subt_1"),
    ):
        result = runner.invoke(cli, ["std", *args])
        assert result.exit_code == 0, result.stderr
        assert lines(result.stdout)[0] == f"name={name}"
