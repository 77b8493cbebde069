import json
import shutil

import pytest

from cli import build_parser, run
from config import EXIT_INTERNAL, EXIT_OK, EXIT_PARSE
import smt


@pytest.fixture(autouse=True)
def restore_solver():
    yield
    smt.configure("", 2000)


def test_single_file(example_path, capsys):
    assert run([str(example_path("fig1")), "--depth-cap", "12"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "Asymptotic lower bound: Omega(n^4)"
    assert "Witness: x = n" in out


def test_json_output(example_path, capsys):
    assert run([str(example_path("rational")), "--format", "json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["asymptotic"] == "Omega(n)"
    assert data["proof_steps"]


def test_report_and_proof_files(example_path, tmp_path, capsys):
    out = tmp_path / "result"
    proof = tmp_path / "proofs" / "fib"
    assert run([str(example_path("fib")), "--output", str(out), "--proof", str(proof)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert (tmp_path / "result.txt").read_text(encoding="utf-8") == printed
    assert "Proof" in (tmp_path / "proofs" / "fib.txt").read_text(encoding="utf-8")


def test_validation_lines(example_path, capsys):
    assert run([str(example_path("fig1")), "--validate"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[ok] f0(2, 0, 0, 0): bound 11 <= 13" in out
    assert "[err]" not in out


def test_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.its"
    bad.write_text("f(x) -> g(x :|: x > 0\n", encoding="utf-8")
    assert run([str(bad)]) == EXIT_PARSE
    assert "bad.its" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert run([str(tmp_path / "absent.its")]) == EXIT_PARSE


def test_directory(example_path, tmp_path, capsys):
    shutil.copy(example_path("rational"), tmp_path / "a.its")
    (tmp_path / "b.its").write_text("f(x) -> \n", encoding="utf-8")
    assert run([str(tmp_path), "--workers", "2"]) == EXIT_INTERNAL
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["file", "bound", "concrete"]
    assert lines[1].startswith("a.its")
    assert "Omega(n)" in lines[1]
    assert lines[2].startswith("b.its")
    assert "error" in lines[2]


@pytest.mark.parametrize("argv", [["p.its", "--timeout", "0"], ["p.its", "--workers", "-1"]])
def test_options_are_checked(argv):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(argv)
    assert exc.value.code == 2
