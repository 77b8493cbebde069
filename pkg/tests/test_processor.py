import queue
import shutil

import pytest

from asymptotics import N
from models import AsymClass, BoundResult
from processor import (
    Analysis,
    BatchProcessor,
    Options,
    analyze_file,
    analyze_program,
    run_directory,
    summary,
    validate,
)


def _drain(q):
    out = []
    while not q.empty():
        out.append(q.get())
    return out


@pytest.fixture
def folder(tmp_path, example_path):
    for name in ("sqrt", "rational", "fib"):
        shutil.copy(example_path(name), tmp_path / f"{name}.its")
    (tmp_path / "notes.txt").write_text("not a program\n", encoding="utf-8")
    return tmp_path


@pytest.mark.parametrize("workers", [1, 2])
def test_run_directory_keeps_name_order(folder, workers):
    q = queue.Queue()
    worker = BatchProcessor(folder, Options(max_workers=workers), q, {"stop": False})
    results = run_directory(folder, worker.options, worker)
    assert [name for name, _ in results] == ["fib.its", "rational.its", "sqrt.its"]
    assert all(isinstance(out, Analysis) for _, out in results)
    logs = _drain(q)
    assert logs[0] == f"[info] Starting with {workers} worker(s)"
    assert sum(line.startswith("[ok]") for line in logs) == 3


def test_thread_collects_results(folder):
    q = queue.Queue()
    worker = BatchProcessor(folder, Options(), q, {"stop": False})
    worker.start()
    worker.join()
    table = summary(worker.results)
    lines = table.splitlines()
    assert lines[0].split() == ["file", "bound", "concrete"]
    assert "Omega(n^(1/2))" in lines[3]


def test_stop_flag(folder):
    q = queue.Queue()
    worker = BatchProcessor(folder, Options(), q, {"stop": True})
    results = run_directory(folder, worker.options, worker)
    assert all(out == "not analyzed" for _, out in results)
    assert "[x] Stopped by user." in _drain(q)


def test_empty_folder(tmp_path):
    q = queue.Queue()
    worker = BatchProcessor(tmp_path, Options(), q, {"stop": False})
    assert run_directory(tmp_path, worker.options, worker) == []
    assert _drain(q) == ["[!] No .its files found in folder."]


def test_validate_fig1(load):
    p = load("fig1")
    a = analyze_program(p, Options())
    lines = validate(p, a.bound)
    assert lines[0] == "[ok] f0(2, 0, 0, 0): bound 11 <= 13"
    assert all(line.startswith("[ok]") for line in lines)


def test_validate_without_witness(load):
    assert validate(load("fig1"), BoundResult(AsymClass.const())) == ["[info] nothing to validate"]


def test_analyze_file(example_path):
    a = analyze_file(example_path("fib"))
    assert a.name == "fib.its"
    assert a.complete
    assert a.bound.witness
    assert N in a.bound.witness[a.bound.rule.params[0]].free_symbols


def test_option_validation():
    with pytest.raises(ValueError):
        Options(timeout=0)
    with pytest.raises(ValueError):
        Options(smt_timeout_ms=0)
    assert Options(timeout=None).pipeline_config().rule_cap == 1000
