import time

import pytest

from errors import AnalysisTimeout
from utils import Deadline, ensure_suffix_path, save_text_atomic


def test_ensure_suffix_path(tmp_path):
    assert ensure_suffix_path(str(tmp_path / "out"), "", "report.txt") == str((tmp_path / "out.txt").resolve())
    assert ensure_suffix_path(str(tmp_path), "", "report.txt") == str((tmp_path / "report.txt").resolve())
    assert ensure_suffix_path("", str(tmp_path), "report.txt") == str((tmp_path / "report.txt").resolve())
    nested = ensure_suffix_path(str(tmp_path / "a" / "b" / "r.json"), "", "report.txt", ".json")
    assert nested.endswith("r.json")
    assert (tmp_path / "a" / "b").is_dir()


def test_save_text_atomic(tmp_path):
    target = tmp_path / "sub" / "r.txt"
    save_text_atomic(str(target), "first\n")
    save_text_atomic(str(target), "second\n")
    assert target.read_text(encoding="utf-8") == "second\n"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["r.txt"]


def test_deadline():
    unlimited = Deadline()
    assert unlimited.remaining() == float("inf")
    unlimited.check("anything")

    short = Deadline(0.01)
    time.sleep(0.02)
    assert short.expired()
    with pytest.raises(AnalysisTimeout, match="during chaining"):
        short.check("chaining")

    with pytest.raises(ValueError):
        Deadline(0)
