import json

import pytest

from arith import var
from asymptotics import N
from its_parser import parse
from models import AsymClass, BoundResult
from pipeline import simplify
import report

x = var("x")


def _bound():
    r = parse("f(x) -{x}-> NIL :|: x > 0\n").rules[0]
    return BoundResult(AsymClass.poly(1), r, {x: N}, trace=["{x: +} solved"])


def test_text_report():
    text = report.render_text(_bound())
    assert text.splitlines() == [
        "Asymptotic lower bound: Omega(n)",
        "Concrete bound: x [x > 0]",
        "Witness: x = n",
    ]


def test_constant_report_without_rule():
    text = report.render_text(BoundResult(AsymClass.const()))
    assert "Concrete bound: none" in text
    assert "Witness" not in text


def test_proof_without_steps():
    text = report.render_text(_bound(), proof=True)
    assert report.NO_STEPS in text
    assert "Limit problems:" in text


def test_proof_lists_simplification_steps(load):
    s = simplify(load("fig1"))
    text = report.render_text(_bound(), s, proof=True)
    assert "1. " in text
    assert "loop acceleration" in text
    assert report.NO_STEPS not in text


def test_exponential_note():
    b = BoundResult(AsymClass.exp(base=2**0.5))
    assert report.asymptotic_text(b) == "EXP (>= Omega(1.41^n))"


def test_json_report(load):
    s = simplify(load("fig1"))
    data = json.loads(report.render(_bound(), s, "json"))
    assert set(data) == {"asymptotic", "concrete_bound", "guard", "witness", "proof_steps"}
    assert data["asymptotic"] == "Omega(n)"
    assert data["witness"] == {"x": "n"}
    assert data["proof_steps"][-1]["kind"] == "asymptotics"
    assert len(data["proof_steps"]) == len(s.steps) + 1


def test_unknown_format():
    with pytest.raises(ValueError):
        report.render(_bound(), fmt="xml")
