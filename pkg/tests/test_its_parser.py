import pytest
import sympy as sp

from arith import Constraint, var
from config import SINK
from errors import ItsSyntaxError, SemanticError
from its_parser import parse
from program import render_program

x, y = var("x"), var("y")

EXAMPLES = ["fig1", "fib", "facsum", "sqrt", "unbounded", "rational", "conditional", "partial_deletion"]


def test_fig1_rules(load):
    p = load("fig1")
    assert p.start == "f0"
    assert [s.name for s in p.params] == ["x", "y", "z", "u"]
    assert [r.name for r in p.rules] == ["r1", "r2", "r3", "r4", "r5", "r6"]
    loop = p.rules[1]
    assert loop.root == "f1"
    assert loop.rhs[0].args == (x - 1, y + x, var("z"), var("u"))
    assert loop.guard == (Constraint(x),)
    assert [t.name for t in p.rules[4].temporaries()] == ["tv"]


def test_nil_and_default_cost():
    p = parse("f(x) -> NIL :|: x <= 0\n")
    r = p.rules[0]
    assert r.cost == 1
    assert r.rhs[0].root == SINK
    assert r.guard == (Constraint(-x, False),)


def test_start_defaults_to_first_rule_and_is_wrapped():
    p = parse("f(x) -{x}-> f(x - 1) :|: x > 0\n")
    assert p.start == "f"
    assert p.rules[0].root == "f"
    assert p.rules[0].cost == 0
    assert p.rules[0].rhs[0].root == "f'"
    assert all(r.root == "f'" for r in p.rules[1:])


def test_narrow_symbols_are_padded():
    p = parse("START: f\nf(x, y) -> g(x)\ng(x) -> NIL\n")
    assert p.params == (x, y)
    assert p.rules[0].rhs[0].args == (x, y)


def test_temporaries_do_not_capture_parameters():
    p = parse("f(x, y) -> g(x)\ng(a) -{y}-> NIL :|: a > y\n")
    g = p.rules[1]
    assert g.params == (x, y)
    (tv,) = g.temporaries()
    assert tv.name.startswith("tv")
    assert g.cost == tv


def test_syntax_error_position():
    with pytest.raises(ItsSyntaxError) as err:
        parse("START: f\nf(x) -{1}-> g(x\n")
    assert err.value.line == 2
    assert err.value.column > 0
    with pytest.raises(ItsSyntaxError):
        parse("f(x) -{1}-> g(x) :|: x $ 0\n")


@pytest.mark.parametrize(
    "text",
    [
        "",
        "# only a comment\n",
        "f(x) -> g(x)\ng(x, y) -> NIL\nh(x) -> g(x)\n",
        "f(x, x) -> NIL\n",
        "f(x) -> sink(x)\n",
        "f(x) -> g(x / 2)\n",
    ],
)
def test_semantic_errors(text):
    with pytest.raises(SemanticError):
        parse(text)


@pytest.mark.parametrize("name", EXAMPLES)
def test_rendered_program_parses_back(load, name):
    p = load(name)
    assert parse(render_program(p)) == p


def test_rendered_wrapped_program_parses_back():
    p = parse("f(x) -{x}-> f(x - 1), f(x - 2) :|: x > 1\nf(x) -> NIL :|: x <= 1\n")
    again = parse(render_program(p))
    assert again == p
    assert again.start == "f"


def test_rational_constants():
    p = parse("f(x) -{1/2*x^2 + 1/2*x}-> NIL :|: 2*x >= 1\n")
    r = p.rules[0]
    assert r.cost == x**2 / 2 + x / 2
    assert r.guard == (Constraint(2 * x - 1, False),)
    assert r.cost.free_symbols == {x}
    assert isinstance(r.cost, sp.Expr)
