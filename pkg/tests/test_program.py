import pytest

from arith import var
from errors import NotSimpleLoop
from models import RuleKind, Term
from program import classify, graph_queries, update, updates, well_formed

x, y = var("x"), var("y")


def test_classify(load):
    fig1 = load("fig1")
    kinds = [classify(r) for r in fig1.rules]
    assert kinds == [
        RuleKind.TAIL_RECURSIVE,
        RuleKind.SIMPLE_LOOP,
        RuleKind.TAIL_RECURSIVE,
        RuleKind.TAIL_RECURSIVE,
        RuleKind.SIMPLE_LOOP,
        RuleKind.TAIL_RECURSIVE,
    ]
    fib = load("fib")
    assert classify(fib.rules[1]) is RuleKind.SIMPLE_RECURSION
    assert classify(fib.rules[2]) is RuleKind.TAIL_RECURSIVE
    facsum = load("facsum")
    assert classify(facsum.rules[1]) is RuleKind.OTHER


def test_update_of_a_simple_loop(load):
    loop = load("fig1").rules[1]
    assert update(loop) == {x: x - 1, y: y + x}
    with pytest.raises(NotSimpleLoop):
        update(load("fib").rules[1])


def test_updates_of_a_recursion(load):
    rec = load("fib").rules[1]
    assert updates(rec) == [{x: x - 1}, {x: x - 2}]


def test_well_formed(load):
    assert all(well_formed(r) for r in load("fig1").rules)
    loop = load("rational").rules[1]
    assert not well_formed(loop.replace(rhs=(Term("f", (x / 2,)),)))
    assert well_formed(loop.replace(rhs=(Term("f", (x * (x - 1) / 2,)),)))


def test_call_graph(load):
    p = load("fig1")
    g = graph_queries(p)
    assert g.reachable_from_start() >= {"f0", "f1", "f2", "f3"}
    assert [r.name for r in g.incoming("f2")] == ["r3", "r6"]
    assert [r.name for r in g.outgoing("f3")] == ["r5", "r6"]
