import pytest
import sympy as sp

from arith import Constraint, canonical, var
from config import SINK
from errors import IntegralityUnprovable, NotPresent, NotStrictSubset, NotTemporary, RootMismatch
from its_parser import parse
from metering import find_metering, find_metering_rec
from models import Metering, MeteringKind, ProvTag, Term
from program import update
from recurrence import iterated_cost, iterated_update
from transform import (
    accelerate_loop,
    accelerate_recursion,
    chain,
    delete,
    describe,
    instantiate,
    instantiate_heuristic,
    partial_delete,
    simplify_guard,
)

x, y, z, u, tv = (var(n) for n in ("x", "y", "z", "u", "tv"))
tv1 = var("tv1")


def test_simplify_guard_drops_implied_conjuncts():
    g = (Constraint(x - 1), Constraint(x), Constraint(y, False))
    assert simplify_guard(g) == (Constraint(x - 1), Constraint(y, False))


def test_accelerate_counting_loop(load):
    r = load("fig1").rules[1]
    m = find_metering(r)
    mu = update(r)
    mu_it = iterated_update(mu, tv1)
    acc = accelerate_loop(r, m, mu_it, iterated_cost(r.cost, mu, mu_it, tv1), tv1)
    assert acc.cost == tv1
    assert acc.rhs == (Term("f1", (x - tv1, canonical(y + tv1 * x - tv1**2 / 2 + tv1 / 2), z, u)),)
    assert set(acc.guard) == {Constraint(tv1), Constraint(x + 1 - tv1)}
    assert acc.accelerated
    assert acc.provenance.tag is ProvTag.ACCELERATED


def test_accelerate_with_fresh_bound(load):
    r = load("unbounded").rules[1]
    m = find_metering(r)
    mu = update(r)
    mu_it = iterated_update(mu, m.bound)
    acc = accelerate_loop(r, m, mu_it, iterated_cost(r.cost, mu, mu_it, m.bound), m.bound)
    assert acc.cost == m.bound * y
    assert set(acc.guard) == {Constraint(x), Constraint(m.bound)}


def test_accelerate_fib(load):
    r = load("fib").rules[1]
    acc = accelerate_recursion(r, find_metering_rec(r))
    assert acc.cost == canonical(2 ** (x / 2 - 1) - 1)
    assert acc.rhs == (Term(SINK, ()),)
    assert acc.guard == (Constraint(x - 1),)


def test_recursion_with_symbolic_cost_needs_cost_at_least_one():
    r = parse("f(x, y) -{y}-> f(x - 1, y), f(x - 1, y) :|: x > 0\n").rules[1]
    acc = accelerate_recursion(r, Metering((), x, MeteringKind.RECURSION))
    assert Constraint(y - 1, False) in acc.guard


def test_instantiate(load):
    r = load("fig1").rules[4]
    inst = instantiate(r, tv, sp.Integer(1))
    assert inst.rhs[0].args[3] == u - 1
    assert inst.guard == (Constraint(u),)
    assert inst.provenance.tag is ProvTag.INSTANTIATED
    with pytest.raises(NotTemporary):
        instantiate(r, x, sp.Integer(1))
    with pytest.raises(IntegralityUnprovable):
        instantiate(r, tv, x / 2)


def test_instantiate_heuristic_picks_an_attained_bound(load):
    r = load("fig1").rules[4]
    assert instantiate_heuristic(r) == (tv, sp.Integer(1))
    assert instantiate_heuristic(load("fig1").rules[1]) is None


def test_chain(load):
    p = load("fig1")
    c = chain(p.rules[0], p.rules[1], 0)
    assert c.root == "f0"
    assert c.cost == 2
    assert c.rhs == (Term("f1", (x - 1, x, z, u)),)
    assert c.guard == (Constraint(x),)
    assert c.provenance.parents == ("r1", "r2")
    with pytest.raises(RootMismatch):
        chain(p.rules[0], p.rules[3], 0)


def test_chain_renames_clashing_temporaries(load):
    p = load("fig1")
    r5 = p.rules[4]
    twice = chain(r5, r5, 0)
    temps = twice.temporaries()
    assert len(temps) == 2
    assert twice.cost == 2


def test_chain_into_sink(load):
    p = load("fib")
    c = chain(p.rules[0], p.rules[2], 0)
    assert c.rhs == (Term(SINK, ()),)
    assert c.guard == (Constraint(1 - x, False),)


def test_delete(load):
    p = load("fig1")
    q = delete(p, p.rules[2])
    assert [r.name for r in q.rules] == ["r1", "r2", "r4", "r5", "r6"]
    with pytest.raises(NotPresent):
        delete(q, p.rules[2])


def test_partial_delete(load):
    r = load("partial_deletion").rules[1]
    kept = partial_delete(r, [r.rhs[0]])
    assert kept.rhs == (r.rhs[0],)
    assert kept.provenance.tag is ProvTag.PARTIAL_DELETED
    assert partial_delete(r, []).rhs == (Term(SINK, ()),)
    with pytest.raises(NotStrictSubset):
        partial_delete(r, list(r.rhs))
    with pytest.raises(NotStrictSubset):
        partial_delete(r, [Term("f", (x, y))])


def test_describe(load):
    p = load("fig1")
    text = describe(chain(p.rules[0], p.rules[1], 0))
    assert text.startswith("chained of r1, r2")
    assert "x > 0" in text
