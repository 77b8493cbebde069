import math

import numpy as np
import pytest

from arith import Constraint, evaluate, guard_holds, var
from errors import NotLinearizable, NotSimpleLoop
from interp import loop_iterations, tree_size
from its_parser import parse
from metering import find_metering, find_metering_rec, linearize, partition_guard, template_variables
from models import MeteringKind
from program import update
from transform import instantiate

x, y, z, u, tv = (var(n) for n in ("x", "y", "z", "u", "tv"))


def test_counting_loop(load):
    m = find_metering(load("fig1").rules[1])
    assert m.bound == x
    assert m.condition == ()
    assert m.kind is MeteringKind.PLAIN
    assert not m.fresh


def test_rational_metering(load):
    m = find_metering(load("rational").rules[1])
    assert m.bound == x / 2


def test_conditional_metering(load):
    r = load("conditional").rules[1]
    phi, psi = partition_guard(r.guard, update(r))
    assert phi == (Constraint(x),)
    assert set(psi) == {Constraint(y + z - 1, False), Constraint(1 - y - z, False)}
    m = find_metering(r)
    assert m.kind is MeteringKind.CONDITIONAL
    assert m.bound == x
    assert set(m.condition) == set(psi)


def test_invariant_guard_gives_a_fresh_bound(load):
    m = find_metering(load("unbounded").rules[1])
    assert m.fresh
    assert m.bound.name.startswith("tv")
    assert m.condition == (Constraint(x),)


def test_unbounded_decrement_has_no_metering(load):
    assert find_metering(load("fig1").rules[4]) is None


def test_recursion_metering(load):
    m = find_metering_rec(load("fib").rules[1])
    assert m.kind is MeteringKind.RECURSION
    assert m.bound == x / 2 - 1


def test_only_simple_loops(load):
    with pytest.raises(NotSimpleLoop):
        find_metering(load("fib").rules[1])


def test_linearize_isolated_product():
    r = parse("f(x, y, z) -> f(x, y, z + 1) :|: x*y > z\n").rules[1]
    lin, back = linearize(r)
    (w,) = back
    assert back[w] == x * y
    assert lin.guard == (Constraint(w - z),)
    m = find_metering(r)
    assert m.bound == x * y - z
    assert loop_iterations(r, {x: 3, y: 2, z: 0}) == 6


def test_linearize_refuses_updated_products():
    r = parse("f(x, y) -> f(x - 1, y) :|: x*y > 0\n").rules[1]
    with pytest.raises(NotLinearizable):
        linearize(r)


def test_meterings_underestimate_loop_iterations(load):
    rng = np.random.default_rng(11)
    fig1 = load("fig1")
    loops = [fig1.rules[1], instantiate(fig1.rules[4], tv, 1), load("rational").rules[1], load("conditional").rules[1]]
    for r in loops:
        m = find_metering(r)
        checked = 0
        for _ in range(200):
            env = {v: int(rng.integers(-20, 40)) for v in r.params}
            if m.condition:
                env[z] = 1 - env[y]
            if not guard_holds(r.guard + m.condition, env):
                continue
            checked += 1
            assert loop_iterations(r, env) >= math.ceil(evaluate(m.bound, env))
        assert checked > 0


def test_recursion_metering_underestimates_tree_size(load):
    r = load("fib").rules[1]
    m = find_metering_rec(r)
    for n in range(2, 15):
        b = float(evaluate(m.bound, {x: n}))
        assert 2.0**b - 1 <= tree_size(r, {x: n})


def test_template_covers_linearly_updated_variables():
    r = parse("f(x, y, z) -> f(x - z, y * y, z) :|: x > 0 && z > 0 && z < 2\n").rules[1]
    assert template_variables(r, [update(r)]) == [x, z]
    m = find_metering(r)
    assert m.bound == x
    assert m.kind is MeteringKind.CONDITIONAL
