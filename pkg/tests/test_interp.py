from fractions import Fraction

import pytest

from arith import canonical, evaluate, guard_holds, var
from errors import GuardViolated, NoMatch
from interp import Choice, RunBudget, config_of, loop_iterations, max_cost, step, tree_size
from pipeline import simplify

x, u, tv = var("x"), var("u"), var("tv")

FIG1_COST = x**4 / 8 + x**3 / 4 + 7 * x**2 / 8 + 7 * x / 4


def test_step_applies_one_rule(load):
    p = load("fig1")
    c = config_of(("f1", (2, 0, 0, 0)))
    after, cost = step(c, p, Choice(p.rules[1], ("f1", (2, 0, 0, 0)), {}))
    assert after == (("f1", (1, 2, 0, 0)),)
    assert cost == 1


def test_step_with_a_temporary(load):
    p = load("fig1")
    c = config_of(("f3", (0, 0, 0, 5)))
    after, _ = step(c, p, Choice(p.rules[4], ("f3", (0, 0, 0, 5)), {tv: 3}))
    assert after == (("f3", (0, 0, 0, 2)),)


def test_step_errors(load):
    p = load("fig1")
    c = config_of(("f1", (2, 0, 0, 0)))
    with pytest.raises(GuardViolated):
        step(c, p, Choice(p.rules[2], ("f1", (2, 0, 0, 0)), {}))
    with pytest.raises(NoMatch):
        step(c, p, Choice(p.rules[1], ("f1", (3, 0, 0, 0)), {}))
    with pytest.raises(NoMatch):
        step(c, p, Choice(p.rules[4], ("f1", (2, 0, 0, 0)), {tv: 1}))


def test_recursion_splits_the_configuration(load):
    p = load("fib")
    c = config_of(("fib", (3,)))
    after, cost = step(c, p, Choice(p.rules[1], ("fib", (3,)), {}))
    assert after == config_of(("fib", (1,)), ("fib", (2,)))
    assert cost == 1


@pytest.mark.parametrize("n, expected", [(2, 13), (3, 32), (4, 71)])
def test_fig1_runtime_exceeds_the_bound_by_two(load, n, expected):
    found = max_cost(load("fig1"), config_of(("f0", (n, 0, 0, 0))))
    assert not found.truncated
    assert found.value == expected
    assert found.value == evaluate(FIG1_COST, {x: Fraction(n)}) + 2


def test_fib_runtime(load):
    p = load("fib")
    assert max_cost(p, config_of(("f0", (2,)))).value == 3
    assert max_cost(p, config_of(("f0", (3,)))).value == 5


def test_budget_truncates(load):
    found = max_cost(load("fig1"), config_of(("f0", (4, 0, 0, 0))), RunBudget(max_steps=5))
    assert found.truncated
    assert found.value < 71


def test_run_budget_validation():
    with pytest.raises(ValueError):
        RunBudget(max_steps=0)
    with pytest.raises(ValueError):
        RunBudget(tv_range=(3, 1))


def test_loop_iterations_and_tree_size(load):
    assert loop_iterations(load("rational").rules[1], {x: 7}) == 4
    assert loop_iterations(load("fig1").rules[4], {x: 0, var("y"): 0, var("z"): 0, u: 5, tv: 2}) == 3
    assert tree_size(load("fib").rules[1], {x: 2}) == 1
    assert tree_size(load("fib").rules[1], {x: 4}) == 4


@pytest.mark.parametrize("n", range(2, 7))
def test_simplified_fib_cost_never_exceeds_the_runtime(load, n):
    p = load("fib")
    found = max_cost(p, config_of(("f0", (n,))))
    assert not found.truncated
    r = next(r for r in simplify(p).program.rules if r.cost == canonical(2 ** (x / 2 - 1) - 1))
    assert guard_holds(r.guard, {x: Fraction(n)})
    # odd n gives an irrational cost, so compare numerically
    assert float(r.cost.subs(x, n)) <= found.value
