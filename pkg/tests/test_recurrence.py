import pytest
import sympy as sp

from arith import apply, canonical, var
from errors import DegreeTooHigh, Unsolvable
from pipeline import simplify
from program import update
from recurrence import INDEX, closed_sum, iterated_cost, iterated_update, poly_sum, unroll

x, y, z, tv = var("x"), var("y"), var("z"), var("tv")
n = var("n")


def test_power_sums():
    assert poly_sum(INDEX, n) == canonical(n**2 / 2 - n / 2)
    assert poly_sum(INDEX**2, n) == canonical(n**3 / 3 - n**2 / 2 + n / 6)
    assert poly_sum(sp.Integer(3), n) == 3 * n
    with pytest.raises(DegreeTooHigh):
        poly_sum(INDEX**7, n)


def test_geometric_sums():
    assert closed_sum(2**INDEX, n) == canonical(2**n - 1)
    assert closed_sum(3 * 2**INDEX + INDEX, n) == canonical(3 * 2**n - 3 + n**2 / 2 - n / 2)
    with pytest.raises(Unsolvable):
        closed_sum(INDEX * 2**INDEX, n)


def test_counting_loop_closed_form(load):
    mu = update(load("fig1").rules[1])
    mu_it = iterated_update(mu, tv)
    assert mu_it[x] == x - tv
    assert mu_it[y] == canonical(y + tv * x - tv**2 / 2 + tv / 2)
    assert iterated_cost(sp.Integer(1), mu, mu_it, tv) == tv


def test_geometric_update():
    mu = {y: 2 * y}
    mu_it = iterated_update(mu, tv)
    assert mu_it[y] == canonical(2**tv * y)
    assert iterated_cost(y, mu, mu_it, tv) == canonical(2**tv * y - y)


def test_assignment_update():
    mu = {x: x - 1, z: x}
    mu_it = iterated_update(mu, tv)
    assert mu_it[z] == x - tv + 1


@pytest.mark.parametrize(
    "mu",
    [
        {x: x - 1, y: y + x},
        {x: x + 2, y: y + x**2, z: z + y},
        {x: 3 * x + 1},
        {x: x + 1, y: 2 * y + 1},
    ],
)
def test_closed_forms_unroll(mu):
    mu_it = iterated_update(mu, tv)
    cost = canonical(x + 1)
    c_it = iterated_cost(cost, mu, mu_it, tv)
    for k in range(1, 11):
        step = unroll(mu, k)
        for v in mu:
            assert apply(mu_it[v], {tv: k}) == apply(v, step)
        total = sum((apply(cost, unroll(mu, i)) for i in range(k)), sp.Integer(0))
        assert apply(c_it, {tv: k}) == canonical(total)


def test_mutual_dependency_is_unsolvable():
    with pytest.raises(Unsolvable):
        iterated_update({x: y, y: x}, tv)


def test_negative_multiplier_is_unsolvable():
    with pytest.raises(Unsolvable):
        iterated_update({x: -x}, tv)


def _is_loop_summary(r):
    return len(r.rhs) == 1 and not r.rhs[0].is_sink


@pytest.mark.parametrize("name", ["fig1", "facsum", "sqrt", "unbounded", "rational", "conditional"])
def test_accelerated_loops_match_unrolling(load, name):
    result = simplify(load(name))
    summaries = [r for r in result.accelerated_rules() if _is_loop_summary(r)]
    assert summaries

    for acc in summaries:
        loop = result.history[acc.provenance.parents[0]]
        mu = update(loop)
        counter = var(acc.provenance.detail["tv"])
        for k in range(1, 6):
            at_k = {counter: sp.Integer(k)}
            unrolled = unroll(mu, k)
            for param, arg in zip(acc.params, acc.rhs[0].args):
                assert canonical(apply(arg, at_k) - apply(param, unrolled)) == 0, (acc.name, param, k)
            total = sum((apply(loop.cost, unroll(mu, i)) for i in range(k)), sp.Integer(0))
            assert canonical(apply(acc.cost, at_k) - total) == 0, (acc.name, k)
