import pytest

from arith import Constraint, canonical, guard_formula, total_degree, var
from errors import AnalysisTimeout
from models import ProvTag
from pipeline import PipelineConfig, Simplifier, provenance_chain, simplify
import smt
from utils import Deadline

x, y, z = var("x"), var("y"), var("z")

FIG1_COST = canonical(x**4 / 8 + x**3 / 4 + 7 * x**2 / 8 + 7 * x / 4)


def _rule_with_cost(result, cost):
    found = [r for r in result.program.rules if r.cost == cost]
    assert found, [str(r) for r in result.program.rules]
    return found[0]


@pytest.mark.parametrize(
    "name", ["fig1", "fib", "facsum", "sqrt", "unbounded", "rational", "conditional", "partial_deletion"]
)
def test_examples_are_simplified(load, name):
    result = simplify(load(name))
    assert result.complete
    assert result.program.is_simplified
    assert result.program.rules


def test_fig1(load):
    result = simplify(load("fig1"))
    r = _rule_with_cost(result, FIG1_COST)
    assert Constraint(x**2 / 2 + x / 2 - 1) in r.guard
    assert result.accelerated_rules()


def test_fig1_provenance(load):
    result = simplify(load("fig1"))
    r = _rule_with_cost(result, FIG1_COST)
    chain = provenance_chain(result, r.name)
    assert chain[-1].name == r.name
    assert chain[0].provenance.tag is ProvTag.ORIGINAL
    assert {"r1", "r2"} <= {q.name for q in chain}


def test_fib(load):
    result = simplify(load("fib"))
    r = _rule_with_cost(result, canonical(2 ** (x / 2 - 1) - 1))
    assert r.guard == (Constraint(x - 1),)
    assert r.rhs[0].is_sink


def test_facsum_is_quadratic(load):
    result = simplify(load("facsum"))
    degrees = [total_degree(r.cost) for r in result.program.rules]
    assert max(degrees) == 2


def test_conditional_metering_instantiates(load):
    result = simplify(load("conditional"))
    r = _rule_with_cost(result, x)
    assert Constraint(y + z - 1, False) in r.guard


def test_unbounded_keeps_the_fresh_variable(load):
    result = simplify(load("unbounded"))
    assert any(r.temporaries() and y in r.cost.free_symbols for r in result.program.rules)


def test_steps_are_recorded(load):
    result = simplify(load("fig1"))
    kinds = {s.kind for s in result.steps}
    assert {"loop acceleration", "chaining", "deletion"} <= kinds
    quiet = simplify(load("fig1"), PipelineConfig(keep_proof=False))
    assert quiet.steps == []
    assert quiet.program == result.program


def test_simplification_is_deterministic(load):
    assert simplify(load("facsum")).program == simplify(load("facsum")).program


def test_timeout_and_partial_result(load):
    p = load("fig1")
    simplifier = Simplifier(p, PipelineConfig(), Deadline(1e-9))
    with pytest.raises(AnalysisTimeout):
        simplifier.run()
    partial = simplifier.partial()
    assert not partial.complete
    assert all(r.root == p.start for r in partial.program.rules)


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(rule_cap=0)
    with pytest.raises(ValueError):
        PipelineConfig(accel_backtrack=-1)


def test_facsum_keeps_its_start_rule_when_no_continuation_is_feasible(load):
    result = simplify(load("facsum"))
    assert result.program.rules
    r = _rule_with_cost(result, canonical(x**2 / 2 + 3 * x / 2 - 2))
    assert r.root == "f0"
    assert all(smt.satisfiable(guard_formula(q.guard)) for q in result.program.rules)
