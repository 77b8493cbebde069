import shutil
from fractions import Fraction

import pytest
import sympy as sp

from arith import var
from errors import BackendUnavailable, SmtUnsupported
import smt

x, y = var("x"), var("y")
r = sp.Symbol("r", real=True)


def test_check_sat_returns_a_model():
    out = smt.check_sat(sp.And(x > 2, x < 4))
    assert isinstance(out, smt.Sat)
    assert out.model[x] == 3


def test_integers_have_no_values_in_between():
    assert isinstance(smt.check_sat(sp.And(x > 0, x < 1)), smt.Unsat)
    assert smt.satisfiable(sp.And(r > 0, r < 1))


def test_rational_coefficients_are_cleared():
    out = smt.check_sat(sp.And(sp.Gt(x / 2 - y / 3, 0), sp.Eq(y, 3)))
    assert isinstance(out, smt.Sat)
    assert out.model[x] / 2 - out.model[y] / 3 > 0


def test_validity():
    assert isinstance(smt.is_valid(sp.Implies(x > 1, x >= 2)), smt.Valid)
    out = smt.is_valid(x > 0)
    assert isinstance(out, smt.Invalid)
    assert out.counterexample[x] <= 0
    assert smt.proves(sp.true)


def test_maximize():
    out = smt.maximize(sp.And(x >= 0, x <= 5, y <= x), [x, y])
    assert isinstance(out, smt.Sat)
    assert out.model[x] == 5 and out.model[y] == 5


def test_absolute_values_are_supported():
    assert smt.proves(sp.Abs(x) >= 0)
    assert not smt.satisfiable(sp.And(sp.Abs(x) < 2, x > 1))


def test_unsupported_terms():
    with pytest.raises(SmtUnsupported):
        smt.check_sat(sp.Gt(2**x, 3))


def test_unknown_outcomes_are_not_cached(monkeypatch):
    class Flaky(smt.Backend):
        name = "flaky"

        def __init__(self):
            super().__init__(100)
            self.calls = 0

        def check_sat(self, formula, timeout_ms=None):
            self.calls += 1
            return smt.Unknown("timeout") if self.calls == 1 else smt.Sat({x: Fraction(42)})

        def maximize(self, formula, objectives, timeout_ms=None):
            return smt.Unknown()

    flaky = Flaky()
    monkeypatch.setattr(smt, "_backend", flaky)
    smt._cached_sat.cache_clear()
    try:
        formula = sp.Gt(x, 41)
        assert isinstance(smt.check_sat(formula), smt.Unknown)
        assert isinstance(smt.check_sat(formula), smt.Sat)
        assert isinstance(smt.check_sat(formula), smt.Sat)
        assert flaky.calls == 2
    finally:
        smt._cached_sat.cache_clear()


def test_smtlib_script():
    backend = smt.SmtLibBackend("z3 -in", 100)
    text = backend.script(sp.And(x > 0, sp.Le(y, 2 * x)))
    assert "(set-logic QF_NIA)" in text
    assert "(declare-fun x () Int)" in text
    assert "(declare-fun y () Int)" in text
    assert "(check-sat)" in text


def test_smtlib_script_mixes_sorts():
    text = smt.SmtLibBackend("z3 -in", 100).script(sp.Gt(r - x, 0))
    assert "(declare-fun r () Real)" in text
    assert "to_real" in text


def test_missing_solver_binary():
    backend = smt.SmtLibBackend("no-such-solver-binary --flag", 100)
    with pytest.raises(BackendUnavailable):
        backend.check_sat(x > 0)
    with pytest.raises(BackendUnavailable):
        smt.SmtLibBackend("", 100)


needs_z3_binary = pytest.mark.skipif(shutil.which("z3") is None, reason="no z3 executable on PATH")


@needs_z3_binary
def test_external_solver_answers():
    backend = smt.SmtLibBackend("z3 -in", 2000)
    out = backend.check_sat(sp.And(x > 2, x < 4, r > 0, r < 1))
    assert isinstance(out, smt.Sat)
    assert out.model[x] == 3
    assert 0 < out.model[r] < 1
    assert isinstance(backend.check_sat(sp.And(x > 0, x < 1)), smt.Unsat)


@needs_z3_binary
def test_external_solver_maximizes_lexicographically():
    backend = smt.SmtLibBackend("z3 -in", 2000)
    out = backend.maximize(sp.And(x >= 0, x <= 37, y <= x, y <= 10), [x, y])
    assert isinstance(out, smt.Sat)
    assert out.model[x] == 37
    assert out.model[y] == 10
