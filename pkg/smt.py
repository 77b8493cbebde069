"""Satisfiability, validity and optimization over integer/rational arithmetic.

Formulas are sympy boolean expressions (And, Or, Not, Implies and the
relations) over symbols; symbols declared `integer=True` are integers, all
others are rationals.  Two backends implement the same contract: z3 in
process, or any SMT-LIB2 solver driven through pysmt.
"""

from __future__ import annotations

import io
import logging
import shlex
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from math import lcm
from typing import Dict, List, Optional, Sequence, Union

import sympy as sp
from pysmt.environment import get_env
from pysmt.exceptions import PysmtException, PysmtTypeError, SolverReturnedUnknownResultError
from pysmt.logics import AUFNIRA, QF_NIA, QF_NRA
from pysmt.smtlib.script import smtlibscript_from_formula
from pysmt.smtlib.solver import SmtLibSolver
from pysmt.typing import INT, REAL

from config import DEFAULTS
from errors import BackendUnavailable, SmtUnsupported

try:
    import z3

    Z3_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without z3-solver
    z3 = None
    Z3_AVAILABLE = False

logger = logging.getLogger(__name__)

Model = Dict[sp.Symbol, Fraction]


@dataclass(frozen=True)
class Sat:
    model: Model = field(default_factory=dict)


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str = ""


@dataclass(frozen=True)
class Valid:
    pass


@dataclass(frozen=True)
class Invalid:
    counterexample: Model = field(default_factory=dict)


SmtOutcome = Union[Sat, Unsat, Unknown]
Validity = Union[Valid, Invalid, Unknown]


def _is_int(s: sp.Symbol) -> bool:
    return bool(s.is_integer)


def _symbols(f) -> List[sp.Symbol]:
    return sorted(sp.sympify(f).free_symbols, key=lambda s: s.name)


def _cleared(rel: sp.Basic) -> sp.Expr:
    """`lhs - rhs` with rational coefficients scaled to integers."""
    diff = sp.expand(rel.lhs - rel.rhs, power_exp=False)
    den = 1
    for c in diff.as_coefficients_dict().values():
        if c.is_Rational:
            den = lcm(den, int(c.q))
    return sp.expand(diff * den, power_exp=False)


_REL = {
    sp.StrictGreaterThan: ">",
    sp.GreaterThan: ">=",
    sp.StrictLessThan: "<",
    sp.LessThan: "<=",
    sp.Equality: "=",
    sp.Unequality: "!=",
}


class Backend(ABC):
    """Solver contract shared by the in-process and the external backend."""

    name = "abstract"

    def __init__(self, timeout_ms: int):
        self.timeout_ms = timeout_ms

    @abstractmethod
    def check_sat(self, formula, timeout_ms: Optional[int] = None) -> SmtOutcome:
        pass

    @abstractmethod
    def maximize(
        self, formula, objectives: Sequence[sp.Expr], timeout_ms: Optional[int] = None
    ) -> SmtOutcome:
        pass


# --- z3 in process ------------------------------------------------------------


class Z3Backend(Backend):
    """z3 through its Python API, one context per thread."""

    name = "z3"

    def __init__(self, timeout_ms: int):
        if not Z3_AVAILABLE:
            raise BackendUnavailable("z3-solver is not installed and no --smt-solver was given")
        super().__init__(timeout_ms)
        self._local = threading.local()

    @property
    def ctx(self):
        ctx = getattr(self._local, "ctx", None)
        if ctx is None:
            ctx = self._local.ctx = z3.Context()
        return ctx

    def _var(self, s: sp.Symbol, env: dict):
        if s not in env:
            env[s] = z3.Int(s.name, self.ctx) if _is_int(s) else z3.Real(s.name, self.ctx)
        return env[s]

    def _term(self, e, env: dict):
        ctx = self.ctx
        if e.is_Integer:
            return z3.IntVal(int(e), ctx)
        if e.is_Rational:
            return z3.RealVal(f"{e.p}/{e.q}", ctx)
        if e.is_Symbol:
            return self._var(e, env)
        if e.is_Add:
            return reduce(lambda a, b: a + b, (self._term(a, env) for a in e.args))
        if e.is_Mul:
            return reduce(lambda a, b: a * b, (self._term(a, env) for a in e.args))
        if e.is_Pow and e.exp.is_Integer and e.exp >= 0:
            base = self._term(e.base, env)
            return reduce(lambda a, b: a * b, [base] * int(e.exp), z3.IntVal(1, ctx))
        if isinstance(e, sp.Abs):
            t = self._term(e.args[0], env)
            return z3.If(t >= 0, t, -t)
        raise SmtUnsupported(f"cannot encode {e}")

    def _formula(self, f, env: dict):
        ctx = self.ctx
        if f is sp.true or f == sp.true:
            return z3.BoolVal(True, ctx)
        if f is sp.false or f == sp.false:
            return z3.BoolVal(False, ctx)
        if isinstance(f, sp.And):
            return z3.And([self._formula(a, env) for a in f.args])
        if isinstance(f, sp.Or):
            return z3.Or([self._formula(a, env) for a in f.args])
        if isinstance(f, sp.Not):
            return z3.Not(self._formula(f.args[0], env))
        if isinstance(f, sp.Implies):
            return z3.Implies(self._formula(f.args[0], env), self._formula(f.args[1], env))
        op = _REL.get(type(f))
        if op is None:
            raise SmtUnsupported(f"cannot encode {f}")
        t = self._term(_cleared(f), env)
        zero = z3.IntVal(0, ctx)
        return {
            ">": lambda: t > zero,
            ">=": lambda: t >= zero,
            "<": lambda: t < zero,
            "<=": lambda: t <= zero,
            "=": lambda: t == zero,
            "!=": lambda: t != zero,
        }[op]()

    def _model(self, m, env: dict, symbols: Sequence[sp.Symbol]) -> Optional[Model]:
        out: Model = {}
        for s in symbols:
            value = m.eval(self._var(s, env), model_completion=True)
            if z3.is_int_value(value):
                out[s] = Fraction(value.as_long())
            elif z3.is_rational_value(value):
                out[s] = Fraction(value.numerator_as_long(), value.denominator_as_long())
            else:
                return None
        return out

    def check_sat(self, formula, timeout_ms: Optional[int] = None) -> SmtOutcome:
        env: dict = {}
        symbols = _symbols(formula)
        solver = z3.Solver(ctx=self.ctx)
        solver.set("timeout", int(timeout_ms or self.timeout_ms))
        solver.add(self._formula(formula, env))
        result = solver.check()
        if result == z3.sat:
            model = self._model(solver.model(), env, symbols)
            return Sat(model) if model is not None else Unknown("irrational model")
        if result == z3.unsat:
            return Unsat()
        return Unknown(solver.reason_unknown())

    def maximize(
        self, formula, objectives: Sequence[sp.Expr], timeout_ms: Optional[int] = None
    ) -> SmtOutcome:
        env: dict = {}
        symbols = _symbols(sp.And(formula, *[sp.Ge(o, 0) for o in objectives]))
        opt = z3.Optimize(ctx=self.ctx)
        opt.set("timeout", int(timeout_ms or self.timeout_ms))
        opt.set(priority="lex")
        opt.add(self._formula(formula, env))
        for o in objectives:
            opt.maximize(self._term(sp.expand(o), env))
        result = opt.check()
        if result == z3.sat:
            model = self._model(opt.model(), env, symbols)
            return Sat(model) if model is not None else Unknown("irrational model")
        if result == z3.unsat:
            return Unsat()
        return Unknown(opt.reason_unknown())


# --- SMT-LIB2 over a process, through pysmt ----------------------------------

# pysmt formula managers are process-wide and not thread safe
_pysmt_lock = threading.Lock()

_LOGICS = {"int": QF_NIA, "real": QF_NRA, "mixed": AUFNIRA}


def _logic(symbols: Sequence[sp.Symbol]):
    kinds = {_is_int(s) for s in symbols}
    if kinds == {False}:
        return _LOGICS["real"]
    return _LOGICS["mixed"] if len(kinds) > 1 else _LOGICS["int"]


def _evaluate(e: sp.Expr, model: Model) -> Fraction:
    values = {}
    for s in e.free_symbols:
        q = model.get(s, Fraction(0))
        values[s] = sp.Rational(q.numerator, q.denominator)
    v = sp.Rational(e.xreplace(values))
    return Fraction(int(v.p), int(v.q))


class _PysmtEncoder:
    """sympy formulas as pysmt formulas; relations over an integer-only difference stay in Int."""

    def __init__(self, mgr):
        self.mgr = mgr
        self.nodes: Dict[sp.Symbol, object] = {}

    def var(self, s: sp.Symbol):
        if s not in self.nodes:
            try:
                self.nodes[s] = self.mgr.Symbol(s.name, INT if _is_int(s) else REAL)
            except PysmtTypeError as e:
                raise SmtUnsupported(f"{s.name} is used both as an integer and a rational") from e
        return self.nodes[s]

    def const(self, q: sp.Rational, real: bool):
        if real:
            return self.mgr.Real(Fraction(int(q.p), int(q.q)))
        return self.mgr.Int(int(q))

    def term(self, e, real: bool):
        m = self.mgr
        if e.is_Rational:
            return self.const(e, real)
        if e.is_Symbol:
            node = self.var(e)
            return m.ToReal(node) if real and _is_int(e) else node
        if e.is_Add:
            return m.Plus([self.term(a, real) for a in e.args])
        if e.is_Mul:
            return m.Times([self.term(a, real) for a in e.args])
        if e.is_Pow and e.exp.is_Integer and e.exp >= 0:
            k = int(e.exp)
            if k == 0:
                return self.const(sp.Integer(1), real)
            return m.Times([self.term(e.base, real)] * k)
        if isinstance(e, sp.Abs):
            t = self.term(e.args[0], real)
            zero = self.const(sp.Integer(0), real)
            return m.Ite(m.GE(t, zero), t, m.Minus(zero, t))
        raise SmtUnsupported(f"cannot encode {e}")

    def formula(self, f):
        m = self.mgr
        if f == sp.true:
            return m.TRUE()
        if f == sp.false:
            return m.FALSE()
        if isinstance(f, sp.And):
            return m.And([self.formula(a) for a in f.args])
        if isinstance(f, sp.Or):
            return m.Or([self.formula(a) for a in f.args])
        if isinstance(f, sp.Not):
            return m.Not(self.formula(f.args[0]))
        if isinstance(f, sp.Implies):
            return m.Implies(self.formula(f.args[0]), self.formula(f.args[1]))
        op = _REL.get(type(f))
        if op is None:
            raise SmtUnsupported(f"cannot encode {f}")
        diff = _cleared(f)
        real = not all(_is_int(s) for s in diff.free_symbols)
        t, zero = self.term(diff, real), self.const(sp.Integer(0), real)
        if op == "!=":
            return m.Not(m.Equals(t, zero))
        return {">": m.GT, ">=": m.GE, "<": m.LT, "<=": m.LE, "=": m.Equals}[op](t, zero)


class SmtLibBackend(Backend):
    """External solver driven by pysmt's SMT-LIB2 solver interface.

    pysmt keeps one formula environment per process, so queries are
    serialized. A query that outlives its timeout has its process killed.
    Optimization is a lexicographic search by repeated satisfiability
    checks; rational objectives are improved in steps of at least 1.
    """

    name = "smtlib"
    max_retries = 2
    max_improvements = 64

    def __init__(self, command: str, timeout_ms: int):
        super().__init__(timeout_ms)
        self.argv = shlex.split(command)
        if not self.argv:
            raise BackendUnavailable("empty solver command")

    def _encode(self, formula):
        return _PysmtEncoder(get_env().formula_manager).formula(sp.sympify(formula))

    def script(self, formula) -> str:
        """The query as an SMT-LIB2 script, as pysmt prints it."""
        with _pysmt_lock:
            encoded = self._encode(formula)
            buf = io.StringIO()
            smtlibscript_from_formula(encoded, logic=_logic(_symbols(formula))).serialize(buf, daggify=False)
        return buf.getvalue()

    def _solve(self, formula, symbols: Sequence[sp.Symbol], timeout_ms: int) -> SmtOutcome:
        encoder = _PysmtEncoder(get_env().formula_manager)
        encoded = encoder.formula(formula)
        try:
            solver = SmtLibSolver(self.argv, get_env(), _logic(symbols))
        except OSError as e:
            raise BackendUnavailable(f"solver not found: {self.argv[0]}") from e
        expired = threading.Event()

        def kill():
            expired.set()
            solver.solver.kill()

        killer = threading.Timer(timeout_ms / 1000.0 + 1.0, kill)
        killer.start()
        try:
            solver.add_assertion(encoded)
            try:
                if not solver.solve():
                    return Unsat()
            except SolverReturnedUnknownResultError:
                return Unknown("solver answered unknown")
            except (PysmtException, OSError):
                if expired.is_set():
                    return Unknown("timeout")
                raise
            model: Model = {}
            for s in symbols:
                node = encoder.var(s)
                if node not in solver.declared_vars:
                    model[s] = Fraction(0)
                    continue
                model[s] = Fraction(str(solver.get_value(node).constant_value()))
            return Sat(model)
        finally:
            killer.cancel()
            try:
                solver.exit()
            except (PysmtException, OSError, ValueError):
                solver.solver.kill()

    def check_sat(self, formula, timeout_ms: Optional[int] = None) -> SmtOutcome:
        timeout_ms = int(timeout_ms or self.timeout_ms)
        formula = sp.sympify(formula)
        symbols = _symbols(formula)
        for attempt in range(self.max_retries):
            try:
                with _pysmt_lock:
                    return self._solve(formula, symbols, timeout_ms)
            except (PysmtException, OSError, ValueError) as e:
                logger.warning("[err] solver attempt %d failed: %s", attempt + 1, e)
        return Unknown("solver failed")

    def maximize(
        self, formula, objectives: Sequence[sp.Expr], timeout_ms: Optional[int] = None
    ) -> SmtOutcome:
        current = sp.sympify(formula)
        outcome = self.check_sat(current, timeout_ms)
        if not isinstance(outcome, Sat):
            return outcome
        for o in objectives:
            o = sp.expand(o)
            best, step = _evaluate(o, outcome.model), Fraction(1)
            for _ in range(self.max_improvements):
                target = best + step
                better = self.check_sat(sp.And(current, sp.Ge(o, sp.Rational(target.numerator, target.denominator))), timeout_ms)
                if isinstance(better, Sat):
                    outcome, best = better, _evaluate(o, better.model)
                    step *= 2
                elif step == 1:
                    break
                else:
                    step = Fraction(1)
            current = sp.And(current, sp.Ge(o, sp.Rational(best.numerator, best.denominator)))
        return outcome


# --- module interface ---------------------------------------------------------

_lock = threading.Lock()
_backend: Optional[Backend] = None


def configure(solver: str = "", timeout_ms: Optional[int] = None) -> Backend:
    """Select the backend: an SMT-LIB2 command line, or z3 in process when empty."""
    global _backend
    timeout_ms = int(timeout_ms or DEFAULTS["SMT_TIMEOUT_MS"])
    with _lock:
        if solver:
            _backend = SmtLibBackend(solver, timeout_ms)
        else:
            _backend = Z3Backend(timeout_ms)
        _cached_sat.cache_clear()
    logger.debug("smt backend %s, timeout %d ms", _backend.name, timeout_ms)
    return _backend


def backend() -> Backend:
    if _backend is None:
        return configure(DEFAULTS["SMT_SOLVER"])
    return _backend


class _Inconclusive(Exception):
    """Carries an Unknown out of `_cached_sat`; lru_cache does not store raised results."""

    def __init__(self, outcome: Unknown):
        super().__init__(outcome.reason)
        self.outcome = outcome


@lru_cache(maxsize=65536)
def _cached_sat(formula, timeout_ms: Optional[int]) -> SmtOutcome:
    outcome = backend().check_sat(formula, timeout_ms)
    if isinstance(outcome, Unknown):
        raise _Inconclusive(outcome)
    return outcome


def check_sat(formula, timeout_ms: Optional[int] = None) -> SmtOutcome:
    formula = sp.sympify(formula)
    if formula == sp.true:
        return Sat({s: Fraction(0) for s in _symbols(formula)})
    if formula == sp.false:
        return Unsat()
    try:
        return _cached_sat(formula, timeout_ms)
    except _Inconclusive as e:
        return e.outcome


def is_valid(formula, timeout_ms: Optional[int] = None) -> Validity:
    """Valid iff the negation is unsatisfiable."""
    outcome = check_sat(sp.Not(sp.sympify(formula)), timeout_ms)
    if isinstance(outcome, Unsat):
        return Valid()
    if isinstance(outcome, Sat):
        return Invalid(outcome.model)
    return outcome


def proves(formula, timeout_ms: Optional[int] = None) -> bool:
    return isinstance(is_valid(formula, timeout_ms), Valid)


def satisfiable(formula, timeout_ms: Optional[int] = None) -> bool:
    return isinstance(check_sat(formula, timeout_ms), Sat)


def maximize(formula, objectives: Sequence[sp.Expr], timeout_ms: Optional[int] = None) -> SmtOutcome:
    """Model of `formula` maximizing `objectives` lexicographically."""
    return backend().maximize(sp.sympify(formula), list(objectives), timeout_ms)
