"""Exact symbolic arithmetic: expressions, constraints, guards and substitutions.

Expressions are sympy expressions over integer-valued symbols.  Every value
that leaves this module is in canonical form (fully expanded, exponents kept
intact), so structural equality coincides with semantic equality on the
polynomial fragment.
"""

from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from math import floor, gcd, lcm
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy as sp

from errors import AnalysisError, NegativeExponent, NonIntegerExponent, NotPolynomial

Expr = sp.Expr
Var = sp.Symbol
Subst = Dict[sp.Symbol, sp.Expr]
Valuation = Mapping[sp.Symbol, Union[int, Fraction]]

ZERO = sp.Integer(0)
ONE = sp.Integer(1)


def var(name: str) -> sp.Symbol:
    """Integer-valued variable; the only kind of variable programs use."""
    return sp.Symbol(name, integer=True)


def fresh_var(prefix: str, taken: Iterable) -> sp.Symbol:
    """Return `prefix<k>` for the smallest k >= 1 not among `taken`."""
    names = {str(t) for t in taken}
    for k in itertools.count(1):
        name = f"{prefix}{k}"
        if name not in names:
            return var(name)
    raise AssertionError("unreachable")


def number(value: Union[int, Fraction, sp.Rational]) -> sp.Rational:
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    return sp.Rational(value)


def canonical(e) -> Expr:
    return sp.expand(sp.sympify(e), power_exp=False, log=False)


def free_vars(e) -> List[sp.Symbol]:
    """Free symbols of `e`, sorted by name."""
    return sorted(sp.sympify(e).free_symbols, key=lambda s: s.name)


def is_polynomial(e) -> bool:
    e = sp.sympify(e)
    return bool(e.is_polynomial(*e.free_symbols))


def degree(e, x: sp.Symbol) -> int:
    e = canonical(e)
    if not is_polynomial(e):
        raise NotPolynomial(show(e))
    if x not in e.free_symbols:
        return 0
    return int(sp.degree(e, x))


def total_degree(e) -> int:
    e = canonical(e)
    if not is_polynomial(e):
        raise NotPolynomial(show(e))
    syms = free_vars(e)
    if not syms or e == 0:
        return 0
    return int(sp.Poly(e, *syms).total_degree())


def is_linear(e, variables: Iterable[sp.Symbol]) -> bool:
    """True if `e` has degree at most one in `variables` jointly."""
    e = canonical(e)
    variables = list(variables)
    if not variables:
        return True
    if not e.is_polynomial(*variables):
        return False
    relevant = [v for v in variables if v in e.free_symbols]
    if not relevant:
        return True
    return sp.Poly(e, *relevant).total_degree() <= 1


# --- substitutions ---------------------------------------------------------


def make_subst(bindings: Mapping) -> Subst:
    """Canonical substitution: values canonicalized, identity bindings dropped."""
    out: Subst = {}
    for x, t in bindings.items():
        t = canonical(t)
        if t != x:
            out[x] = t
    return out


def apply(e, s: Mapping) -> Expr:
    """Simultaneous substitution followed by canonicalization."""
    e = sp.sympify(e)
    if s:
        e = e.xreplace(dict(s))
    return canonical(e)


def compose(s1: Mapping, s2: Mapping) -> Subst:
    """The substitution applying `s1` first and `s2` second."""
    out = {x: apply(t, s2) for x, t in s1.items()}
    for x, t in s2.items():
        out.setdefault(x, t)
    return make_subst(out)


# --- evaluation ------------------------------------------------------------


def _power(base, exponent) -> Fraction:
    exponent = Fraction(exponent)
    if exponent.denominator != 1:
        raise NonIntegerExponent(f"exponent {exponent} is not an integer")
    k = exponent.numerator
    if k < 0 and base not in (1, -1):
        raise NegativeExponent(f"negative exponent {k} for base {base}")
    return Fraction(base) ** k


def _compile(e) -> Callable[[Valuation], Fraction]:
    if e.is_Integer:
        value = int(e)
        return lambda env: value
    if e.is_Rational:
        value = Fraction(int(e.p), int(e.q))
        return lambda env: value
    if e.is_Symbol:
        return lambda env: env[e]
    if e.is_Add:
        parts = [_compile(a) for a in e.args]
        return lambda env: sum(p(env) for p in parts)
    if e.is_Mul:
        parts = [_compile(a) for a in e.args]
        return lambda env: reduce(operator.mul, (p(env) for p in parts), 1)
    if e.is_Pow:
        base, exponent = _compile(e.base), _compile(e.exp)
        return lambda env: _power(base(env), exponent(env))
    if isinstance(e, sp.Abs):
        inner = _compile(e.args[0])
        return lambda env: abs(inner(env))
    raise NotPolynomial(f"cannot evaluate {e}")


@lru_cache(maxsize=8192)
def evaluator(e: Expr) -> Callable[[Valuation], Fraction]:
    """Compile `e` into a function from valuations to exact rationals."""
    return _compile(sp.sympify(e))


def evaluate(e, v: Valuation) -> Fraction:
    try:
        return Fraction(evaluator(sp.sympify(e))(v))
    except KeyError as exc:
        raise AnalysisError(f"unbound variable {exc.args[0]} in {show(e)}") from exc


def maps_to_int(e) -> bool:
    """Integer image check on the grid {0..d_i+1} for each variable's degree d_i."""
    e = canonical(e)
    if not is_polynomial(e):
        raise NotPolynomial(show(e))
    syms = free_vars(e)
    f = evaluator(e)
    grids = [range(degree(e, x) + 2) for x in syms]
    for point in itertools.product(*grids):
        if Fraction(f(dict(zip(syms, point)))).denominator != 1:
            return False
    return True


# --- constraints and guards ------------------------------------------------


def _split_constant(e: Expr) -> Tuple[sp.Rational, Expr]:
    k, rest = canonical(e).as_coeff_Add()
    return k, rest


@dataclass(frozen=True)
class Constraint:
    """`expr > 0` (strict) or `expr >= 0`."""

    expr: Expr
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "expr", canonical(self.expr))

    @property
    def rel(self) -> str:
        return ">" if self.strict else ">="

    @property
    def free_symbols(self):
        return self.expr.free_symbols

    def truth(self) -> Optional[bool]:
        """Truth value of a variable-free constraint, None otherwise."""
        if self.expr.free_symbols:
            return None
        value = self.expr
        if not value.is_Rational:
            return None
        return bool(value > 0) if self.strict else bool(value >= 0)

    def holds(self, env: Valuation) -> bool:
        value = evaluate(self.expr, env)
        return value > 0 if self.strict else value >= 0

    def substitute(self, s: Mapping) -> "Constraint":
        return Constraint(apply(self.expr, s), self.strict)

    def negate(self) -> "Constraint":
        return Constraint(-self.expr, not self.strict)

    def formula(self) -> sp.Basic:
        return sp.Gt(self.expr, 0) if self.strict else sp.Ge(self.expr, 0)

    def tighten(self) -> "Constraint":
        """Equivalent non-strict constraint with coprime integer coefficients.

        Valid over the integers only: `a > 0` becomes `a - 1 >= 0` once `a`
        has integer coefficients, and the constant is rounded down after
        dividing by the gcd of the variable coefficients.
        """
        if not is_polynomial(self.expr) or not self.expr.free_symbols:
            return self
        coeffs = self.expr.as_coefficients_dict()
        den = 1
        for c in coeffs.values():
            if not c.is_Rational:
                return self
            den = lcm(den, int(c.q))
        scaled = {m: int(c * den) for m, c in coeffs.items()}
        k = scaled.pop(sp.Integer(1), 0)
        if self.strict:
            k -= 1
        g = 0
        for c in scaled.values():
            g = gcd(g, abs(c))
        if g == 0:
            return Constraint(sp.Integer(k), strict=False)
        body = sum((sp.Integer(c // g) * m for m, c in scaled.items()), ZERO)
        return Constraint(body + floor(Fraction(k, g)), strict=False)

    def __str__(self) -> str:
        return show_constraint(self)


Guard = Tuple[Constraint, ...]
FALSE = Constraint(ZERO, strict=True)
RawComparison = Tuple[Expr, str, Expr]


def _comparison(lhs, op: str, rhs) -> List[Constraint]:
    lhs, rhs = sp.sympify(lhs), sp.sympify(rhs)
    if op == ">":
        return [Constraint(lhs - rhs, True)]
    if op == ">=":
        return [Constraint(lhs - rhs, False)]
    if op == "<":
        return [Constraint(rhs - lhs, True)]
    if op == "<=":
        return [Constraint(rhs - lhs, False)]
    if op in ("=", "=="):
        return [Constraint(rhs - lhs, False), Constraint(lhs - rhs, False)]
    raise ValueError(f"unknown relation {op!r}")


def normalize_guard(raw: Iterable[Union[RawComparison, Constraint]]) -> Guard:
    """Conjunction in `a > 0` / `a >= 0` shape, deduplicated, trivial conjuncts dropped."""
    out: List[Constraint] = []
    for item in raw:
        parts = [item] if isinstance(item, Constraint) else _comparison(*item)
        for c in parts:
            truth = c.truth()
            if truth is True:
                continue
            if truth is False:
                return (FALSE,)
            if c not in out:
                out.append(c)
    return tuple(out)


def substitute_guard(g: Sequence[Constraint], s: Mapping) -> Guard:
    return normalize_guard(c.substitute(s) for c in g)


def guard_formula(g: Sequence[Constraint]) -> sp.Basic:
    if not g:
        return sp.true
    return sp.And(*[c.formula() for c in g])


def guard_symbols(g: Sequence[Constraint]) -> set:
    out = set()
    for c in g:
        out |= c.free_symbols
    return out


def guard_holds(g: Sequence[Constraint], env: Valuation) -> bool:
    return all(c.holds(env) for c in g)


# --- printing --------------------------------------------------------------


def _show_number(q: sp.Rational) -> str:
    q = sp.Rational(q)
    if q.q == 1:
        return str(q.p)
    return f"{q.p}/{q.q}"


def _show_atom(e: Expr) -> str:
    text = show(e)
    if e.is_Symbol or (e.is_Integer and e >= 0):
        return text
    return f"({text})"


def _show_factor(f: Expr) -> str:
    if f.is_Pow:
        base = _show_atom(f.base)
        return f"{base}^{_show_atom(f.exp)}"
    if f.is_Add:
        return f"({show(f)})"
    return show(f)


def _show_monomial(coeff: sp.Rational, body: str) -> str:
    if not body:
        return _show_number(coeff)
    if coeff == 1:
        return body
    return f"{_show_number(coeff)}*{body}"


def _join(parts: Sequence[Tuple[sp.Rational, str]]) -> str:
    out = ""
    for i, (coeff, body) in enumerate(parts):
        text = _show_monomial(abs(coeff), body)
        if i == 0:
            out = f"-{text}" if coeff < 0 else text
        else:
            out += f" - {text}" if coeff < 0 else f" + {text}"
    return out or "0"


def _polynomial_parts(e: Expr) -> List[Tuple[sp.Rational, str]]:
    syms = free_vars(e)
    if not syms:
        return [(sp.Rational(e), "")] if e != 0 else []
    parts = []
    for exps, coeff in sp.Poly(e, *syms).terms(order="grlex"):
        factors = []
        for s, k in zip(syms, exps):
            if k == 1:
                factors.append(s.name)
            elif k > 1:
                factors.append(f"{s.name}^{k}")
        parts.append((sp.Rational(coeff), "*".join(factors)))
    return parts


def show(e) -> str:
    """Render in the input grammar, e.g. `1/8*x^4 + 1/4*x^3 + 7/8*x^2 + 7/4*x`."""
    e = sp.sympify(e)
    if e.is_Rational:
        return _show_number(e)
    if e.is_Symbol:
        return e.name
    if is_polynomial(e):
        return _join(_polynomial_parts(canonical(e)))
    parts: List[Tuple[sp.Rational, str]] = []
    poly = ZERO
    for term in sorted(sp.Add.make_args(e), key=str):
        if is_polynomial(term):
            poly += term
            continue
        coeff, rest = term.as_coeff_Mul()
        factors = sorted(sp.Mul.make_args(rest), key=str)
        parts.append((sp.Rational(coeff), "*".join(_show_factor(f) for f in factors)))
    if poly != 0:
        parts.extend(_polynomial_parts(canonical(poly)))
    return _join(parts)


def show_constraint(c: Constraint) -> str:
    k, rest = _split_constant(c.expr)
    if rest == 0:
        return f"{_show_number(k)} {c.rel} 0"
    if all(t.could_extract_minus_sign() for t in sp.Add.make_args(rest)):
        rel = "<" if c.strict else "<="
        return f"{show(-rest)} {rel} {_show_number(k)}"
    return f"{show(rest)} {c.rel} {_show_number(-k)}"


def show_guard(g: Sequence[Constraint]) -> str:
    if not g:
        return "TRUE"
    return " && ".join(show_constraint(c) for c in g)


def show_subst(s: Mapping) -> str:
    items = sorted(s.items(), key=lambda kv: str(kv[0]))
    return "{" + ", ".join(f"{x}/{show(t)}" for x, t in items) + "}"
