"""Asymptotic lower bounds for simplified programs.

A guard is turned into a limit problem: a set of expressions, each tagged
with how it must behave as n grows (+ towards infinity, - towards minus
infinity, +! a positive constant, -! a negative constant).  A family of
substitutions x -> x(n) solving the problem satisfies the guard for all
large n, so cost(n) is a lower bound on the runtime at input size |x(n)|.

Problems are solved by rewriting them until every expression is a variable
(the calculus below), or by an SMT query over linear templates
x(n) = m_x * n + k_x.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import sympy as sp

from arith import (
    Constraint,
    Expr,
    Guard,
    Subst,
    apply,
    canonical,
    compose,
    evaluate,
    guard_formula,
    guard_holds,
    is_polynomial,
    maps_to_int,
    show,
    total_degree,
)
from config import DEFAULTS, FAMILY_MINIMIZE_ROUNDS
from errors import (
    AnalysisError,
    NotPolynomial,
    NotTrivial,
    NotUnivariate,
    SizeNotPolynomial,
    SmtUnsupported,
)
from models import AsymClass, AsymKind, BoundResult, Program, Rule
import smt
from utils import Deadline

logger = logging.getLogger(__name__)

# the family parameter; its assumptions keep it apart from a program variable named n
N = sp.Symbol("n", integer=True, positive=True)

FamilySubst = Dict[sp.Symbol, Expr]


class LimitTag(Enum):
    INC = "+"
    DEC = "-"
    POS = "+!"
    NEG = "-!"

    def flipped(self) -> "LimitTag":
        return _FLIP[self]

    @property
    def is_constant(self) -> bool:
        return self in (LimitTag.POS, LimitTag.NEG)


_FLIP = {
    LimitTag.INC: LimitTag.DEC,
    LimitTag.DEC: LimitTag.INC,
    LimitTag.POS: LimitTag.NEG,
    LimitTag.NEG: LimitTag.POS,
}

# tags an open guard entry may still take
OPEN = (LimitTag.INC, LimitTag.POS)

INC, DEC, POS, NEG = LimitTag.INC, LimitTag.DEC, LimitTag.POS, LimitTag.NEG

# For each operation and target tag, the argument tags that guarantee it.
LIMIT_VECTORS: Dict[str, Dict[LimitTag, Tuple[Tuple[LimitTag, LimitTag], ...]]] = {
    "+": {
        INC: ((INC, INC), (INC, POS), (INC, NEG), (POS, INC), (NEG, INC)),
        DEC: ((DEC, DEC), (DEC, POS), (DEC, NEG), (POS, DEC), (NEG, DEC)),
        POS: ((POS, POS),),
        NEG: ((NEG, NEG),),
    },
    "-": {
        INC: ((INC, DEC), (INC, POS), (INC, NEG), (POS, DEC), (NEG, DEC)),
        DEC: ((DEC, INC), (DEC, POS), (DEC, NEG), (POS, INC), (NEG, INC)),
        POS: ((POS, NEG),),
        NEG: ((NEG, POS),),
    },
    "*": {
        INC: ((INC, INC), (DEC, DEC), (INC, POS), (POS, INC), (DEC, NEG), (NEG, DEC)),
        DEC: ((INC, DEC), (DEC, INC), (INC, NEG), (NEG, INC), (DEC, POS), (POS, DEC)),
        POS: ((POS, POS), (NEG, NEG)),
        NEG: ((POS, NEG), (NEG, POS)),
    },
}


def limit_vectors(op: str, target: LimitTag) -> Set[Tuple[LimitTag, LimitTag]]:
    return set(LIMIT_VECTORS[op][target])


# --- sampling oracle -----------------------------------------------------------

SAMPLE_POINTS = np.array([1e3, 1e6])

# representative functions of n for each tag
SAMPLE_FUNCTIONS = {
    INC: (("n", lambda n: n), ("n^2", lambda n: n**2)),
    DEC: (("-n", lambda n: -n), ("-n^2", lambda n: -(n**2))),
    POS: (("1", lambda n: np.ones_like(n)), ("5", lambda n: 5 * np.ones_like(n))),
    NEG: (("-1", lambda n: -np.ones_like(n)), ("-5", lambda n: -5 * np.ones_like(n))),
}

_OPS = {"+": np.add, "-": np.subtract, "*": np.multiply}


def satisfies(values: Sequence[float], tag: LimitTag) -> bool:
    """Whether samples at growing n show the behavior `tag` asks for."""
    v = np.asarray(values, dtype=float)
    first, last = v[0], v[-1]
    if tag is INC:
        return bool(last > first and last > 1e2)
    if tag is DEC:
        return bool(last < first and last < -1e2)
    constant = bool(np.allclose(v, first))
    if tag is POS:
        return constant and first > 0
    return constant and first < 0


def counterexample(op: str, target: LimitTag, pair: Tuple[LimitTag, LimitTag]) -> Optional[Tuple[str, str]]:
    """Sampled argument functions for which `pair` fails to give `target`, if any."""
    for name1, f1 in SAMPLE_FUNCTIONS[pair[0]]:
        for name2, f2 in SAMPLE_FUNCTIONS[pair[1]]:
            values = _OPS[op](f1(SAMPLE_POINTS), f2(SAMPLE_POINTS))
            if not satisfies(values, target):
                return name1, name2
    return None


# --- limit problems ------------------------------------------------------------


def _key(e: Expr) -> str:
    return show(e)


@dataclass(frozen=True)
class LimitProblem:
    """Tagged expressions; `pending` ones may still become + or +!."""

    entries: FrozenSet[Tuple[Expr, LimitTag]] = frozenset()
    pending: FrozenSet[Expr] = frozenset()

    def items(self) -> List[Tuple[Expr, Tuple[LimitTag, ...], bool]]:
        out = [(e, (t,), False) for e, t in self.entries]
        out += [(e, OPEN, True) for e in self.pending]
        return sorted(out, key=lambda item: (_key(item[0]), [t.value for t in item[1]]))

    def expressions(self) -> List[Expr]:
        return [e for e, _, _ in self.items()]

    def variables(self) -> Set[sp.Symbol]:
        out: Set[sp.Symbol] = set()
        for e in self.expressions():
            out |= e.free_symbols
        return out

    def replace_item(self, e: Expr, was_pending: bool, tag: Optional[LimitTag], new: Iterable[Tuple[Expr, Optional[LimitTag]]]) -> "LimitProblem":
        entries = set(self.entries)
        pending = set(self.pending)
        if was_pending:
            pending.discard(e)
        else:
            entries.discard((e, tag))
        for a, t in new:
            if t is None:
                pending.add(canonical(a))
            else:
                entries.add((canonical(a), t))
        return LimitProblem(frozenset(entries), frozenset(pending))

    def substitute(self, theta: Subst) -> "LimitProblem":
        return LimitProblem(
            frozenset((apply(e, theta), t) for e, t in self.entries),
            frozenset(apply(e, theta) for e in self.pending),
        )

    def is_polynomial(self) -> bool:
        return all(is_polynomial(e) for e in self.expressions())

    def _variable_tags(self) -> Dict[sp.Symbol, Set[LimitTag]]:
        tags: Dict[sp.Symbol, Set[LimitTag]] = {}
        for e, t in self.entries:
            if e.is_Symbol:
                tags.setdefault(e, set()).add(t)
        return tags

    def is_contradictory(self) -> bool:
        committed: Dict[Expr, Set[LimitTag]] = {}
        for e, t in self.entries:
            committed.setdefault(e, set()).add(t)
        if any(len(ts) > 1 for ts in committed.values()):
            return True
        return any(committed.get(e, set()) - set(OPEN) for e in self.pending if e.is_Symbol)

    def is_trivial(self) -> bool:
        return all(e.is_Symbol for e in self.expressions()) and not self.is_contradictory()

    def __str__(self) -> str:
        parts = []
        for e, tags, was_pending in self.items():
            tag = "+|+!" if was_pending else tags[0].value
            parts.append(f"({show(e)})^{tag}" if not e.is_Symbol else f"{e}^{tag}")
        return "{" + ", ".join(parts) + "}"


def _constant_ok(m: Expr, tag: Optional[LimitTag]) -> bool:
    if tag is None or tag is POS:
        return bool(m.is_positive)
    if tag is NEG:
        return bool(m.is_negative)
    return False


def normalize(L: LimitProblem) -> Optional[LimitProblem]:
    """Drop satisfied constants, fold constant factors; None if contradictory."""
    work: List[Tuple[Expr, Optional[LimitTag]]] = [(e, t) for e, t in L.entries]
    work += [(e, None) for e in L.pending]
    entries: Set[Tuple[Expr, LimitTag]] = set()
    pending: Set[Expr] = set()
    while work:
        e, tag = work.pop()
        e = canonical(e)
        if not e.free_symbols:
            if not _constant_ok(e, tag):
                return None
            continue
        if not e.is_Add:
            c, rest = e.as_coeff_Mul()
            if c != 1 and rest.free_symbols:
                if c > 0:
                    work.append((rest, tag))
                    continue
                if tag is not None:
                    work.append((rest, tag.flipped()))
                    continue
        if tag is None:
            pending.add(e)
        else:
            entries.add((e, tag))
    pending -= {e for e, t in entries if t in OPEN}
    out = LimitProblem(frozenset(entries), frozenset(pending))
    return None if out.is_contradictory() else out


def _positive_part(c: Constraint) -> Expr:
    """e with `e > 0` equivalent to c over the integers, or stronger when c cannot be tightened."""
    if c.strict:
        return c.expr
    t = c.tighten()
    if t is c:
        return c.expr
    return canonical(t.expr + 1)


def initial_problem(r: Rule) -> LimitProblem:
    """Each guard conjunct must stay positive, and the cost must grow."""
    return LimitProblem(frozenset({(canonical(r.cost), INC)}), frozenset(_positive_part(c) for c in r.guard))


def solve_trivial(L: LimitProblem, variables: Iterable[sp.Symbol] = (), pending_as: LimitTag = INC) -> FamilySubst:
    if not L.is_trivial():
        raise NotTrivial(f"{L} is not trivial")
    value = {INC: N, DEC: -N, POS: sp.Integer(1), NEG: sp.Integer(-1)}
    fam: FamilySubst = {v: sp.Integer(0) for v in variables}
    for e, t in L.entries:
        fam[e] = value[t]
    for e in L.pending:
        if not any(x == e for x, _ in L.entries):
            fam[e] = value[pending_as]
    return fam


# --- the rewrite calculus ------------------------------------------------------

Successor = Tuple[LimitProblem, Subst, str]


def _splits(e: Expr) -> List[Tuple[str, Expr, Expr]]:
    """Ways to read e as op(a1, a2)."""
    if e.is_Add:
        terms = sorted(sp.Add.make_args(e), key=_key)
        out = []
        for t in terms:
            rest = canonical(e - t)
            if t.could_extract_minus_sign():
                out.append(("-", rest, canonical(-t)))
            else:
                out.append(("+", t, rest))
        pos = [t for t in terms if not t.could_extract_minus_sign()]
        neg = [t for t in terms if t.could_extract_minus_sign()]
        if pos and neg and len(terms) > 2:
            out.append(("-", canonical(sp.Add(*pos)), canonical(-sp.Add(*neg))))
        return out
    if e.is_Mul:
        factors = dict.fromkeys(sorted(sp.Mul.make_args(e), key=_key))
        return [("*", f, canonical(e / f)) for f in factors]
    if e.is_Pow and e.exp.is_Integer and e.exp >= 2:
        return [("*", e.base, sp.Pow(e.base, e.exp - 1))]
    return []


def _by_vectors(L: LimitProblem, univariate: bool) -> List[Successor]:
    out: List[Successor] = []
    for e, tags, was_pending in L.items():
        if e.is_Symbol or (len(e.free_symbols) == 1) != univariate:
            continue
        for op, a1, a2 in _splits(e):
            for tag in tags:
                for t1, t2 in LIMIT_VECTORS[op][tag]:
                    succ = L.replace_item(e, was_pending, None if was_pending else tag, [(a1, t1), (a2, t2)])
                    out.append((succ, {}, f"(A) {op} ({t1.value}, {t2.value}) on {show(e)}"))
    return out


def _dominating(L: LimitProblem) -> List[Successor]:
    out: List[Successor] = []
    for e, tags, was_pending in L.items():
        if not e.is_Add or len(e.free_symbols) != 1 or not is_polynomial(e):
            continue
        (x,) = e.free_symbols
        lead = sp.Poly(e, x).terms()[0]
        leading = canonical(lead[1] * x ** lead[0][0])
        if lead[0][0] < 1:
            continue
        for tag in tags:
            if tag in (INC, DEC):
                succ = L.replace_item(e, was_pending, None if was_pending else tag, [(leading, tag)])
                out.append((succ, {}, f"(D) {show(e)} -> {show(leading)}"))
    return out


def _integer_log(k: sp.Rational, a: int) -> Optional[int]:
    """j with k == a**j, if any."""
    k, j = sp.Rational(k), 0
    while k != 1 and k.q == 1 and k.p % a == 0:
        k, j = k / a, j + 1
    while k != 1 and k.p == 1 and k.q % a == 0:
        k, j = k * a, j - 1
    return j if k == 1 else None


def _exponential(L: LimitProblem) -> List[Successor]:
    out: List[Successor] = []
    for e, tags, was_pending in L.items():
        if INC not in tags:
            continue
        terms = sp.Add.make_args(e)
        exps = [t for t in terms if any(p.exp.free_symbols for p in t.atoms(sp.Pow))]
        if len(exps) != 1:
            continue
        k, power = exps[0].as_coeff_Mul()
        if not (power.is_Pow and k > 0):
            continue
        a, c = power.base, power.exp
        b = canonical(e - exps[0])
        # sympy pulls constants out of numeric powers: 2**(x/2 - 1) is 2**(x/2)/2
        if a.is_Integer and a > 1:
            j = _integer_log(k, int(a))
            if j:
                c = canonical(c + j)
        if not (is_polynomial(a) and is_polynomial(b) and is_polynomial(c)):
            continue
        if len(a.free_symbols | b.free_symbols | c.free_symbols) > 1:
            continue
        for base_tag in (INC, POS):
            succ = L.replace_item(e, was_pending, None if was_pending else INC, [(a - 1, base_tag), (c, INC)])
            out.append((succ, {}, f"(E) {show(e)}"))
    return out


def _fix_constants(L: LimitProblem) -> List[Successor]:
    out: List[Successor] = []
    others = [e for e in L.expressions() if not e.is_Symbol]
    for e, t in sorted(L.entries, key=lambda et: _key(et[0])):
        if not e.is_Symbol or not t.is_constant:
            continue
        if not any(e in o.free_symbols for o in others):
            continue
        sign = 1 if t is POS else -1
        for m in (1, 2):
            theta = {e: sp.Integer(sign * m)}
            out.append((L.substitute(theta), theta, f"(C) {e}/{sign * m}"))
    return out


def step(L: LimitProblem) -> List[Successor]:
    """All single-step successors of L, in the order the search tries them."""
    out: List[Successor] = []
    for rule in (
        _dominating,
        _exponential,
        lambda p: _by_vectors(p, univariate=True),
        _fix_constants,
        lambda p: _by_vectors(p, univariate=False),
    ):
        for succ, theta, label in rule(L):
            succ = normalize(succ)
            if succ is not None:
                out.append((succ, theta, label))
    return out


def bound_substitutions(r: Rule, limit: int = 8) -> List[Subst]:
    """x -> a for tight guard bounds x >= a or x <= a that the guard can attain."""
    out: List[Subst] = []
    premise = guard_formula(r.guard)
    for x in sorted(r.variables(), key=lambda s: s.name):
        for c in r.guard:
            t = c.tighten()
            if x not in t.free_symbols or not t.expr.is_polynomial(x):
                continue
            poly = sp.Poly(t.expr, x)
            if poly.degree() != 1:
                continue
            k = poly.coeff_monomial(x)
            rest = canonical(t.expr - k * x)
            if k not in (1, -1) or not is_polynomial(rest):
                continue
            bound = canonical(-rest if k == 1 else rest)
            try:
                if not maps_to_int(bound) or not smt.satisfiable(sp.And(premise, sp.Eq(x, bound))):
                    continue
            except (SmtUnsupported, NotPolynomial):
                continue
            theta = {x: bound}
            if theta not in out:
                out.append(theta)
            if len(out) >= limit:
                return out
    return out


# --- SMT encoding --------------------------------------------------------------

_SMT_N = sp.Symbol("n!", real=True)


def _templates(variables: Iterable[sp.Symbol]) -> Dict[sp.Symbol, Tuple[sp.Symbol, sp.Symbol]]:
    return {
        x: (sp.Symbol(f"m!{x.name}", integer=True), sp.Symbol(f"k!{x.name}", integer=True))
        for x in sorted(variables, key=lambda s: s.name)
    }


def coefficients(e: Expr, templates: Dict[sp.Symbol, Tuple[sp.Symbol, sp.Symbol]]) -> List[Expr]:
    """a_0 .. a_d of e under x -> m_x * n + k_x."""
    s = {x: m * _SMT_N + k for x, (m, k) in templates.items() if x in e.free_symbols}
    poly = sp.Poly(sp.expand(sp.sympify(e).xreplace(s)), _SMT_N)
    return [sp.expand(a) for a in reversed(poly.all_coeffs())]


def encode(e: Expr, tag: LimitTag, templates) -> sp.Basic:
    a = coefficients(e, templates)
    d = len(a) - 1
    if tag in (INC, DEC):
        rel = sp.Gt if tag is INC else sp.Lt
        cases = [
            sp.And(rel(a[i], 0), *[sp.Eq(a[j], 0) for j in range(i + 1, d + 1)])
            for i in range(1, d + 1)
        ]
        return sp.Or(*cases)
    rel = sp.Gt if tag is POS else sp.Lt
    return sp.And(*[sp.Eq(a[j], 0) for j in range(1, d + 1)], rel(a[0], 0))


def encode_problem(L: LimitProblem, templates) -> sp.Basic:
    parts = [encode(e, t, templates) for e, t in sorted(L.entries, key=lambda et: _key(et[0]))]
    parts += [sp.Or(encode(e, INC, templates), encode(e, POS, templates)) for e in sorted(L.pending, key=_key)]
    return sp.And(*parts)


def _minimize(formula, templates, model: Dict, timeout_ms: Optional[int]) -> Dict:
    unknowns = [u for pair in templates.values() for u in pair]
    weight = sum((sp.Abs(u) for u in unknowns), sp.Integer(0))
    for _ in range(FAMILY_MINIMIZE_ROUNDS):
        current = sum(abs(model.get(u, 0)) for u in unknowns)
        if current == 0:
            break
        outcome = smt.check_sat(sp.And(formula, sp.Lt(weight, int(current))), timeout_ms)
        if not isinstance(outcome, smt.Sat):
            break
        model = outcome.model
    return model


def smt_solve(
    L: LimitProblem,
    cost: Expr,
    program_vars: Iterable[sp.Symbol] = (),
    timeout_ms: Optional[int] = None,
) -> Optional[FamilySubst]:
    """Solve a polynomial limit problem with linear families, preferring unbounded then high-degree cost."""
    if not L.is_polynomial():
        return None
    cost = canonical(cost)
    variables = L.variables() | (cost.free_symbols if is_polynomial(cost) else set())
    templates = _templates(variables)
    try:
        base = encode_problem(L, templates)
        queries = []
        frozen = [sp.Eq(templates[x][0], 0) for x in program_vars if x in templates]
        if frozen and cost.free_symbols:
            queries.append(("unbounded", sp.And(base, *frozen)))
        if is_polynomial(cost) and cost.free_symbols:
            c = coefficients(cost, templates)
            for i in range(len(c) - 1, 0, -1):
                queries.append((f"degree {i}", sp.And(base, sp.Gt(c[i], 0))))
        queries.append(("plain", base))
        for label, q in queries:
            outcome = smt.check_sat(q, timeout_ms)
            if isinstance(outcome, smt.Sat):
                model = _minimize(q, templates, outcome.model, timeout_ms)
                fam = {
                    x: canonical(int(model.get(m, 0)) * N + int(model.get(k, 0)))
                    for x, (m, k) in templates.items()
                }
                logger.debug("smt solved %s (%s): %s", L, label, fam)
                return fam
    except SmtUnsupported as e:
        logger.debug("smt encoding: %s", e)
    return None


# --- classification ------------------------------------------------------------


def _exp_terms(c: Expr):
    for term in sp.Add.make_args(c):
        k, rest = term.as_coeff_Mul()
        for f in sp.Mul.make_args(rest):
            if f.is_Pow and N in f.exp.free_symbols:
                yield k, rest, f


def classify_family(cost: Expr, fam: FamilySubst, program_vars: Iterable[sp.Symbol] = ()) -> AsymClass:
    """Growth class of cost under the family, before accounting for input size."""
    c = apply(cost, fam)
    if c.free_symbols - {N}:
        raise NotUnivariate(f"{show(c)} mentions {c.free_symbols - {N}}")
    if N not in c.free_symbols:
        return AsymClass.const()
    try:
        growing = bool(sp.limit(c, N, sp.oo) == sp.oo)
    except (NotImplementedError, ValueError, TypeError):
        growing = False
    if not growing:
        return AsymClass.const()
    program_vars = list(program_vars)
    if program_vars and all(N not in sp.sympify(fam.get(x, 0)).free_symbols for x in program_vars):
        return AsymClass.unbounded()
    for k, _, power in _exp_terms(c):
        base, exponent = power.base, power.exp
        if k > 0 and base.is_number and base > 1 and is_polynomial(exponent):
            e_poly = sp.Poly(exponent, N)
            if e_poly.LC() > 0:
                rate = float(base ** e_poly.LC()) if e_poly.degree() == 1 else None
                return AsymClass.exp(base=rate)
    if is_polynomial(c):
        return AsymClass.poly(sp.Poly(c, N).degree())
    raise NotUnivariate(f"cannot classify {show(c)}")


def size_of(fam: FamilySubst, program_vars: Iterable[sp.Symbol]) -> Expr:
    """|x(n)| summed over the program variables, for large n."""
    total = sp.Integer(0)
    for x in program_vars:
        p = canonical(fam.get(x, 0))
        if not is_polynomial(p):
            raise SizeNotPolynomial(f"{x} = {show(p)}")
        if N not in p.free_symbols:
            total += abs(p)
        else:
            total += p if sp.Poly(p, N).LC() > 0 else -p
    return canonical(total)


def compose_bound(inner: AsymClass, size_expr: Expr) -> AsymClass:
    """Lower bound on rc(n) from a lower bound on rc at input size size_expr(n)."""
    size_expr = canonical(size_expr)
    if not is_polynomial(size_expr):
        raise SizeNotPolynomial(show(size_expr))
    if N not in size_expr.free_symbols:
        return AsymClass.const() if inner.kind is AsymKind.CONST else AsymClass.unbounded()
    d = sp.Poly(size_expr, N).degree()
    if inner.kind is AsymKind.POLY:
        return AsymClass.poly(inner.degree / d)
    if inner.kind is AsymKind.EXP:
        return inner if d == 1 else AsymClass.exp(root=d)
    return inner


def ceiling(r: Rule) -> AsymClass:
    """The best class the cost of r could possibly give."""
    cost = canonical(r.cost)
    temps = set(r.temporaries())
    if cost.free_symbols & temps:
        for tv in cost.free_symbols & temps:
            bounded = False
            for c in r.guard:
                t = c.tighten().expr
                if tv in t.free_symbols and t.is_polynomial(tv) and sp.Poly(t, tv).degree() == 1:
                    bounded = bounded or sp.Poly(t, tv).coeff_monomial(tv).is_negative
            if not bounded:
                return AsymClass.unbounded()
    if any(p.exp.free_symbols for p in cost.atoms(sp.Pow)):
        return AsymClass.exp()
    try:
        d = total_degree(cost)
    except NotPolynomial:
        return AsymClass.exp()
    return AsymClass.poly(d) if d > 0 else AsymClass.const()


def holds_eventually(guard: Guard, fam: FamilySubst, starts: Sequence[int] = (16, 128, 1024, 8192)) -> bool:
    """Some n0 with the guard true at n0, 2*n0 and 10*n0."""
    for n0 in starts:
        try:
            if all(
                guard_holds(guard, {x: evaluate(e, {N: Fraction(n)}) for x, e in fam.items()})
                for n in (n0, 2 * n0, 10 * n0)
            ):
                return True
        except AnalysisError:
            continue
    return False


# --- search --------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    depth_cap: int = 12
    node_cap: int = 5000
    smt_budget: int = 24
    smt_timeout_ms: int = 500

    @classmethod
    def from_defaults(cls) -> "SearchConfig":
        return cls(
            depth_cap=int(DEFAULTS["DEPTH_CAP"]),
            node_cap=int(DEFAULTS["NODE_CAP"]),
            smt_budget=int(DEFAULTS["SMT_BUDGET"]),
            smt_timeout_ms=int(DEFAULTS["SMT_TIMEOUT_MS"]),
        )


@dataclass
class Candidate:
    family: FamilySubst
    inner: AsymClass
    bound: AsymClass
    trace: List[str] = field(default_factory=list)


class _Search:
    def __init__(self, r: Rule, cfg: SearchConfig, deadline: Deadline):
        self.rule = r
        self.cfg = cfg
        self.deadline = deadline
        self.cost = canonical(r.cost)
        self.variables = list(r.params) + r.temporaries()
        self.program_vars = list(r.params)
        self.best_possible = ceiling(r)
        self.best: Optional[Candidate] = None
        self.nodes = 0
        self.smt_calls = 0

    def done(self) -> bool:
        if self.best is not None and self.best_possible <= self.best.bound:
            return True
        return self.nodes >= self.cfg.node_cap or self.deadline.expired()

    def offer(self, theta: Subst, sigma: FamilySubst, trace: List[str]):
        images = {x: apply(x, theta) for x in self.variables}
        free = set().union(*(e.free_symbols for e in images.values())) if images else set()
        full = {s: sigma.get(s, sp.Integer(0)) for s in free}
        fam = {x: apply(e, full) for x, e in images.items()}
        if not holds_eventually(self.rule.guard, fam):
            logger.debug("family %s does not satisfy the guard", fam)
            return
        try:
            inner = classify_family(self.cost, fam, self.program_vars)
            bound = compose_bound(inner, size_of(fam, self.program_vars))
        except (NotUnivariate, SizeNotPolynomial) as e:
            logger.debug("discarding family: %s", e)
            return
        if self.best is None or self.best.bound < bound:
            self.best = Candidate(fam, inner, bound, list(trace))
            logger.debug("%s: %s via %s", self.rule.name, bound, fam)

    def visit(self, L: LimitProblem, theta: Subst, trace: List[str], depth: int):
        if self.done():
            return
        self.nodes += 1
        if L.is_trivial():
            for pending_as in (POS, INC):
                self.offer(theta, solve_trivial(L, (), pending_as), trace + [f"trivial {L}"])
            return
        if L.is_polynomial() and self.smt_calls < self.cfg.smt_budget:
            self.smt_calls += 1
            frozen = {s for x in self.program_vars for s in apply(x, theta).free_symbols}
            fam = smt_solve(L, apply(self.cost, theta), frozen, self.cfg.smt_timeout_ms)
            if fam is not None:
                self.offer(theta, fam, trace + [f"smt {L}"])
                if self.done():
                    return
        if depth >= self.cfg.depth_cap:
            return
        for succ, th, label in step(L):
            self.visit(succ, compose(theta, th) if th else theta, trace + [f"{label}: {succ}"], depth + 1)
            if self.done():
                return


def search(
    L0: LimitProblem,
    r: Rule,
    cfg: Optional[SearchConfig] = None,
    deadline: Optional[Deadline] = None,
    thetas: Sequence[Subst] = (),
) -> Optional[Candidate]:
    """Best family found for L0 within the budgets, trying each start substitution first."""
    s = _Search(r, cfg or SearchConfig.from_defaults(), deadline or Deadline())
    for theta in list(thetas) + [{}]:
        start = normalize(L0.substitute(theta) if theta else L0)
        if start is None:
            continue
        label = f"(C) {', '.join(f'{x}/{show(e)}' for x, e in theta.items())}: {start}" if theta else f"start {start}"
        s.visit(start, dict(theta), [label], 0)
        if s.done():
            break
    logger.debug("%s: searched %d nodes, %d smt calls", r.name, s.nodes, s.smt_calls)
    return s.best


def analyze_rule(r: Rule, cfg: Optional[SearchConfig] = None, deadline: Optional[Deadline] = None) -> Optional[Candidate]:
    return search(initial_problem(r), r, cfg, deadline, bound_substitutions(r))


def best_bound(p: Program, cfg: Optional[SearchConfig] = None, deadline: Optional[Deadline] = None) -> BoundResult:
    """The highest bound over the rules of a simplified program."""
    cfg = cfg or SearchConfig.from_defaults()
    deadline = deadline or Deadline()
    best: Optional[Tuple[Rule, Candidate]] = None
    for r in p.rules:
        if deadline.expired():
            logger.warning("[x] time limit reached before analyzing %s", r.name)
            break
        cand = analyze_rule(r, cfg, deadline)
        if cand is None:
            logger.debug("no family for %s", r.name)
            continue
        if best is None or best[1].bound < cand.bound:
            best = (r, cand)
    if best is None:
        rule = p.rules[0] if p.rules else None
        return BoundResult(AsymClass.const(), rule=rule, trace=["no solution of the limit problems found"])
    r, cand = best
    witness = {x: cand.family.get(x, sp.Integer(0)) for x in list(r.params) + r.temporaries()}
    return BoundResult(cand.bound, rule=r, witness=witness, inner=cand.inner, trace=cand.trace)
