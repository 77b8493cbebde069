"""Metering-function synthesis for simple loops and simple recursions.

A metering function b under-estimates how often a loop can run.  It is
found as a linear template c0 + sum(c_v * v) whose coefficients satisfy
universally quantified implications; Farkas' lemma turns those into an
existential system over the coefficients that z3 solves.
"""

from __future__ import annotations

import itertools
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import sympy as sp

from arith import (
    Constraint,
    Expr,
    Guard,
    Subst,
    apply,
    canonical,
    fresh_var,
    guard_formula,
    guard_symbols,
    is_linear,
    number,
    show,
    show_guard,
)
from config import METERING_COEFF_BOX, TEMP_PREFIX
from errors import NonLinearInput, NotLinearizable, SmtUnsupported
from models import Metering, MeteringKind, Rule, Term
from program import update, updates
import smt

logger = logging.getLogger(__name__)

_multipliers = itertools.count()


def _implied(g: Guard, c: Constraint, mus: Sequence[Subst]) -> bool:
    premise = guard_formula(g)
    try:
        return all(
            smt.proves(sp.Implies(premise, c.substitute(mu).formula())) for mu in mus
        )
    except SmtUnsupported:
        return False


def partition_guard(g: Guard, mu: Union[Subst, Sequence[Subst]]) -> Tuple[Guard, Guard]:
    """Split g into (phi, psi) where psi collects the conjuncts g keeps invariant."""
    mus = [mu] if isinstance(mu, dict) else list(mu)
    phi: List[Constraint] = []
    psi: List[Constraint] = []
    for c in g:
        (psi if _implied(g, c, mus) else phi).append(c)
    return tuple(phi), tuple(psi)


# --- Farkas -----------------------------------------------------------------


def _affine(e: Expr, variables: Sequence[sp.Symbol]) -> Tuple[Dict[sp.Symbol, Expr], Expr]:
    """Coefficients per variable and constant term of an expression linear in `variables`."""
    e = canonical(e)
    if not variables:
        return {}, e
    try:
        poly = sp.Poly(e, *variables)
    except sp.PolynomialError as exc:
        raise NonLinearInput(f"{e} is not polynomial") from exc
    if poly.total_degree() > 1:
        raise NonLinearInput(f"{show(e)} is not linear")
    coeffs = {v: poly.coeff_monomial(v) for v in variables}
    return coeffs, poly.coeff_monomial(1)


def _multiplier() -> sp.Symbol:
    return sp.Symbol(f"lam!{next(_multipliers)}", real=True)


def farkas_encode(premise: Guard, conclusion: Constraint, template_coeffs: Iterable[sp.Symbol]) -> sp.Basic:
    """Existential formula over the template coefficients implying premise => conclusion."""
    unknowns: Set[sp.Symbol] = set(template_coeffs)
    premise = tuple(c.tighten() for c in premise)
    variables = sorted(
        (guard_symbols(premise) | conclusion.free_symbols) - unknowns, key=lambda s: s.name
    )
    rows = []
    for c in premise:
        if c.free_symbols & unknowns:
            raise NonLinearInput(f"premise {c} mentions template coefficients")
        rows.append(_affine(c.expr, variables))
    target, constant = _affine(conclusion.expr, variables)
    if any(coeff.free_symbols - unknowns for coeff in list(target.values()) + [constant]):
        raise NonLinearInput(f"conclusion {conclusion} is not linear")

    lams = [_multiplier() for _ in rows]
    lam0 = _multiplier()
    parts = [sp.Gt(lam0, 0) if conclusion.strict else sp.Ge(lam0, 0)]
    parts += [sp.Ge(l, 0) for l in lams]
    for v in variables:
        parts.append(sp.Eq(target[v], sum((l * row[0][v] for l, row in zip(lams, rows)), sp.Integer(0))))
    parts.append(sp.Eq(constant, lam0 + sum((l * row[1] for l, row in zip(lams, rows)), sp.Integer(0))))
    entails = sp.And(*parts)
    if not rows:
        return entails

    # an inconsistent premise implies anything
    mus = [_multiplier() for _ in rows]
    refute = [sp.Ge(m, 0) for m in mus]
    for v in variables:
        refute.append(sp.Eq(sum((m * row[0][v] for m, row in zip(mus, rows)), sp.Integer(0)), 0))
    refute.append(sp.Le(sum((m * row[1] for m, row in zip(mus, rows)), sp.Integer(0)), -1))
    return sp.Or(entails, sp.And(*refute))


# --- linearization ------------------------------------------------------------


def _monomials(e: Expr) -> List[Expr]:
    return [canonical(m) for m in sp.Add.make_args(canonical(e)) if m.free_symbols]


def _nonlinear(m: Expr) -> bool:
    return not is_linear(m, list(m.free_symbols))


def linearize(r: Rule) -> Tuple[Rule, Subst]:
    """Replace isolated nonlinear guard terms by fresh variables and drop irrelevant nonlinear updates."""
    mus = updates(r)
    guard_vars = guard_symbols(r.guard)
    param_index = {x: i for i, x in enumerate(r.params)}

    # nonlinear updates of variables that the guard never mentions are irrelevant
    rhs: List[Term] = []
    for t in r.rhs:
        args = list(t.args)
        for x, i in param_index.items():
            if i < len(args) and not is_linear(args[i], r.variables()):
                if x in guard_vars:
                    raise NotLinearizable(f"nonlinear update of {x} in {r.name or r}")
                args[i] = x
        rhs.append(Term(t.root, tuple(args)))

    def occurrences(v: sp.Symbol, skip: Expr) -> int:
        count = 0
        for c in r.guard:
            for m in _monomials(c.expr):
                if v in m.free_symbols and m.as_coeff_Mul()[1] != skip:
                    count += 1
        for t in rhs:
            for x, a in zip(r.params, t.args):
                if v in a.free_symbols and canonical(a) != v:
                    count += 1
        return count

    taken = {s.name for s in r.variables()}
    back: Subst = {}
    replace: Dict[Expr, sp.Symbol] = {}
    for c in r.guard:
        for m in _monomials(c.expr):
            body = m.as_coeff_Mul()[1]
            if not _nonlinear(body) or body in replace:
                continue
            frozen = all(apply(v, mu) == v for v in body.free_symbols for mu in mus)
            if not frozen or any(occurrences(v, body) for v in body.free_symbols):
                raise NotLinearizable(f"nonlinear guard term {show(body)} in {r.name or r}")
            w = fresh_var("w", taken)
            taken.add(w.name)
            replace[body] = w
            back[w] = body

    guard = tuple(Constraint(c.expr.xreplace(replace), c.strict) for c in r.guard)
    return r.replace(rhs=tuple(rhs), guard=guard), back


# --- synthesis ----------------------------------------------------------------


def _template(variables: Sequence[sp.Symbol], integral_offset: bool) -> Tuple[Expr, sp.Symbol, Dict[sp.Symbol, sp.Symbol]]:
    c0 = sp.Symbol("c!0", integer=True) if integral_offset else sp.Symbol("c!0", real=True)
    coeffs = {v: sp.Symbol(f"c!{v.name}", real=True) for v in variables}
    b = c0 + sum((coeffs[v] * v for v in variables), sp.Integer(0))
    return b, c0, coeffs


def _conditions(
    phi: Guard, psi: Guard, mus: Sequence[Subst], b: Expr, unknowns: Set[sp.Symbol]
) -> List[sp.Basic]:
    guard = phi + psi
    parts = []
    for c in phi:
        parts.append(farkas_encode(psi + (c.negate(),), Constraint(-b, strict=False), unknowns))
    for mu in mus:
        parts.append(farkas_encode(guard, Constraint(apply(b, mu) - b + 1, strict=False), unknowns))
    parts.append(farkas_encode(guard, Constraint(b, strict=False), unknowns))
    return parts


def _value(q: Fraction) -> sp.Rational:
    return number(Fraction(q))


def template_variables(r: Rule, mus: Sequence[Subst]) -> List[sp.Symbol]:
    """Variables of r whose image under every update is linear; b ranges over these."""
    return sorted(
        (v for v in r.variables() if all(is_linear(mu.get(v, v), mu.get(v, v).free_symbols) for mu in mus)),
        key=lambda s: s.name,
    )


def _synthesize(
    phi: Guard, psi: Guard, mus: Sequence[Subst], reference: Dict, variables: Sequence[sp.Symbol]
) -> Optional[Expr]:
    for integral_offset in (True, False):
        b, c0, coeffs = _template(variables, integral_offset)
        unknowns = {c0, *coeffs.values()}
        try:
            parts = _conditions(phi, psi, mus, b, unknowns)
        except NonLinearInput as e:
            logger.debug("metering: %s", e)
            return None
        box = [sp.And(sp.Ge(u, -METERING_COEFF_BOX), sp.Le(u, METERING_COEFF_BOX)) for u in unknowns]
        formula = sp.And(*parts, *box)
        objective = sum(
            (coeffs[v] * _value(reference.get(v, 0)) for v in variables), sp.Integer(0)
        )
        outcome = smt.maximize(formula, [objective, c0])
        if isinstance(outcome, smt.Unknown):
            outcome = smt.check_sat(formula)
        if isinstance(outcome, smt.Sat):
            values = {u: _value(outcome.model.get(u, 0)) for u in unknowns}
            return canonical(b.xreplace(values))
    return None


def _sound(phi: Guard, psi: Guard, mus: Sequence[Subst], b: Expr) -> bool:
    checks = [
        sp.Implies(guard_formula(psi + (c.negate(),)), sp.Le(b, 0)) for c in phi
    ] + [
        sp.Implies(guard_formula(phi + psi), sp.Ge(apply(b, mu), b - 1)) for mu in mus
    ]
    for f in checks:
        if isinstance(smt.is_valid(f), smt.Invalid):
            return False
    return True


def _find(r: Rule, mus_of, kind: MeteringKind, allow_fresh: bool) -> Optional[Metering]:
    try:
        lin, back = linearize(r)
    except NotLinearizable as e:
        logger.debug("metering: %s", e)
        return None
    mus = mus_of(lin)
    try:
        phi, psi = partition_guard(lin.guard, mus)
        start = smt.check_sat(guard_formula(lin.guard))
    except SmtUnsupported as e:
        logger.debug("metering: %s", e)
        return None
    if not isinstance(start, smt.Sat):
        return None
    condition = tuple(c.substitute(back) for c in psi)
    if kind is MeteringKind.PLAIN and psi:
        kind = MeteringKind.CONDITIONAL

    if not phi:
        if not allow_fresh:
            return None
        tv = fresh_var(TEMP_PREFIX, r.variables())
        logger.debug("metering %s: guard is invariant, unbounded via %s", r.name, tv)
        return Metering(condition, tv, kind, fresh=True)

    try:
        wider = template_variables(lin, mus)
        bounding = [v for v in wider if v in guard_symbols(phi)]
        b = _synthesize(phi, psi, mus, start.model, bounding)
        if b is None and len(wider) > len(bounding):
            b = _synthesize(phi, psi, mus, start.model, wider)
        if b is None:
            return None
        if not smt.satisfiable(sp.And(guard_formula(lin.guard), sp.Gt(b, 0))):
            logger.debug("metering %s: %s is never positive", r.name, show(b))
            return None
        if not _sound(phi, psi, mus, b):
            logger.warning("[err] metering %s: %s failed the re-check", r.name, show(b))
            return None
    except SmtUnsupported as e:
        logger.debug("metering: %s", e)
        return None
    b = apply(b, back)
    logger.debug("metering %s: b = %s under [%s]", r.name, show(b), show_guard(condition))
    return Metering(condition, b, kind)


def find_metering(r: Rule) -> Optional[Metering]:
    """Conditional metering function of a simple loop, or None."""
    update(r)
    return _find(r, lambda lin: [update(lin)], MeteringKind.PLAIN, allow_fresh=True)


def find_metering_rec(r: Rule) -> Optional[Metering]:
    """Metering function of a simple recursion: every rhs term must decrease b by at most 1."""
    return _find(r, updates, MeteringKind.RECURSION, allow_fresh=False)
