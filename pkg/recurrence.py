"""Closed forms of iterated loop updates and iterated costs.

A simple-loop update x' = a*x + p is solved variable by variable in
dependency order.  Closed forms only need to hold for tv >= 1, which lets
the first iteration be corrected by a constant term instead of a case split.
"""

from __future__ import annotations

import logging
from graphlib import CycleError, TopologicalSorter
from typing import Dict, List, Tuple

import sympy as sp

from arith import Expr, Subst, apply, canonical, compose, make_subst
from config import FAULHABER_MAX_DEGREE
from errors import DegreeTooHigh, Unsolvable

logger = logging.getLogger(__name__)

# summation index; a Dummy never clashes with program variables
INDEX = sp.Dummy("i", integer=True)


def _bernoulli(j: int) -> sp.Rational:
    # B1 = -1/2 makes the formula sum over 0..n-1
    return sp.Rational(-1, 2) if j == 1 else sp.Rational(sp.bernoulli(j))


def _power_sum(k: int, upper: Expr) -> Expr:
    """Faulhaber: sum_{i=0}^{upper-1} i^k."""
    total = sum(
        (sp.binomial(k + 1, j) * _bernoulli(j) * upper ** (k + 1 - j) for j in range(k + 1)),
        sp.Integer(0),
    )
    return canonical(total / (k + 1))


def poly_sum(p, upper: Expr, index: sp.Symbol = INDEX) -> Expr:
    """Closed form of sum_{index=0}^{upper-1} p for a polynomial p in `index`."""
    p = canonical(p)
    if index not in p.free_symbols:
        return canonical(p * upper)
    if not p.is_polynomial(index):
        raise Unsolvable(f"summand {p} is not polynomial in the index")
    poly = sp.Poly(p, index)
    if poly.degree() > FAULHABER_MAX_DEGREE:
        raise DegreeTooHigh(f"degree {poly.degree()} exceeds {FAULHABER_MAX_DEGREE}")
    total = sp.Integer(0)
    for (k,), coeff in poly.terms():
        total += coeff * _power_sum(k, upper)
    return canonical(total)


def _split_geometric(term: Expr, index: sp.Symbol) -> Tuple[sp.Rational, Expr]:
    """Write `term` as poly(index) * r^index; returns (r, poly)."""
    ratio = sp.Integer(1)
    rest: List[Expr] = []
    for f in sp.Mul.make_args(term):
        if f.is_Pow and index in f.exp.free_symbols:
            base, exp = f.base, sp.expand(f.exp)
            if not (base.is_Rational and base > 0):
                raise Unsolvable(f"cannot sum {term}: base {base}")
            c = exp.coeff(index)
            shift = canonical(exp - c * index)
            if not c.is_Integer or index in shift.free_symbols:
                raise Unsolvable(f"cannot sum {term}: exponent {exp}")
            ratio *= base ** c
            rest.append(sp.Pow(base, shift))
        else:
            rest.append(f)
    poly = canonical(sp.Mul(*rest))
    if index in poly.free_symbols and not poly.is_polynomial(index):
        raise Unsolvable(f"cannot sum {term}")
    return sp.Rational(ratio), poly


def closed_sum(summand, upper: Expr, index: sp.Symbol = INDEX) -> Expr:
    """sum_{index=0}^{upper-1} summand for sums of poly(index) * r^index terms."""
    groups: Dict[sp.Rational, Expr] = {}
    for term in sp.Add.make_args(canonical(summand)):
        r, poly = _split_geometric(term, index)
        groups[r] = groups.get(r, sp.Integer(0)) + poly
    total = sp.Integer(0)
    for r, poly in groups.items():
        poly = canonical(poly)
        if r == 1:
            total += poly_sum(poly, upper, index)
        elif index in poly.free_symbols:
            raise Unsolvable(f"cannot sum ({poly})*{r}^i")
        else:
            total += poly * (sp.Pow(r, upper) - 1) / (r - 1)
    return canonical(total)


def _order(mu: Subst) -> List[sp.Symbol]:
    graph = {
        x: sorted((s for s in mu[x].free_symbols if s in mu and s != x), key=lambda s: s.name)
        for x in sorted(mu, key=lambda s: s.name)
    }
    try:
        return list(TopologicalSorter(graph).static_order())
    except CycleError as e:
        raise Unsolvable(f"mutually dependent updates: {e.args[1]}") from e


def unroll(mu: Subst, k: int) -> Subst:
    """mu^k, the update applied k times."""
    out: Subst = {}
    for _ in range(k):
        out = compose(out, mu)
    return out


def iterated_update(mu: Subst, tv: sp.Symbol) -> Subst:
    """Closed form of mu^tv, valid for tv >= 1."""
    mu = make_subst(mu)
    closed: Subst = {}
    for x in _order(mu):
        rhs = mu[x]
        if x in rhs.free_symbols:
            if not rhs.is_polynomial(x) or sp.degree(rhs, x) != 1:
                raise Unsolvable(f"update of {x} is not affine in {x}")
            a = sp.Poly(rhs, x).coeff_monomial(x)
            if a.free_symbols or not a.is_Rational:
                raise Unsolvable(f"update of {x} has non-constant multiplier {a}")
        else:
            a = sp.Integer(0)
        p = canonical(rhs - a * x)
        # q(i): p on the closed forms after i iterations, exact for i >= 1
        q = apply(p, {y: apply(e, {tv: INDEX}) for y, e in closed.items()})
        q0 = apply(q, {INDEX: 0})
        if a == 1:
            closed[x] = canonical(x + closed_sum(q, tv) + (p - q0))
        elif a == 0:
            if canonical(q0 - p) != 0:
                raise Unsolvable(f"assignment to {x} differs in the first iteration")
            closed[x] = apply(q, {INDEX: tv - 1})
        elif a > 0:
            weighted = canonical(q * sp.Pow(1 / a, INDEX))
            total = closed_sum(weighted, tv) + (p - q0)
            closed[x] = canonical(sp.Pow(a, tv) * x + sp.Pow(a, tv) / a * total)
        else:
            raise Unsolvable(f"negative multiplier {a} for {x}")
    result = make_subst(closed)
    for k in (1, 2):
        unrolled = unroll(mu, k)
        for x in mu:
            if apply(apply(x, result), {tv: k}) != apply(x, unrolled):
                raise Unsolvable(f"closed form of {x} does not unroll at {k}")
    logger.debug("closed form %s", {str(x): str(e) for x, e in result.items()})
    return result


def iterated_cost(c: Expr, mu: Subst, mu_it: Subst, tv: sp.Symbol) -> Expr:
    """Closed form of sum_{i=0}^{tv-1} c mu^i."""
    for x in mu:
        if apply(apply(x, mu_it), {tv: 1}) != apply(x, mu):
            raise Unsolvable(f"{x} of the iterated update does not match the update")
    c = canonical(c)
    q = apply(c, {y: apply(e, {tv: INDEX}) for y, e in mu_it.items()})
    q0 = apply(q, {INDEX: 0})
    return canonical(closed_sum(q, tv) + (c - q0))
