"""Sound processors over rules: acceleration, instantiation, chaining and deletion.

Every processor builds new rules and leaves its inputs untouched; the
pipeline decides which rules are added to or removed from the program.
Produced rules carry an empty name; the pipeline names them.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

import sympy as sp

from arith import (
    FALSE,
    Constraint,
    Expr,
    Guard,
    Subst,
    apply,
    canonical,
    fresh_var,
    guard_formula,
    is_polynomial,
    maps_to_int,
    normalize_guard,
    show,
    show_guard,
    substitute_guard,
)
from config import SINK, TEMP_PREFIX
from errors import (
    AnalysisError,
    IntegralityUnprovable,
    NotPresent,
    NotStrictSubset,
    NotTemporary,
    RootMismatch,
    SmtUnsupported,
)
from models import Metering, Program, Provenance, ProvTag, Rule, RuleKind, Term
from program import classify
import smt

logger = logging.getLogger(__name__)

SINK_TERM = Term(SINK, ())


def _implies(premise: Sequence[Constraint], c: Constraint) -> bool:
    try:
        return smt.proves(sp.Implies(guard_formula(premise), c.formula()))
    except SmtUnsupported:
        return False


def simplify_guard(g: Sequence[Constraint]) -> Guard:
    """Drop, in one pass, every conjunct implied by the conjuncts still kept."""
    kept = list(normalize_guard(g))
    if kept == [FALSE]:
        return (FALSE,)
    i = 0
    while i < len(kept):
        rest = kept[:i] + kept[i + 1:]
        if rest and _implies(rest, kept[i]):
            logger.debug("guard: dropping implied %s", kept[i])
            kept.pop(i)
        else:
            i += 1
    return tuple(kept)


def _closed_form_text(mu_it: Subst) -> str:
    return ", ".join(f"{x} := {show(e)}" for x, e in sorted(mu_it.items(), key=lambda kv: kv[0].name))


def accelerate_loop(r: Rule, m: Metering, mu_it: Subst, c_it: Expr, tv: sp.Symbol) -> Rule:
    """Summarize tv consecutive iterations of a simple loop.

    The guard is guard(r) and the metering condition together with
    0 < tv < b + 1; an unbounded metering function contributes no upper bound.
    """
    bounds = [Constraint(tv)]
    if not m.fresh:
        bounds.append(Constraint(m.bound + 1 - tv))
    guard = simplify_guard(tuple(r.guard) + tuple(m.condition) + tuple(bounds))
    args = tuple(apply(x, mu_it) for x in r.params)
    detail = {
        "metering": str(m),
        "tv": tv.name,
        "iterated update": _closed_form_text(mu_it),
        "iterated cost": show(c_it),
    }
    return Rule(
        root=r.root,
        params=r.params,
        cost=canonical(c_it),
        rhs=(Term(r.root, args),),
        guard=guard,
        provenance=Provenance(ProvTag.ACCELERATED, (r.name,), detail, accelerated=True),
    )


def accelerate_recursion(r: Rule, m: Metering) -> Rule:
    """Replace a simple recursion of degree d by a sink rule of cost (d^b - 1)/(d - 1)."""
    if classify(r) is not RuleKind.SIMPLE_RECURSION:
        raise AnalysisError(f"{r.name or r} is not a simple recursion")
    d = sp.Integer(r.degree)
    cost = canonical((sp.Pow(d, m.bound) - 1) / (d - 1))
    guard = tuple(r.guard) + tuple(m.condition)
    at_least_one = Constraint(r.cost - 1, strict=False)
    if not _implies(guard, at_least_one):
        guard += (at_least_one,)
    detail = {"metering": str(m), "degree": str(r.degree), "cost": show(cost)}
    return Rule(
        root=r.root,
        params=r.params,
        cost=cost,
        rhs=(SINK_TERM,),
        guard=simplify_guard(guard),
        provenance=Provenance(ProvTag.ACCELERATED, (r.name,), detail, accelerated=True),
    )


def instantiate(r: Rule, tv: sp.Symbol, b: Expr) -> Rule:
    """Replace the temporary tv by b everywhere in r."""
    if tv not in r.temporaries():
        raise NotTemporary(f"{tv} is not a temporary variable of {r.name or r}")
    b = canonical(b)
    if not is_polynomial(b) or not maps_to_int(b):
        raise IntegralityUnprovable(f"{show(b)} does not map integers to integers")
    s = {tv: b}
    rhs = tuple(Term(t.root, tuple(apply(a, s) for a in t.args)) for t in r.rhs)
    guard = simplify_guard(substitute_guard(r.guard, s))
    return Rule(
        root=r.root,
        params=r.params,
        cost=apply(r.cost, s),
        rhs=rhs,
        guard=guard,
        provenance=Provenance(
            ProvTag.INSTANTIATED, (r.name,), {tv.name: show(b)}, accelerated=r.accelerated
        ),
    )


def _bound_candidates(r: Rule, tv: sp.Symbol) -> Tuple[List[Expr], List[Expr]]:
    upper: List[Expr] = []
    lower: List[Expr] = []
    for c in r.guard:
        t = c.tighten()
        if tv not in t.free_symbols or not t.expr.is_polynomial(tv):
            continue
        poly = sp.Poly(t.expr, tv)
        if poly.degree() != 1:
            continue
        k = poly.coeff_monomial(tv)
        rest = canonical(t.expr - k * tv)
        # k * tv + rest >= 0
        if k == -1:
            upper.append(rest)
        elif k == 1:
            lower.append(canonical(-rest))
    return upper, lower


def instantiate_heuristic(r: Rule) -> Optional[Tuple[sp.Symbol, Expr]]:
    """A temporary with the bound it attains: minimal upper bounds first, then maximal lower ones."""
    premise = guard_formula(r.guard)
    for tv in r.temporaries():
        upper, lower = _bound_candidates(r, tv)
        for bound in upper + lower:
            try:
                if smt.satisfiable(sp.And(premise, sp.Eq(tv, bound))):
                    logger.debug("instantiate %s: %s := %s", r.name, tv, show(bound))
                    return tv, bound
            except SmtUnsupported:
                continue
    return None


def _rename_temporaries(r1: Rule, r2: Rule) -> Dict[sp.Symbol, Expr]:
    taken = {s.name for s in r1.variables() | r2.variables()}
    clash = r1.variables()
    renaming: Dict[sp.Symbol, Expr] = {}
    for t in r2.temporaries():
        if t in clash:
            fresh = fresh_var(TEMP_PREFIX, taken)
            taken.add(fresh.name)
            renaming[t] = fresh
    return renaming


def chain(r1: Rule, r2: Rule, at_index: int) -> Rule:
    """Apply r2 to the rhs occurrence r1.rhs[at_index] right after r1."""
    at = r1.rhs[at_index]
    if at.root != r2.root:
        raise RootMismatch(f"{at} is not an instance of {r2.lhs()}")
    mu: Dict[sp.Symbol, Expr] = dict(_rename_temporaries(r1, r2))
    mu.update(zip(r2.params, at.args))
    cost = canonical(r1.cost + apply(r2.cost, mu))
    terms = [t for i, t in enumerate(r1.rhs) if i != at_index]
    terms += [Term(t.root, tuple(apply(a, mu) for a in t.args)) for t in r2.rhs]
    # sink stands for the empty multiset
    rhs = tuple(t for t in terms if not t.is_sink) or (SINK_TERM,)
    guard = simplify_guard(tuple(r1.guard) + substitute_guard(r2.guard, mu))
    return Rule(
        root=r1.root,
        params=r1.params,
        cost=cost,
        rhs=rhs,
        guard=guard,
        provenance=Provenance(ProvTag.CHAINED, (r1.name, r2.name), {"at": str(at)}),
    )


def delete(p: Program, r: Rule) -> Program:
    for i, q in enumerate(p.rules):
        if q.name == r.name and q == r:
            return p.replace(rules=p.rules[:i] + p.rules[i + 1:])
    raise NotPresent(f"{r.name or r} is not a rule of the program")


def partial_delete(r: Rule, keep: Sequence[Term]) -> Rule:
    """r with its rhs reduced to the strict sub-multiset `keep`."""
    have, want = Counter(r.rhs), Counter(keep)
    if any(want[t] > have[t] for t in want) or sum(want.values()) >= len(r.rhs):
        raise NotStrictSubset(f"{[str(t) for t in keep]} is not a strict part of {r.name or r}")
    dropped = have - want
    return r.replace(
        rhs=tuple(keep) or (SINK_TERM,),
        name="",
        provenance=Provenance(
            ProvTag.PARTIAL_DELETED,
            (r.name,),
            {"dropped": ", ".join(str(t) for t in dropped.elements())},
        ),
    )


def describe(r: Rule) -> str:
    """One-line summary of how a rule was produced."""
    prov = r.provenance
    parts = [prov.tag.value]
    if prov.parents:
        parts.append("of " + ", ".join(prov.parents))
    if prov.detail:
        parts.append("(" + "; ".join(f"{k} {v}" for k, v in prov.detail.items()) + ")")
    if r.guard:
        parts.append(f"under [{show_guard(r.guard)}]")
    return " ".join(parts)
