"""Integer-program model: rule classification, updates, well-formedness and call graph."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Set

import sympy as sp

from arith import Subst, canonical, is_polynomial, make_subst, maps_to_int, var
from errors import NotPolynomial, NotSimpleLoop
from models import Program, Rule, RuleKind


def classify(r: Rule) -> RuleKind:
    roots = r.rhs_roots
    if r.degree == 1:
        return RuleKind.SIMPLE_LOOP if roots[0] == r.root else RuleKind.TAIL_RECURSIVE
    if r.degree >= 2 and all(f == r.root for f in roots):
        return RuleKind.SIMPLE_RECURSION
    return RuleKind.OTHER


def update(r: Rule) -> Subst:
    """The update μ = {x/t} of a simple loop."""
    if classify(r) is not RuleKind.SIMPLE_LOOP:
        raise NotSimpleLoop(f"{r.name or r} is not a simple loop")
    return make_subst(dict(zip(r.params, r.rhs[0].args)))


def updates(r: Rule) -> List[Subst]:
    """One update per right-hand side term (simple loops and simple recursions)."""
    return [make_subst(dict(zip(r.params, t.args))) for t in r.rhs]


def _integer_valued(e) -> bool:
    e = canonical(e)
    if is_polynomial(e):
        return maps_to_int(e)
    # Exponentials with integer bases and integer-valued exponents are
    # replaced by fresh integers before the polynomial check.
    powers = {}
    for p in e.atoms(sp.Pow):
        if p.exp.free_symbols:
            if not p.base.is_Integer:
                return False
            try:
                if not maps_to_int(p.exp):
                    return False
            except NotPolynomial:
                return False
            powers[p] = var(f"_pow{len(powers)}")
    stripped = canonical(e.xreplace(powers))
    try:
        return maps_to_int(stripped)
    except NotPolynomial:
        return False


def well_formed(r: Rule) -> bool:
    return all(_integer_valued(a) for t in r.rhs for a in t.args)


@dataclass
class CallGraph:
    """Call-graph view of a program: f has an incoming rule if f occurs in its rhs."""

    program: Program
    _in: Dict[str, List[Rule]]
    _out: Dict[str, List[Rule]]

    def incoming(self, f: str) -> List[Rule]:
        return list(self._in.get(f, []))

    def outgoing(self, f: str) -> List[Rule]:
        return list(self._out.get(f, []))

    def reachable_from_start(self) -> Set[str]:
        seen = {self.program.start}
        queue = deque([self.program.start])
        while queue:
            f = queue.popleft()
            for r in self._out.get(f, []):
                for g in r.rhs_roots:
                    if g not in seen:
                        seen.add(g)
                        queue.append(g)
        return seen


def graph_queries(p: Program) -> CallGraph:
    incoming: Dict[str, List[Rule]] = {}
    outgoing: Dict[str, List[Rule]] = {}
    for r in p.rules:
        outgoing.setdefault(r.root, []).append(r)
        for f in dict.fromkeys(r.rhs_roots):
            incoming.setdefault(f, []).append(r)
    return CallGraph(p, incoming, outgoing)


def render_program(p: Program) -> str:
    """Print `p` in the input grammar; parsing the text yields `p` again."""
    lines = [f"START: {p.start}"]
    lines.extend(str(r) for r in p.rules)
    return "\n".join(lines) + "\n"

