"""Program simplification: turn an integer program into one whose rules all start at f0.

Each round runs the processors in a fixed order:

 1. delete rules with unsatisfiable guards or unreachable roots
 2. partially delete occurrences of symbols without rules from non-tail-recursive rules
 3. accelerate simple loops and simple recursions, instantiating temporaries
 4. chain accelerated rules into their predecessors
 5. eliminate symbols that have no loops by chaining

Rounds repeat until every rule is rooted at the start symbol.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import sympy as sp

from arith import FALSE, fresh_var, guard_formula, total_degree
from config import DEFAULTS, MAX_PIPELINE_ROUNDS, RULE_PREFIX, SINK, TEMP_PREFIX
from errors import (
    DegreeTooHigh,
    IntegralityUnprovable,
    NotPolynomial,
    NotTemporary,
    SmtUnsupported,
    Unsolvable,
)
from metering import find_metering, find_metering_rec
from models import Program, ProofStep, ProvTag, Rule, RuleKind
from program import classify, graph_queries, update
from recurrence import iterated_cost, iterated_update
import smt
import transform
from utils import Deadline

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    rule_cap: int = 1000
    smt_timeout_ms: int = 500
    accel_backtrack: int = 4
    keep_proof: bool = True
    timeout: Optional[float] = None

    def __post_init__(self):
        if self.rule_cap <= 0 or self.smt_timeout_ms <= 0 or self.accel_backtrack < 0:
            raise ValueError(f"invalid pipeline configuration {self}")

    @classmethod
    def from_defaults(cls) -> "PipelineConfig":
        return cls(
            rule_cap=int(DEFAULTS["MAX_RULES"]),
            smt_timeout_ms=int(DEFAULTS["SMT_TIMEOUT_MS"]),
            accel_backtrack=int(DEFAULTS["ACCEL_BACKTRACK"]),
        )


@dataclass
class Simplification:
    """Result of `simplify`: the simplified program plus how it was obtained."""

    program: Program
    steps: List[ProofStep] = field(default_factory=list)
    history: Dict[str, Rule] = field(default_factory=dict)
    complete: bool = True

    def accelerated_rules(self) -> List[Rule]:
        return [r for r in self.history.values() if r.provenance.tag is ProvTag.ACCELERATED]


def _cost_rank(r: Rule) -> Tuple[int, int]:
    if any(p.exp.free_symbols for p in r.cost.atoms(sp.Pow)):
        return (2, 0)
    try:
        return (1, total_degree(r.cost))
    except NotPolynomial:
        return (0, 0)


class Simplifier:
    """Stateful driver; `program` always reflects the current rule set."""

    def __init__(self, p: Program, cfg: Optional[PipelineConfig] = None, deadline: Optional[Deadline] = None):
        self.source = p
        self.cfg = cfg or PipelineConfig.from_defaults()
        self.deadline = deadline or Deadline(self.cfg.timeout)
        self.rules: List[Rule] = list(p.rules)
        self.history: Dict[str, Rule] = {r.name: r for r in p.rules}
        self.steps: List[ProofStep] = []
        used = [int(m.group(1)) for r in p.rules if (m := re.fullmatch(rf"{RULE_PREFIX}(\d+)", r.name))]
        self._names = itertools.count(max(used, default=0) + 1)

    @property
    def program(self) -> Program:
        return self.source.replace(rules=tuple(self.rules))

    # --- bookkeeping ---

    def _record(self, kind: str, inputs: Iterable[str], outputs: Iterable[str], why: str):
        inputs, outputs = tuple(inputs), tuple(outputs)
        logger.debug("%s: %s -> %s (%s)", kind, ", ".join(inputs), ", ".join(outputs) or "-", why)
        if self.cfg.keep_proof:
            self.steps.append(ProofStep(kind, inputs, outputs, why))

    def _present(self, r: Rule) -> bool:
        return any(q is r for q in self.rules)

    def _add(self, r: Rule, kind: str, why: str = "") -> Rule:
        """Add r under a fresh name; an equal rule already present is returned instead."""
        for q in self.rules:
            if q == r:
                logger.debug("%s: %s duplicates %s", kind, r, q.name)
                return q
        r = r.replace(name=f"{RULE_PREFIX}{next(self._names)}")
        self.rules.append(r)
        self.history[r.name] = r
        self._record(kind, r.provenance.parents, (r.name,), why or transform.describe(r))
        return r

    def _remove(self, r: Rule, why: str):
        if not self._present(r):
            return
        self.rules = list(transform.delete(self.program, r).rules)
        self._record("deletion", (r.name,), (), why)

    def _enforce_cap(self):
        excess = len(self.rules) - self.cfg.rule_cap
        if excess <= 0:
            return
        ranked = sorted(
            self.rules,
            key=lambda r: (r.provenance.tag is not ProvTag.ORIGINAL, _cost_rank(r)),
        )
        logger.warning("[info] %d rules exceed the cap of %d, pruning", len(self.rules), self.cfg.rule_cap)
        for r in ranked[:excess]:
            self._remove(r, "rule cap")

    # --- useless rules ---

    def _unsat(self, r: Rule) -> bool:
        if FALSE in r.guard:
            return True
        try:
            outcome = smt.check_sat(guard_formula(r.guard), self.cfg.smt_timeout_ms)
        except SmtUnsupported:
            return False
        return isinstance(outcome, smt.Unsat)

    def delete_useless(self):
        reachable = graph_queries(self.program).reachable_from_start()
        for r in list(self.rules):
            if r.root not in reachable:
                self._remove(r, f"{r.root} is unreachable")
            elif self._unsat(r):
                self._remove(r, "guard is unsatisfiable")

    # --- dead occurrences ---

    def drop_dead_occurrences(self):
        while True:
            live = {r.root for r in self.rules}
            target = None
            for r in self.rules:
                if r.degree > 1:
                    idx = next((i for i, t in enumerate(r.rhs) if t.root not in live), None)
                    if idx is not None:
                        target = (r, idx)
                        break
            if target is None:
                return
            r, idx = target
            reduced = transform.partial_delete(r, r.rhs[:idx] + r.rhs[idx + 1:])
            self._add(reduced, "partial deletion", f"{r.rhs[idx].root} has no rules")
            self._remove(r, "replaced by its partial deletion")

    # --- acceleration ---

    def _next_accelerable(self) -> Optional[Rule]:
        loops, recursions = [], []
        for r in self.rules:
            kind = classify(r)
            if kind is RuleKind.SIMPLE_LOOP and not r.accelerated:
                loops.append(r)
            elif kind is RuleKind.SIMPLE_RECURSION:
                recursions.append(r)
        return (loops + recursions or [None])[0]

    def _accelerate_loop(self, r: Rule) -> bool:
        m = find_metering(r)
        if m is None:
            logger.debug("no metering function for %s", r.name)
            return False
        tv = m.bound if m.fresh else fresh_var(TEMP_PREFIX, r.variables())
        try:
            mu = update(r)
            mu_it = iterated_update(mu, tv)
            c_it = iterated_cost(r.cost, mu, mu_it, tv)
        except (Unsolvable, DegreeTooHigh) as e:
            logger.debug("cannot accelerate %s: %s", r.name, e)
            return False
        acc = self._add(transform.accelerate_loop(r, m, mu_it, c_it, tv), "loop acceleration")
        if m.fresh:
            return True
        try:
            inst = transform.instantiate(acc, tv, m.bound)
        except (IntegralityUnprovable, NotTemporary) as e:
            logger.debug("keeping %s: %s", acc.name, e)
            return True
        if inst != acc:
            self._add(inst, "instantiation")
            self._remove(acc, f"{tv} eliminated")
        return True

    def _accelerate_recursion(self, r: Rule) -> bool:
        m = find_metering_rec(r)
        if m is None:
            logger.debug("no metering function for %s", r.name)
            return False
        self._add(transform.accelerate_recursion(r, m), "recursion acceleration")
        return True

    def _partial_deletions(self, r: Rule):
        if r.degree > 2:
            pairs = itertools.combinations(range(r.degree), 2)
            for i, j in itertools.islice(pairs, self.cfg.accel_backtrack):
                reduced = transform.partial_delete(r, (r.rhs[i], r.rhs[j]))
                m = find_metering_rec(reduced)
                if m is None:
                    continue
                reduced = self._add(reduced, "partial deletion")
                self._add(transform.accelerate_recursion(reduced, m), "recursion acceleration")
                self._remove(reduced, "accelerated")
                return
        for t in dict.fromkeys(r.rhs):
            self._add(transform.partial_delete(r, (t,)), "partial deletion")

    def _fallback(self, r: Rule):
        if r.temporaries():
            hint = transform.instantiate_heuristic(r)
            if hint is None:
                return
            tv, b = hint
            try:
                self._add(transform.instantiate(r, tv, b), "instantiation")
            except IntegralityUnprovable as e:
                logger.debug("cannot instantiate %s in %s: %s", tv, r.name, e)
        elif r.degree > 1:
            self._partial_deletions(r)

    def accelerate(self):
        while True:
            self.deadline.check("acceleration")
            r = self._next_accelerable()
            if r is None:
                return
            if classify(r) is RuleKind.SIMPLE_LOOP:
                done = self._accelerate_loop(r)
            else:
                done = self._accelerate_recursion(r)
            if not done:
                self._fallback(r)
            self._remove(r, "accelerated" if done else "not accelerable")
            self._enforce_cap()

    # --- chaining accelerated rules ---

    def chain_accelerated(self):
        predecessors: List[Rule] = []
        while True:
            self.deadline.check("chaining")
            acc = next((r for r in self.rules if r.accelerated), None)
            if acc is None:
                break
            for pred in list(self.rules):
                if pred.root == acc.root:
                    continue
                for idx, t in enumerate(pred.rhs):
                    if t.root != acc.root:
                        continue
                    c = transform.chain(pred, acc, idx)
                    if self._unsat(c):
                        continue
                    self._add(c, "chaining")
                    if not any(q is pred for q in predecessors):
                        predecessors.append(pred)
            self._remove(acc, "chained into its predecessors")
        for pred in predecessors:
            self._remove(pred, "superseded by chaining")
        self._enforce_cap()

    # --- elimination ---

    def _eliminable(self) -> Optional[str]:
        candidates = []
        for f in self.program.symbols():
            if f in (self.source.start, SINK):
                continue
            out = [r for r in self.rules if r.root == f]
            if not out or any(f in r.rhs_roots for r in out):
                continue
            incoming = [r for r in self.rules if f in r.rhs_roots]
            if incoming:
                candidates.append((len(incoming) != 1, f))
        return min(candidates)[1] if candidates else None

    def eliminate(self):
        while True:
            self.deadline.check("elimination")
            f = self._eliminable()
            if f is None:
                return
            outgoing = [r for r in self.rules if r.root == f]
            incoming = [r for r in self.rules if f in r.rhs_roots]
            continued = set()
            for pred in incoming:
                for idx, t in enumerate(pred.rhs):
                    if t.root != f:
                        continue
                    for succ in outgoing:
                        c = transform.chain(pred, succ, idx)
                        if self._unsat(c):
                            continue
                        self._add(c, "chaining")
                        continued.add(pred.name)
            for r in outgoing:
                self._remove(r, f"{f} eliminated")
            # a predecessor no rule of f can follow keeps its cost and ends in f
            for pred in incoming:
                if pred.name in continued and set(pred.rhs_roots) <= {f}:
                    self._remove(pred, f"{f} eliminated")
            self._enforce_cap()

    # --- driver ---

    def _force(self):
        """Delete the rules of one non-start symbol when a round changed nothing."""
        roots = sorted({r.root for r in self.rules if r.root != self.source.start})
        if not roots:
            return
        f = roots[0]
        logger.warning("[info] no processor applies, deleting the rules of %s", f)
        for r in [q for q in self.rules if q.root == f]:
            self._remove(r, "no processor applies")

    def _simplified(self) -> bool:
        return all(r.root == self.source.start for r in self.rules)

    def run(self) -> Simplification:
        for round_no in range(1, MAX_PIPELINE_ROUNDS + 1):
            self.delete_useless()
            if self._simplified():
                break
            before = list(self.rules)
            logger.debug("round %d: %d rules", round_no, len(self.rules))
            self.drop_dead_occurrences()
            self.accelerate()
            self.chain_accelerated()
            self.eliminate()
            if self.rules == before:
                self._force()
        else:
            logger.warning("[info] round limit reached, dropping rules not rooted at the start")
            for r in [q for q in self.rules if q.root != self.source.start]:
                self._remove(r, "round limit")
        self.delete_useless()
        return Simplification(self.program, self.steps, dict(self.history), complete=True)

    def partial(self) -> Simplification:
        """The start rules found so far, for reporting after a timeout."""
        rules = tuple(r for r in self.rules if r.root == self.source.start)
        return Simplification(self.source.replace(rules=rules), self.steps, dict(self.history), complete=False)


def simplify(p: Program, cfg: Optional[PipelineConfig] = None, deadline: Optional[Deadline] = None) -> Simplification:
    """Simplify `p` so that every rule is rooted at its start symbol."""
    result = Simplifier(p, cfg, deadline).run()
    logger.debug("simplified to %d rules with %d steps", len(result.program.rules), len(result.steps))
    return result


def provenance_chain(result: Simplification, name: str) -> List[Rule]:
    """Ancestors of a rule in creation order, the rule itself last."""
    seen: Dict[str, Rule] = {}

    def visit(n: str):
        if n in seen or n not in result.history:
            return
        r = result.history[n]
        for parent in r.provenance.parents:
            visit(parent)
        seen[n] = r

    visit(name)
    return list(seen.values())
