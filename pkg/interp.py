"""Reference evaluator: the transition relation and a bounded worst-case search."""

from __future__ import annotations

import itertools
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import sympy as sp

from arith import evaluate, guard_holds
from config import DEFAULTS, SINK
from errors import AnalysisError, GuardViolated, NoMatch
from models import Program, Rule

logger = logging.getLogger(__name__)

GroundTerm = Tuple[str, Tuple[int, ...]]
Config = Tuple[GroundTerm, ...]


def config_of(*terms: GroundTerm) -> Config:
    """Multiset of ground terms, kept as a sorted tuple."""
    return tuple(sorted((root, tuple(int(a) for a in args)) for root, args in terms))


@dataclass(frozen=True)
class RunBudget:
    max_steps: int = 400
    tv_range: Tuple[int, int] = (-8, 8)
    branch_cap: int = 200_000

    def __post_init__(self):
        lo, hi = self.tv_range
        if self.max_steps <= 0 or self.branch_cap <= 0 or lo > hi:
            raise ValueError(f"invalid run budget {self}")

    @classmethod
    def from_defaults(cls) -> "RunBudget":
        lo, hi = (int(v) for v in DEFAULTS["TV_RANGE"].split(","))
        return cls(int(DEFAULTS["MAX_STEPS"]), (lo, hi), int(DEFAULTS["BRANCH_CAP"]))


@dataclass(frozen=True)
class Choice:
    """Which rule rewrites which term, with values for the rule's temporaries."""

    rule: Rule
    term: GroundTerm
    temps: Mapping[sp.Symbol, int]


@dataclass(frozen=True)
class MaxCost:
    value: Fraction
    truncated: bool = False


def _valuation(rule: Rule, args: Sequence[int], temps: Mapping[sp.Symbol, int]) -> Dict:
    env = {x: Fraction(a) for x, a in zip(rule.params, args)}
    env.update({t: Fraction(v) for t, v in temps.items()})
    return env


def _fire(rule: Rule, env: Mapping) -> Tuple[List[GroundTerm], Fraction]:
    """Successor terms and cost of applying `rule` under `env`; the guard must hold."""
    out: List[GroundTerm] = []
    for t in rule.rhs:
        if t.root == SINK:
            continue
        values = []
        for a in t.args:
            v = evaluate(a, env)
            if v.denominator != 1:
                raise AnalysisError(f"{rule.name}: argument {a} is not an integer at {dict(env)}")
            values.append(int(v))
        out.append((t.root, tuple(values)))
    return out, evaluate(rule.cost, env)


def step(c: Config, p: Program, choice: Choice) -> Tuple[Config, Fraction]:
    """Rewrite one occurrence of `choice.term` in `c` with `choice.rule`."""
    if choice.term not in c:
        raise NoMatch(f"{choice.term} does not occur in the configuration")
    root, args = choice.term
    rule = choice.rule
    if rule.root != root or len(rule.params) != len(args):
        raise NoMatch(f"{rule.name or rule} does not match {root}{args}")
    env = _valuation(rule, args, choice.temps)
    if not guard_holds(rule.guard, env):
        raise GuardViolated(f"guard of {rule.name or rule} fails on {root}{args}")
    successors, cost = _fire(rule, env)
    rest = list(c)
    rest.remove(choice.term)
    return config_of(*rest, *successors), cost


def _temp_valuations(rule: Rule, budget: RunBudget) -> Iterator[Dict[sp.Symbol, int]]:
    temps = rule.temporaries()
    lo, hi = budget.tv_range
    for values in itertools.product(range(lo, hi + 1), repeat=len(temps)):
        yield dict(zip(temps, values))


class _Search:
    """Memoized depth-first search for the most expensive run of one term.

    Terms of a configuration evolve independently, so the cost of a
    configuration is the sum over its terms.
    """

    def __init__(self, p: Program, budget: RunBudget):
        self.budget = budget
        self.rules: Dict[str, List[Rule]] = {}
        for r in p.rules:
            self.rules.setdefault(r.root, []).append(r)
        self.memo: Dict[GroundTerm, Tuple[Fraction, bool, int]] = {}
        self.expansions = 0
        self.truncated = False

    def best(self, term: GroundTerm, remaining: int) -> Tuple[Fraction, bool]:
        hit = self.memo.get(term)
        if hit is not None:
            value, truncated, depth = hit
            if not truncated or depth >= remaining:
                return value, truncated
        rules = self.rules.get(term[0], [])
        if not rules:
            return Fraction(0), False
        if remaining <= 0:
            return Fraction(0), True
        value, truncated = Fraction(0), False
        for rule in rules:
            for temps in _temp_valuations(rule, self.budget):
                if self.expansions >= self.budget.branch_cap:
                    self.truncated = True
                    return value, True
                self.expansions += 1
                env = _valuation(rule, term[1], temps)
                try:
                    if not guard_holds(rule.guard, env):
                        continue
                    successors, cost = _fire(rule, env)
                except AnalysisError as e:
                    logger.debug("skipping %s: %s", rule.name, e)
                    continue
                total = cost
                for s in successors:
                    sub, cut = self.best(s, remaining - 1)
                    total += sub
                    truncated = truncated or cut
                value = max(value, total)
        self.memo[term] = (value, truncated, remaining)
        return value, truncated


def max_cost(p: Program, start: Config, budget: Optional[RunBudget] = None) -> MaxCost:
    """Largest total cost of a run from `start` found within `budget`."""
    budget = budget or RunBudget.from_defaults()
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * budget.max_steps + 1000))
    try:
        search = _Search(p, budget)
        total, truncated = Fraction(0), False
        for term in start:
            value, cut = search.best(term, budget.max_steps)
            total += value
            truncated = truncated or cut
    finally:
        sys.setrecursionlimit(limit)
    if truncated or search.truncated:
        logger.debug("max_cost truncated after %d expansions", search.expansions)
    return MaxCost(total, truncated or search.truncated)


def loop_iterations(rule: Rule, env: Mapping, limit: int = 10_000) -> int:
    """Consecutive applications of a simple loop from `env`, temporaries held fixed."""
    env = {k: Fraction(v) for k, v in env.items()}
    count = 0
    while count < limit and guard_holds(rule.guard, env):
        nxt = {x: evaluate(a, env) for x, a in zip(rule.params, rule.rhs[0].args)}
        env.update(nxt)
        count += 1
    return count


def tree_size(rule: Rule, env: Mapping, limit: int = 100_000) -> int:
    """Number of applications of a simple recursion in its full evaluation tree."""
    stack = [{k: Fraction(v) for k, v in env.items()}]
    count = 0
    while stack and count < limit:
        cur = stack.pop()
        if not guard_holds(rule.guard, cur):
            continue
        count += 1
        for t in rule.rhs:
            nxt = dict(cur)
            nxt.update({x: evaluate(a, cur) for x, a in zip(rule.params, t.args)})
            stack.append(nxt)
    return count
