"""Data models for the ITS lower-bound analyzer."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

import sympy as sp

from arith import Expr, Guard, guard_symbols, show, show_guard
from config import SINK


@dataclass(frozen=True)
class Term:
    """A function symbol applied to argument expressions."""

    root: str
    args: Tuple[Expr, ...]

    @property
    def is_sink(self) -> bool:
        return self.root == SINK

    def __str__(self) -> str:
        return f"{self.root}({', '.join(show(a) for a in self.args)})"


class RuleKind(Enum):
    SIMPLE_LOOP = "simple loop"
    SIMPLE_RECURSION = "simple recursion"
    TAIL_RECURSIVE = "tail-recursive"
    OTHER = "other"


class ProvTag(Enum):
    ORIGINAL = "original"
    ACCELERATED = "accelerated"
    INSTANTIATED = "instantiated"
    CHAINED = "chained"
    PARTIAL_DELETED = "partial deletion"


@dataclass(frozen=True)
class Provenance:
    tag: ProvTag = ProvTag.ORIGINAL
    parents: Tuple[str, ...] = ()
    detail: Mapping[str, str] = field(default_factory=dict)
    accelerated: bool = False


@dataclass(frozen=True)
class Rule:
    """`root(params) -cost-> rhs [guard]`; rules compare structurally."""

    root: str
    params: Tuple[sp.Symbol, ...]
    cost: Expr
    rhs: Tuple[Term, ...]
    guard: Guard
    name: str = field(default="", compare=False)
    provenance: Provenance = field(default_factory=Provenance, compare=False)

    @property
    def degree(self) -> int:
        return len(self.rhs)

    @property
    def rhs_roots(self) -> List[str]:
        return [t.root for t in self.rhs]

    @property
    def accelerated(self) -> bool:
        return self.provenance.accelerated

    def variables(self) -> set:
        out = set(self.params) | set(self.cost.free_symbols) | guard_symbols(self.guard)
        for t in self.rhs:
            for a in t.args:
                out |= a.free_symbols
        return out

    def temporaries(self) -> List[sp.Symbol]:
        """TV(rule): variables that are not program variables, sorted by name."""
        params = set(self.params)
        return sorted((v for v in self.variables() if v not in params), key=lambda s: s.name)

    def replace(self, **changes) -> "Rule":
        return dataclasses.replace(self, **changes)

    def lhs(self) -> Term:
        return Term(self.root, tuple(self.params))

    def __str__(self) -> str:
        if all(t.is_sink for t in self.rhs):
            rhs = "NIL"
        else:
            rhs = ", ".join(str(t) for t in self.rhs if not t.is_sink)
        text = f"{self.lhs()} -{{{show(self.cost)}}}-> {rhs}"
        if self.guard:
            text += f" :|: {show_guard(self.guard)}"
        return text


@dataclass(frozen=True)
class Program:
    rules: Tuple[Rule, ...]
    start: str
    params: Tuple[sp.Symbol, ...]
    source: str = field(default="", compare=False)

    def symbols(self) -> List[str]:
        names = {self.start}
        for r in self.rules:
            names.add(r.root)
            names.update(r.rhs_roots)
        names.discard(SINK)
        return sorted(names)

    def rules_of(self, root: str) -> List[Rule]:
        return [r for r in self.rules if r.root == root]

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def replace(self, **changes) -> "Program":
        return dataclasses.replace(self, **changes)

    @property
    def is_simplified(self) -> bool:
        return all(r.root == self.start for r in self.rules)


class MeteringKind(Enum):
    PLAIN = "plain"
    CONDITIONAL = "conditional"
    RECURSION = "recursion"


@dataclass(frozen=True)
class Metering:
    """Conditional metering function: counts `bound` iterations on states satisfying `condition`."""

    condition: Guard
    bound: Expr
    kind: MeteringKind = MeteringKind.PLAIN
    fresh: bool = False

    def __str__(self) -> str:
        text = show(self.bound)
        if self.condition:
            text = f"[{show_guard(self.condition)}] * ({text})"
        return text


@dataclass(frozen=True)
class ProofStep:
    kind: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    justification: str

    def as_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "justification": self.justification,
        }


class AsymKind(IntEnum):
    CONST = 0
    POLY = 1
    EXP = 2
    UNBOUNDED = 3


@dataclass(frozen=True)
class AsymClass:
    """Asymptotic lower-bound class, totally ordered by `key`.

    `root` is the d of a sub-exponential bound e^(n^(1/d)); `base` is the
    per-size growth factor of an exponential bound when it is known.
    """

    kind: AsymKind
    degree: Fraction = Fraction(0)
    root: int = 1
    base: Optional[float] = None

    @classmethod
    def const(cls) -> "AsymClass":
        return cls(AsymKind.CONST)

    @classmethod
    def poly(cls, degree) -> "AsymClass":
        return cls(AsymKind.POLY, Fraction(degree))

    @classmethod
    def exp(cls, root: int = 1, base: Optional[float] = None) -> "AsymClass":
        return cls(AsymKind.EXP, root=root, base=base)

    @classmethod
    def unbounded(cls) -> "AsymClass":
        return cls(AsymKind.UNBOUNDED)

    def key(self) -> Tuple[int, Fraction, int]:
        return (int(self.kind), self.degree, -self.root)

    def __lt__(self, other: "AsymClass") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "AsymClass") -> bool:
        return self.key() <= other.key()

    def render(self) -> str:
        if self.kind is AsymKind.CONST:
            return "Omega(1)"
        if self.kind is AsymKind.UNBOUNDED:
            return "Omega(omega)"
        if self.kind is AsymKind.EXP:
            if self.root == 1:
                return "EXP"
            return f"Omega(e^(n^(1/{self.root})))"
        d = self.degree
        if d == 1:
            return "Omega(n)"
        if d.denominator == 1:
            return f"Omega(n^{d.numerator})"
        return f"Omega(n^({d.numerator}/{d.denominator}))"

    def __str__(self) -> str:
        return self.render()


@dataclass
class BoundResult:
    """Outcome of the asymptotic analysis of a simplified program."""

    asymptotic: AsymClass
    rule: Optional[Rule] = None
    witness: Dict[sp.Symbol, Expr] = field(default_factory=dict)
    inner: Optional[AsymClass] = None
    trace: List[str] = field(default_factory=list)

    @property
    def cost(self) -> Optional[Expr]:
        return self.rule.cost if self.rule else None

    @property
    def guard(self) -> Guard:
        return self.rule.guard if self.rule else ()

    def witness_text(self) -> str:
        if not self.witness:
            return ""
        return ", ".join(f"{x} = {show(e)}" for x, e in self.witness.items())


def rule_vars(rule: Rule) -> List[sp.Symbol]:
    """Program variables followed by the rule's temporaries."""
    return list(rule.params) + rule.temporaries()
