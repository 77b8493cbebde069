"""Rendering of analysis results and their proofs, as text or JSON."""

import json
from typing import Iterable, List, Optional

from arith import show, show_guard
from models import AsymKind, BoundResult, ProofStep
from pipeline import Simplification, provenance_chain
from transform import describe

NO_STEPS = "no transformation applied"


def asymptotic_text(b: BoundResult) -> str:
    cls = b.asymptotic
    text = cls.render()
    if cls.kind is AsymKind.EXP and cls.root == 1 and cls.base:
        text += f" (>= Omega({cls.base:.2f}^n))"
    return text


def concrete_text(b: BoundResult) -> str:
    if b.rule is None:
        return "none"
    return f"{show(b.cost)} [{show_guard(b.guard)}]"


def proof_steps(simplification: Optional[Simplification], b: Optional[BoundResult]) -> List[ProofStep]:
    """Simplification steps followed by the limit-problem derivation of the bound."""
    steps = list(simplification.steps) if simplification else []
    if b is not None and b.rule is not None:
        for line in b.trace:
            steps.append(ProofStep("asymptotics", (b.rule.name,), (), line))
    return steps


def _derivation(simplification: Simplification, b: BoundResult) -> List[str]:
    if b.rule is None or not b.rule.name:
        return []
    lines = []
    for r in provenance_chain(simplification, b.rule.name):
        lines.append(f"  {r.name}: {r}")
        lines.append(f"      {describe(r)}")
    return lines


def render_text(
    b: BoundResult,
    simplification: Optional[Simplification] = None,
    proof: bool = False,
    notes: Iterable[str] = (),
) -> str:
    lines = [
        f"Asymptotic lower bound: {asymptotic_text(b)}",
        f"Concrete bound: {concrete_text(b)}",
    ]
    if b.witness:
        lines.append(f"Witness: {b.witness_text()}")
    lines.extend(notes)
    if not proof:
        return "\n".join(lines) + "\n"

    lines += ["", "Proof", "-----"]
    steps = proof_steps(simplification, None)
    if not steps:
        lines.append(NO_STEPS)
    for i, s in enumerate(steps, 1):
        arrow = f"{', '.join(s.inputs) or '-'} -> {', '.join(s.outputs) or '-'}"
        lines.append(f"{i:>3}. {s.kind}: {arrow}  {s.justification}")
    if simplification is not None:
        derivation = _derivation(simplification, b)
        if derivation:
            lines += ["", f"Derivation of {b.rule.name}:"] + derivation
    if b.trace:
        lines += ["", "Limit problems:"] + [f"  {t}" for t in b.trace]
    return "\n".join(lines) + "\n"


def render_json(b: BoundResult, simplification: Optional[Simplification] = None) -> str:
    data = {
        "asymptotic": asymptotic_text(b),
        "concrete_bound": show(b.cost) if b.rule is not None else None,
        "guard": show_guard(b.guard) if b.rule is not None else None,
        "witness": {x.name: show(e) for x, e in b.witness.items()},
        "proof_steps": [s.as_dict() for s in proof_steps(simplification, b)],
    }
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def render(
    b: BoundResult,
    simplification: Optional[Simplification] = None,
    fmt: str = "text",
    proof: bool = False,
    notes: Iterable[str] = (),
) -> str:
    if fmt == "json":
        return render_json(b, simplification)
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    return render_text(b, simplification, proof, notes)
