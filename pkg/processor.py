"""Analysis of single programs and worker thread for whole folders of them."""

import logging
import queue
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple, Union

from arith import evaluate, guard_holds
from asymptotics import N, SearchConfig, best_bound
from config import DEFAULTS, ITS_SUFFIX
from errors import AnalysisError, AnalysisTimeout
from interp import RunBudget, config_of, max_cost
from its_parser import parse
from models import BoundResult, Program
from pipeline import PipelineConfig, Simplification, Simplifier
import report
from utils import Deadline

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Options:
    timeout: Optional[float] = 60.0
    smt_timeout_ms: int = 500
    max_rules: int = 1000
    depth_cap: int = 12
    validate: bool = False
    max_workers: int = 1

    def __post_init__(self):
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.smt_timeout_ms <= 0:
            raise ValueError(f"smt timeout must be positive, got {self.smt_timeout_ms}")

    @classmethod
    def from_defaults(cls) -> "Options":
        return cls(
            timeout=float(DEFAULTS["TIMEOUT"]),
            smt_timeout_ms=int(DEFAULTS["SMT_TIMEOUT_MS"]),
            max_rules=int(DEFAULTS["MAX_RULES"]),
            depth_cap=int(DEFAULTS["DEPTH_CAP"]),
            max_workers=int(DEFAULTS["MAX_WORKERS"]),
        )

    def pipeline_config(self) -> PipelineConfig:
        base = PipelineConfig.from_defaults()
        return PipelineConfig(
            rule_cap=self.max_rules,
            smt_timeout_ms=self.smt_timeout_ms,
            accel_backtrack=base.accel_backtrack,
        )

    def search_config(self) -> SearchConfig:
        base = SearchConfig.from_defaults()
        return SearchConfig(
            depth_cap=self.depth_cap,
            node_cap=base.node_cap,
            smt_budget=base.smt_budget,
            smt_timeout_ms=self.smt_timeout_ms,
        )


@dataclass
class Analysis:
    name: str
    program: Program
    simplification: Simplification
    bound: BoundResult
    complete: bool = True
    checks: List[str] = field(default_factory=list)

    def notes(self) -> List[str]:
        out = list(self.checks)
        if not self.complete:
            out.append("[x] time limit reached, the result is partial")
        return out

    def render(self, fmt: str = "text", proof: bool = False) -> str:
        return report.render(self.bound, self.simplification, fmt, proof, self.notes())


def validate(p: Program, b: BoundResult, samples: int = 3, budget: Optional[RunBudget] = None) -> List[str]:
    """Compare the witnessing rule's cost with a bounded run of the original program."""
    if b.rule is None or not b.witness:
        return ["[info] nothing to validate"]
    r = b.rule
    lines: List[str] = []
    for n in range(1, 64):
        if len(lines) >= samples:
            break
        env = {x: evaluate(e, {N: Fraction(n)}) for x, e in b.witness.items()}
        if any(v.denominator != 1 for v in env.values()) or not guard_holds(r.guard, env):
            continue
        args = tuple(int(env[x]) for x in r.params)
        expected = evaluate(r.cost, env)
        start = config_of((p.start, args))
        found = max_cost(p, start, budget)
        where = f"{p.start}({', '.join(map(str, args))})"
        if found.value >= expected:
            lines.append(f"[ok] {where}: bound {expected} <= {found.value}")
        elif found.truncated:
            lines.append(f"[info] {where}: bound {expected}, search stopped at {found.value}")
        else:
            lines.append(f"[err] {where}: bound {expected} > {found.value}")
    return lines or ["[info] no small witness input satisfies the guard"]


def analyze_program(p: Program, options: Optional[Options] = None, name: str = "") -> Analysis:
    options = options or Options.from_defaults()
    deadline = Deadline(options.timeout)
    simplifier = Simplifier(p, options.pipeline_config(), deadline)
    try:
        simplification = simplifier.run()
    except AnalysisTimeout as e:
        logger.warning("[x] %s: %s", name or p.start, e)
        simplification = simplifier.partial()
    b = best_bound(simplification.program, options.search_config(), deadline)
    complete = simplification.complete and not deadline.expired()
    checks = validate(p, b) if options.validate else []
    return Analysis(name, p, simplification, b, complete, checks)


def analyze_file(path: Union[str, Path], options: Optional[Options] = None) -> Analysis:
    p = Path(path)
    return analyze_program(parse(p.read_text(encoding="utf-8")), options, p.name)


Outcome = Tuple[str, Union[Analysis, str]]


class BatchProcessor(threading.Thread):
    """Analyzes every program of a folder; progress goes to `log_q`."""

    def __init__(self, folder: Union[str, Path], options: Options, log_q: queue.Queue, stop_flag: dict):
        super().__init__(daemon=True)
        self.folder = Path(folder)
        self.options = options
        self.log_q = log_q
        self.stop_flag = stop_flag
        self.results: List[Outcome] = []

    def log(self, msg: str):
        self.log_q.put(msg)

    def process_single_file(self, pth: Path, idx: int) -> Tuple[Union[Analysis, str], int]:
        if self.stop_flag["stop"]:
            return "stopped", idx
        try:
            a = analyze_file(pth, self.options)
        except AnalysisError as e:
            self.log(f"[err] {pth.name} -> {e}")
            return str(e), idx
        partial = "" if a.complete else ", partial"
        self.log(f"[ok] {pth.name} ({report.asymptotic_text(a.bound)}{partial})")
        return a, idx

    def run(self):
        try:
            self.results = run_directory(self.folder, self.options, self)
        except Exception as e:
            self.log(f"[fatal] {e}")


def run_directory(folder: Union[str, Path], options: Options, worker: BatchProcessor) -> List[Outcome]:
    """Analyze every program of `folder` in name order; results keep that order."""
    paths = sorted(Path(folder).glob(f"*{ITS_SUFFIX}"))
    if not paths:
        worker.log(f"[!] No {ITS_SUFFIX} files found in folder.")
        return []

    max_workers = max(1, min(10, options.max_workers))
    worker.log(f"[info] Starting with {max_workers} worker(s)")
    outputs: List[Union[Analysis, str]] = ["not analyzed"] * len(paths)

    if max_workers == 1:
        for idx, pth in enumerate(paths):
            if worker.stop_flag["stop"]:
                worker.log("[x] Stopped by user.")
                break
            outputs[idx], _ = worker.process_single_file(pth, idx)
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = {executor.submit(worker.process_single_file, pth, idx): idx for idx, pth in enumerate(paths)}
            for future in as_completed(futures):
                if worker.stop_flag["stop"]:
                    for f in futures:
                        f.cancel()
                    worker.log("[x] Stopped by user.")
                    break
                idx = futures[future]
                try:
                    outputs[idx], _ = future.result()
                except Exception as e:
                    worker.log(f"[err] Worker error: {e}")
                    outputs[idx] = str(e)

    return [(pth.name, out) for pth, out in zip(paths, outputs)]


def summary(results: List[Outcome]) -> str:
    """One line per file: name, asymptotic class and concrete bound."""
    rows = [("file", "bound", "concrete")]
    for name, out in results:
        if isinstance(out, Analysis):
            rows.append((name, report.asymptotic_text(out.bound), report.concrete_text(out.bound)))
        else:
            rows.append((name, "error", out))
    w1 = max(len(r[0]) for r in rows)
    w2 = max(len(r[1]) for r in rows)
    return "\n".join(f"{a:<{w1}}  {b:<{w2}}  {c}" for a, b, c in rows) + "\n"
