"""Command-line front end: analyze one program file or a folder of them."""

import argparse
import logging
import queue
import sys
from pathlib import Path
from typing import List, Optional

from config import (
    APP_TITLE,
    DEFAULT_OUTPUT_NAME,
    DEFAULTS,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_TIMEOUT,
    REPORT_FORMATS,
)
from errors import AnalysisError, AnalysisTimeout, BackendUnavailable, ItsSyntaxError, SemanticError
from its_parser import parse
from processor import Analysis, BatchProcessor, Options, analyze_program, summary
import smt
from utils import ensure_suffix_path, save_text_atomic

logger = logging.getLogger(__name__)


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="main.py", description=f"{APP_TITLE}: asymptotic lower runtime bounds")
    ap.add_argument("input", help="program file (.its) or a folder of program files")
    ap.add_argument("--timeout", type=_positive_float, default=float(DEFAULTS["TIMEOUT"]), help="whole-run time limit in seconds")
    ap.add_argument("--smt-timeout", type=_positive_int, default=int(DEFAULTS["SMT_TIMEOUT_MS"]), help="per-query solver timeout in ms")
    ap.add_argument("--smt-solver", default=DEFAULTS["SMT_SOLVER"], help="SMT-LIB2 solver command (default: in-process z3)")
    ap.add_argument("--max-rules", type=_positive_int, default=int(DEFAULTS["MAX_RULES"]))
    ap.add_argument("--depth-cap", type=_positive_int, default=int(DEFAULTS["DEPTH_CAP"]), help="limit-problem search depth")
    ap.add_argument("--workers", type=_positive_int, default=int(DEFAULTS["MAX_WORKERS"]), help="parallel files in folder mode")
    ap.add_argument("--proof", metavar="PATH", help="write the proof to PATH")
    ap.add_argument("--validate", action="store_true", help="check the bound against bounded runs of the program")
    ap.add_argument("--format", choices=REPORT_FORMATS, default="text")
    ap.add_argument("--output", metavar="PATH", help="also write the report to PATH")
    ap.add_argument("--log-level", default=DEFAULTS["LOG_LEVEL"], type=str.upper)
    return ap


def configure_logging(level: str):
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _write(path: Optional[str], content: str, default_name: str, suffix: str):
    if not path:
        return
    out = ensure_suffix_path(path, "", default_name, suffix)
    save_text_atomic(out, content)
    logger.info("[ok] wrote %s", out)


def _run_file(path: Path, options: Options, args) -> int:
    try:
        program = parse(path.read_text(encoding="utf-8"))
    except OSError as e:
        print(f"[err] {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ItsSyntaxError, SemanticError) as e:
        print(f"[err] {path.name}: {e}", file=sys.stderr)
        return EXIT_PARSE

    try:
        analysis: Analysis = analyze_program(program, options, path.name)
    except AnalysisTimeout as e:
        print(f"[x] {path.name}: {e}", file=sys.stderr)
        return EXIT_TIMEOUT

    text = analysis.render(args.format)
    sys.stdout.write(text)
    suffix = ".json" if args.format == "json" else ".txt"
    _write(args.output, text, DEFAULT_OUTPUT_NAME, suffix)
    _write(args.proof, analysis.render("text", proof=True), "proof.txt", ".txt")

    if any(line.startswith("[err]") for line in analysis.checks):
        return EXIT_INTERNAL
    return EXIT_OK if analysis.complete else EXIT_TIMEOUT


def _run_directory(folder: Path, options: Options, args) -> int:
    log_q: queue.Queue = queue.Queue()
    stop_flag = {"stop": False}
    worker = BatchProcessor(folder, options, log_q, stop_flag)
    worker.start()
    try:
        while worker.is_alive() or not log_q.empty():
            try:
                print(log_q.get(timeout=0.1), file=sys.stderr)
            except queue.Empty:
                continue
    except KeyboardInterrupt:
        stop_flag["stop"] = True
        worker.join()

    table = summary(worker.results)
    sys.stdout.write(table)
    _write(args.output, table, DEFAULT_OUTPUT_NAME, ".txt")
    failed = [name for name, out in worker.results if not isinstance(out, Analysis)]
    return EXIT_INTERNAL if failed else EXIT_OK


def run(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    configure_logging(args.log_level)

    options = Options(
        timeout=args.timeout,
        smt_timeout_ms=args.smt_timeout,
        max_rules=args.max_rules,
        depth_cap=args.depth_cap,
        validate=args.validate,
        max_workers=args.workers,
    )
    try:
        smt.configure(args.smt_solver, args.smt_timeout)
    except BackendUnavailable as e:
        print(f"[err] {e}", file=sys.stderr)
        return EXIT_INTERNAL

    path = Path(args.input)
    try:
        if path.is_dir():
            return _run_directory(path, options, args)
        return _run_file(path, options, args)
    except AnalysisError as e:
        logger.debug("analysis failed", exc_info=True)
        print(f"[err] {path.name}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
