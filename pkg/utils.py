"""Utility functions for the ITS lower-bound analyzer."""

import os
import tempfile
import time
from pathlib import Path
from typing import Optional

from errors import AnalysisTimeout


def ensure_suffix_path(path: str, default_dir: str, default_name: str, suffix: str = ".txt") -> str:
    """Resolve an output path for --output/--proof.

    An empty path or an existing folder gets `default_name` inside it, a bare
    name gets `suffix`; the parent folder is created.
    """
    if not path:
        target = Path(default_dir or Path.cwd()) / default_name
    elif Path(path).is_dir():
        target = Path(path) / default_name
    else:
        target = Path(path)
    if not target.suffix:
        target = target.with_suffix(suffix)
    target.parent.mkdir(parents=True, exist_ok=True)
    return str(target.resolve())


def save_text_atomic(path: str, content: str) -> str:
    """Write a report so readers never see it half written."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, staging = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content or "")
        os.replace(staging, target)
    except OSError:
        Path(staging).unlink(missing_ok=True)
        raise
    return str(target.resolve())


class Deadline:
    """Cooperative wall-clock budget; `None` seconds means no limit."""

    def __init__(self, seconds: Optional[float] = None):
        if seconds is not None and seconds <= 0:
            raise ValueError(f"timeout must be positive, got {seconds}")
        self.seconds = seconds
        self.started = time.monotonic()

    def remaining(self) -> float:
        if self.seconds is None:
            return float("inf")
        return max(0.0, self.started + self.seconds - time.monotonic())

    def expired(self) -> bool:
        return self.remaining() <= 0

    def check(self, where: str = ""):
        if self.expired():
            suffix = f" during {where}" if where else ""
            raise AnalysisTimeout(f"time limit of {self.seconds:g}s exceeded{suffix}")
