import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from config import EXAMPLE_DIR  # noqa: E402
from its_parser import parse  # noqa: E402
import smt  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def solver():
    return smt.configure("", 2000)


@pytest.fixture
def load():
    """Parse one of the bundled example programs by stem."""

    def _load(name: str):
        return parse((EXAMPLE_DIR / f"{name}.its").read_text(encoding="utf-8"))

    return _load


@pytest.fixture
def example_path():
    return lambda name: EXAMPLE_DIR / f"{name}.its"
