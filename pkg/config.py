"""Configuration and constants for the ITS lower-bound analyzer."""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Application constants
APP_TITLE = "ITS Lower Bound Analyzer"
DEFAULT_OUTPUT_NAME = "report.txt"
ITS_SUFFIX = ".its"
EXAMPLE_DIR = Path(__file__).resolve().parent / "example"

# Reserved symbols and name prefixes
SINK = "sink"
TEMP_PREFIX = "tv"
RULE_PREFIX = "r"

# Algorithm limits
FAULHABER_MAX_DEGREE = 6
METERING_COEFF_BOX = 10_000
FAMILY_MINIMIZE_ROUNDS = 8
MAX_PIPELINE_ROUNDS = 64

# Default settings
DEFAULTS = {
    "SMT_SOLVER": os.getenv("SMT_SOLVER", ""),
    "SMT_TIMEOUT_MS": os.getenv("SMT_TIMEOUT_MS", "500"),
    "TIMEOUT": os.getenv("TIMEOUT", "60"),
    "MAX_RULES": os.getenv("MAX_RULES", "1000"),
    "ACCEL_BACKTRACK": os.getenv("ACCEL_BACKTRACK", "4"),
    "DEPTH_CAP": os.getenv("DEPTH_CAP", "12"),
    "NODE_CAP": os.getenv("NODE_CAP", "5000"),
    "SMT_BUDGET": os.getenv("SMT_BUDGET", "24"),
    "TV_RANGE": os.getenv("TV_RANGE", "-8,8"),
    "MAX_STEPS": os.getenv("MAX_STEPS", "400"),
    "BRANCH_CAP": os.getenv("BRANCH_CAP", "200000"),
    "MAX_WORKERS": os.getenv("MAX_WORKERS", "1"),
    "LOG_LEVEL": os.getenv("LOG_LEVEL", "WARNING"),
}

# Report formats
REPORT_FORMATS = ["text", "json"]

# Exit statuses
EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_TIMEOUT = 3
