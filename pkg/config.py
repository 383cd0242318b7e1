"""
config.py
Configuration for the recursion-tensor verification toolkit.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# --- Environment Setup ---
load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(f"PN_{name}")
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(f"PN_{name}")
    return int(value) if value not in (None, "") else default


# --- Project Structure ---
BASE_DIR = Path(__file__).resolve().parent
DATA_DIR = BASE_DIR / "data"
SCENARIOS_DIR = DATA_DIR / "scenarios"
LOGS_DIR = BASE_DIR / "logs"
LOGS_DIR.mkdir(exist_ok=True)

# --- Tolerances ---
DEFAULT_TOLERANCE = _env_float("DEFAULT_TOLERANCE", 1e-8)
DERIVATIVE_TOLERANCE = _env_float("DERIVATIVE_TOLERANCE", 1e-5)
# An expected-negative check passes only above this residual at the probe point
NEGATIVE_THRESHOLD = _env_float("NEGATIVE_THRESHOLD", 1e-3)
SEPARABILITY_TOLERANCE = _env_float("SEPARABILITY_TOLERANCE", 1e-4)

# --- Sampling ---
DEFAULT_POINTS = _env_int("DEFAULT_POINTS", 20)
DEFAULT_SEED = _env_int("DEFAULT_SEED", 42)
DEFAULT_Q_BOX = (0.3, 1.2)
DEFAULT_U_BOX = (-1.0, 1.0)
DET_REJECT = 1e-6
MAX_ATTEMPTS_FACTOR = 100
MAX_DIMENSION = 4

# Probe point for negative expectations; the first n entries are used
PROBE_Q = (0.7, 0.9, 0.5, 0.6)
PROBE_U = (0.4, -0.6, 0.3, -0.2)

# --- Eigenstructure ---
EIGEN_STEP = 1e-6
EIGEN_SEGMENT = 1e-3
EIGEN_SEGMENT_STEPS = 4
ZERO_EIGENVALUE = 1e-9
COMPLETENESS_FLOOR = 1e-6

# --- Logging ---
LOG_FILE = LOGS_DIR / "pn_check.log"
LOG_LEVEL = os.getenv("PN_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(module)s - %(message)s"
