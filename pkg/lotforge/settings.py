"""Environment configuration (.env aware) and desk-scale defaults."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from .errors import ConfigError

# === Config Env ===
# Prefer a .env at the project root, then the default search.
_ENV_FILE = Path(__file__).resolve().parent.parent / ".env"
if _ENV_FILE.exists():
    load_dotenv(str(_ENV_FILE))
else:
    load_dotenv()

SUPPORTED_BACKENDS = ("cbc",)

# ================= Settings =================
BACKEND = os.getenv("LOTFORGE_BACKEND", "cbc").strip().lower()
CBC_PATH: Optional[str] = os.getenv("LOTFORGE_CBC_PATH") or None
LOG_LEVEL = os.getenv("LOTFORGE_LOG_LEVEL", "INFO").upper()

# Desk-scale limits in seconds; LOTFORGE_TIME_SCALE stretches them toward 1800/3600/7200.
EXACT_TIME_LIMIT = 60.0
RH_ITERATION_TIME_LIMIT = 10.0
LOCAL_SEARCH_TIME_LIMIT = 60.0

EPS_FEAS = 1e-6
EPS_INT = 1e-5
DEFAULT_REL_GAP = 1e-6


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be a number, got {raw!r}") from e


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


TIME_SCALE = _float_env("LOTFORGE_TIME_SCALE", 1.0)
THREADS = _int_env("LOTFORGE_THREADS", 1)
K_CONST = _float_env("LOTFORGE_K_CONST", 2.0)


def check_backend(name: Optional[str] = None) -> str:
    backend = (name or BACKEND).strip().lower()
    if backend not in SUPPORTED_BACKENDS:
        raise ConfigError(f"Unsupported LOTFORGE_BACKEND {backend!r}; expected one of {SUPPORTED_BACKENDS}")
    return backend


def scaled(seconds: float, scale: Optional[float] = None) -> float:
    """Apply the time scale to a desk-scale limit."""
    factor = TIME_SCALE if scale is None else scale
    if factor <= 0:
        raise ConfigError(f"time scale must be positive, got {factor}")
    return seconds * factor


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or LOG_LEVEL),
        format="%(asctime)s [%(levelname)s] %(message)s",
    )
