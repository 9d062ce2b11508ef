"""Runtime settings loaded from environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from dotenv import load_dotenv

load_dotenv()


def _env_bool(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes")


@dataclass(frozen=True)
class Settings:
    # --- Parallelism ---
    threads: int = int(os.getenv("CTIS_THREADS", str(os.cpu_count() or 1)))

    # --- Logging ---
    log_level: str = os.getenv("CTIS_LOG_LEVEL", "INFO")

    # --- EM solver ---
    default_iterations: int = int(os.getenv("CTIS_ITERATIONS", "25"))
    epsilon_f64: float = float(os.getenv("CTIS_EPSILON_F64", "1e-12"))
    epsilon_f32: float = float(os.getenv("CTIS_EPSILON_F32", "1e-6"))

    # --- Reference oracle ---
    oracle_cap: int = int(os.getenv("CTIS_ORACLE_CAP", "1000000"))  # max n*w
    dense_max_n: int = int(os.getenv("CTIS_DENSE_MAX_N", "4096"))

    # --- Checks & metrics ---
    debug_checks: bool = _env_bool("CTIS_DEBUG_CHECKS")
    pixel_epsilon: float = float(os.getenv("CTIS_PIXEL_EPSILON", "1e-12"))
    imag_residue_budget: float = 1e-10  # relative to output norm

    # --- Synthetic calibration ---
    default_spots: str = os.getenv(
        "CTIS_DEFAULT_SPOTS",
        "orders=8,radius=6,dispersion=1,sigma=0.8,amplitude=1,zeroth=1,jitter=0.1",
    )

    def epsilon_for(self, precision: str) -> float:
        """Default EM division guard for a precision name ("f32" | "f64")."""
        return self.epsilon_f32 if precision == "f32" else self.epsilon_f64

    def dtype_for(self, precision: str) -> np.dtype:
        return np.dtype(np.float32) if precision == "f32" else np.dtype(np.float64)


settings = Settings()
