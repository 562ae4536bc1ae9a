"""
Configuration and Constants
"""

from __future__ import annotations

import os
import tomllib
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import ArgumentError

# ============================================================================
# NUMERICS
# ============================================================================

ATOM_MERGE_TOL = 1e-12      # atoms closer than this are one atom
CANONICAL_DECIMALS = 9      # rounding used only for the canonical atom order
MASS_TOL = 1e-9             # allowed drift of the total mass before we complain
SUM_BLOCK_ENTRIES = 4_000_000  # kernel entries summed per block

# ============================================================================
# GROUPS
# ============================================================================

BOUNDARY_SNAP = 1e-12       # relative distance to the upper sector edge treated as the edge
NONCONTRACTION_TOL = 1e-9
NONCONTRACTION_MAX_SAMPLES = 512  # strided subsample for the pairwise ratio check

# ============================================================================
# W1
# ============================================================================

LP_GUARD = 40_000_000       # max dense cost entries handed to the network simplex
LP_MAX_ITER = 100_000_000
LP_GAP_WARN = 1e-9          # relative duality gap reported as a warning

# ============================================================================
# MMD
# ============================================================================

SYMK_DEFAULT_MIN_ORDER = 16     # SymmetrizedKernel is the default path from this |Σ| on
DECAY_GRID_SIZE = 64            # 64 x 64 polar grid on X0
DECAY_GRID_MIN_RADIUS = 1e-6    # origin is a fixed point, keep it out by default

# ============================================================================
# FALPHA
# ============================================================================

FALPHA_TOLERANCE = 1e-7
FALPHA_MAX_ITERS = 200_000
FALPHA_MIN_ITERS = 50
FALPHA_PROJECTION_ITERS = 50
FALPHA_FEASIBILITY_TOL = 1e-7
FALPHA_STEP_DECAY = 100.0       # step_t = step_0 / (1 + t / FALPHA_STEP_DECAY)
FALPHA_SUPPORT_GUARD = 4096

# ============================================================================
# SAMPLERS
# ============================================================================

MOG8_STD = 0.05
MOG8_COMPONENTS = 8

# ============================================================================
# EXPERIMENTS
# ============================================================================

REPLICAS = 10
MASTER_SEED = 0

WSS1D_ORDERS = (1, 4, 16, 64, 256)
WSS1D_SIZES = tuple(2 ** k for k in range(6, 14))       # 64 .. 8192

WSS2D_ORDERS = (1, 2, 4)
WSS2D_SIZES = tuple(2 ** k for k in range(6, 12))       # 64 .. 2048

MMD_DISK_ORDERS = (1, 4, 16, 64, 256)
MMD_DISK_SIZES = tuple(2 ** k for k in range(6, 11))    # 64 .. 1024
MMD_FIXED_BANDWIDTH_ORDER = 16

FALPHA_WSS1D_ORDERS = (1, 4, 16)
FALPHA_WSS1D_SIZES = (16, 32, 64, 128)
FALPHA_ALPHA = 2.0

# ============================================================================
# CLI
# ============================================================================

JOBS_ENV = "SYMDIV_JOBS"
FLOAT_FORMAT = "%.17g"

CONFIG_SECTIONS = {
    "sample": None,
    "estimate": {"w1", "mmd", "falpha"},
    "check": None,
    "experiment": None,
    "analyze": None,
}


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Load a TOML config file into a click default_map.

    Args:
        path: file path, or None for no file

    Returns:
        dict keyed by subcommand (nested for `estimate`), option names with
        dashes turned into underscores so click can match them.
    """
    if path is None:
        return {}

    file_path = Path(path)
    if not file_path.exists():
        raise ArgumentError(f"config file not found: {path}")

    try:
        with file_path.open("rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ArgumentError(f"config file {path} is not valid TOML: {e}") from e

    default_map: Dict[str, Any] = {}
    for section, body in raw.items():
        if section not in CONFIG_SECTIONS:
            raise ArgumentError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ArgumentError(f"config section [{section}] must be a table")

        children = CONFIG_SECTIONS[section]
        if children is None:
            default_map[section] = _normalize_keys(body)
            continue

        nested = {}
        for child, child_body in body.items():
            if child not in children or not isinstance(child_body, dict):
                raise ArgumentError(f"unknown config section [{section}.{child}]")
            nested[child] = _normalize_keys(child_body)
        default_map[section] = nested

    return default_map


def _normalize_keys(body: Dict[str, Any]) -> Dict[str, Any]:
    return {key.replace("-", "_"): value for key, value in body.items()}


def resolve_jobs(jobs: Optional[int]) -> int:
    """Worker count from the flag, then SYMDIV_JOBS, then 1."""
    if jobs is None:
        env = os.environ.get(JOBS_ENV)
        if env is None or env.strip() == "":
            return 1
        try:
            jobs = int(env)
        except ValueError as e:
            raise ArgumentError(f"{JOBS_ENV} must be an integer, got {env!r}") from e
    if jobs < 1:
        raise ArgumentError(f"jobs must be >= 1, got {jobs}")
    return jobs
