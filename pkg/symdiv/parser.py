"""
Parser - sample files, result tables and "kind:key=value" strings
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import FLOAT_FORMAT
from .errors import ArgumentError
from .groups import as_points
from .measures import EmpiricalMeasure

RAW_HEADER = ("experiment", "group_order", "n", "replica", "seed", "value")
AGGREGATE_HEADER = ("experiment", "group_order", "n", "mean", "stderr")
RATIO_HEADER = ("experiment", "order_a", "order_b", "n", "ratio")


# ============================================================================
# SPEC STRINGS
# ============================================================================

def parse_spec_string(text: str) -> Tuple[str, Dict[str, str]]:
    """
    Split "kind:key=value,key=value" into ("kind", {key: value}).

    Examples: "wss1d:r=4", "gaussian:s=0.0654", "mog8".
    """
    kind, _, rest = text.strip().partition(":")
    if not kind:
        raise ArgumentError(f"empty spec string {text!r}")

    params: Dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep or not key.strip() or not value.strip():
                raise ArgumentError(f"bad parameter {item!r} in {text!r}, expected key=value")
            params[key.strip()] = value.strip()
    return kind.strip(), params


# ============================================================================
# FORMATTING
# ============================================================================

def format_value(value: Any) -> str:
    """Integers as-is, floats with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_text_atomic(path: str, text: str) -> None:
    """Write through a temp file in the same directory, then rename."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ============================================================================
# SAMPLE FILES
# ============================================================================

def samples_csv(points: Any, weights: Optional[Any] = None) -> str:
    """CSV text with header x1..xd (plus "weight" when weights are given)."""
    pts = as_points(points)
    header = [f"x{j + 1}" for j in range(pts.shape[1])]
    if weights is None:
        return csv_text(header, (tuple(float(v) for v in row) for row in pts))

    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != pts.shape[0]:
        raise ArgumentError(f"{pts.shape[0]} points but {w.shape[0]} weights")
    header.append("weight")
    return csv_text(header, (tuple(float(v) for v in row) + (float(wi),) for row, wi in zip(pts, w)))


def read_samples(file_path: str) -> EmpiricalMeasure:
    """
    Load a sample file into an empirical measure.

    The header row is required: x1..xd, optionally followed by "weight".
    Without a weight column every row gets weight 1/m.
    """
    path = Path(file_path)
    if not path.exists():
        raise ArgumentError(f"sample file not found: {file_path}")

    with path.open("r", newline="") as f:
        rows = [row for row in csv.reader(f) if row]

    if not rows:
        raise ArgumentError(f"sample file {file_path} is empty")

    header = [h.strip() for h in rows[0]]
    weighted = header[-1] == "weight"
    coords = header[:-1] if weighted else header
    expected = [f"x{j + 1}" for j in range(len(coords))]
    if not coords or coords != expected:
        raise ArgumentError(f"bad header in {file_path}: expected {','.join(expected) or 'x1'}[,weight], got {','.join(header)}")

    body = rows[1:]
    if not body:
        raise ArgumentError(f"sample file {file_path} has no samples")

    try:
        data = np.array([[float(v) for v in row] for row in body], dtype=float)
    except ValueError as e:
        raise ArgumentError(f"non-numeric value in {file_path}: {e}") from e
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ArgumentError(f"rows of {file_path} must have {len(header)} columns")

    if weighted:
        return EmpiricalMeasure.from_atoms(data[:, :-1], data[:, -1])
    points = data
    return EmpiricalMeasure.from_atoms(points, np.full(points.shape[0], 1.0 / points.shape[0]))


# ============================================================================
# RESULT TABLES
# ============================================================================

def read_raw_rows(file_path: str) -> List[Tuple[str, int, int, int, int, float]]:
    """Rows of a raw experiment CSV (header experiment,group_order,n,replica,seed,value)."""
    path = Path(file_path)
    if not path.exists():
        raise ArgumentError(f"result file not found: {file_path}")

    with path.open("r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RAW_HEADER:
            raise ArgumentError(f"bad header in {file_path}: expected {','.join(RAW_HEADER)}")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                experiment, order, n, replica, seed, value = row
                rows.append((experiment, int(order), int(n), int(replica), int(seed), float(value)))
            except ValueError as e:
                raise ArgumentError(f"{file_path}:{line}: bad row {row!r}") from e
    return rows
