"""
Measures - weighted empirical measures, symmetrization S^Sigma and the
fundamental-domain pushforward (T_0)_#
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, List, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .config import ATOM_MERGE_TOL, CANONICAL_DECIMALS, MASS_TOL
from .errors import ArgumentError
from .groups import (
    ActionKind,
    GroupAction,
    apply_points,
    as_points,
    check_domain,
    orbit_points,
    project_points,
)


# ============================================================================
# ATOM COALESCING
# ============================================================================

def _cluster(points: np.ndarray, tol: float) -> Tuple[np.ndarray, int]:
    """Label atoms so that atoms within `tol` (transitively) share a label."""
    n = points.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.intp), 0

    if points.shape[1] == 1:
        order = np.argsort(points[:, 0], kind="stable")
        gaps = np.diff(points[order, 0]) > tol
        sorted_labels = np.concatenate(([0], np.cumsum(gaps)))
        labels = np.empty(n, dtype=np.intp)
        labels[order] = sorted_labels
        return labels, int(sorted_labels[-1]) + 1

    pairs = cKDTree(points).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return np.arange(n, dtype=np.intp), n
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    count, labels = connected_components(graph, directed=False)
    return labels.astype(np.intp), int(count)


def _canonical_order(points: np.ndarray) -> np.ndarray:
    """Lexicographic order on rounded coordinates, raw coordinates breaking ties."""
    rounded = np.round(points, CANONICAL_DECIMALS) + 0.0  # folds -0.0 into 0.0
    keys = [points[:, j] for j in reversed(range(points.shape[1]))]
    keys += [rounded[:, j] for j in reversed(range(points.shape[1]))]
    return np.lexsort(keys)


def _coalesce(points: np.ndarray, *weight_vectors: np.ndarray, tol: float) -> Tuple[np.ndarray, ...]:
    labels, count = _cluster(points, tol)
    _, first = np.unique(labels, return_index=True)
    merged_points = points[first]
    merged = [np.bincount(labels, weights=w, minlength=count) for w in weight_vectors]

    order = _canonical_order(merged_points)
    return (merged_points[order],) + tuple(w[order] for w in merged)


# ============================================================================
# EMPIRICAL MEASURE
# ============================================================================

@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """
    Finitely many weighted atoms in R^d.

    Invariants: weights are positive and sum to 1, atoms are pairwise farther
    apart than the merge tolerance, atoms are stored in canonical order.
    Build through from_samples / from_atoms, which enforce all of this.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        weights = np.array(self.weights, dtype=float)
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(cls, points: Any, weights: Any, tol: float = ATOM_MERGE_TOL) -> "EmpiricalMeasure":
        """
        Build a measure from weighted atoms.

        Zero-weight atoms are dropped, coinciding atoms merged, and a total
        mass within 1e-9 of 1 is renormalized to 1.
        """
        pts = as_points(points)
        w = np.asarray(weights, dtype=float).reshape(-1)

        if pts.shape[0] == 0:
            raise ArgumentError("a measure needs at least one atom")
        if pts.shape[0] != w.shape[0]:
            raise ArgumentError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ArgumentError("points and weights must be finite")
        if np.any(w < 0):
            raise ArgumentError("weights must be non-negative")

        keep = w > 0
        pts, w = pts[keep], w[keep]
        if w.size == 0:
            raise ArgumentError("all weights are zero")

        mass = float(w.sum())
        if abs(mass - 1.0) > MASS_TOL:
            raise ArgumentError(f"weights must sum to 1, got {mass!r}")

        pts, w = _coalesce(pts, w, tol=tol)
        return cls(pts, w / w.sum())

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def __len__(self) -> int:
        return self.size

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def atoms(self) -> List[Tuple[Tuple[float, ...], float]]:
        return [(tuple(p), float(w)) for p, w in zip(self.points.tolist(), self.weights)]

    def __repr__(self) -> str:
        return f"EmpiricalMeasure(size={self.size}, dim={self.dim})"


def from_samples(points: Any) -> EmpiricalMeasure:
    """Uniform empirical measure (1/m) * sum of deltas; duplicates merge."""
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise ArgumentError("from_samples needs at least one point")
    return EmpiricalMeasure.from_atoms(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))


def same_atoms(first: EmpiricalMeasure, second: EmpiricalMeasure, tol: float = ATOM_MERGE_TOL) -> bool:
    """Equality as sets of weighted atoms, up to `tol`."""
    if first.dim != second.dim or first.size != second.size:
        return False
    return bool(
        np.allclose(first.points, second.points, rtol=0.0, atol=tol)
        and np.allclose(first.weights, second.weights, rtol=0.0, atol=tol)
    )


def union_support(first: EmpiricalMeasure, second: EmpiricalMeasure,
                  tol: float = ATOM_MERGE_TOL) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Shared support of two measures.

    Returns:
        (points, a, b): canonical union atoms and the weight each measure puts
        on them (zero where an atom belongs only to the other measure).
    """
    if first.dim != second.dim:
        raise ArgumentError(f"dimension mismatch: {first.dim} vs {second.dim}")
    m = first.size
    points = np.vstack((first.points, second.points))
    a = np.concatenate((first.weights, np.zeros(second.size)))
    b = np.concatenate((np.zeros(m), second.weights))
    return _coalesce(points, a, b, tol=tol)


# ============================================================================
# GROUP OPERATIONS ON MEASURES
# ============================================================================

def symmetrize(measure: EmpiricalMeasure, action: GroupAction) -> EmpiricalMeasure:
    """S^Sigma[P]: every atom (x, w) spread as (sigma x, w/|Sigma|) over its orbit."""
    if action.kind is ActionKind.TRIVIAL or action.order == 1:
        check_domain(action, measure.points)
        return measure

    orbits = orbit_points(action, measure.points)
    points = orbits.reshape(-1, measure.dim)
    weights = np.tile(measure.weights / action.order, action.order)
    return EmpiricalMeasure.from_atoms(points, weights)


def project(measure: EmpiricalMeasure, action: GroupAction) -> EmpiricalMeasure:
    """(T_0)_# P: every atom moved to its orbit representative in X0."""
    return EmpiricalMeasure.from_atoms(project_points(action, measure.points), measure.weights)


def transform(measure: EmpiricalMeasure, action: GroupAction, index: int) -> EmpiricalMeasure:
    """(theta_sigma)_# P for the element with the given index."""
    return EmpiricalMeasure.from_atoms(apply_points(action, index, measure.points), measure.weights)
