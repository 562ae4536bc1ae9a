"""
Groups - finite cyclic group actions, orbits and fundamental domains

Group elements are addressed by index 0..order-1; index 0 is the identity and
index arithmetic is mod order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist

from .config import BOUNDARY_SNAP, NONCONTRACTION_MAX_SAMPLES, NONCONTRACTION_TOL
from .errors import ArgumentError, DomainError, UnsupportedOperationError


# ============================================================================
# ACTIONS
# ============================================================================

class ActionKind(str, Enum):
    TRIVIAL = "trivial"
    ROTATION = "rot"
    TRANSLATION = "trans1d"


@dataclass(frozen=True)
class GroupAction:
    """
    A cyclic group acting on X.

    ROTATION: rotations of R^2 about the origin by multiples of 2*pi/order.
    TRANSLATION: x -> (x + k/order) mod 1 on [0, 1).
    TRIVIAL: the one-element group, acting on any R^d.
    """

    kind: ActionKind
    order: int = 1

    def __post_init__(self):
        try:
            kind = ActionKind(self.kind)
        except ValueError as e:
            raise ArgumentError(f"unknown group kind {self.kind!r}") from e
        object.__setattr__(self, "kind", kind)

        if isinstance(self.order, bool) or not isinstance(self.order, (int, np.integer)):
            raise ArgumentError(f"group order must be an integer, got {self.order!r}")
        object.__setattr__(self, "order", int(self.order))
        if self.order < 1:
            raise ArgumentError(f"group order must be >= 1, got {self.order}")
        if kind is ActionKind.TRIVIAL and self.order != 1:
            raise ArgumentError("the trivial group has order 1")

    @classmethod
    def trivial(cls) -> "GroupAction":
        return cls(ActionKind.TRIVIAL, 1)

    @classmethod
    def rotation(cls, order: int) -> "GroupAction":
        return cls(ActionKind.ROTATION, order)

    @classmethod
    def translation(cls, order: int) -> "GroupAction":
        return cls(ActionKind.TRANSLATION, order)

    @classmethod
    def parse(cls, text: str) -> "GroupAction":
        """Parse "trivial", "rot:<n>" or "trans1d:<n>"."""
        text = text.strip()
        if text == ActionKind.TRIVIAL.value:
            return cls.trivial()

        name, sep, order = text.partition(":")
        if not sep:
            raise ArgumentError(f"bad group {text!r}, expected trivial, rot:<n> or trans1d:<n>")
        try:
            kind = ActionKind(name)
            n = int(order)
        except ValueError as e:
            raise ArgumentError(f"bad group {text!r}, expected trivial, rot:<n> or trans1d:<n>") from e
        if kind is ActionKind.TRIVIAL:
            raise ArgumentError("trivial takes no order")
        return cls(kind, n)

    def __str__(self) -> str:
        if self.kind is ActionKind.TRIVIAL:
            return self.kind.value
        return f"{self.kind.value}:{self.order}"

    @property
    def dim(self) -> Optional[int]:
        """Ambient dimension, None when the action works in any dimension."""
        if self.kind is ActionKind.ROTATION:
            return 2
        if self.kind is ActionKind.TRANSLATION:
            return 1
        return None

    @property
    def sector_width(self) -> float:
        """Angular width (rotation) or length (translation) of X0."""
        if self.kind is ActionKind.TRANSLATION:
            return 1.0 / self.order
        return 2.0 * math.pi / self.order

    @property
    def fundamental_domain(self) -> "FundamentalDomainSpec":
        return FundamentalDomainSpec(self)


@dataclass(frozen=True)
class FundamentalDomainSpec:
    """The canonical X0: a half-open sector or interval."""

    action: GroupAction

    @property
    def description(self) -> str:
        kind = self.action.kind
        if kind is ActionKind.ROTATION:
            return f"sector with angle in [0, 2*pi/{self.action.order})"
        if kind is ActionKind.TRANSLATION:
            return f"interval [0, 1/{self.action.order})"
        return "the whole space"

    def contains(self, x: Any) -> bool:
        """True when the point (or every row of a 2-D array) lies in X0."""
        arr = np.asarray(x, dtype=float)
        points = as_points(arr) if arr.ndim == 2 else _as_point(arr)
        check_domain(self.action, points)
        kind = self.action.kind
        if kind is ActionKind.TRIVIAL or self.action.order == 1:
            return True
        if kind is ActionKind.TRANSLATION:
            return bool(np.all(points[:, 0] < self.action.sector_width))
        radius = np.hypot(points[:, 0], points[:, 1])
        angle = np.arctan2(points[:, 1], points[:, 0])
        inside = (radius == 0) | ((angle >= 0) & (angle < self.action.sector_width))
        return bool(np.all(inside))


# ============================================================================
# POINT HELPERS
# ============================================================================

def as_points(points: Any) -> np.ndarray:
    """Coerce input to an (n, d) float array; a flat sequence is n points in R^1."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ArgumentError(f"points must be a list of points, got shape {arr.shape}")
    return arr


def _as_point(x: Any) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ArgumentError(f"expected a single point, got shape {arr.shape}")
    return arr.reshape(1, -1)


def check_domain(action: GroupAction, points: np.ndarray) -> None:
    if not np.all(np.isfinite(points)):
        raise DomainError("points must be finite")
    dim = action.dim
    if dim is not None and points.shape[1] != dim:
        raise DomainError(f"{action} acts on R^{dim}, got points in R^{points.shape[1]}")
    if action.kind is ActionKind.TRANSLATION:
        if np.any(points < 0.0) or np.any(points >= 1.0):
            raise DomainError(f"{action} acts on [0, 1); got a point outside")


def _check_index(action: GroupAction, index: Any) -> int:
    if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
        raise ArgumentError(f"group element index must be an integer, got {index!r}")
    if not 0 <= index < action.order:
        raise ArgumentError(f"group element index {index} out of range for order {action.order}")
    return int(index)


def _rotate(points: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    x, y = points[:, 0], points[:, 1]
    return np.column_stack((c * x - s * y, s * x + c * y))


def _act(action: GroupAction, index: int, points: np.ndarray) -> np.ndarray:
    if index == 0 or action.kind is ActionKind.TRIVIAL:
        return points.copy()
    if action.kind is ActionKind.ROTATION:
        return _rotate(points, 2.0 * math.pi * index / action.order)
    shifted = np.mod(points + index / action.order, 1.0)
    shifted[shifted >= 1.0] = 0.0
    return shifted


# ============================================================================
# VECTORIZED OPERATIONS
# ============================================================================

def apply_points(action: GroupAction, index: int, points: Any) -> np.ndarray:
    """theta_sigma applied to every row of `points`."""
    index = _check_index(action, index)
    pts = as_points(points)
    check_domain(action, pts)
    return _act(action, index, pts)


def orbit_points(action: GroupAction, points: Any) -> np.ndarray:
    """Array of shape (order, n, d): element k holds theta_k(points)."""
    pts = as_points(points)
    check_domain(action, pts)
    return np.stack([_act(action, k, pts) for k in range(action.order)])


def project_points(action: GroupAction, points: Any) -> np.ndarray:
    """T_0 applied to every row: the orbit representative in X0."""
    pts = as_points(points)
    check_domain(action, pts)
    if action.kind is ActionKind.TRIVIAL or action.order == 1:
        return pts.copy()

    width = action.sector_width
    if action.kind is ActionKind.TRANSLATION:
        phase = np.mod(pts[:, 0], width)
        phase[width - phase <= BOUNDARY_SNAP * width] = 0.0
        return phase.reshape(-1, 1)

    radius = np.hypot(pts[:, 0], pts[:, 1])
    phase = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), width)
    phase[width - phase <= BOUNDARY_SNAP * width] = 0.0
    out = np.column_stack((radius * np.cos(phase), radius * np.sin(phase)))
    out[radius == 0.0] = 0.0
    return out


def quotient_distances(action: GroupAction, X: Any, Y: Any) -> np.ndarray:
    """Cost matrix d_Sigma(x, y) = min over sigma of ||x - sigma y||_2."""
    if not is_isometric(action):
        raise UnsupportedOperationError(f"quotient metric needs an isometric action, {action} is not")
    xs, ys = as_points(X), as_points(Y)
    check_domain(action, xs)
    check_domain(action, ys)
    dist = cdist(xs, ys)
    for k in range(1, action.order):
        np.minimum(dist, cdist(xs, _act(action, k, ys)), out=dist)
    return dist


def fundamental_grid(action: GroupAction, size: int, min_radius: float = 0.0, dim: int = 2) -> np.ndarray:
    """
    Deterministic grid on X0 used by the assumption checkers.

    Rotation (and trivial in 2-D): size radii in [0, 1] times size angles in
    [0, width); radii below min_radius are dropped, the origin appears once.
    Translation (and trivial in 1-D): size points evenly spaced in [0, 1/order).
    """
    if size < 1:
        raise ArgumentError(f"grid size must be >= 1, got {size}")

    one_dim = action.kind is ActionKind.TRANSLATION or (action.kind is ActionKind.TRIVIAL and dim == 1)
    if one_dim:
        width = 1.0 / action.order
        return (width * np.arange(size) / size).reshape(-1, 1)

    width = 2.0 * math.pi / action.order
    radii = np.linspace(0.0, 1.0, size)
    radii = radii[radii >= min_radius]
    if radii.size == 0:
        radii = np.array([1.0])
    angles = width * np.arange(size) / size

    rows = []
    for r in radii:
        if r == 0.0:
            rows.append(np.zeros((1, 2)))
            continue
        rows.append(np.column_stack((r * np.cos(angles), r * np.sin(angles))))
    return np.vstack(rows)


# ============================================================================
# SINGLE-POINT OPERATIONS
# ============================================================================

def apply(action: GroupAction, index: int, x: Any) -> np.ndarray:
    """theta_sigma(x) for the element with the given index."""
    return apply_points(action, index, _as_point(x))[0]


def orbit(action: GroupAction, x: Any) -> List[np.ndarray]:
    """The |Sigma| points theta_sigma(x), in element-index order."""
    return list(orbit_points(action, _as_point(x))[:, 0, :])


def project_fundamental(action: GroupAction, x: Any) -> np.ndarray:
    """T_0(x), the unique orbit element of x inside X0."""
    return project_points(action, _as_point(x))[0]


def is_isometric(action: GroupAction) -> bool:
    """True when every theta_sigma is a Euclidean isometry of X."""
    return action.kind is not ActionKind.TRANSLATION or action.order == 1


# ============================================================================
# ASSUMPTION CHECKS
# ============================================================================

@dataclass(frozen=True)
class CheckReport:
    separation_ok: bool
    min_cross_orbit_gap: float
    noncontraction_ok: bool
    worst_contraction_ratio: float
    delta0: float
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "separation_ok": self.separation_ok,
            "min_cross_orbit_gap": self.min_cross_orbit_gap,
            "noncontraction_ok": self.noncontraction_ok,
            "worst_contraction_ratio": self.worst_contraction_ratio,
            "delta0": self.delta0,
            "samples": self.samples,
        }


def _min_cross_orbit_gap(action: GroupAction, orbits: np.ndarray) -> float:
    order = action.order
    if order == 1:
        return math.inf

    if is_isometric(action):
        # ||s x - s' x'|| = ||x - s^-1 s' x'||, so comparing against the identity copy is enough
        tree = cKDTree(orbits[0])
        return float(min(tree.query(orbits[k])[0].min() for k in range(1, order)))

    trees = [cKDTree(orbits[k]) for k in range(order)]
    gap = math.inf
    for a in range(order):
        for b in range(order):
            if a != b:
                gap = min(gap, float(trees[a].query(orbits[b])[0].min()))
    return gap


def _worst_contraction(action: GroupAction, samples: np.ndarray) -> float:
    stride = max(1, math.ceil(len(samples) / NONCONTRACTION_MAX_SAMPLES))
    subset = samples[::stride]
    if len(subset) < 2:
        return 1.0

    base = pdist(subset)
    keep = base > 0.0
    if not np.any(keep):
        return 1.0

    worst = math.inf
    for k in range(action.order):
        moved = pdist(_act(action, k, subset))
        worst = min(worst, float(np.min(moved[keep] / base[keep])))
    return worst


def check_assumption_a1(action: GroupAction, domain_samples: Any, delta0: float) -> CheckReport:
    """
    Sampled check of orbit separation and non-contraction on X0.

    separation: every ||sigma x - sigma' x'|| with sigma != sigma' exceeds 2*delta0.
    non-contraction: ||sigma x - sigma x'|| >= ||x - x'|| up to a 1e-9 relative slack.
    A sampled check, not a proof.
    """
    samples = as_points(domain_samples)
    if samples.shape[0] == 0:
        raise ArgumentError("check_assumption_a1 needs at least one sample")
    if not delta0 > 0:
        raise ArgumentError(f"delta0 must be positive, got {delta0}")
    check_domain(action, samples)

    orbits = orbit_points(action, samples)
    gap = _min_cross_orbit_gap(action, orbits)
    ratio = _worst_contraction(action, samples)

    return CheckReport(
        separation_ok=bool(gap > 2.0 * delta0),
        min_cross_orbit_gap=gap,
        noncontraction_ok=bool(ratio >= 1.0 - NONCONTRACTION_TOL),
        worst_contraction_ratio=ratio,
        delta0=float(delta0),
        samples=int(samples.shape[0]),
    )
