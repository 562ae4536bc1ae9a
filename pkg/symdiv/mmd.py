"""
MMD - plug-in maximum mean discrepancy, its group-symmetrized version, and the
kernel orbit-decay constants c and C
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .config import MASS_TOL, SUM_BLOCK_ENTRIES, SYMK_DEFAULT_MIN_ORDER
from .errors import ArgumentError, UnsupportedOperationError
from .groups import (
    ActionKind,
    GroupAction,
    apply_points,
    as_points,
    check_domain,
    is_isometric,
)
from .measures import EmpiricalMeasure, symmetrize
from .parser import parse_spec_string
from .streams import generator
from .w1 import EstimateReport

logger = logging.getLogger(__name__)


# ============================================================================
# KERNEL
# ============================================================================

@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel k_s(x, y) = exp(-||x - y||^2 / (2 s^2)), maximum value K = 1."""

    bandwidth: float
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ArgumentError(f"unknown kernel {self.kind!r}, only gaussian is supported")
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ArgumentError(f"kernel bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @classmethod
    def gaussian(cls, bandwidth: float) -> "KernelSpec":
        return cls(bandwidth)

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse "gaussian:s=0.0654"."""
        kind, params = parse_spec_string(text)
        if kind != "gaussian":
            raise ArgumentError(f"unknown kernel {kind!r}, only gaussian is supported")
        if set(params) != {"s"}:
            raise ArgumentError(f"gaussian kernel takes exactly s=<bandwidth>, got {text!r}")
        try:
            s = float(params["s"])
        except ValueError as e:
            raise ArgumentError(f"bandwidth must be a number, got {params['s']!r}") from e
        return cls(s)

    @property
    def K(self) -> float:
        return 1.0

    def __str__(self) -> str:
        return f"{self.kind}:s={self.bandwidth!r}"


def gram_matrix(kernel: KernelSpec, X: Any, Y: Any) -> np.ndarray:
    """Matrix of k(x_i, y_j)."""
    xs, ys = as_points(X), as_points(Y)
    if xs.shape[1] != ys.shape[1]:
        raise ArgumentError(f"dimension mismatch: {xs.shape[1]} vs {ys.shape[1]}")
    sq = cdist(xs, ys, "sqeuclidean")
    return np.exp(-sq / (2.0 * kernel.bandwidth ** 2))


def kernel_eval(kernel: KernelSpec, x: Any, y: Any) -> float:
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    if xs.ndim != 1 or ys.ndim != 1:
        raise ArgumentError("kernel_eval takes two single points")
    if xs.shape != ys.shape:
        raise ArgumentError(f"dimension mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    return float(gram_matrix(kernel, xs.reshape(1, -1), ys.reshape(1, -1))[0, 0])


def _weighted_sum(kernel: KernelSpec, X: np.ndarray, a: np.ndarray, Y: np.ndarray, b: np.ndarray) -> float:
    """sum_ij a_i b_j k(x_i, y_j), block by block in a fixed order."""
    rows = max(1, int(SUM_BLOCK_ENTRIES // max(1, Y.shape[0])))
    partials = []
    for start in range(0, X.shape[0], rows):
        G = gram_matrix(kernel, X[start:start + rows], Y)
        partials.extend(a[start:start + rows] * (G * b).sum(axis=1))
    return math.fsum(partials)


def _check_pair(P: EmpiricalMeasure, Q: EmpiricalMeasure) -> None:
    if P.dim != Q.dim:
        raise ArgumentError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    for name, measure in (("P", P), ("Q", Q)):
        if abs(measure.total_mass - 1.0) > MASS_TOL:
            raise ArgumentError(f"{name} weights must sum to 1, got {measure.total_mass!r}")


# ============================================================================
# PLUG-IN ESTIMATOR
# ============================================================================

def mmd_squared(P: EmpiricalMeasure, Q: EmpiricalMeasure, kernel: KernelSpec) -> float:
    """
    Closed-form MMD^2 of two weighted empirical measures (V-statistic, diagonal included).
    May come out slightly negative through cancellation.
    """
    _check_pair(P, Q)
    pp = _weighted_sum(kernel, P.points, P.weights, P.points, P.weights)
    qq = _weighted_sum(kernel, Q.points, Q.weights, Q.points, Q.weights)
    pq = _weighted_sum(kernel, P.points, P.weights, Q.points, Q.weights)
    return math.fsum((pp, qq, -2.0 * pq))


def mmd_plugin(P: EmpiricalMeasure, Q: EmpiricalMeasure, kernel: KernelSpec) -> float:
    """sqrt(max(MMD^2, 0))."""
    return math.sqrt(max(mmd_squared(P, Q, kernel), 0.0))


# ============================================================================
# GROUP-SYMMETRIZED ESTIMATOR
# ============================================================================

class MmdPath(str, Enum):
    ORBIT = "orbit"
    SYMMETRIZED_KERNEL = "symk"


def default_path(action: GroupAction) -> MmdPath:
    if action.kind is ActionKind.TRANSLATION:
        return MmdPath.ORBIT
    if action.order >= SYMK_DEFAULT_MIN_ORDER:
        return MmdPath.SYMMETRIZED_KERNEL
    return MmdPath.ORBIT


def _symmetrized_kernel_squared(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction,
                                kernel: KernelSpec) -> float:
    # k(sx, s'y) = k(x, s^-1 s' y) collapses the double orbit sum to one sum over the group
    terms = []
    for k in range(action.order):
        moved_P = apply_points(action, k, P.points)
        moved_Q = apply_points(action, k, Q.points)
        pp = _weighted_sum(kernel, moved_P, P.weights, P.points, P.weights)
        qq = _weighted_sum(kernel, moved_Q, Q.weights, Q.points, Q.weights)
        pq = _weighted_sum(kernel, moved_P, P.weights, Q.points, Q.weights)
        terms.extend((pp, qq, -2.0 * pq))
    return math.fsum(terms) / action.order


def _resolve_path(action: GroupAction, path: Optional[Any]) -> MmdPath:
    if path is None:
        return default_path(action)
    try:
        path = MmdPath(path)
    except ValueError as e:
        raise ArgumentError(f"unknown MMD path {path!r}, expected orbit or symk") from e
    if path is MmdPath.SYMMETRIZED_KERNEL and not is_isometric(action):
        raise UnsupportedOperationError(
            f"the symmetrized-kernel path needs a kernel invariant under {action}; use --path orbit"
        )
    return path


def estimate_mmd(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction, kernel: KernelSpec,
                 path: Optional[Any] = None) -> EstimateReport:
    """MMD^Sigma(P, Q) = MMD(S^Sigma[P], S^Sigma[Q]) with the path used and the raw MMD^2."""
    _check_pair(P, Q)
    for measure in (P, Q):
        check_domain(action, measure.points)
    path = _resolve_path(action, path)

    if path is MmdPath.ORBIT or action.order == 1:
        squared = mmd_squared(symmetrize(P, action), symmetrize(Q, action), kernel)
    else:
        squared = _symmetrized_kernel_squared(P, Q, action, kernel)

    value = math.sqrt(max(squared, 0.0))
    logger.debug("[MMD] %s path=%s value=%.6g", action, path.value, value)
    return EstimateReport("mmd", value, {
        "path": path.value,
        "group": str(action),
        "kernel": str(kernel),
        "atoms": [P.size, Q.size],
        "mmd_squared": squared,
    })


def mmd_invariant(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction, kernel: KernelSpec,
                  path: Optional[Any] = None) -> float:
    """
    The Sigma-invariant MMD estimator.

    Args:
        path: "orbit" expands both measures over their orbits; "symk" keeps
            the samples and averages the kernel over the group. None picks
            symk from order 16 on for rotations, orbit otherwise.
    """
    return estimate_mmd(P, Q, action, kernel, path).value


# ============================================================================
# KERNEL ASSUMPTION CHECKS
# ============================================================================

@dataclass(frozen=True)
class KernelInvarianceReport:
    invariant: bool
    max_deviation: float

    def to_dict(self) -> Dict[str, Any]:
        return {"kernel_invariant": self.invariant, "max_kernel_deviation": self.max_deviation}


def check_kernel_invariance(action: GroupAction, kernel: KernelSpec, samples: Any,
                            tol: float = 1e-12) -> KernelInvarianceReport:
    """Sampled check of k(sigma x, sigma y) = k(x, y) over all elements and sample pairs."""
    pts = as_points(samples)
    if pts.shape[0] == 0:
        raise ArgumentError("check_kernel_invariance needs at least one sample")
    check_domain(action, pts)

    base = gram_matrix(kernel, pts, pts)
    worst = 0.0
    for k in range(1, action.order):
        moved = apply_points(action, k, pts)
        worst = max(worst, float(np.max(np.abs(gram_matrix(kernel, moved, moved) - base))))
    return KernelInvarianceReport(bool(worst <= tol), worst)


@dataclass(frozen=True)
class OrbitDecayEstimate:
    """
    Sampled lower bound on c = max k(sigma x, x) / K over sigma != id.

    fixed_point is set when some grid point is (numerically) fixed by a
    non-identity element, i.e. the decay assumption fails there.
    """

    value: float
    argmax_point: Optional[np.ndarray] = None
    argmax_element: Optional[int] = None
    trivial: bool = False
    fixed_point: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c_sigma_k": self.value,
            "argmax_point": None if self.argmax_point is None else [float(v) for v in self.argmax_point],
            "argmax_element": self.argmax_element,
            "trivial_group": self.trivial,
            "assumption_violated": self.fixed_point,
        }


def estimate_c_sigma_k(action: GroupAction, kernel: KernelSpec, grid: Any) -> OrbitDecayEstimate:
    pts = as_points(grid)
    if pts.shape[0] == 0:
        raise ArgumentError("estimate_c_sigma_k needs a nonempty grid")
    check_domain(action, pts)

    if action.order == 1:
        return OrbitDecayEstimate(0.0, trivial=True)

    best, best_point, best_element = -1.0, None, None
    for k in range(1, action.order):
        moved = apply_points(action, k, pts)
        sq = np.sum((moved - pts) ** 2, axis=1)
        ratios = np.exp(-sq / (2.0 * kernel.bandwidth ** 2)) / kernel.K
        i = int(np.argmax(ratios))
        if ratios[i] > best:
            best, best_point, best_element = float(ratios[i]), pts[i].copy(), k

    return OrbitDecayEstimate(
        value=min(best, 1.0),
        argmax_point=best_point,
        argmax_element=best_element,
        fixed_point=bool(best >= 1.0),
    )


def c_big(order: int, c: float) -> float:
    """C = sqrt((1 + c (|Sigma| - 1)) / |Sigma|)."""
    if isinstance(order, bool) or int(order) != order or order < 1:
        raise ArgumentError(f"order must be a positive integer, got {order}")
    if not 0.0 <= c <= 1.0:
        raise ArgumentError(f"c must lie in [0, 1], got {c}")
    order = int(order)
    return math.sqrt((1.0 + c * (order - 1)) / order)


# ============================================================================
# PERMUTATION TEST
# ============================================================================

@dataclass(frozen=True)
class PermutationTestResult:
    statistic: float
    p_value: float
    permutations: int


def mmd_permutation_test(X: Any, Y: Any, kernel: KernelSpec, permutations: int = 200,
                         seed: int = 0, batch: int = 50) -> PermutationTestResult:
    """
    Two-sample permutation test with the plug-in MMD^2 statistic.

    One Gram matrix of the pooled sample is reused for every relabelling.
    p-value = (1 + #{permuted >= observed}) / (1 + permutations).
    """
    xs, ys = as_points(X), as_points(Y)
    if xs.shape[0] == 0 or ys.shape[0] == 0:
        raise ArgumentError("both samples must be nonempty")
    if permutations < 1:
        raise ArgumentError(f"permutations must be >= 1, got {permutations}")

    m, n = xs.shape[0], ys.shape[0]
    G = gram_matrix(kernel, np.vstack((xs, ys)), np.vstack((xs, ys)))
    labels = np.concatenate((np.full(m, 1.0 / m), np.full(n, -1.0 / n)))

    observed = float(labels @ G @ labels)
    rng = generator(seed)
    exceed = 0
    done = 0
    while done < permutations:
        count = min(batch, permutations - done)
        S = np.column_stack([rng.permutation(labels) for _ in range(count)])
        stats = np.sum(S * (G @ S), axis=0)
        exceed += int(np.sum(stats >= observed - 1e-15))
        done += count

    return PermutationTestResult(
        statistic=observed,
        p_value=(1.0 + exceed) / (1.0 + permutations),
        permutations=permutations,
    )
