"""
FAlpha - Lipschitz-regularized alpha-divergence between symmetrized measures

The estimator symmetrizes both measures and maximizes

    F(gamma) = sum_u a_u gamma_u - sum_u b_u f*_alpha(gamma_u)

over value vectors on the union support subject to
|gamma_u - gamma_v| <= L ||u - v|| and |gamma_u| <= M0. Any feasible vector
extends to an L-Lipschitz function on the whole space, so this finite program
is the estimator itself.

Solver: projected gradient ascent. The projection onto the Lipschitz polytope
is Dykstra's method over batches of disjoint pair constraints, warm-started
from the previous outer iteration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .config import (
    FALPHA_FEASIBILITY_TOL,
    FALPHA_MAX_ITERS,
    FALPHA_MIN_ITERS,
    FALPHA_PROJECTION_ITERS,
    FALPHA_STEP_DECAY,
    FALPHA_SUPPORT_GUARD,
    FALPHA_TOLERANCE,
    SUM_BLOCK_ENTRIES,
)
from .errors import ArgumentError, DomainError, ResourceError, SolverError
from .groups import GroupAction
from .measures import EmpiricalMeasure, symmetrize, union_support
from .w1 import EstimateReport

logger = logging.getLogger(__name__)


# ============================================================================
# f_alpha AND ITS CONJUGATE
# ============================================================================

def _check_alpha(alpha: float) -> float:
    if isinstance(alpha, bool) or not (math.isfinite(alpha) and alpha > 1.0):
        raise ArgumentError(f"alpha must be > 1, got {alpha}")
    return float(alpha)


def _scalar_or_array(value: np.ndarray):
    return float(value) if value.ndim == 0 else value


def f_alpha(alpha: float, x: Any):
    """(x^alpha - 1) / (alpha (alpha - 1)) for x >= 0."""
    alpha = _check_alpha(alpha)
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or not np.all(np.isfinite(xs)):
        raise DomainError(f"f_alpha is defined on [0, inf), got {x}")
    return _scalar_or_array((xs ** alpha - 1.0) / (alpha * (alpha - 1.0)))


def f_alpha_star(alpha: float, y: Any):
    """
    Legendre transform of f_alpha on [0, inf).

    y > 0:  (alpha-1)^(alpha/(alpha-1)) y^(alpha/(alpha-1)) / alpha + 1/(alpha(alpha-1))
    y <= 0: 1/(alpha(alpha-1)), the value of -f_alpha(0)
    """
    alpha = _check_alpha(alpha)
    p = alpha / (alpha - 1.0)
    pos = np.maximum(np.asarray(y, dtype=float), 0.0)
    value = (alpha - 1.0) ** p * pos ** p / alpha + 1.0 / (alpha * (alpha - 1.0))
    return _scalar_or_array(value)


def f_alpha_star_derivative(alpha: float, y: Any):
    """(alpha-1)^(1/(alpha-1)) y^(1/(alpha-1)) for y > 0, else 0."""
    alpha = _check_alpha(alpha)
    q = 1.0 / (alpha - 1.0)
    pos = np.maximum(np.asarray(y, dtype=float), 0.0)
    return _scalar_or_array((alpha - 1.0) ** q * pos ** q)


class BoundConstants(NamedTuple):
    M0: float
    L_prime: float
    M1: float


def bound_constants(alpha: float, L: float, diameter: float) -> BoundConstants:
    """
    M0 bounds the optimal test function, L' is the Lipschitz constant of
    f*_alpha on [-M0, M0] and M1 = f*_alpha(M0).
    """
    alpha = _check_alpha(alpha)
    if not L > 0:
        raise ArgumentError(f"L must be positive, got {L}")
    if not diameter >= 0:
        raise ArgumentError(f"diameter must be non-negative, got {diameter}")
    M0 = 1.0 / (alpha - 1.0) + L * diameter
    q = 1.0 / (alpha - 1.0)
    L_prime = L * (alpha - 1.0) ** q * M0 ** q
    return BoundConstants(M0, L_prime, f_alpha_star(alpha, M0))


# ============================================================================
# OBJECTIVE
# ============================================================================

def alpha_objective(gamma: Any, a: Any, b: Any, alpha: float) -> float:
    """sum a_u gamma_u - sum b_u f*_alpha(gamma_u)."""
    g = np.asarray(gamma, dtype=float)
    terms = np.concatenate((np.asarray(a, dtype=float) * g,
                            -np.asarray(b, dtype=float) * f_alpha_star(alpha, g)))
    return math.fsum(terms)


def alpha_objective_gradient(gamma: Any, a: Any, b: Any, alpha: float) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    return np.asarray(a, dtype=float) - np.asarray(b, dtype=float) * f_alpha_star_derivative(alpha, g)


# ============================================================================
# CONFIG / RESULT TYPES
# ============================================================================

class StepRule(str, Enum):
    DIMINISHING = "diminishing"     # step_0 / (1 + t / 100)
    CONSTANT = "constant"


@dataclass(frozen=True)
class AlphaConfig:
    alpha: float = 2.0
    lipschitz_L: float = 1.0
    max_iters: int = FALPHA_MAX_ITERS
    step_rule: StepRule = StepRule.DIMINISHING
    tolerance: float = FALPHA_TOLERANCE
    projection_iters: int = FALPHA_PROJECTION_ITERS

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.lipschitz_L > 0:
            raise ArgumentError(f"lipschitz_L must be positive, got {self.lipschitz_L}")
        if self.max_iters < 1:
            raise ArgumentError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tolerance > 0:
            raise ArgumentError(f"tolerance must be positive, got {self.tolerance}")
        if self.projection_iters < 1:
            raise ArgumentError(f"projection_iters must be >= 1, got {self.projection_iters}")
        try:
            object.__setattr__(self, "step_rule", StepRule(self.step_rule))
        except ValueError as e:
            raise ArgumentError(f"unknown step rule {self.step_rule!r}") from e


@dataclass(frozen=True, eq=False)
class PotentialSolution:
    """Discrete test function gamma on the symmetrized union support."""

    points: np.ndarray
    values: np.ndarray
    objective: float
    feasibility_residual: float
    iterations: int = 0
    converged: bool = True
    diagnostics: Dict[str, Any] = field(default_factory=dict)


# ============================================================================
# CONSTRAINT SET
# ============================================================================

def _tournament_batches(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """All pairs of 0..n-1 split into rounds of disjoint pairs (circle method)."""
    if n < 2:
        return []
    size = n + (n % 2)  # odd n gets a dummy player
    half = size // 2
    rest = np.arange(1, size)
    batches = []
    for r in range(size - 1):
        ring = np.concatenate(([0], np.roll(rest, r)))
        u, v = ring[:half], ring[::-1][:half]
        keep = (u < n) & (v < n)
        batches.append((u[keep], v[keep]))
    return batches


def _chain_batches(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Adjacent pairs of a sorted line, even pairs first then odd pairs."""
    batches = []
    for start in (0, 1):
        u = np.arange(start, n - 1, 2)
        if u.size:
            batches.append((u, u + 1))
    return batches


class _LipschitzPolytope:
    """
    {gamma : |gamma_u - gamma_v| <= L ||u - v||, |gamma_u| <= M0}, with a
    warm-started Dykstra projection.
    """

    def __init__(self, points: np.ndarray, L: float, M0: float):
        self.n = points.shape[0]
        self.L = L
        self.M0 = M0
        self.is_chain = points.shape[1] == 1

        if self.is_chain:
            batches = _chain_batches(self.n)
        else:
            batches = _tournament_batches(self.n)

        self.slices = []
        us, vs = [], []
        offset = 0
        for u, v in batches:
            us.append(u)
            vs.append(v)
            self.slices.append(slice(offset, offset + len(u)))
            offset += len(u)

        self.u = np.concatenate(us).astype(np.intp) if us else np.zeros(0, dtype=np.intp)
        self.v = np.concatenate(vs).astype(np.intp) if vs else np.zeros(0, dtype=np.intp)
        self.c = L * np.linalg.norm(points[self.u] - points[self.v], axis=1)
        self.q = np.zeros(len(self.u))
        self.r = np.zeros(self.n)

    def _increment_sum(self) -> np.ndarray:
        total = self.r.copy()
        if len(self.q):
            total += np.bincount(self.u, weights=self.q, minlength=self.n)
            total -= np.bincount(self.v, weights=self.q, minlength=self.n)
        return total

    def project(self, z: np.ndarray, sweeps: int) -> np.ndarray:
        x = z - self._increment_sum()
        for _ in range(sweeps):
            for s in self.slices:
                u, v = self.u[s], self.v[s]
                q = self.q[s]
                yu = x[u] + q
                yv = x[v] - q
                diff = yu - yv
                excess = np.sign(diff) * np.maximum(np.abs(diff) - self.c[s], 0.0) / 2.0
                x[u] = yu - excess
                x[v] = yv + excess
                self.q[s] = excess

            y = x + self.r
            x = np.clip(y, -self.M0, self.M0)
            self.r = y - x
        return x

    def residual(self, gamma: np.ndarray) -> float:
        worst = float(np.max(np.abs(gamma)) - self.M0)
        if len(self.u):
            gap = np.abs(gamma[self.u] - gamma[self.v]) - self.c
            worst = max(worst, float(np.max(gap)))
        return max(worst, 0.0)


def _lipschitz_repair(points: np.ndarray, gamma: np.ndarray, L: float, M0: float) -> np.ndarray:
    """h_u = min_v gamma_v + L ||u - v||, clipped to [-M0, M0]: exactly feasible, h <= gamma."""
    if points.shape[1] == 1:
        # sorted support: distances are additive along the line
        pos = L * (points[:, 0] - points[0, 0])
        forward = np.minimum.accumulate(gamma - pos) + pos
        backward = np.minimum.accumulate((gamma + pos)[::-1])[::-1] - pos
        h = np.minimum(forward, backward)
    else:
        h = np.empty_like(gamma)
        rows = max(1, int(SUM_BLOCK_ENTRIES // max(1, len(gamma))))
        for start in range(0, len(gamma), rows):
            block = cdist(points[start:start + rows], points)
            h[start:start + rows] = np.min(gamma[None, :] + L * block, axis=1)
    return np.clip(h, -M0, M0)


def _support_diameter(points: np.ndarray, polytope: _LipschitzPolytope) -> float:
    if points.shape[0] < 2:
        return 0.0
    if points.shape[1] == 1:
        return float(points[-1, 0] - points[0, 0])
    return float(np.max(polytope.c) / polytope.L)


# ============================================================================
# ESTIMATOR
# ============================================================================

def _solve(points: np.ndarray, a: np.ndarray, b: np.ndarray, cfg: AlphaConfig) -> PotentialSolution:
    alpha, L = cfg.alpha, cfg.lipschitz_L
    n = points.shape[0]

    polytope = _LipschitzPolytope(points, L, 1.0)
    M0 = bound_constants(alpha, L, _support_diameter(points, polytope)).M0
    polytope.M0 = M0

    nu = 1.0 / (alpha - 1.0)  # maximizer of nu - f*(nu); objective 0 at the constant
    start = np.full(n, nu)
    step0 = 1.0 / (max(float(np.max(b)), float(np.max(a))) * max(f_alpha_star_derivative(alpha, M0), 1e-12))

    gamma = start.copy()
    objective = alpha_objective(gamma, a, b, alpha)
    residual = math.inf
    converged = False
    t = 0
    for t in range(1, cfg.max_iters + 1):
        if cfg.step_rule is StepRule.DIMINISHING:
            step = step0 / (1.0 + (t - 1) / FALPHA_STEP_DECAY)
        else:
            step = step0

        z = gamma + step * alpha_objective_gradient(gamma, a, b, alpha)
        candidate = polytope.project(z, cfg.projection_iters)
        new_objective = alpha_objective(candidate, a, b, alpha)
        improvement = abs(new_objective - objective)
        gamma, objective = candidate, new_objective

        if t >= FALPHA_MIN_ITERS and improvement < cfg.tolerance:
            residual = polytope.residual(gamma)
            if residual < FALPHA_FEASIBILITY_TOL:
                converged = True
                break

    repaired = _lipschitz_repair(points, gamma, L, M0)
    repaired_objective = alpha_objective(repaired, a, b, alpha)
    if repaired_objective < 0.0:
        repaired = start
        repaired_objective = alpha_objective(start, a, b, alpha)

    diagnostics = {
        "iterations": t,
        "converged": converged,
        "support": n,
        "M0": M0,
        "step0": step0,
        "iterate_objective": objective,
        "iterate_residual": polytope.residual(gamma),
    }
    return PotentialSolution(
        points=points,
        values=repaired,
        objective=repaired_objective,
        feasibility_residual=polytope.residual(repaired),
        iterations=t,
        converged=converged,
        diagnostics=diagnostics,
    )


def estimate_falpha(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction,
                    cfg: AlphaConfig = AlphaConfig()) -> Tuple[EstimateReport, PotentialSolution]:
    """
    Invariant alpha-divergence of P from Q, with solver diagnostics.

    Raises:
        ResourceError: symmetrized union support larger than 4096 atoms
        SolverError: no convergence within max_iters; `best` holds the
            (feasible) last iterate and `diagnostics` its residuals
    """
    if P.dim != Q.dim:
        raise ArgumentError(f"dimension mismatch: {P.dim} vs {Q.dim}")

    points, a, b = union_support(symmetrize(P, action), symmetrize(Q, action))
    if points.shape[0] > FALPHA_SUPPORT_GUARD:
        raise ResourceError(
            f"symmetrized support has {points.shape[0]} atoms, more than {FALPHA_SUPPORT_GUARD}; "
            "use fewer samples or a smaller group"
        )
    if points.shape[1] == 1:
        order = np.argsort(points[:, 0], kind="stable")
        points, a, b = points[order], a[order], b[order]

    solution = _solve(points, a, b, cfg)
    diagnostics = dict(solution.diagnostics)
    diagnostics.update({
        "group": str(action),
        "alpha": cfg.alpha,
        "L": cfg.lipschitz_L,
        "objective": solution.objective,
        "feasibility_residual": solution.feasibility_residual,
    })

    if not solution.converged:
        logger.warning("[FALPHA] no convergence after %d iterations", solution.iterations)
        raise SolverError(
            f"alpha-divergence solver did not converge in {cfg.max_iters} iterations",
            diagnostics=diagnostics,
            best=solution,
        )

    logger.debug("[FALPHA] %s alpha=%g value=%.6g iterations=%d",
                 action, cfg.alpha, solution.objective, solution.iterations)
    return EstimateReport("falpha", solution.objective, diagnostics), solution


def dalpha_invariant(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction,
                     cfg: AlphaConfig = AlphaConfig()) -> Tuple[float, PotentialSolution]:
    """The Sigma-invariant Lipschitz-regularized alpha-divergence and its optimal potential."""
    report, solution = estimate_falpha(P, Q, action, cfg)
    return report.value, solution
