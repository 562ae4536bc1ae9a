"""
W1 - exact empirical Wasserstein-1 estimators, plain and group-symmetrized

All values are unnormalized: the L-Lipschitz IPM, i.e. L times the transport
cost under the Euclidean ground metric.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict

import numpy as np
import ot
from scipy.spatial.distance import cdist
from scipy.stats import wasserstein_distance

from .config import LP_GAP_WARN, LP_GUARD, LP_MAX_ITER, MASS_TOL
from .errors import ArgumentError, ResourceError, SolverError, UnsupportedOperationError
from .groups import GroupAction, is_isometric, quotient_distances
from .measures import EmpiricalMeasure, symmetrize

logger = logging.getLogger(__name__)


class W1Method(str, Enum):
    AUTO = "auto"
    CDF1D = "cdf1d"
    TRANSPORT_LP = "lp"
    QUOTIENT_LP = "quotient"


@dataclass(frozen=True)
class W1Config:
    lipschitz_L: float = 1.0
    method: W1Method = W1Method.AUTO
    lp_tolerance: float = 0.0

    def __post_init__(self):
        if not self.lipschitz_L > 0:
            raise ArgumentError(f"lipschitz_L must be positive, got {self.lipschitz_L}")
        if not self.lp_tolerance >= 0:
            raise ArgumentError(f"lp_tolerance must be non-negative, got {self.lp_tolerance}")
        try:
            object.__setattr__(self, "method", W1Method(self.method))
        except ValueError as e:
            raise ArgumentError(f"unknown W1 method {self.method!r}") from e


@dataclass(frozen=True)
class EstimateReport:
    """Divergence value plus whatever the solver wants to tell about it."""

    divergence: str
    value: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"divergence": self.divergence, "value": self.value, "diagnostics": dict(self.diagnostics)}


# ============================================================================
# HELPERS
# ============================================================================

def _check_pair(P: EmpiricalMeasure, Q: EmpiricalMeasure) -> None:
    if P.dim != Q.dim:
        raise ArgumentError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    for name, measure in (("P", P), ("Q", Q)):
        if abs(measure.total_mass - 1.0) > MASS_TOL:
            raise ArgumentError(f"{name} weights must sum to 1, got {measure.total_mass!r}")


def _check_L(L: float) -> float:
    if not L > 0:
        raise ArgumentError(f"L must be positive, got {L}")
    return float(L)


def _transport_cost(a: np.ndarray, b: np.ndarray, cost: np.ndarray, lp_tolerance: float = 0.0) -> Dict[str, Any]:
    """Exact network simplex on the dense bipartite graph."""
    value, log = ot.emd2(a, b, cost, numItermax=LP_MAX_ITER, log=True)
    value = float(value)
    if log.get("warning"):
        raise SolverError(f"network simplex stopped early: {log['warning']}",
                          diagnostics={"atoms": [len(a), len(b)], "cost": value})

    dual = float(np.dot(a, log["u"]) + np.dot(b, log["v"]))
    gap = abs(value - dual)
    scale = max(1.0, abs(value))
    if gap > max(lp_tolerance, LP_GAP_WARN * scale):
        logger.warning("[W1] duality gap %.3e on a %dx%d problem", gap, len(a), len(b))
    return {"cost": value, "duality_gap": gap}


# ============================================================================
# ESTIMATORS
# ============================================================================

def w1_1d(P: EmpiricalMeasure, Q: EmpiricalMeasure, L: float = 1.0) -> float:
    """L times the integral of |F_P - F_Q| over the real line."""
    L = _check_L(L)
    if P.dim != 1 or Q.dim != 1:
        raise ArgumentError(f"w1_1d needs 1-dimensional measures, got {P.dim} and {Q.dim}")
    _check_pair(P, Q)
    value = wasserstein_distance(P.points[:, 0], Q.points[:, 0], P.weights, Q.weights)
    return L * float(value)


def _w1_lp(P: EmpiricalMeasure, Q: EmpiricalMeasure, L: float, lp_tolerance: float = 0.0) -> Dict[str, Any]:
    entries = P.size * Q.size
    if entries > LP_GUARD:
        raise ResourceError(
            f"transport problem {P.size}x{Q.size} = {entries} cost entries exceeds the guard "
            f"of {LP_GUARD}; use coarser sample sizes"
        )
    result = _transport_cost(np.asarray(P.weights), np.asarray(Q.weights), cdist(P.points, Q.points), lp_tolerance)
    result["value"] = L * result["cost"]
    return result


def w1_exact(P: EmpiricalMeasure, Q: EmpiricalMeasure, L: float = 1.0) -> float:
    """Optimal transport cost with ground cost L*||x - y||_2, solved exactly."""
    L = _check_L(L)
    _check_pair(P, Q)
    return _w1_lp(P, Q, L)["value"]


def w1_quotient(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction, L: float = 1.0) -> float:
    """
    Transport between the un-expanded measures under the quotient metric
    L * min_sigma ||x - sigma y||_2. Equals w1_invariant for isometric actions.
    """
    return _w1_quotient(P, Q, action, _check_L(L))["value"]


def _w1_quotient(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction, L: float,
                 lp_tolerance: float = 0.0) -> Dict[str, Any]:
    if not is_isometric(action):
        raise UnsupportedOperationError(f"the quotient shortcut needs an isometric action, {action} is not")
    _check_pair(P, Q)
    entries = P.size * Q.size
    if entries > LP_GUARD:
        raise ResourceError(
            f"transport problem {P.size}x{Q.size} = {entries} cost entries exceeds the guard "
            f"of {LP_GUARD}; use coarser sample sizes"
        )
    cost = quotient_distances(action, P.points, Q.points)
    result = _transport_cost(np.asarray(P.weights), np.asarray(Q.weights), cost, lp_tolerance)
    result["value"] = L * result["cost"]
    return result


def _select_method(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction) -> W1Method:
    if P.dim == 1:
        return W1Method.CDF1D
    expanded = P.size * Q.size * action.order ** 2
    if is_isometric(action) and expanded > LP_GUARD:
        return W1Method.QUOTIENT_LP
    return W1Method.TRANSPORT_LP


def estimate_w1(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction,
                cfg: W1Config = W1Config()) -> EstimateReport:
    """W^Sigma(P, Q) = W(S^Sigma[P], S^Sigma[Q]) with solver diagnostics."""
    _check_pair(P, Q)
    L = cfg.lipschitz_L
    method = cfg.method
    if method is W1Method.AUTO:
        method = _select_method(P, Q, action)

    diagnostics: Dict[str, Any] = {"method": method.value, "group": str(action), "L": L,
                                   "atoms": [P.size, Q.size]}

    if method is W1Method.QUOTIENT_LP:
        result = _w1_quotient(P, Q, action, L, cfg.lp_tolerance)
        diagnostics["duality_gap"] = result["duality_gap"]
        value = result["value"]
    else:
        SP, SQ = symmetrize(P, action), symmetrize(Q, action)
        diagnostics["symmetrized_atoms"] = [SP.size, SQ.size]
        if method is W1Method.CDF1D:
            value = w1_1d(SP, SQ, L)
        else:
            result = _w1_lp(SP, SQ, L, cfg.lp_tolerance)
            diagnostics["duality_gap"] = result["duality_gap"]
            value = result["value"]

    logger.debug("[W1] %s method=%s value=%.6g", action, method.value, value)
    return EstimateReport("w1", float(value), diagnostics)


def w1_invariant(P: EmpiricalMeasure, Q: EmpiricalMeasure, action: GroupAction,
                 cfg: W1Config = W1Config()) -> float:
    """The Sigma-invariant Wasserstein-1 estimator W^Sigma(P_m, Q_n)."""
    return estimate_w1(P, Q, action, cfg).value
