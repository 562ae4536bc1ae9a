"""
Experiments - replicated error-vs-sample-size studies

Every study draws P and Q from the same Sigma-invariant law, so the true
divergence is 0 and the estimate itself is the estimation error. Cells
(group_order, n, replica) are independent; each derives its seed from
(master_seed, experiment, cell) and never from execution order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.stats import linregress

from . import config
from .errors import ArgumentError, FitError, PartialResultsError
from .falpha import AlphaConfig, dalpha_invariant
from .groups import GroupAction
from .measures import from_samples
from .mmd import KernelSpec, mmd_invariant
from .parser import (
    AGGREGATE_HEADER,
    RATIO_HEADER,
    RAW_HEADER,
    csv_text,
    read_raw_rows,
    write_text_atomic,
)
from .samplers import SamplerKind, SamplerSpec
from .streams import derive_seed, name_key
from .w1 import W1Config, w1_invariant

logger = logging.getLogger(__name__)

RAW_FILE = "raw.csv"
AGGREGATE_FILE = "aggregate.csv"
RATIO_FILE = "ratios.csv"


class ExperimentName(str, Enum):
    WSS1D = "wss1d"
    WSS2D = "wss2d"
    MMD_DISK_FIXED = "mmd-disk-fixed"
    MMD_DISK_ADAPTIVE = "mmd-disk-adaptive"
    FALPHA_WSS1D = "falpha-wss1d"


_DEFAULT_GRIDS = {
    ExperimentName.WSS1D: (config.WSS1D_ORDERS, config.WSS1D_SIZES),
    ExperimentName.WSS2D: (config.WSS2D_ORDERS, config.WSS2D_SIZES),
    ExperimentName.MMD_DISK_FIXED: (config.MMD_DISK_ORDERS, config.MMD_DISK_SIZES),
    ExperimentName.MMD_DISK_ADAPTIVE: (config.MMD_DISK_ORDERS, config.MMD_DISK_SIZES),
    ExperimentName.FALPHA_WSS1D: (config.FALPHA_WSS1D_ORDERS, config.FALPHA_WSS1D_SIZES),
}


# ============================================================================
# PLAN
# ============================================================================

@dataclass(frozen=True)
class ExperimentPlan:
    """
    One study: which sampler and estimator, over which grid of cells.

    stop_order is the order l of the fixed-bandwidth MMD study
    (s = 2*pi / (6 l)); the adaptive study uses s = 2*pi / (6 |Sigma|).
    """

    name: ExperimentName
    group_orders: Tuple[int, ...]
    sizes: Tuple[int, ...]
    replicas: int = config.REPLICAS
    master_seed: int = config.MASTER_SEED
    lipschitz_L: float = 1.0
    stop_order: int = config.MMD_FIXED_BANDWIDTH_ORDER
    alpha: float = config.FALPHA_ALPHA
    mog8_std: float = config.MOG8_STD

    def __post_init__(self):
        try:
            object.__setattr__(self, "name", ExperimentName(self.name))
        except ValueError as e:
            choices = ", ".join(x.value for x in ExperimentName)
            raise ArgumentError(f"unknown experiment {self.name!r}, expected one of {choices}") from e

        orders = tuple(int(o) for o in self.group_orders)
        sizes = tuple(int(n) for n in self.sizes)
        if not orders or any(o < 1 for o in orders):
            raise ArgumentError(f"group orders must be positive, got {list(self.group_orders)}")
        if len(set(orders)) != len(orders):
            raise ArgumentError(f"group orders must be distinct, got {list(orders)}")
        if not sizes or sizes[0] < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ArgumentError(f"sizes must be positive and strictly increasing, got {list(sizes)}")
        if self.replicas < 1:
            raise ArgumentError(f"replicas must be >= 1, got {self.replicas}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stop_order < 1:
            raise ArgumentError(f"stop order l must be >= 1, got {self.stop_order}")
        if not self.lipschitz_L > 0:
            raise ArgumentError(f"L must be positive, got {self.lipschitz_L}")
        object.__setattr__(self, "group_orders", orders)
        object.__setattr__(self, "sizes", sizes)

        if self.name is ExperimentName.FALPHA_WSS1D:
            AlphaConfig(alpha=self.alpha, lipschitz_L=self.lipschitz_L)

    @property
    def label(self) -> str:
        """Value of the `experiment` column."""
        if self.name is ExperimentName.MMD_DISK_FIXED:
            return f"{self.name.value}-l{self.stop_order}"
        return self.name.value

    def bandwidth(self, order: int) -> float:
        if self.name is ExperimentName.MMD_DISK_FIXED:
            return 2.0 * math.pi / (6.0 * self.stop_order)
        return 2.0 * math.pi / (6.0 * order)

    def cells(self) -> List[Tuple[int, int, int]]:
        return [(order, n, replica)
                for order in self.group_orders
                for n in self.sizes
                for replica in range(self.replicas)]


def default_plan(name: str, **overrides) -> ExperimentPlan:
    """The built-in grid for `name`, with any field replaced by a non-None override."""
    try:
        key = ExperimentName(name)
    except ValueError as e:
        choices = ", ".join(x.value for x in ExperimentName)
        raise ArgumentError(f"unknown experiment {name!r}, expected one of {choices}") from e

    orders, sizes = _DEFAULT_GRIDS[key]
    plan = ExperimentPlan(key, orders, sizes)
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(plan, **changes) if changes else plan


# ============================================================================
# RESULT TABLE
# ============================================================================

class ResultRow(NamedTuple):
    experiment: str
    group_order: int
    n: int
    replica: int
    seed: int
    value: float


class AggregateRow(NamedTuple):
    experiment: str
    group_order: int
    n: int
    mean: float
    stderr: float


class RatioRow(NamedTuple):
    experiment: str
    order_a: int
    order_b: int
    n: int
    ratio: float


@dataclass
class ResultTable:
    rows: List[ResultRow] = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(ResultRow(*row) for row in self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def orders(self) -> List[int]:
        return sorted({row.group_order for row in self.rows})

    @property
    def sizes(self) -> List[int]:
        return sorted({row.n for row in self.rows})

    def aggregate(self) -> List[AggregateRow]:
        """Mean and standard error (ddof=1; 0 for a single replica) per (experiment, order, n)."""
        groups: Dict[Tuple[str, int, int], List[float]] = {}
        for row in self.rows:
            groups.setdefault((row.experiment, row.group_order, row.n), []).append(row.value)

        out = []
        for key in sorted(groups):
            values = groups[key]
            mean = math.fsum(values) / len(values)
            if len(values) > 1:
                stderr = float(np.std(values, ddof=1)) / math.sqrt(len(values))
            else:
                stderr = 0.0
            out.append(AggregateRow(*key, mean, stderr))
        return out

    def means(self, group_order: int) -> List[Tuple[int, float]]:
        """(n, mean) pairs for one order, increasing n."""
        return [(row.n, row.mean) for row in self.aggregate() if row.group_order == group_order]


def read_result_table(file_path: str) -> ResultTable:
    return ResultTable([ResultRow(*row) for row in read_raw_rows(file_path)])


# ============================================================================
# ANALYSIS
# ============================================================================

def _require_order(table: ResultTable, order: int) -> None:
    if order not in table.orders:
        raise ArgumentError(f"group order {order} not in table (have {table.orders})")


def ratio_curves(table: ResultTable, order_a: int, order_b: int) -> List[Tuple[int, float]]:
    """(n, mean_a / mean_b) at every n present for both orders; nan where mean_b is 0."""
    _require_order(table, order_a)
    _require_order(table, order_b)
    means_a = dict(table.means(order_a))
    means_b = dict(table.means(order_b))

    curve = []
    for n in sorted(set(means_a) & set(means_b)):
        if means_b[n] == 0.0:
            curve.append((n, 1.0 if means_a[n] == 0.0 else math.nan))
        else:
            curve.append((n, means_a[n] / means_b[n]))
    return curve


def consecutive_ratios(table: ResultTable) -> List[RatioRow]:
    """Ratio curves between each pair of consecutive group orders."""
    experiment = table.rows[0].experiment if table.rows else ""
    orders = table.orders
    out = []
    for order_a, order_b in zip(orders, orders[1:]):
        for n, ratio in ratio_curves(table, order_a, order_b):
            out.append(RatioRow(experiment, order_a, order_b, n, ratio))
    return out


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: int


def fit_rate(table: ResultTable, group_order: int) -> RateFit:
    """Least squares of log(mean value) on log(n), over the n with positive mean."""
    _require_order(table, group_order)
    means = table.means(group_order)
    if len(means) < 3:
        raise ArgumentError(f"a rate fit needs >= 3 sample sizes, order {group_order} has {len(means)}")

    usable = [(n, m) for n, m in means if m > 0.0 and math.isfinite(m)]
    if len(usable) < 2:
        raise FitError(f"order {group_order}: fewer than 2 sizes with a positive mean value")

    x = np.log([n for n, _ in usable])
    y = np.log([m for _, m in usable])
    fit = linregress(x, y)
    return RateFit(float(fit.slope), float(fit.intercept), float(fit.rvalue) ** 2, len(usable))


# ============================================================================
# RUN
# ============================================================================

def cell_seed(plan: ExperimentPlan, order: int, n: int, replica: int) -> int:
    return derive_seed(plan.master_seed, name_key(plan.label), order, n, replica)


def _sampler(plan: ExperimentPlan, order: int, seed: int) -> SamplerSpec:
    if plan.name in (ExperimentName.WSS1D, ExperimentName.FALPHA_WSS1D):
        return SamplerSpec(SamplerKind.WSS1D, order, seed)
    if plan.name is ExperimentName.WSS2D:
        return SamplerSpec(SamplerKind.MOG8, plan.mog8_std, seed)
    return SamplerSpec(SamplerKind.DISK, order, seed)


def _action(plan: ExperimentPlan, order: int) -> GroupAction:
    if plan.name in (ExperimentName.WSS1D, ExperimentName.FALPHA_WSS1D):
        return GroupAction.translation(order)
    return GroupAction.rotation(order)


def run_cell(plan: ExperimentPlan, order: int, n: int, replica: int) -> ResultRow:
    """Draw P, Q of size n from independent streams and estimate the divergence."""
    seed = cell_seed(plan, order, n, replica)
    P = from_samples(_sampler(plan, order, derive_seed(seed, 0)).draw(n))
    Q = from_samples(_sampler(plan, order, derive_seed(seed, 1)).draw(n))
    action = _action(plan, order)

    if plan.name in (ExperimentName.WSS1D, ExperimentName.WSS2D):
        value = w1_invariant(P, Q, action, W1Config(lipschitz_L=plan.lipschitz_L))
    elif plan.name is ExperimentName.FALPHA_WSS1D:
        value, _ = dalpha_invariant(P, Q, action, AlphaConfig(alpha=plan.alpha, lipschitz_L=plan.lipschitz_L))
    else:
        value = mmd_invariant(P, Q, action, KernelSpec.gaussian(plan.bandwidth(order)))

    return ResultRow(plan.label, order, n, replica, seed, float(value))


def completed_cells(table: ResultTable) -> str:
    """Completed (group_order, n) keys with their replica counts, e.g. 1/64x10, 4/64x3."""
    counts: Dict[Tuple[int, int], int] = {}
    for row in table.rows:
        key = (row.group_order, row.n)
        counts[key] = counts.get(key, 0) + 1
    return ", ".join(f"{order}/{n}x{count}" for (order, n), count in sorted(counts.items()))


ProgressCallback = Callable[[int, int, ResultRow], None]


def run(plan: ExperimentPlan, jobs: int = 1, progress: Optional[ProgressCallback] = None) -> ResultTable:
    """
    Evaluate every cell of the plan on `jobs` worker threads.

    Raises:
        PartialResultsError: a cell failed; `table` holds the cells that completed
    """
    if jobs < 1:
        raise ArgumentError(f"jobs must be >= 1, got {jobs}")

    cells = plan.cells()
    total = len(cells)
    logger.info("[EXPERIMENT] %s: %d cells on %d worker(s)", plan.label, total, jobs)

    done: List[ResultRow] = []
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(run_cell, plan, *cell): cell for cell in cells}
        pending = set(futures)
        failure = None
        while pending and failure is None:
            finished, pending = wait(pending, return_when=FIRST_COMPLETED)
            for future in sorted(finished, key=lambda f: futures[f]):
                error = future.exception()
                if error is not None:
                    if failure is None:
                        failure = (futures[future], error)
                    continue
                row = future.result()
                done.append(row)
                if progress is not None:
                    progress(len(done), total, row)

        if failure is not None:
            for future in pending:
                future.cancel()

    if failure is not None:
        cell, error = failure
        table = ResultTable(done)
        logger.error("[EXPERIMENT] cell %s failed: %s", cell, error)
        message = (f"cell (group_order={cell[0]}, n={cell[1]}, replica={cell[2]}) failed: {error}; "
                   f"{len(table)} of {total} cells completed: {completed_cells(table) or 'none'}")
        raise PartialResultsError(message, table=table, failed_cell=cell) from error

    return ResultTable(done)


# ============================================================================
# OUTPUT
# ============================================================================

def raw_csv(table: ResultTable) -> str:
    return csv_text(RAW_HEADER, table.rows)


def aggregate_csv(table: ResultTable) -> str:
    return csv_text(AGGREGATE_HEADER, table.aggregate())


def ratio_csv(table: ResultTable) -> str:
    return csv_text(RATIO_HEADER, consecutive_ratios(table))


def write_outputs(table: ResultTable, out_dir: str) -> Dict[str, Path]:
    """Write raw, aggregate and ratio CSVs; each file appears whole or not at all."""
    base = Path(out_dir)
    paths = {
        "raw": base / RAW_FILE,
        "aggregate": base / AGGREGATE_FILE,
        "ratios": base / RATIO_FILE,
    }
    texts = {"raw": raw_csv(table), "aggregate": aggregate_csv(table), "ratios": ratio_csv(table)}
    for key, path in paths.items():
        write_text_atomic(str(path), texts[key])
    return paths
