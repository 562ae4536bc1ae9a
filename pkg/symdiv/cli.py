"""
symdiv command line

    symdiv sample      draw benchmark samples to CSV
    symdiv estimate    w1 | mmd | falpha between two sample files (JSON line)
    symdiv check       group / kernel assumption checks (JSON)
    symdiv experiment  replicated error curves (raw, aggregate, ratio CSVs)
    symdiv analyze     aggregates, ratios and rate fits of a stored raw CSV

Exit codes: 0 ok, 2 invalid arguments, 3 resource guard, 4 solver did not converge.
Options can also come from a TOML file (--config); command-line flags win.
"""

from __future__ import annotations

import json
import logging
import sys
from typing import Any, Dict, Optional

import click
import numpy as np

from . import SPEC_REVISION, __version__
from .config import DECAY_GRID_MIN_RADIUS, DECAY_GRID_SIZE, load_config_file, resolve_jobs
from .errors import ArgumentError, FitError, SolverError, SymdivError
from .experiments import (
    ExperimentName,
    consecutive_ratios,
    default_plan,
    fit_rate,
    read_result_table,
    run,
    write_outputs,
)
from .falpha import AlphaConfig, StepRule, estimate_falpha
from .groups import ActionKind, GroupAction, check_assumption_a1, fundamental_grid
from .mmd import KernelSpec, MmdPath, c_big, check_kernel_invariance, estimate_c_sigma_k, estimate_mmd
from .parser import read_samples, samples_csv, write_text_atomic
from .samplers import SamplerSpec
from .w1 import W1Config, W1Method, estimate_w1

logger = logging.getLogger(__name__)


# ============================================================================
# PLUMBING
# ============================================================================

class SymdivGroup(click.Group):
    """Turns library errors into a one-line message and the error's exit code."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except SymdivError as e:
            click.echo(f"[ERROR] {e}", err=True)
            ctx.exit(e.exit_code)


class IntListType(click.ParamType):
    """Comma-separated integers on the command line, or a list in the config file."""

    name = "int-list"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            items = list(value)
        else:
            items = [item for item in str(value).split(",") if item.strip()]
        try:
            return tuple(int(item) for item in items)
        except (TypeError, ValueError):
            self.fail(f"{value!r} is not a comma-separated list of integers", param, ctx)


INT_LIST = IntListType()


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _emit(payload: Dict[str, Any]) -> None:
    click.echo(json.dumps(payload, default=_jsonable))


def _resolve_default_map(command: click.Command, default_map: Dict[str, Any], path: str = "") -> Dict[str, Any]:
    """
    Map config keys onto parameter names.

    A key may be the parameter name or the flag without dashes ("L",
    "max_iters", "out_dir"); anything else is rejected.
    """
    names: Dict[str, str] = {}
    for param in command.params:
        names[param.name] = param.name
        for opt in getattr(param, "opts", []):
            names[opt.lstrip("-").replace("-", "_")] = param.name

    resolved: Dict[str, Any] = {}
    for key, value in default_map.items():
        where = f"{path}.{key}" if path else key
        if isinstance(command, click.Group) and key in command.commands:
            if not isinstance(value, dict):
                raise ArgumentError(f"config section [{where}] must be a table")
            resolved[key] = _resolve_default_map(command.commands[key], value, where)
            continue
        if key not in names:
            raise ArgumentError(f"unknown option {key!r} in config section [{path or 'root'}]")
        resolved[names[key]] = value
    return resolved


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        stream=sys.stderr,
        force=True,
    )


# ============================================================================
# ROOT
# ============================================================================

@click.group(cls=SymdivGroup)
@click.version_option(version=f"{__version__} (spec revision {SPEC_REVISION})", prog_name="symdiv",
                      message="%(prog)s %(version)s")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="TOML file with one table per subcommand; flags override it.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging on stderr.")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], verbose: bool) -> None:
    """Group-invariant divergence estimators and their benchmark studies."""
    _setup_logging(verbose)
    ctx.default_map = _resolve_default_map(ctx.command, load_config_file(config_path))


# ============================================================================
# SAMPLE
# ============================================================================

@cli.command()
@click.option("--dist", required=True, help="wss1d:r=<r>, mog8[:std=<s>] or disk:l=<l>.")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Number of samples.")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True)
@click.option("--out", default="-", show_default=True, help="Output CSV, '-' for stdout.")
def sample(dist: str, n: int, seed: int, out: str) -> None:
    """Draw n samples from a benchmark distribution."""
    spec = SamplerSpec.parse(dist, seed)
    text = samples_csv(spec.draw(n))
    if out == "-":
        click.echo(text, nl=False)
        return
    write_text_atomic(out, text)
    click.echo(f"[SAMPLE] {n} samples of {spec} -> {out}", err=True)


# ============================================================================
# ESTIMATE
# ============================================================================

def _measure_options(command):
    command = click.option("--group", "group", default="trivial", show_default=True,
                           help="trivial, rot:<n> or trans1d:<n>.")(command)
    command = click.option("--q", "q_path", required=True, type=click.Path(dir_okay=False),
                           help="Sample CSV for Q.")(command)
    command = click.option("--p", "p_path", required=True, type=click.Path(dir_okay=False),
                           help="Sample CSV for P.")(command)
    return command


def _load_inputs(p_path: str, q_path: str, group: str):
    return read_samples(p_path), read_samples(q_path), GroupAction.parse(group)


@cli.group(cls=SymdivGroup)
def estimate() -> None:
    """Estimate a Sigma-invariant divergence between two sample files."""


@estimate.command("w1")
@_measure_options
@click.option("--L", "lipschitz_L", type=float, default=1.0, show_default=True, help="Lipschitz constant.")
@click.option("--method", type=click.Choice([m.value for m in W1Method]), default=W1Method.AUTO.value,
              show_default=True)
def estimate_w1_cmd(p_path: str, q_path: str, group: str, lipschitz_L: float, method: str) -> None:
    """Invariant Wasserstein-1 distance."""
    P, Q, action = _load_inputs(p_path, q_path, group)
    report = estimate_w1(P, Q, action, W1Config(lipschitz_L=lipschitz_L, method=method))
    _emit(report.to_dict())


@estimate.command("mmd")
@_measure_options
@click.option("--kernel", required=True, help="gaussian:s=<bandwidth>.")
@click.option("--path", "path", type=click.Choice([p.value for p in MmdPath]), default=None,
              help="orbit or symk; default symk from order 16 on.")
def estimate_mmd_cmd(p_path: str, q_path: str, group: str, kernel: str, path: Optional[str]) -> None:
    """Invariant maximum mean discrepancy."""
    P, Q, action = _load_inputs(p_path, q_path, group)
    report = estimate_mmd(P, Q, action, KernelSpec.parse(kernel), path)
    _emit(report.to_dict())


@estimate.command("falpha")
@_measure_options
@click.option("--alpha", type=float, default=2.0, show_default=True, help="alpha > 1.")
@click.option("--L", "lipschitz_L", type=float, default=1.0, show_default=True)
@click.option("--tol", type=float, default=AlphaConfig.tolerance, show_default=True)
@click.option("--max-iters", type=int, default=AlphaConfig.max_iters, show_default=True)
@click.option("--projection-iters", type=int, default=AlphaConfig.projection_iters, show_default=True)
@click.option("--step-rule", type=click.Choice([s.value for s in StepRule]), default=StepRule.DIMINISHING.value,
              show_default=True)
def estimate_falpha_cmd(p_path: str, q_path: str, group: str, alpha: float, lipschitz_L: float, tol: float,
                        max_iters: int, projection_iters: int, step_rule: str) -> None:
    """Invariant Lipschitz-regularized alpha-divergence."""
    cfg = AlphaConfig(alpha=alpha, lipschitz_L=lipschitz_L, max_iters=max_iters, step_rule=step_rule,
                      tolerance=tol, projection_iters=projection_iters)
    P, Q, action = _load_inputs(p_path, q_path, group)
    try:
        report, _ = estimate_falpha(P, Q, action, cfg)
    except SolverError as e:
        value = e.best.objective if e.best is not None else None
        _emit({"divergence": "falpha", "value": value, "diagnostics": e.diagnostics})
        raise
    _emit(report.to_dict())


# ============================================================================
# CHECK
# ============================================================================

@cli.command()
@click.option("--group", "group", required=True, help="trivial, rot:<n> or trans1d:<n>.")
@click.option("--kernel", default=None, help="gaussian:s=<bandwidth>; adds the orbit-decay constants c and C.")
@click.option("--grid", type=click.IntRange(min=1), default=DECAY_GRID_SIZE, show_default=True,
              help="Grid resolution per axis on the fundamental domain.")
@click.option("--min-radius", type=click.FloatRange(min=0.0), default=DECAY_GRID_MIN_RADIUS, show_default=True,
              help="Drop grid radii below this; 0 keeps the origin.")
@click.option("--delta0", type=click.FloatRange(min=0.0, min_open=True), default=1e-3, show_default=True,
              help="Separation margin of the orbit check.")
@click.option("--dim", type=click.IntRange(1, 2), default=2, show_default=True,
              help="Dimension of the grid for the trivial group.")
def check(group: str, kernel: Optional[str], grid: int, min_radius: float, delta0: float, dim: int) -> None:
    """Sampled checks of orbit separation, non-contraction and kernel orbit decay."""
    action = GroupAction.parse(group)
    points = fundamental_grid(action, grid, min_radius=min_radius, dim=dim)

    payload: Dict[str, Any] = {"group": str(action), "grid_points": int(points.shape[0])}
    payload.update(check_assumption_a1(action, points, delta0).to_dict())

    if kernel is not None:
        spec = KernelSpec.parse(kernel)
        payload["kernel"] = str(spec)
        payload.update(check_kernel_invariance(action, spec, points).to_dict())
        decay = estimate_c_sigma_k(action, spec, points)
        payload.update(decay.to_dict())
        payload["C_sigma_k"] = c_big(action.order, decay.value)
    elif action.kind is ActionKind.TRIVIAL:
        payload["C_sigma_k"] = 1.0

    _emit(payload)


# ============================================================================
# EXPERIMENT / ANALYZE
# ============================================================================

@cli.command()
@click.option("--name", required=True, type=click.Choice([e.value for e in ExperimentName]))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--replicas", type=click.IntRange(min=1), default=None, help="Default 10.")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None, help="Master seed, default 0.")
@click.option("--sizes", type=INT_LIST, default=None, help="Comma-separated sample sizes.")
@click.option("--orders", type=INT_LIST, default=None, help="Comma-separated group orders.")
@click.option("--l", "stop_order", type=click.IntRange(min=1), default=None,
              help="Stop-threshold order of mmd-disk-fixed (s = 2*pi/(6 l)).")
@click.option("--L", "lipschitz_L", type=float, default=None, help="Lipschitz constant, default 1.")
@click.option("--alpha", type=float, default=None, help="alpha of falpha-wss1d, default 2.")
@click.option("--std", "mog8_std", type=float, default=None, help="Component std of wss2d, default 0.05.")
@click.option("--jobs", type=int, default=None, help="Worker threads; falls back to SYMDIV_JOBS, then 1.")
def experiment(name: str, out_dir: str, replicas: Optional[int], seed: Optional[int], sizes, orders,
               stop_order: Optional[int], lipschitz_L: Optional[float], alpha: Optional[float],
               mog8_std: Optional[float], jobs: Optional[int]) -> None:
    """Run a replicated benchmark study and write raw, aggregate and ratio CSVs."""
    plan = default_plan(
        name,
        replicas=replicas,
        master_seed=seed,
        sizes=sizes,
        group_orders=orders,
        stop_order=stop_order,
        lipschitz_L=lipschitz_L,
        alpha=alpha,
        mog8_std=mog8_std,
    )
    workers = resolve_jobs(jobs)
    click.echo(f"[EXPERIMENT] {plan.label}: orders {list(plan.group_orders)}, sizes {list(plan.sizes)}, "
               f"{plan.replicas} replicas, {workers} worker(s)", err=True)

    def progress(done: int, total: int, row) -> None:
        click.echo(f"[EXPERIMENT] {done}/{total} order={row.group_order} n={row.n} "
                   f"replica={row.replica} value={row.value:.6g}", err=True)

    table = run(plan, jobs=workers, progress=progress)
    paths = write_outputs(table, out_dir)
    for path in paths.values():
        click.echo(f"[EXPERIMENT] wrote {path}", err=True)


@cli.command()
@click.option("--raw", "raw_path", required=True, type=click.Path(dir_okay=False), help="Raw result CSV.")
def analyze(raw_path: str) -> None:
    """Aggregates, consecutive-order ratios and log-log rate fits as JSON lines."""
    table = read_result_table(raw_path)
    if len(table) == 0:
        raise ArgumentError(f"{raw_path} has no rows")

    for row in table.aggregate():
        _emit({"type": "aggregate", **row._asdict()})
    for row in consecutive_ratios(table):
        _emit({"type": "ratio", **row._asdict()})
    for order in table.orders:
        try:
            fit = fit_rate(table, order)
        except (ArgumentError, FitError) as e:
            _emit({"type": "fit", "group_order": order, "error": str(e)})
            continue
        _emit({"type": "fit", "group_order": order, "slope": fit.slope, "intercept": fit.intercept,
               "r_squared": fit.r_squared, "points": fit.points})


def main() -> None:
    cli(prog_name="symdiv")
