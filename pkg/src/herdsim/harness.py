"""Batch and sweep experiment runner.

Trials in a batch use seeds ``seed_base + k``; a sweep gives cell ``c`` the
seed block ``seed_base + c * trials + k`` so that no two cells share a
stream.  Trials are independent and can run on a thread pool (the simulation
kernels release the GIL); aggregation is a deterministic reduce in trial
order, so results do not depend on the worker count.

A trial that diverges is recorded with its diagnostic and excluded from the
aggregates; it contributes to the abort count and drags the success rate
down, but never invalidates the rest of its batch or other sweep cells.
Trials whose targets were never simultaneously contained count against the
success rate and are excluded from the gathering-time mean.

Every output produced here (config snapshots, per-trial metrics, aggregate
tables) is byte-reproducible for a fixed spec.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .dynamics import Arena, ModelParams
from .metrics import PAIR_COC, MetricsReport
from .robot import run_robot_trial
from .selection import StrategyKind
from .simulation import SimulationConfig, SimulationDiverged, config_to_dict

_PARAM_FIELDS = {f.name for f in dataclasses.fields(ModelParams)}
_ARENA_FIELDS = {f.name for f in dataclasses.fields(Arena)}
_TOP_FIELDS = {
    f.name for f in dataclasses.fields(SimulationConfig) if f.name not in ("params", "arena")
}

_INT_KEYS = {"n_herders", "n_targets", "seed", "record_stride", "leader_index"}
_STR_KEYS = {"spectral_signal"}
_BOOL_KEYS = {"robot_enabled"}


def config_with(config: SimulationConfig, **overrides) -> SimulationConfig:
    """Return a copy of ``config`` with flat key-value overrides applied.

    Keys address top-level fields, model parameters and arena fields by
    name (``alpha_r``, ``goal_radius``, ``strategy``, ...).  Unknown keys
    raise ``ValueError``.
    """
    top: dict = {}
    par: dict = {}
    arn: dict = {}
    for key, value in overrides.items():
        if key == "strategy":
            top[key] = value if isinstance(value, StrategyKind) else StrategyKind(value)
        elif key in _PARAM_FIELDS:
            par[key] = float(value)
        elif key in _ARENA_FIELDS:
            arn[key] = (
                (float(value[0]), float(value[1])) if key == "center" else float(value)
            )
        elif key in _TOP_FIELDS:
            if key in _INT_KEYS:
                top[key] = int(value)
            elif key in _STR_KEYS:
                top[key] = str(value)
            elif key in _BOOL_KEYS:
                top[key] = bool(value)
            else:
                top[key] = float(value)
        else:
            raise ValueError(f"unknown configuration key: {key!r}")
    if par:
        top["params"] = replace(config.params, **par)
    if arn:
        top["arena"] = replace(config.arena, **arn)
    return replace(config, **top)


def load_config(path=None) -> SimulationConfig:
    """Load a configuration from a YAML file of flat key-value pairs.

    Every key is optional; an empty (or missing) file yields the standard
    defaults.
    """
    if path is None:
        return SimulationConfig()
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if data is None:
        return SimulationConfig()
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return config_with(SimulationConfig(), **data)


def save_config_snapshot(config: SimulationConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(config_to_dict(config), sort_keys=True))
    return path


# --------------------------------------------------------------------------
# Specs and results
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """A batch (or sweep, when ``axes`` is non-empty) of seeded trials."""

    base: SimulationConfig
    trials: int = 1
    seed_base: int = 0
    axes: tuple[tuple[str, tuple], ...] = ()
    out_dir: Path | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        for name, values in self.axes:
            config_with(self.base, **{name: values[0]})  # validates the key
            if len(values) == 0:
                raise ValueError(f"sweep axis {name!r} has no values")


@dataclass
class TrialOutcome:
    seed: int
    report: MetricsReport | None
    error: str | None = None


@dataclass(frozen=True)
class BatchStats:
    """Aggregate statistics over one batch (or one sweep cell)."""

    trials: int
    aborted: int
    success_rate: float
    t_g_mean: float | None
    t_g_std: float | None
    d_g_mean: float | None
    d_tot_mean: float | None
    d_tot_std: float | None
    herd_distance_mean: float | None
    spread_pct_mean: float | None
    coc_pairs_pct: float | None


@dataclass
class BatchResult:
    config: SimulationConfig | None  # None for results reloaded from CSV
    seeds: tuple[int, ...]
    outcomes: list[TrialOutcome]
    stats: BatchStats


@dataclass
class SweepCell:
    values: dict
    result: BatchResult


@dataclass
class SweepResult:
    axes: tuple[tuple[str, tuple], ...]
    cells: list[SweepCell]


def _mean(xs) -> float | None:
    xs = list(xs)
    if not xs:
        return None
    return sum(xs) / len(xs)


def _std(xs) -> float | None:
    xs = list(xs)
    if not xs:
        return None
    if len(xs) == 1:
        return 0.0
    m = sum(xs) / len(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def aggregate(outcomes, n_herders: int) -> BatchStats:
    """Deterministic reduce of per-trial reports (arithmetic means)."""
    reports = [o.report for o in outcomes if o.report is not None]
    aborted = sum(1 for o in outcomes if o.report is None)
    gathered = [r for r in reports if r.gathering_time is not None]
    coc_pct = None
    if n_herders == 2 and reports:
        coc_pct = 100.0 * sum(1 for r in reports if r.pair_label == PAIR_COC) / len(reports)
    return BatchStats(
        trials=len(outcomes),
        aborted=aborted,
        success_rate=len(gathered) / len(outcomes) if outcomes else 0.0,
        t_g_mean=_mean(r.gathering_time for r in gathered),
        t_g_std=_std(r.gathering_time for r in gathered),
        d_g_mean=_mean(r.d_g for r in gathered),
        d_tot_mean=_mean(r.d_tot for r in reports),
        d_tot_std=_std(r.d_tot for r in reports),
        herd_distance_mean=_mean(r.herd_distance for r in reports),
        spread_pct_mean=_mean(r.spread_pct for r in reports),
        coc_pairs_pct=coc_pct,
    )


def _one_trial(config: SimulationConfig, seed: int) -> TrialOutcome:
    # run_robot_trial falls through to the plain simulation when the robot
    # layer is disabled.
    cfg = replace(config, seed=seed)
    try:
        _, report = run_robot_trial(cfg)
        return TrialOutcome(seed=seed, report=report)
    except SimulationDiverged as exc:
        return TrialOutcome(seed=seed, report=None, error=str(exc))


def _run_seeded(config: SimulationConfig, seeds, workers: int) -> list[TrialOutcome]:
    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: _one_trial(config, s), seeds))
    return [_one_trial(config, s) for s in seeds]


def run_batch(spec: ExperimentSpec) -> BatchResult:
    """Run ``spec.trials`` trials of the base configuration with seeds
    ``seed_base + k`` and aggregate their metrics."""
    seeds = tuple(spec.seed_base + k for k in range(spec.trials))
    outcomes = _run_seeded(spec.base, seeds, spec.workers)
    stats = aggregate(outcomes, spec.base.n_herders)
    return BatchResult(config=spec.base, seeds=seeds, outcomes=outcomes, stats=stats)


def run_sweep(spec: ExperimentSpec) -> SweepResult:
    """Run one batch per grid cell of the sweep axes.

    Cells enumerate in row-major order over the axis value lists; each cell
    gets its own seed block so results are independent of cell order.
    """
    if not spec.axes:
        cell = SweepCell(values={}, result=run_batch(spec))
        return SweepResult(axes=(), cells=[cell])
    names = [name for name, _ in spec.axes]
    value_lists = [tuple(values) for _, values in spec.axes]
    cells = []
    for cell_index, combo in enumerate(itertools.product(*value_lists)):
        values = dict(zip(names, combo))
        cfg = config_with(spec.base, **values)
        seeds = tuple(
            spec.seed_base + cell_index * spec.trials + k for k in range(spec.trials)
        )
        outcomes = _run_seeded(cfg, seeds, spec.workers)
        stats = aggregate(outcomes, cfg.n_herders)
        cells.append(
            SweepCell(
                values=values,
                result=BatchResult(
                    config=cfg, seeds=seeds, outcomes=outcomes, stats=stats
                ),
            )
        )
    return SweepResult(axes=spec.axes, cells=cells)


# --------------------------------------------------------------------------
# Output files
# --------------------------------------------------------------------------

_STATS_ROWS = (
    "trials",
    "aborted",
    "success_rate",
    "t_g_mean",
    "t_g_std",
    "d_g_mean",
    "d_tot_mean",
    "d_tot_std",
    "herd_distance_mean",
    "spread_pct_mean",
    "coc_pairs_pct",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trial_reports(result: BatchResult, out_dir) -> list[Path]:
    """One JSON file per trial: seed, metrics (null if aborted), diagnostic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, outcome in enumerate(result.outcomes):
        payload = {
            "seed": outcome.seed,
            "metrics": outcome.report.to_dict() if outcome.report else None,
            "error": outcome.error,
        }
        path = out_dir / f"trial_{k:04d}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        paths.append(path)
    return paths


def write_strategy_table(results: dict[str, BatchResult], path) -> Path:
    """Aggregate table, one metric per row and one strategy per column."""
    path = Path(path)
    names = list(results)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric"] + names)
        for row in _STATS_ROWS:
            writer.writerow([row] + [_fmt(getattr(results[n].stats, row)) for n in names])
    return path


def load_sweep_csv(path) -> dict[str, SweepResult]:
    """Rebuild per-strategy sweep results from a stored long-format CSV.

    Only the aggregate statistics are recoverable; the per-trial outcomes of
    each cell are left empty.  Sufficient for re-rendering heatmaps.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        axis_names = [c for c in header if c != "strategy" and c not in _STATS_ROWS]
        rows = list(reader)
    results: dict[str, SweepResult] = {}
    by_strategy: dict[str, list[dict]] = {}
    for row in rows:
        by_strategy.setdefault(row["strategy"], []).append(row)
    for strategy, cells_rows in by_strategy.items():
        axis_values: dict[str, list] = {name: [] for name in axis_names}
        cells = []
        for row in cells_rows:
            values = {}
            for name in axis_names:
                if row[name] == "":
                    continue
                value = yaml.safe_load(row[name])
                values[name] = value
                if value not in axis_values[name]:
                    axis_values[name].append(value)
            stats = BatchStats(
                trials=int(row["trials"]),
                aborted=int(row["aborted"]),
                success_rate=float(row["success_rate"]),
                t_g_mean=float(row["t_g_mean"]) if row["t_g_mean"] else None,
                t_g_std=float(row["t_g_std"]) if row["t_g_std"] else None,
                d_g_mean=float(row["d_g_mean"]) if row["d_g_mean"] else None,
                d_tot_mean=float(row["d_tot_mean"]) if row["d_tot_mean"] else None,
                d_tot_std=float(row["d_tot_std"]) if row["d_tot_std"] else None,
                herd_distance_mean=(
                    float(row["herd_distance_mean"]) if row["herd_distance_mean"] else None
                ),
                spread_pct_mean=(
                    float(row["spread_pct_mean"]) if row["spread_pct_mean"] else None
                ),
                coc_pairs_pct=(
                    float(row["coc_pairs_pct"]) if row["coc_pairs_pct"] else None
                ),
            )
            cells.append(
                SweepCell(
                    values=values,
                    result=BatchResult(config=None, seeds=(), outcomes=[], stats=stats),
                )
            )
        axes = tuple(
            (name, tuple(axis_values[name])) for name in axis_names if axis_values[name]
        )
        results[strategy] = SweepResult(axes=axes, cells=cells)
    return results


def write_sweep_csv(results: dict[str, SweepResult], path) -> Path:
    """Long-format sweep table: strategy, axis values, aggregate stats."""
    path = Path(path)
    axis_names: list[str] = []
    for sweep in results.values():
        for name, _ in sweep.axes:
            if name not in axis_names:
                axis_names.append(name)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy"] + axis_names + list(_STATS_ROWS))
        for strategy, sweep in results.items():
            for cell in sweep.cells:
                row = [strategy]
                row += [_fmt(cell.values.get(name)) for name in axis_names]
                row += [_fmt(getattr(cell.result.stats, r)) for r in _STATS_ROWS]
                writer.writerow(row)
    return path
