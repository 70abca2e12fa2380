"""Command-line interface.

Subcommands::

    run    one seeded trial: metrics JSON, trajectory CSV and figures
    batch  N seeded trials per strategy, aggregate table (one column per
           strategy, one metric per row)
    sweep  batches over a parameter grid (defaults: herd size x repulsion
           strength), long-format CSV plus heatmap figures
    robot  differential-drive replica trials
    plot   re-render figures from stored outputs

Exit code 0 on success, 1 if any trial aborted (unless --keep-going),
2 on usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import yaml

from .dynamics import Arena
from .harness import (
    ExperimentSpec,
    config_with,
    load_config,
    load_sweep_csv,
    run_batch,
    run_sweep,
    save_config_snapshot,
    write_strategy_table,
    write_sweep_csv,
    write_trial_reports,
)
from .plots import emit_plots, plot_spectra, plot_sweep_heatmaps, plot_trajectory
from .robot import export_robot_csv, run_robot_trial
from .selection import StrategyKind
from .simulation import (
    SimulationDiverged,
    export_trajectory_csv,
    load_trajectory_csv,
    run_trial,
    write_run_metadata,
)

_ALL_STRATEGIES = [s.value for s in StrategyKind]


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, default=None, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="base seed")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )


def _parse_overrides(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"bad --set value {pair!r}, expected KEY=VALUE")
        key, _, value = pair.partition("=")
        out[key.strip()] = yaml.safe_load(value)
    return out


def _build_config(args, **extra):
    config = load_config(args.config)
    overrides = _parse_overrides(args.overrides)
    overrides.update(extra)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "strategy", None) not in (None, "all"):
        overrides["strategy"] = args.strategy
    return config_with(config, **overrides)


def _strategies(args):
    if getattr(args, "strategy", None) in (None, "all"):
        return _ALL_STRATEGIES
    return [args.strategy]


def _cmd_run(args) -> int:
    config = _build_config(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_run_metadata(config, out / "metadata.json")
    try:
        traj, report = run_trial(config)
    except SimulationDiverged as exc:
        print(f"trial aborted: {exc}", file=sys.stderr)
        return 1
    (out / "metrics.json").write_text(report.to_json())
    export_trajectory_csv(traj, out / "trajectory.csv")
    plot_trajectory(traj, config.arena, out / "trajectory.svg")
    plot_spectra(traj, config.arena, out / "spectrum.svg", config.spectral_signal)
    print(f"trial done: t_g={report.gathering_time} pair={report.pair_label}")
    print(f"outputs in {out}")
    return 0


def _cmd_batch(args) -> int:
    config = _build_config(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    save_config_snapshot(config, out / "config.yaml")
    results = {}
    aborted = 0
    for name in _strategies(args):
        cfg = config_with(config, strategy=name)
        spec = ExperimentSpec(
            base=cfg, trials=args.trials, seed_base=cfg.seed, workers=args.workers
        )
        result = run_batch(spec)
        results[name] = result
        aborted += result.stats.aborted
        strategy_dir = out / name
        write_trial_reports(result, strategy_dir)
        (strategy_dir / "stats.json").write_text(
            json.dumps(dataclasses.asdict(result.stats), indent=2, sort_keys=True) + "\n"
        )
        print(
            f"{name}: success {result.stats.success_rate:.0%}, "
            f"t_g mean {result.stats.t_g_mean}, aborted {result.stats.aborted}"
        )
    write_strategy_table(results, out / "table.csv")
    print(f"outputs in {out}")
    if aborted and not args.keep_going:
        return 1
    return 0


def _parse_values(text, cast):
    return tuple(cast(v) for v in text.split(",") if v != "")


def _cmd_sweep(args) -> int:
    config = _build_config(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    save_config_snapshot(config, out / "config.yaml")
    axes = (
        ("n_targets", _parse_values(args.targets, int)),
        ("alpha_r", _parse_values(args.alpha_r, float)),
    )
    results = {}
    aborted = 0
    for name in _strategies(args):
        cfg = config_with(config, strategy=name)
        spec = ExperimentSpec(
            base=cfg,
            trials=args.trials,
            seed_base=cfg.seed,
            axes=axes,
            workers=args.workers,
        )
        sweep = run_sweep(spec)
        results[name] = sweep
        aborted += sum(cell.result.stats.aborted for cell in sweep.cells)
        print(f"{name}: {len(sweep.cells)} cells done")
    write_sweep_csv(results, out / "sweep.csv")
    plot_sweep_heatmaps(results, out)
    print(f"outputs in {out}")
    if aborted and not args.keep_going:
        return 1
    return 0


def _cmd_robot(args) -> int:
    config = _build_config(args, robot_enabled=True, horizon=args.horizon)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_run_metadata(config, out / "metadata.json")
    outcomes = []
    last = None
    exit_code = 0
    for k in range(args.trials):
        cfg = config_with(config, seed=config.seed + k)
        try:
            traj, report = run_robot_trial(cfg)
            last = (traj, cfg)
            payload = {"seed": cfg.seed, "metrics": report.to_dict(), "error": None}
            print(f"trial {k}: t_g={report.gathering_time}")
        except SimulationDiverged as exc:
            payload = {"seed": cfg.seed, "metrics": None, "error": str(exc)}
            print(f"trial {k} aborted: {exc}", file=sys.stderr)
            if not args.keep_going:
                exit_code = 1
        (out / f"trial_{k:04d}.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
    if last is not None:
        traj, cfg = last
        export_robot_csv(traj, out / "trajectory.csv")
        plot_trajectory(traj, cfg.arena, out / "trajectory.svg")
        plot_spectra(traj, cfg.arena, out / "spectrum.svg", cfg.spectral_signal)
    print(f"outputs in {out}")
    return exit_code


def _cmd_plot(args) -> int:
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.kind in ("trajectory", "spectrum"):
        arena = Arena()
        meta_path = args.source.parent / "metadata.json"
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            a = meta["config"]["arena"]
            arena = Arena(
                center=tuple(a["center"]),
                goal_radius=a["goal_radius"],
                buffer_width=a["buffer_width"],
            )
        traj = load_trajectory_csv(args.source, center=arena.center)
        written = emit_plots(traj, args.kind, out, arena=arena)
    elif args.kind == "sweep":
        results = load_sweep_csv(args.source)
        written = emit_plots(results, "sweep", out)
    else:  # pragma: no cover - argparse restricts choices
        raise SystemExit(f"unknown plot kind {args.kind}")
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="herdsim",
        description="Multi-agent herding simulation engine and experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single trial")
    _add_common(p_run)
    p_run.add_argument("--strategy", choices=_ALL_STRATEGIES, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_batch = sub.add_parser("batch", help="run seeded trial batches per strategy")
    _add_common(p_batch)
    p_batch.add_argument("--trials", type=int, default=50)
    p_batch.add_argument("--strategy", choices=_ALL_STRATEGIES + ["all"], default="all")
    p_batch.add_argument("--workers", type=int, default=1)
    p_batch.add_argument("--keep-going", action="store_true")
    p_batch.set_defaults(func=_cmd_batch)

    p_sweep = sub.add_parser("sweep", help="sweep herd size and repulsion strength")
    _add_common(p_sweep)
    p_sweep.add_argument("--trials", type=int, default=15)
    p_sweep.add_argument("--strategy", choices=_ALL_STRATEGIES + ["all"], default="all")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--keep-going", action="store_true")
    p_sweep.add_argument(
        "--targets", default="3,15,30", help="comma-separated herd sizes"
    )
    p_sweep.add_argument(
        "--alpha-r",
        dest="alpha_r",
        default="0.1,1.0,2.0",
        help="comma-separated repulsion coefficients",
    )
    p_sweep.set_defaults(func=_cmd_sweep)

    p_robot = sub.add_parser("robot", help="run differential-drive replica trials")
    _add_common(p_robot)
    p_robot.add_argument("--strategy", choices=_ALL_STRATEGIES, default=None)
    p_robot.add_argument("--trials", type=int, default=1)
    p_robot.add_argument("--horizon", type=float, default=500.0)
    p_robot.add_argument("--keep-going", action="store_true")
    p_robot.set_defaults(func=_cmd_robot)

    p_plot = sub.add_parser("plot", help="re-render figures from stored outputs")
    p_plot.add_argument("--kind", choices=["trajectory", "spectrum", "sweep"], required=True)
    p_plot.add_argument("--source", type=Path, required=True, help="stored CSV file")
    p_plot.add_argument("--out", type=Path, default=Path("out"))
    p_plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
