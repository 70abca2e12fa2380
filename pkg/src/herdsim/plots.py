"""Figure rendering.

All plots are written as standalone SVG (vector) files next to the delimited
outputs: trajectory overviews with the containment and buffer circles, power
spectra with the behaviour-classification threshold, and sweep heatmaps of
gathering time and total distance travelled.
"""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import Arena
from .harness import SweepResult
from .metrics import FREQUENCY_THRESHOLD_HZ, power_spectrum, spectral_series

HERDER_COLOR = "0.15"
TARGET_COLOR = "tab:green"


def _base_trajectory(traj):
    return traj.base if hasattr(traj, "base") else traj


def plot_trajectory(traj, arena: Arena, path) -> Path:
    """Herder and target paths with the containment (solid) and buffer
    (dashed) circles."""
    traj = _base_trajectory(traj)
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    theta = np.linspace(-math.pi, math.pi, 256)
    cx, cy = arena.center
    ax.plot(
        cx + arena.goal_radius * np.cos(theta),
        cy + arena.goal_radius * np.sin(theta),
        color="tab:red",
        lw=1.5,
        label="containment region",
    )
    outer = arena.goal_radius + arena.buffer_width
    ax.plot(
        cx + outer * np.cos(theta),
        cy + outer * np.sin(theta),
        color="tab:red",
        lw=1.0,
        ls="--",
        label="buffer boundary",
    )
    for i in range(traj.n_targets):
        ax.plot(
            traj.target_pos[:, i, 0],
            traj.target_pos[:, i, 1],
            color=TARGET_COLOR,
            lw=0.7,
            alpha=0.8,
        )
        ax.plot(
            traj.target_pos[0, i, 0], traj.target_pos[0, i, 1],
            marker="o", mfc="none", color=TARGET_COLOR, ms=5,
        )
        ax.plot(
            traj.target_pos[-1, i, 0], traj.target_pos[-1, i, 1],
            marker="o", color=TARGET_COLOR, ms=5,
        )
    for j in range(traj.n_herders):
        ax.plot(
            traj.herder_pos[:, j, 0],
            traj.herder_pos[:, j, 1],
            color=HERDER_COLOR,
            lw=0.8,
        )
        ax.plot(
            traj.herder_pos[0, j, 0], traj.herder_pos[0, j, 1],
            marker="s", mfc="none", color=HERDER_COLOR, ms=6,
        )
        ax.plot(
            traj.herder_pos[-1, j, 0], traj.herder_pos[-1, j, 1],
            marker="s", color=HERDER_COLOR, ms=6,
        )
    ax.set_xlabel("x [a.u.]")
    ax.set_ylabel("y [a.u.]")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_spectra(traj, arena: Arena, path, signal: str = "angle") -> Path:
    """Per-herder power spectra with the SR/COC frequency threshold."""
    traj = _base_trajectory(traj)
    path = Path(path)
    sample_dt = traj.dt * traj.record_stride
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for j in range(traj.n_herders):
        series = spectral_series(traj, j, signal, arena)
        freqs, power = power_spectrum(series, sample_dt)
        ax.plot(freqs[1:], power[1:], lw=0.9, label=f"herder {j}")
    ax.axvline(
        FREQUENCY_THRESHOLD_HZ, color="tab:red", ls="--", lw=1.0,
        label=f"threshold {FREQUENCY_THRESHOLD_HZ} Hz",
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel(f"power of {signal} signal")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _sweep_grid(sweep: SweepResult, stat: str):
    """Pivot a two-axis sweep into (x_values, y_values, grid) for a heatmap."""
    if len(sweep.axes) != 2:
        raise ValueError("heatmaps need exactly two sweep axes")
    (x_name, x_values), (y_name, y_values) = sweep.axes
    grid = np.full((len(y_values), len(x_values)), np.nan)
    lookup = {
        (cell.values[x_name], cell.values[y_name]): getattr(cell.result.stats, stat)
        for cell in sweep.cells
    }
    for iy, yv in enumerate(y_values):
        for ix, xv in enumerate(x_values):
            value = lookup.get((xv, yv))
            if value is not None:
                grid[iy, ix] = value
    return (x_name, list(x_values)), (y_name, list(y_values)), grid


def plot_sweep_heatmaps(results: dict[str, SweepResult], out_dir) -> list[Path]:
    """Two heatmap figures (gathering time, total distance), one panel per
    strategy, over a two-axis sweep grid."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    panels = [
        ("t_g_mean", "mean gathering time [s]", "sweep_gathering_time.svg"),
        ("d_tot_mean", "mean total distance [a.u.]", "sweep_total_distance.svg"),
    ]
    for stat, label, filename in panels:
        fig, axes = plt.subplots(
            1, len(results), figsize=(4.2 * len(results), 3.6), squeeze=False
        )
        for ax, (strategy, sweep) in zip(axes[0], results.items()):
            (x_name, x_values), (y_name, y_values), grid = _sweep_grid(sweep, stat)
            mesh = ax.pcolormesh(
                np.arange(len(x_values) + 1),
                np.arange(len(y_values) + 1),
                grid,
                shading="flat",
            )
            ax.set_xticks(np.arange(len(x_values)) + 0.5, [str(v) for v in x_values])
            ax.set_yticks(np.arange(len(y_values)) + 0.5, [str(v) for v in y_values])
            ax.set_xlabel(x_name)
            ax.set_ylabel(y_name)
            ax.set_title(strategy, fontsize=9)
            fig.colorbar(mesh, ax=ax, label=label)
        fig.tight_layout()
        out_path = out_dir / filename
        fig.savefig(out_path)
        plt.close(fig)
        written.append(out_path)
    return written


def emit_plots(obj, kind: str, out_dir, arena: Arena | None = None) -> list[Path]:
    """Render figures for a trajectory or a sweep result.

    ``kind`` is one of ``trajectory``, ``spectrum`` or ``sweep``.  Empty
    inputs produce a warning and no file.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if kind == "trajectory":
        traj = _base_trajectory(obj)
        if traj.n_samples == 0:
            warnings.warn("empty trajectory: no plot written")
            return []
        return [plot_trajectory(obj, arena or Arena(), out_dir / "trajectory.svg")]
    if kind == "spectrum":
        traj = _base_trajectory(obj)
        if traj.n_samples < 2:
            warnings.warn("trajectory too short for a spectrum: no plot written")
            return []
        return [plot_spectra(obj, arena or Arena(), out_dir / "spectrum.svg")]
    if kind == "sweep":
        results = obj if isinstance(obj, dict) else {"sweep": obj}
        if not results or all(not sweep.cells for sweep in results.values()):
            warnings.warn("empty sweep result: no plot written")
            return []
        return plot_sweep_heatmaps(results, out_dir)
    raise ValueError(f"unknown plot kind {kind!r}")
