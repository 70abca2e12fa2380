"""Trial performance metrics and the spectral behaviour classifier.

Per-trial metrics:

* ``gathering_time`` (t_g): first recorded instant with every target inside
  the containment region;
* ``distance_travelled`` d(t): herder-mean of the time-averaged speed over
  [0, t]; d_g = d(t_g) and d_tot = d(T);
* ``herd_distance`` (D_T): time-average of the distance between the herd's
  centre of mass and the arena centre;
* ``herd_spread`` (S and S%): time-average of the convex-hull area of the
  target positions, also expressed as a percentage of the goal-disc area;
* ``behavioral_index``: signed dominant-frequency power of a herder's motion
  signal.  Negative values (dominant frequency below the 0.5 Hz threshold)
  mark search-and-recovery (SR) motion, positive values mark oscillatory
  containment; a pair of herders is labelled COC when both indices are
  positive and SR when both are negative, otherwise Mixed.

Time averages are left-endpoint Riemann sums at the recording stride.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .dynamics import Arena
from .geometry import _hull_area

FREQUENCY_THRESHOLD_HZ = 0.5

PAIR_SR = "SR"
PAIR_COC = "COC"
PAIR_MIXED = "Mixed"
PAIR_NA = "N/A"


@dataclass(frozen=True)
class MetricsReport:
    """All per-trial metrics.  ``gathering_time`` and ``d_g`` are ``None``
    when the targets were never simultaneously contained; ``pair_label`` is
    ``"N/A"`` unless the trial ran exactly two herders."""

    gathering_time: float | None
    d_g: float | None
    d_tot: float
    herd_distance: float
    spread: float
    spread_pct: float
    behavioral_index: tuple[float, ...]
    pair_label: str

    def to_dict(self) -> dict:
        return {
            "gathering_time": self.gathering_time,
            "d_g": self.d_g,
            "d_tot": self.d_tot,
            "herd_distance": self.herd_distance,
            "spread": self.spread,
            "spread_pct": self.spread_pct,
            "behavioral_index": list(self.behavioral_index),
            "pair_label": self.pair_label,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def gathering_time(traj, arena: Arena) -> float | None:
    """First recorded time at which every target lies inside the goal disc
    (boundary included), or ``None`` if that never happens."""
    center = np.asarray(arena.center)
    radii = np.linalg.norm(traj.target_pos - center, axis=2)
    contained = (radii <= arena.goal_radius).all(axis=1)
    hits = np.flatnonzero(contained)
    if hits.size == 0:
        return None
    return float(traj.times[hits[0]])


def distance_travelled(traj, t: float) -> float:
    """Herder-mean time-averaged speed over [0, t].

    ``t`` is snapped to the recording grid.  The path integral is accumulated
    at every integration step, so the value is exact regardless of the
    recording stride.  d(0) is defined as 0.
    """
    if t <= 0.0:
        return 0.0
    sample_dt = traj.dt * traj.record_stride
    k = int(round(t / sample_dt))
    k = min(max(k, 0), traj.n_samples - 1)
    t_k = float(traj.times[k])
    if t_k <= 0.0:
        return 0.0
    return float(np.mean(traj.path_length[k]) / t_k)


def herd_distance(traj, arena: Arena) -> float:
    """Time-averaged distance between the target centre of mass and the
    arena centre."""
    center = np.asarray(arena.center)
    com = traj.target_pos.mean(axis=1)
    dist = np.linalg.norm(com - center, axis=1)
    if traj.n_samples < 2:
        return float(dist[0])
    return float(dist[:-1].mean())


@njit(cache=True, nogil=True)
def _hull_series(positions):
    out = np.empty(positions.shape[0])
    for k in range(positions.shape[0]):
        out[k] = _hull_area(positions[k])
    return out


def herd_spread(traj, arena: Arena) -> tuple[float, float]:
    """Time-averaged convex-hull area of the targets, absolute and as a
    percentage of the goal-disc area."""
    areas = _hull_series(np.ascontiguousarray(traj.target_pos))
    if traj.n_samples < 2:
        spread = float(areas[0])
    else:
        spread = float(areas[:-1].mean())
    goal_area = math.pi * arena.goal_radius**2
    return spread, spread / goal_area * 100.0


def power_spectrum(series, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided periodogram of a uniformly sampled signal.

    The mean is removed and no window is applied; power is |X_k|^2 / N.
    Returns (frequencies in Hz, power).
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two samples")
    x = x - x.mean()
    power = np.abs(np.fft.rfft(x)) ** 2 / x.size
    freqs = np.fft.rfftfreq(x.size, d=dt)
    return freqs, power


def spectral_peak(series, dt: float) -> tuple[float, float, bool]:
    """Dominant non-zero-frequency component of a signal.

    Returns (frequency in Hz, power at that frequency, degenerate).  A signal
    without variation has no dominant component and is flagged degenerate.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size >= 2 and np.ptp(x) == 0.0:
        return 0.0, 0.0, True
    freqs, power = power_spectrum(x, dt)
    if len(power) < 2:
        return 0.0, 0.0, True
    k = 1 + int(np.argmax(power[1:]))
    return float(freqs[k]), float(power[k]), False


def behavioral_index(
    series, dt: float, threshold_hz: float = FREQUENCY_THRESHOLD_HZ
) -> float:
    """Signed dominant power: sign(f_peak - threshold) * peak power.

    Degenerate (constant) signals return 0, as does a peak exactly on the
    threshold.
    """
    freq, power, degenerate = spectral_peak(series, dt)
    if degenerate or freq == threshold_hz:
        return 0.0
    return math.copysign(1.0, freq - threshold_hz) * power


def classify_pair(phi_1: float, phi_2: float) -> str:
    """SR when both indices are negative, COC when both are positive,
    Mixed otherwise (including degenerate zero indices)."""
    if phi_1 < 0.0 and phi_2 < 0.0:
        return PAIR_SR
    if phi_1 > 0.0 and phi_2 > 0.0:
        return PAIR_COC
    return PAIR_MIXED


def spectral_series(traj, herder_index: int, kind: str, arena: Arena) -> np.ndarray:
    """Extract the per-herder signal analysed by the behaviour classifier."""
    if kind == "angle":
        return np.asarray(traj.herder_angle[:, herder_index], dtype=np.float64)
    pos = traj.herder_pos[:, herder_index, :]
    if kind == "radius":
        return np.linalg.norm(pos - np.asarray(arena.center), axis=1)
    if kind == "x":
        return np.asarray(pos[:, 0], dtype=np.float64)
    if kind == "y":
        return np.asarray(pos[:, 1], dtype=np.float64)
    raise ValueError(f"unknown spectral signal {kind!r}")


def trial_report(traj, config) -> MetricsReport:
    """Compute the full metrics report for one trial."""
    arena = config.arena
    t_g = gathering_time(traj, arena)
    if t_g is None:
        d_g = None
    else:
        d_g = distance_travelled(traj, t_g)
    d_tot = distance_travelled(traj, traj.duration)
    dist = herd_distance(traj, arena)
    spread, spread_pct = herd_spread(traj, arena)
    sample_dt = traj.dt * traj.record_stride
    indices = tuple(
        behavioral_index(
            spectral_series(traj, j, config.spectral_signal, arena), sample_dt
        )
        for j in range(traj.n_herders)
    )
    if traj.n_herders == 2:
        label = classify_pair(indices[0], indices[1])
    else:
        label = PAIR_NA
    return MetricsReport(
        gathering_time=t_g,
        d_g=d_g,
        d_tot=d_tot,
        herd_distance=dist,
        spread=spread,
        spread_pct=spread_pct,
        behavioral_index=indices,
        pair_label=label,
    )
