"""Coupled herder/target simulation.

Time stepping follows the fixed-step Euler-Maruyama scheme: per step the
assignment is recomputed from the current positions, target positions advance
by drift * dt plus alpha_b * sqrt(dt) * N(0, I2), and herders advance by
explicit Euler on their second-order dynamics (v += a * dt, then y += v * dt).
All force evaluations within one step read the frozen pre-step snapshot.

A trial is fully determined by its configuration: the random stream is a
counter-based generator keyed by the seed, consumed in a fixed order
(target angles, herder base angle, then one (n_targets, 2) normal block per
step), so re-running a seed reproduces the trajectory bit for bit.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics as _metrics
from ._jit import njit
from .dynamics import (
    Arena,
    HerderState,
    ModelParams,
    TargetState,
    _collision_at,
    _control_forces,
    _polar_force_to_cartesian,
    _polar_rates,
    _repulsion_at,
    herder_acceleration,
    herder_control,
    target_drift,
)
from .geometry import TWO_PI, wrap_angle
from .selection import Assignment, StrategyKind, _assign, reassign

SPECTRAL_SIGNALS = ("angle", "radius", "x", "y")


class SimulationDiverged(RuntimeError):
    """Raised when a trial produces a non-finite state."""


@dataclass(frozen=True)
class SimulationConfig:
    """Complete description of one trial.

    Defaults are the standard setup: 2 herders gathering 7 diffusive targets
    into a unit disc over 100 s at dt = 0.006 s.
    """

    n_herders: int = 2
    n_targets: int = 7
    horizon: float = 100.0
    dt: float = 0.006
    params: ModelParams = field(default_factory=ModelParams)
    arena: Arena = field(default_factory=Arena)
    strategy: StrategyKind = StrategyKind.GLOBAL
    seed: int = 0
    record_stride: int = 1
    sector_anchor: float = -math.pi
    leader_index: int = 0
    spectral_signal: str = "angle"
    robot_enabled: bool = False
    robot_k1: float = 0.125
    robot_k2: float = 0.25

    def __post_init__(self):
        if self.n_herders < 1 or self.n_targets < 1:
            raise ValueError("need at least one herder and one target")
        if self.dt <= 0.0 or self.horizon < self.dt:
            raise ValueError("require dt > 0 and horizon >= dt")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.leader_index < self.n_herders:
            raise ValueError("leader_index out of range")
        if self.spectral_signal not in SPECTRAL_SIGNALS:
            raise ValueError(f"spectral_signal must be one of {SPECTRAL_SIGNALS}")
        if not isinstance(self.strategy, StrategyKind):
            raise ValueError("strategy must be a StrategyKind")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))


@dataclass
class WorldState:
    """Snapshot of every agent plus the assignment computed for it."""

    time: float
    herders: list[HerderState]
    targets: list[TargetState]
    assignment: Assignment


@dataclass
class Trajectory:
    """Time-indexed record of a trial, sampled every ``record_stride`` steps.

    ``path_length`` is the cumulative distance travelled per herder,
    accumulated every step regardless of the recording stride; ``assignment``
    holds chased target indices with -1 for unassigned.
    """

    times: np.ndarray  # (K,)
    herder_pos: np.ndarray  # (K, n_herders, 2)
    herder_vel: np.ndarray  # (K, n_herders, 2)
    herder_angle: np.ndarray  # (K, n_herders) unwrapped polar angle
    target_pos: np.ndarray  # (K, n_targets, 2)
    assignment: np.ndarray  # (K, n_herders) int64
    path_length: np.ndarray  # (K, n_herders)
    dt: float
    record_stride: int

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def n_herders(self) -> int:
        return self.herder_pos.shape[1]

    @property
    def n_targets(self) -> int:
        return self.target_pos.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def state_at(self, k: int) -> WorldState:
        herders = [
            HerderState(
                position=self.herder_pos[k, j].copy(),
                velocity=self.herder_vel[k, j].copy(),
                unwrapped_angle=float(self.herder_angle[k, j]),
            )
            for j in range(self.n_herders)
        ]
        targets = [
            TargetState(position=self.target_pos[k, i].copy())
            for i in range(self.n_targets)
        ]
        chased = tuple(
            None if idx < 0 else int(idx) for idx in self.assignment[k]
        )
        return WorldState(float(self.times[k]), herders, targets, Assignment(chased))


def trial_rng(seed: int) -> np.random.Generator:
    """Counter-based random stream for one trial."""
    return np.random.Generator(np.random.Philox(key=seed))


def init_world(config: SimulationConfig, rng: np.random.Generator) -> WorldState:
    """Seeded initial condition.

    Targets start on the circle of radius twice the goal radius at angles
    uniform on (-pi, pi]; herders start evenly spaced on the circle of radius
    four times the goal radius, rotated by a uniform random base angle, with
    zero velocity.
    """
    cx, cy = config.arena.center
    r_goal = config.arena.goal_radius
    target_angles = math.pi - rng.uniform(0.0, TWO_PI, size=config.n_targets)
    targets = [
        TargetState(
            position=np.array(
                [cx + 2.0 * r_goal * math.cos(a), cy + 2.0 * r_goal * math.sin(a)]
            )
        )
        for a in target_angles
    ]
    base = math.pi - rng.uniform(0.0, TWO_PI)
    herders = []
    for j in range(config.n_herders):
        a = base + TWO_PI * j / config.n_herders
        pos = np.array([cx + 4.0 * r_goal * math.cos(a), cy + 4.0 * r_goal * math.sin(a)])
        herders.append(
            HerderState(
                position=pos,
                velocity=np.zeros(2),
                unwrapped_angle=math.atan2(pos[1] - cy, pos[0] - cx),
            )
        )
    state = WorldState(0.0, herders, targets, Assignment((None,) * config.n_herders))
    state.assignment = reassign(
        state, config.strategy, config.arena, config.sector_anchor, config.leader_index
    )
    return state


def step(
    state: WorldState, config: SimulationConfig, rng: np.random.Generator
) -> WorldState:
    """One Euler-Maruyama step (reference implementation).

    The fast path used by :func:`run_trial` is a fused kernel; this function
    defines the step semantics operation by operation and consumes the same
    random stream, so chaining it from :func:`init_world` reproduces the
    kernel trajectory.
    """
    p = config.params
    arena = config.arena
    dt = config.dt
    assignment = reassign(
        state, config.strategy, arena, config.sector_anchor, config.leader_index
    )
    noise = rng.standard_normal(size=(config.n_targets, 2))

    drifts = [
        target_drift(i, state.targets, state.herders, p)
        for i in range(config.n_targets)
    ]
    new_targets = [
        TargetState(
            position=state.targets[i].position
            + drifts[i] * dt
            + p.alpha_b * math.sqrt(dt) * noise[i]
        )
        for i in range(config.n_targets)
    ]

    new_herders = []
    for j, h in enumerate(state.herders):
        idx = assignment.chased[j]
        chased = state.targets[idx] if idx is not None else None
        u_r, u_theta = herder_control(h, chased, p, arena)
        accel = herder_acceleration(h, u_r, u_theta, center=arena.center, mass=p.mass)
        velocity = h.velocity + accel * dt
        position = h.position + velocity * dt
        old_angle = math.atan2(
            h.position[1] - arena.center[1], h.position[0] - arena.center[0]
        )
        new_angle = math.atan2(
            position[1] - arena.center[1], position[0] - arena.center[0]
        )
        unwrapped = h.unwrapped_angle + wrap_angle(new_angle - old_angle)
        new_herders.append(HerderState(position, velocity, unwrapped))

    for h in new_herders:
        if not (np.isfinite(h.position).all() and np.isfinite(h.velocity).all()):
            raise SimulationDiverged(
                f"non-finite herder state at t={state.time + dt:.6g}"
            )
    for t in new_targets:
        if not np.isfinite(t.position).all():
            raise SimulationDiverged(
                f"non-finite target state at t={state.time + dt:.6g}"
            )

    new_state = WorldState(state.time + dt, new_herders, new_targets, assignment)
    new_state.assignment = reassign(
        new_state, config.strategy, arena, config.sector_anchor, config.leader_index
    )
    return new_state


@njit(cache=True, nogil=True)
def _trial_kernel(
    h_xy,
    h_v,
    h_ang,
    t_xy,
    noise,
    dt,
    code,
    anchor,
    leader_index,
    cx,
    cy,
    r_star,
    dr_star,
    alpha_b,
    alpha_r,
    b_r,
    eps_r,
    b_theta,
    eps_theta,
    r_c,
    collision_sign,
    mass,
    stride,
):
    n_steps = noise.shape[0]
    n_h = h_xy.shape[0]
    n_t = t_xy.shape[0]
    n_rec = n_steps // stride + 1

    times = np.empty(n_rec)
    rec_hpos = np.empty((n_rec, n_h, 2))
    rec_hvel = np.empty((n_rec, n_h, 2))
    rec_hang = np.empty((n_rec, n_h))
    rec_tpos = np.empty((n_rec, n_t, 2))
    rec_assign = np.empty((n_rec, n_h), np.int64)
    rec_path = np.empty((n_rec, n_h))

    assign_buf = np.full(n_h, -1, np.int64)
    drift = np.empty((n_t, 2))
    accel = np.empty((n_h, 2))
    path = np.zeros(n_h)
    sqrt_dt = math.sqrt(dt)

    rec = 0
    status = 0
    abort_step = -1
    for k in range(n_steps + 1):
        # assign_buf carries the previous assignment into the hysteresis and
        # receives the new one (aliasing is safe).
        _assign(
            code, h_xy, t_xy, cx, cy, anchor, leader_index, r_star,
            assign_buf, assign_buf,
        )
        if k % stride == 0:
            times[rec] = k * dt
            for j in range(n_h):
                rec_hpos[rec, j, 0] = h_xy[j, 0]
                rec_hpos[rec, j, 1] = h_xy[j, 1]
                rec_hvel[rec, j, 0] = h_v[j, 0]
                rec_hvel[rec, j, 1] = h_v[j, 1]
                rec_hang[rec, j] = h_ang[j]
                rec_assign[rec, j] = assign_buf[j]
                rec_path[rec, j] = path[j]
            for i in range(n_t):
                rec_tpos[rec, i, 0] = t_xy[i, 0]
                rec_tpos[rec, i, 1] = t_xy[i, 1]
            rec += 1
        if k == n_steps:
            break

        for i in range(n_t):
            rvx, rvy = _repulsion_at(t_xy[i, 0], t_xy[i, 1], h_xy, alpha_r)
            cvx, cvy = _collision_at(i, t_xy, r_c, collision_sign)
            drift[i, 0] = rvx + cvx
            drift[i, 1] = rvy + cvy

        for j in range(n_h):
            x = h_xy[j, 0] - cx
            y = h_xy[j, 1] - cy
            r, _, r_dot, theta_dot = _polar_rates(x, y, h_v[j, 0], h_v[j, 1])
            theta = h_ang[j]
            tgt = assign_buf[j]
            if tgt >= 0:
                px = t_xy[tgt, 0] - cx
                py = t_xy[tgt, 1] - cy
                rho = math.sqrt(px * px + py * py)
                phi = math.atan2(py, px)
                u_r, u_theta = _control_forces(
                    r, theta, r_dot, theta_dot, True, rho, phi,
                    b_r, eps_r, b_theta, eps_theta, r_star, dr_star,
                )
            else:
                u_r, u_theta = _control_forces(
                    r, theta, r_dot, theta_dot, False, 0.0, 0.0,
                    b_r, eps_r, b_theta, eps_theta, r_star, dr_star,
                )
            ax, ay = _polar_force_to_cartesian(x, y, u_r, u_theta, mass)
            accel[j, 0] = ax
            accel[j, 1] = ay

        for i in range(n_t):
            t_xy[i, 0] += drift[i, 0] * dt + alpha_b * sqrt_dt * noise[k, i, 0]
            t_xy[i, 1] += drift[i, 1] * dt + alpha_b * sqrt_dt * noise[k, i, 1]
            if not (math.isfinite(t_xy[i, 0]) and math.isfinite(t_xy[i, 1])):
                status = 1

        for j in range(n_h):
            old_angle = math.atan2(h_xy[j, 1] - cy, h_xy[j, 0] - cx)
            h_v[j, 0] += accel[j, 0] * dt
            h_v[j, 1] += accel[j, 1] * dt
            h_xy[j, 0] += h_v[j, 0] * dt
            h_xy[j, 1] += h_v[j, 1] * dt
            new_angle = math.atan2(h_xy[j, 1] - cy, h_xy[j, 0] - cx)
            h_ang[j] += wrap_angle(new_angle - old_angle)
            speed = math.sqrt(h_v[j, 0] * h_v[j, 0] + h_v[j, 1] * h_v[j, 1])
            path[j] += speed * dt
            if not (
                math.isfinite(h_xy[j, 0])
                and math.isfinite(h_xy[j, 1])
                and math.isfinite(h_v[j, 0])
                and math.isfinite(h_v[j, 1])
            ):
                status = 1

        if status != 0:
            abort_step = k
            break

    return (
        times[:rec],
        rec_hpos[:rec],
        rec_hvel[:rec],
        rec_hang[:rec],
        rec_tpos[:rec],
        rec_assign[:rec],
        rec_path[:rec],
        status,
        abort_step,
    )


def run_trial(config: SimulationConfig):
    """Run one seeded trial and return ``(Trajectory, MetricsReport)``.

    Raises :class:`SimulationDiverged` if the state turns non-finite.
    """
    rng = trial_rng(config.seed)
    state0 = init_world(config, rng)
    n_h = config.n_herders
    n_t = config.n_targets
    h_xy = np.array([h.position for h in state0.herders], dtype=np.float64).reshape(
        n_h, 2
    )
    h_v = np.zeros((n_h, 2))
    h_ang = np.array(
        [h.unwrapped_angle for h in state0.herders], dtype=np.float64
    )
    t_xy = np.array([t.position for t in state0.targets], dtype=np.float64).reshape(
        n_t, 2
    )
    noise = rng.standard_normal(size=(config.n_steps, n_t, 2))
    p = config.params
    arena = config.arena
    (
        times,
        rec_hpos,
        rec_hvel,
        rec_hang,
        rec_tpos,
        rec_assign,
        rec_path,
        status,
        abort_step,
    ) = _trial_kernel(
        h_xy,
        h_v,
        h_ang,
        t_xy,
        noise,
        config.dt,
        config.strategy.code,
        config.sector_anchor,
        config.leader_index,
        float(arena.center[0]),
        float(arena.center[1]),
        arena.goal_radius,
        arena.buffer_width,
        p.alpha_b,
        p.alpha_r,
        p.b_r,
        p.eps_r,
        p.b_theta,
        p.eps_theta,
        p.r_c,
        p.collision_sign,
        p.mass,
        config.record_stride,
    )
    if status != 0:
        raise SimulationDiverged(
            f"non-finite state at step {abort_step} "
            f"(t={abort_step * config.dt:.6g} s, seed={config.seed})"
        )
    traj = Trajectory(
        times=times,
        herder_pos=rec_hpos,
        herder_vel=rec_hvel,
        herder_angle=rec_hang,
        target_pos=rec_tpos,
        assignment=rec_assign,
        path_length=rec_path,
        dt=config.dt,
        record_stride=config.record_stride,
    )
    report = _metrics.trial_report(traj, config)
    return traj, report


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def config_to_dict(config: SimulationConfig) -> dict:
    """JSON/YAML-friendly dictionary form of a configuration."""
    d = dataclasses.asdict(config)
    d["strategy"] = config.strategy.value
    d["arena"]["center"] = list(config.arena.center)
    return d


def write_run_metadata(config: SimulationConfig, path) -> Path:
    """Write the JSON metadata header (full configuration and seed)."""
    path = Path(path)
    payload = {"config": config_to_dict(config), "seed": config.seed}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def load_trajectory_csv(path, center=(0.0, 0.0)) -> Trajectory:
    """Rebuild a trajectory from a stored CSV (plain or robot schema).

    Channels not stored in the file are reconstructed from the samples: the
    unwrapped herder angle by unwrapping the per-sample polar angles about
    ``center``, and the cumulative path length from recorded positions.  The
    loaded trajectory treats the recording grid as the step grid
    (record_stride 1).
    """
    path = Path(path)
    herder_rows: dict[tuple[float, int], tuple] = {}
    target_rows: dict[tuple[float, int], tuple] = {}
    times_seen: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            t = float(row["t"])
            if not times_seen or times_seen[-1] != t:
                times_seen.append(t)
            agent_id = int(row["agent_id"])
            if row["agent_kind"] == "herder":
                vx = float(row["vx"]) if row["vx"] else 0.0
                vy = float(row["vy"]) if row["vy"] else 0.0
                chased = int(row["chased_id"]) if row["chased_id"] else -1
                herder_rows[(t, agent_id)] = (
                    float(row["x"]), float(row["y"]), vx, vy, chased,
                )
            else:
                target_rows[(t, agent_id)] = (float(row["x"]), float(row["y"]))
    if not times_seen:
        raise ValueError(f"no samples in {path}")
    n_h = 1 + max(j for (_, j) in herder_rows)
    n_t = 1 + max(i for (_, i) in target_rows)
    k_samples = len(times_seen)
    times = np.array(times_seen)
    herder_pos = np.empty((k_samples, n_h, 2))
    herder_vel = np.empty((k_samples, n_h, 2))
    target_pos = np.empty((k_samples, n_t, 2))
    assignment = np.empty((k_samples, n_h), np.int64)
    for k, t in enumerate(times_seen):
        for j in range(n_h):
            x, y, vx, vy, chased = herder_rows[(t, j)]
            herder_pos[k, j] = (x, y)
            herder_vel[k, j] = (vx, vy)
            assignment[k, j] = chased
        for i in range(n_t):
            target_pos[k, i] = target_rows[(t, i)]
    wrapped = np.arctan2(
        herder_pos[:, :, 1] - center[1], herder_pos[:, :, 0] - center[0]
    )
    herder_angle = np.unwrap(wrapped, axis=0)
    steps = np.linalg.norm(np.diff(herder_pos, axis=0), axis=2)
    path_length = np.zeros((k_samples, n_h))
    path_length[1:] = np.cumsum(steps, axis=0)
    dt = float(times[1] - times[0]) if k_samples > 1 else 1.0
    return Trajectory(
        times=times,
        herder_pos=herder_pos,
        herder_vel=herder_vel,
        herder_angle=herder_angle,
        target_pos=target_pos,
        assignment=assignment,
        path_length=path_length,
        dt=dt,
        record_stride=1,
    )


def export_trajectory_csv(traj: Trajectory, path) -> Path:
    """Write a trajectory as delimited text.

    Columns: t, agent_kind, agent_id, x, y, vx, vy, chased_id.  Velocity and
    chased_id fields are empty for targets (first-order agents that chase
    nothing).
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "agent_kind", "agent_id", "x", "y", "vx", "vy", "chased_id"])
        for k in range(traj.n_samples):
            t = repr(float(traj.times[k]))
            for j in range(traj.n_herders):
                chased = traj.assignment[k, j]
                writer.writerow(
                    [
                        t,
                        "herder",
                        j,
                        repr(float(traj.herder_pos[k, j, 0])),
                        repr(float(traj.herder_pos[k, j, 1])),
                        repr(float(traj.herder_vel[k, j, 0])),
                        repr(float(traj.herder_vel[k, j, 1])),
                        "" if chased < 0 else int(chased),
                    ]
                )
            for i in range(traj.n_targets):
                writer.writerow(
                    [
                        t,
                        "target",
                        i,
                        repr(float(traj.target_pos[k, i, 0])),
                        repr(float(traj.target_pos[k, i, 1])),
                        "",
                        "",
                        "",
                    ]
                )
    return path
