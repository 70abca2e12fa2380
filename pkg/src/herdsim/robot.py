"""Differential-drive validation layer.

Every agent (herder and target alike) becomes a kinematic unicycle that
tracks a reference trajectory with a proportional Cartesian regulator.  The
references are produced by the same model dynamics as the plain simulation,
evaluated in closed loop: each agent integrates its own reference state while
reading the *realized* robot positions of the other agents, mirroring a
robot fleet whose controllers subscribe to each other's odometry.  Target
selection runs on realized positions, and all metrics are computed on the
realized robot trajectories.

The regulator for a robot at pose (y, phi) tracking reference point y* with
polar angle theta* (about the arena centre) is::

    v     = -k1 * (y - y*) . [cos(phi), sin(phi)]
    omega =  k2 * wrap(theta* - phi + pi)

which drives the robot backward-facing toward its reference; headings
therefore settle opposite the reference's polar direction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics as _metrics
from ._jit import njit
from .dynamics import (
    _collision_at,
    _control_forces,
    _polar_force_to_cartesian,
    _polar_rates,
    _repulsion_at,
)
from .geometry import wrap_angle
from .selection import _assign
from .simulation import (
    SimulationConfig,
    SimulationDiverged,
    Trajectory,
    init_world,
    run_trial,
    trial_rng,
)

TRACKING_ABORT_FACTOR = 10.0


@dataclass
class UnicycleState:
    """Kinematic unicycle pose; the heading is stored unwrapped and wrapped
    to (-pi, pi] at read time via :attr:`heading_wrapped`."""

    position: np.ndarray
    heading: float

    @property
    def heading_wrapped(self) -> float:
        return wrap_angle(self.heading)


@dataclass(frozen=True)
class RegulatorGains:
    """Proportional gains of the Cartesian regulator."""

    k1: float = 0.125
    k2: float = 0.25

    def __post_init__(self):
        if self.k1 <= 0.0 or self.k2 <= 0.0:
            raise ValueError("regulator gains must be positive")


@njit(cache=True, nogil=True)
def _regulator(x, y, phi, ref_x, ref_y, ref_angle, k1, k2):
    v = -k1 * ((x - ref_x) * math.cos(phi) + (y - ref_y) * math.sin(phi))
    omega = k2 * wrap_angle(ref_angle - phi + math.pi)
    return v, omega


def cartesian_regulator(
    s: UnicycleState, ref_point, ref_angle: float, gains: RegulatorGains
) -> tuple[float, float]:
    """Velocity commands (v, omega) tracking ``ref_point`` whose polar angle
    is ``ref_angle``."""
    v, omega = _regulator(
        float(s.position[0]),
        float(s.position[1]),
        s.heading,
        float(ref_point[0]),
        float(ref_point[1]),
        float(ref_angle),
        gains.k1,
        gains.k2,
    )
    return v, omega


def unicycle_step(s: UnicycleState, v: float, omega: float, dt: float) -> UnicycleState:
    """Advance unicycle kinematics one step: the position moves by exactly
    |v| * dt along the current heading, then the heading rotates."""
    x = s.position[0] + v * math.cos(s.heading) * dt
    y = s.position[1] + v * math.sin(s.heading) * dt
    return UnicycleState(np.array([x, y]), s.heading + omega * dt)


@dataclass
class RobotTrajectory:
    """Realized robot trajectories plus the commands and references behind
    them.  ``base`` uses the plain simulation schema (realized states), so
    every metric applies unchanged."""

    base: Trajectory
    herder_heading: np.ndarray  # (K, n_herders) unwrapped
    target_heading: np.ndarray  # (K, n_targets) unwrapped
    herder_cmd: np.ndarray  # (K, n_herders, 2) -> (v, omega)
    target_cmd: np.ndarray  # (K, n_targets, 2)
    ref_herder_pos: np.ndarray  # (K, n_herders, 2)
    ref_target_pos: np.ndarray  # (K, n_targets, 2)


@njit(cache=True, nogil=True)
def _robot_kernel(
    rh_xy,
    rh_phi,
    rh_ang,
    rt_xy,
    rt_phi,
    zh_xy,
    zh_v,
    zh_ang,
    zt_xy,
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
    k1,
    k2,
    stride,
):
    n_steps = noise.shape[0]
    n_h = rh_xy.shape[0]
    n_t = rt_xy.shape[0]
    n_rec = n_steps // stride + 1
    abort_radius = TRACKING_ABORT_FACTOR * r_star

    times = np.empty(n_rec)
    rec_hpos = np.empty((n_rec, n_h, 2))
    rec_hvel = np.empty((n_rec, n_h, 2))
    rec_hang = np.empty((n_rec, n_h))
    rec_tpos = np.empty((n_rec, n_t, 2))
    rec_assign = np.empty((n_rec, n_h), np.int64)
    rec_path = np.empty((n_rec, n_h))
    rec_hhead = np.empty((n_rec, n_h))
    rec_thead = np.empty((n_rec, n_t))
    rec_hcmd = np.zeros((n_rec, n_h, 2))
    rec_tcmd = np.zeros((n_rec, n_t, 2))
    rec_zh = np.empty((n_rec, n_h, 2))
    rec_zt = np.empty((n_rec, n_t, 2))

    assign_buf = np.full(n_h, -1, np.int64)
    drift = np.empty((n_t, 2))
    accel = np.empty((n_h, 2))
    h_vel = np.zeros((n_h, 2))  # realized velocity vector, for recording
    path = np.zeros(n_h)
    sqrt_dt = math.sqrt(dt)

    rec = 0
    status = 0
    abort_step = -1
    for k in range(n_steps + 1):
        _assign(
            code, rh_xy, rt_xy, cx, cy, anchor, leader_index, r_star,
            assign_buf, assign_buf,
        )
        recorded = -1
        if k % stride == 0:
            times[rec] = k * dt
            for j in range(n_h):
                rec_hpos[rec, j, 0] = rh_xy[j, 0]
                rec_hpos[rec, j, 1] = rh_xy[j, 1]
                rec_hvel[rec, j, 0] = h_vel[j, 0]
                rec_hvel[rec, j, 1] = h_vel[j, 1]
                rec_hang[rec, j] = rh_ang[j]
                rec_assign[rec, j] = assign_buf[j]
                rec_path[rec, j] = path[j]
                rec_hhead[rec, j] = rh_phi[j]
                rec_zh[rec, j, 0] = zh_xy[j, 0]
                rec_zh[rec, j, 1] = zh_xy[j, 1]
            for i in range(n_t):
                rec_tpos[rec, i, 0] = rt_xy[i, 0]
                rec_tpos[rec, i, 1] = rt_xy[i, 1]
                rec_thead[rec, i] = rt_phi[i]
                rec_zt[rec, i, 0] = zt_xy[i, 0]
                rec_zt[rec, i, 1] = zt_xy[i, 1]
            recorded = rec
            rec += 1
        if k == n_steps:
            break

        # Reference dynamics: target drift is evaluated at the reference
        # point against realized herder robots; herder control runs on the
        # reference's own polar state against the realized chased target.
        for i in range(n_t):
            rvx, rvy = _repulsion_at(zt_xy[i, 0], zt_xy[i, 1], rh_xy, alpha_r)
            cvx, cvy = _collision_at(i, rt_xy, r_c, collision_sign)
            drift[i, 0] = rvx + cvx
            drift[i, 1] = rvy + cvy
        for i in range(n_t):
            zt_xy[i, 0] += drift[i, 0] * dt + alpha_b * sqrt_dt * noise[k, i, 0]
            zt_xy[i, 1] += drift[i, 1] * dt + alpha_b * sqrt_dt * noise[k, i, 1]

        for j in range(n_h):
            x = zh_xy[j, 0] - cx
            y = zh_xy[j, 1] - cy
            r, _, r_dot, theta_dot = _polar_rates(x, y, zh_v[j, 0], zh_v[j, 1])
            theta = zh_ang[j]
            tgt = assign_buf[j]
            if tgt >= 0:
                px = rt_xy[tgt, 0] - cx
                py = rt_xy[tgt, 1] - cy
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
        for j in range(n_h):
            old_angle = math.atan2(zh_xy[j, 1] - cy, zh_xy[j, 0] - cx)
            zh_v[j, 0] += accel[j, 0] * dt
            zh_v[j, 1] += accel[j, 1] * dt
            zh_xy[j, 0] += zh_v[j, 0] * dt
            zh_xy[j, 1] += zh_v[j, 1] * dt
            new_angle = math.atan2(zh_xy[j, 1] - cy, zh_xy[j, 0] - cx)
            zh_ang[j] += wrap_angle(new_angle - old_angle)

        # Regulate each robot toward its updated reference.
        for j in range(n_h):
            ref_angle = math.atan2(zh_xy[j, 1] - cy, zh_xy[j, 0] - cx)
            v, omega = _regulator(
                rh_xy[j, 0], rh_xy[j, 1], rh_phi[j],
                zh_xy[j, 0], zh_xy[j, 1], ref_angle, k1, k2,
            )
            if recorded >= 0:
                rec_hcmd[recorded, j, 0] = v
                rec_hcmd[recorded, j, 1] = omega
            old_angle = math.atan2(rh_xy[j, 1] - cy, rh_xy[j, 0] - cx)
            h_vel[j, 0] = v * math.cos(rh_phi[j])
            h_vel[j, 1] = v * math.sin(rh_phi[j])
            rh_xy[j, 0] += h_vel[j, 0] * dt
            rh_xy[j, 1] += h_vel[j, 1] * dt
            rh_phi[j] += omega * dt
            new_angle = math.atan2(rh_xy[j, 1] - cy, rh_xy[j, 0] - cx)
            rh_ang[j] += wrap_angle(new_angle - old_angle)
            path[j] += abs(v) * dt
            ex = rh_xy[j, 0] - zh_xy[j, 0]
            ey = rh_xy[j, 1] - zh_xy[j, 1]
            if not (math.isfinite(rh_xy[j, 0]) and math.isfinite(rh_xy[j, 1])):
                status = 1
            elif math.sqrt(ex * ex + ey * ey) > abort_radius:
                status = 2

        for i in range(n_t):
            ref_angle = math.atan2(zt_xy[i, 1] - cy, zt_xy[i, 0] - cx)
            v, omega = _regulator(
                rt_xy[i, 0], rt_xy[i, 1], rt_phi[i],
                zt_xy[i, 0], zt_xy[i, 1], ref_angle, k1, k2,
            )
            if recorded >= 0:
                rec_tcmd[recorded, i, 0] = v
                rec_tcmd[recorded, i, 1] = omega
            rt_xy[i, 0] += v * math.cos(rt_phi[i]) * dt
            rt_xy[i, 1] += v * math.sin(rt_phi[i]) * dt
            rt_phi[i] += omega * dt
            ex = rt_xy[i, 0] - zt_xy[i, 0]
            ey = rt_xy[i, 1] - zt_xy[i, 1]
            if not (math.isfinite(rt_xy[i, 0]) and math.isfinite(rt_xy[i, 1])):
                status = 1
            elif math.sqrt(ex * ex + ey * ey) > abort_radius:
                status = 2

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
        rec_hhead[:rec],
        rec_thead[:rec],
        rec_hcmd[:rec],
        rec_tcmd[:rec],
        rec_zh[:rec],
        rec_zt[:rec],
        status,
        abort_step,
    )


def run_robot_trial(config: SimulationConfig):
    """Run one seeded robot-layer trial.

    With ``config.robot_enabled`` false this is a pass-through to
    :func:`herdsim.simulation.run_trial`.  Otherwise returns
    ``(RobotTrajectory, MetricsReport)`` with metrics computed on the
    realized robot states, and raises :class:`SimulationDiverged` if any
    robot's tracking error exceeds ten goal radii or a state turns
    non-finite.
    """
    if not config.robot_enabled:
        return run_trial(config)
    rng = trial_rng(config.seed)
    state0 = init_world(config, rng)
    n_h = config.n_herders
    n_t = config.n_targets
    arena = config.arena
    cx, cy = arena.center

    rh_xy = np.array([h.position for h in state0.herders], dtype=np.float64).reshape(
        n_h, 2
    )
    rt_xy = np.array([t.position for t in state0.targets], dtype=np.float64).reshape(
        n_t, 2
    )
    # Robots start at their reference with the regulator's equilibrium
    # heading: backward-facing, i.e. own polar angle plus pi.
    rh_phi = np.array(
        [wrap_angle(math.atan2(p[1] - cy, p[0] - cx) + math.pi) for p in rh_xy]
    )
    rt_phi = np.array(
        [wrap_angle(math.atan2(p[1] - cy, p[0] - cx) + math.pi) for p in rt_xy]
    )
    rh_ang = np.array([h.unwrapped_angle for h in state0.herders], dtype=np.float64)
    zh_xy = rh_xy.copy()
    zh_v = np.zeros((n_h, 2))
    zh_ang = rh_ang.copy()
    zt_xy = rt_xy.copy()

    noise = rng.standard_normal(size=(config.n_steps, n_t, 2))
    p = config.params
    (
        times,
        rec_hpos,
        rec_hvel,
        rec_hang,
        rec_tpos,
        rec_assign,
        rec_path,
        rec_hhead,
        rec_thead,
        rec_hcmd,
        rec_tcmd,
        rec_zh,
        rec_zt,
        status,
        abort_step,
    ) = _robot_kernel(
        rh_xy,
        rh_phi,
        rh_ang,
        rt_xy,
        rt_phi,
        zh_xy,
        zh_v,
        zh_ang,
        zt_xy,
        noise,
        config.dt,
        config.strategy.code,
        config.sector_anchor,
        config.leader_index,
        float(cx),
        float(cy),
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
        config.robot_k1,
        config.robot_k2,
        config.record_stride,
    )
    if status == 1:
        raise SimulationDiverged(
            f"non-finite robot state at step {abort_step} (seed={config.seed})"
        )
    if status == 2:
        raise SimulationDiverged(
            f"robot tracking error exceeded {TRACKING_ABORT_FACTOR} goal radii "
            f"at step {abort_step} (t={abort_step * config.dt:.6g} s, "
            f"seed={config.seed})"
        )
    base = Trajectory(
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
    traj = RobotTrajectory(
        base=base,
        herder_heading=rec_hhead,
        target_heading=rec_thead,
        herder_cmd=rec_hcmd,
        target_cmd=rec_tcmd,
        ref_herder_pos=rec_zh,
        ref_target_pos=rec_zt,
    )
    report = _metrics.trial_report(base, config)
    return traj, report


def export_robot_csv(traj: RobotTrajectory, path) -> Path:
    """Write realized robot trajectories as delimited text.

    Same schema as the plain trajectory export plus heading, v_cmd and
    omega_cmd columns (every agent is a robot here, so targets carry
    commands too).
    """
    path = Path(path)
    base = traj.base
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "t",
                "agent_kind",
                "agent_id",
                "x",
                "y",
                "vx",
                "vy",
                "chased_id",
                "heading",
                "v_cmd",
                "omega_cmd",
            ]
        )
        for k in range(base.n_samples):
            t = repr(float(base.times[k]))
            for j in range(base.n_herders):
                chased = base.assignment[k, j]
                writer.writerow(
                    [
                        t,
                        "herder",
                        j,
                        repr(float(base.herder_pos[k, j, 0])),
                        repr(float(base.herder_pos[k, j, 1])),
                        repr(float(base.herder_vel[k, j, 0])),
                        repr(float(base.herder_vel[k, j, 1])),
                        "" if chased < 0 else int(chased),
                        repr(wrap_angle(float(traj.herder_heading[k, j]))),
                        repr(float(traj.herder_cmd[k, j, 0])),
                        repr(float(traj.herder_cmd[k, j, 1])),
                    ]
                )
            for i in range(base.n_targets):
                writer.writerow(
                    [
                        t,
                        "target",
                        i,
                        repr(float(base.target_pos[k, i, 0])),
                        repr(float(base.target_pos[k, i, 1])),
                        "",
                        "",
                        "",
                        repr(wrap_angle(float(traj.target_heading[k, i]))),
                        repr(float(traj.target_cmd[k, i, 0])),
                        repr(float(traj.target_cmd[k, i, 1])),
                    ]
                )
    return path
