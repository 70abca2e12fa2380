"""Force laws of the herding model.

Targets are first-order agents driven by an inverse-square repulsion away from
every herder plus a short-range inter-target interaction; herders are unit-mass
second-order agents driven by damped elastic forces expressed in polar
coordinates about the arena centre.

Sign conventions, in one place:

* herder-on-target repulsion on target ``x`` from herder ``y`` is
  ``alpha_r * (x - y) / |x - y|**3`` (points away from the herder, equal to
  the gradient of ``-alpha_r / |x - y|``);
* the inter-target term sums ``(x' - x) / |x' - x|**3`` over neighbours
  ``x'`` within the closed ball of radius ``r_c`` and therefore points toward
  the neighbours; ``collision_sign`` flips it to a genuine repulsion when set
  to -1.  The default keeps the literal formula (+1).

All inverse-cube laws clamp distances below ``MIN_DISTANCE`` to avoid
floating-point blowup at (probability-zero) coincidences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .geometry import wrap_angle

MIN_DISTANCE = 1e-6


@dataclass(frozen=True)
class Arena:
    """Circular containment region plus the annular buffer around it."""

    center: tuple[float, float] = (0.0, 0.0)
    goal_radius: float = 1.0
    buffer_width: float = 1.0005

    def __post_init__(self):
        if not (self.goal_radius > 0.0 and self.buffer_width > 0.0):
            raise ValueError("goal_radius and buffer_width must be positive")


@dataclass(frozen=True)
class ModelParams:
    """Model coefficients.  The defaults are the standard configuration used
    throughout the experiment harness.

    ``alpha_b`` and ``alpha_r`` may be zero (noise-free / repulsion-free runs
    used by deterministic checks); the remaining coefficients must be
    strictly positive.  ``collision_sign`` selects the sign of the
    inter-target term and must be +1 or -1.
    """

    alpha_b: float = 0.05
    alpha_r: float = 1.0
    mass: float = 1.0
    b_r: float = 10.998
    eps_r: float = 98.706
    b_theta: float = 10.998
    eps_theta: float = 61.62
    r_c: float = 1e-4
    collision_sign: float = 1.0

    def __post_init__(self):
        if self.alpha_b < 0.0 or self.alpha_r < 0.0:
            raise ValueError("alpha_b and alpha_r must be non-negative")
        for name in ("mass", "b_r", "eps_r", "b_theta", "eps_theta", "r_c"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.collision_sign not in (1.0, -1.0):
            raise ValueError("collision_sign must be +1 or -1")


@dataclass
class HerderState:
    """Second-order herder state.

    ``unwrapped_angle`` is the continuous polar-angle history about the arena
    centre (congruent to the atan2 angle modulo 2*pi); it feeds the spectral
    behaviour classifier.
    """

    position: np.ndarray
    velocity: np.ndarray
    unwrapped_angle: float


@dataclass
class TargetState:
    """First-order target state (targets carry no velocity)."""

    position: np.ndarray


# --------------------------------------------------------------------------
# Scalar cores (numba-compiled, shared with the simulation kernels)
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _repulsion_at(tx, ty, herder_xy, alpha_r):
    vx = 0.0
    vy = 0.0
    for j in range(herder_xy.shape[0]):
        dx = tx - herder_xy[j, 0]
        dy = ty - herder_xy[j, 1]
        d = math.sqrt(dx * dx + dy * dy)
        if d < MIN_DISTANCE:
            d = MIN_DISTANCE
        inv3 = 1.0 / (d * d * d)
        vx += dx * inv3
        vy += dy * inv3
    return alpha_r * vx, alpha_r * vy


@njit(cache=True, nogil=True)
def _collision_at(i, target_xy, r_c, sign):
    vx = 0.0
    vy = 0.0
    xi = target_xy[i, 0]
    yi = target_xy[i, 1]
    for k in range(target_xy.shape[0]):
        if k == i:
            continue
        dx = target_xy[k, 0] - xi
        dy = target_xy[k, 1] - yi
        d = math.sqrt(dx * dx + dy * dy)
        if d <= r_c:  # closed ball
            dd = d if d >= MIN_DISTANCE else MIN_DISTANCE
            inv3 = 1.0 / (dd * dd * dd)
            vx += dx * inv3
            vy += dy * inv3
    return sign * vx, sign * vy


@njit(cache=True, nogil=True)
def _polar_rates(x, y, vx, vy):
    """Polar position and rates of a herder relative to the arena centre.

    Returns (r, theta, r_dot, theta_dot); below the singular radius the
    angle and both rates are reported as 0.
    """
    r = math.sqrt(x * x + y * y)
    if r < MIN_DISTANCE:
        return r, 0.0, 0.0, 0.0
    theta = math.atan2(y, x)
    if theta <= -math.pi:
        theta = math.pi
    r_dot = (vx * x + vy * y) / r
    theta_dot = (vy * x - vx * y) / (r * r)
    return r, theta, r_dot, theta_dot


@njit(cache=True, nogil=True)
def _control_forces(
    r,
    theta,
    r_dot,
    theta_dot,
    has_chase,
    rho,
    phi,
    b_r,
    eps_r,
    b_theta,
    eps_theta,
    r_star,
    dr_star,
):
    """Damped elastic control forces (u_r, u_theta) for one herder.

    While the chased target sits outside the containment region the radial
    anchor tracks the target radius plus the buffer width and the angular
    spring pulls toward the target angle; otherwise the herder retreats to
    the outer buffer boundary.  An unassigned herder keeps only the damping
    term on the angular axis.

    ``theta`` is the herder's continuous (unwrapped) angular coordinate and
    ``phi`` the chased target's principal-interval angle; their raw
    difference is the spring extension.  The spring is an absolute-frame
    pendulum, not a shortest-arc one: a herder that has accumulated extra
    turns is pulled back through them, which keeps the angular coordinate
    bounded instead of letting the herder circulate.
    """
    chase = 1.0 if (has_chase and rho >= r_star) else 0.0
    radial_anchor = chase * (rho + dr_star) + (1.0 - chase) * (r_star + dr_star)
    if has_chase:
        angular_error = theta - chase * phi
    else:
        angular_error = 0.0
    u_r = -b_r * r_dot - eps_r * (r - radial_anchor)
    u_theta = -b_theta * theta_dot - eps_theta * angular_error
    if r < MIN_DISTANCE:  # polar frame undefined: suppress angular terms
        u_theta = 0.0
    return u_r, u_theta


@njit(cache=True, nogil=True)
def _polar_force_to_cartesian(x, y, u_r, u_theta, mass):
    """Acceleration from polar force components at position (x, y) w.r.t. the
    arena centre; at the singular radius the radial unit vector degenerates
    to the fixed direction (1, 0)."""
    r = math.sqrt(x * x + y * y)
    if r < MIN_DISTANCE:
        return u_r / mass, 0.0
    c = x / r
    s = y / r
    return (u_r * c - u_theta * s) / mass, (u_r * s + u_theta * c) / mass


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------


def _herder_positions(herders) -> np.ndarray:
    if len(herders) == 0:
        return np.zeros((0, 2))
    return np.array([np.asarray(h.position, dtype=np.float64) for h in herders])


def _target_positions(targets) -> np.ndarray:
    if len(targets) == 0:
        return np.zeros((0, 2))
    return np.array([np.asarray(t.position, dtype=np.float64) for t in targets])


def repulsion_velocity(target: TargetState, herders, alpha_r: float) -> np.ndarray:
    """Drift velocity on one target from the summed herder repulsion."""
    pos = np.asarray(target.position, dtype=np.float64)
    vx, vy = _repulsion_at(pos[0], pos[1], _herder_positions(herders), alpha_r)
    return np.array([vx, vy])


def collision_avoidance_velocity(
    i: int, targets, r_c: float, collision_sign: float = 1.0
) -> np.ndarray:
    """Inter-target interaction on target ``i`` from neighbours within ``r_c``."""
    vx, vy = _collision_at(i, _target_positions(targets), r_c, collision_sign)
    return np.array([vx, vy])


def target_drift(i: int, targets, herders, params: ModelParams) -> np.ndarray:
    """Total deterministic drift of target ``i``: herder repulsion plus the
    inter-target term."""
    return repulsion_velocity(
        targets[i], herders, params.alpha_r
    ) + collision_avoidance_velocity(i, targets, params.r_c, params.collision_sign)


def chase_switch(rho_tilde: float, r_star: float) -> int:
    """1 while the chased target is outside the containment region
    (``rho_tilde >= r_star``, boundary included), else 0."""
    return 1 if rho_tilde >= r_star else 0


def herder_control(
    h: HerderState, chased: TargetState | None, params: ModelParams, arena: Arena
) -> tuple[float, float]:
    """Control forces (u_r, u_theta) for one herder given its chased target.

    The angular spring acts on the herder's unwrapped angular coordinate
    (see :func:`_control_forces`).  ``chased is None`` marks an unassigned
    herder: it retreats to the outer buffer boundary with angular damping
    only.
    """
    cx, cy = arena.center
    x = float(h.position[0]) - cx
    y = float(h.position[1]) - cy
    r, _, r_dot, theta_dot = _polar_rates(
        x, y, float(h.velocity[0]), float(h.velocity[1])
    )
    theta = float(h.unwrapped_angle)
    if chased is None:
        return _control_forces(
            r,
            theta,
            r_dot,
            theta_dot,
            False,
            0.0,
            0.0,
            params.b_r,
            params.eps_r,
            params.b_theta,
            params.eps_theta,
            arena.goal_radius,
            arena.buffer_width,
        )
    px = float(chased.position[0]) - cx
    py = float(chased.position[1]) - cy
    rho = math.sqrt(px * px + py * py)
    phi = math.atan2(py, px)
    return _control_forces(
        r,
        theta,
        r_dot,
        theta_dot,
        True,
        rho,
        phi,
        params.b_r,
        params.eps_r,
        params.b_theta,
        params.eps_theta,
        arena.goal_radius,
        arena.buffer_width,
    )


def herder_acceleration(
    h: HerderState,
    u_r: float,
    u_theta: float,
    center=(0.0, 0.0),
    mass: float = 1.0,
) -> np.ndarray:
    """Cartesian acceleration from polar force components.

    The radial/tangential basis is taken at the herder's polar angle about
    ``center``; the tangential unit vector is the radial one rotated by +pi/2.
    """
    x = float(h.position[0]) - center[0]
    y = float(h.position[1]) - center[1]
    ax, ay = _polar_force_to_cartesian(x, y, u_r, u_theta, mass)
    return np.array([ax, ay])
