"""Target-selection strategies.

Each strategy maps the current herder/target configuration to an assignment
telling every herder which target to chase (or none).  Four strategies are
available:

* ``global``: herders claim, in ascending index order, the farthest target
  from the arena centre not currently claimed by any other herder;
* ``static``: the plane is split once into fixed circular sectors of width
  2*pi/N_H and each herder takes the farthest target inside its own sector;
* ``leader_follower``: sectors of constant width 2*pi/N_H rotate rigidly with
  the leader's current angular position;
* ``peer_to_peer``: each herder owns the sector reaching halfway to its
  angular neighbours on either side, so widths change as herders move.

Sector membership uses half-open intervals (lo, lo + width]; ties on the
farthest distance go to the lowest target index.

Selection is re-run every integration step with escort hysteresis: a herder
that is chasing a target keeps it while that target stays outside the goal
disc and stays eligible (inside the herder's sector, or unclaimed for the
global strategy).  Only then does the herder re-select the farthest eligible
target.  Without the hysteresis, herders oscillate between near-tied targets
many times per second and push none of them; with it, every chase runs to
containment.  Passing ``previous=None`` gives the stateless cold-start
selection.  Assignments are a pure function of (positions, previous
assignment, strategy, labels, anchor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._jit import njit
from .dynamics import Arena
from .geometry import TWO_PI, sector_contains


class StrategyKind(Enum):
    """The four target-selection strategies."""

    GLOBAL = "global"
    STATIC_PARTITION = "static"
    LEADER_FOLLOWER = "leader_follower"
    PEER_TO_PEER = "peer_to_peer"

    @property
    def code(self) -> int:
        return _STRATEGY_CODES[self]


_STRATEGY_CODES = {
    StrategyKind.GLOBAL: 0,
    StrategyKind.STATIC_PARTITION: 1,
    StrategyKind.LEADER_FOLLOWER: 2,
    StrategyKind.PEER_TO_PEER: 3,
}


@dataclass(frozen=True)
class Assignment:
    """Per-herder chased-target indices (``None`` marks an idle herder).

    No two herders ever chase the same target.
    """

    chased: tuple[int | None, ...]

    def __post_init__(self):
        picked = [i for i in self.chased if i is not None]
        if len(picked) != len(set(picked)):
            raise ValueError("assignment is not injective")

    def __len__(self) -> int:
        return len(self.chased)


@njit(cache=True, nogil=True)
def _assign(code, herder_xy, target_xy, cx, cy, anchor, leader_index, r_star, prev, out):
    """Fill ``out`` (int64, one slot per herder) with chased target indices,
    -1 for unassigned.

    ``prev`` holds the previous step's assignment (-1 entries for none) and
    drives the escort hysteresis; ``prev`` and ``out`` may alias.  ``code``
    follows StrategyKind.code.
    """
    n_h = herder_xy.shape[0]
    n_t = target_xy.shape[0]
    dist = np.empty(n_t)
    ang = np.empty(n_t)
    for i in range(n_t):
        dx = target_xy[i, 0] - cx
        dy = target_xy[i, 1] - cy
        dist[i] = math.sqrt(dx * dx + dy * dy)
        ang[i] = math.atan2(dy, dx)

    if code == 0:  # global: claims are exclusive and persist through a chase
        taken = np.zeros(n_t, np.bool_)
        for j in range(n_h):
            if 0 <= prev[j] < n_t:
                taken[prev[j]] = True
        for j in range(n_h):
            incumbent = prev[j] if 0 <= prev[j] < n_t else -1
            if incumbent >= 0 and dist[incumbent] >= r_star:
                out[j] = incumbent  # escort still in progress
                continue
            if incumbent >= 0:
                taken[incumbent] = False
            best = -1
            best_d = -1.0
            for i in range(n_t):
                if not taken[i] and dist[i] > best_d:
                    best_d = dist[i]
                    best = i
            if best >= 0:
                taken[best] = True
            out[j] = best
        return

    h_ang = np.empty(n_h)
    for j in range(n_h):
        h_ang[j] = math.atan2(herder_xy[j, 1] - cy, herder_xy[j, 0] - cx)
    width = TWO_PI / n_h
    for j in range(n_h):
        if code == 1:  # static partition anchored at trial start
            lo = anchor + j * width
            w = width
        elif code == 2:  # leader-follower: sectors ride on the leader angle
            offset = ((j - leader_index) % n_h) * width
            lo = h_ang[leader_index] - 0.5 * width + offset
            w = width
        else:  # peer-to-peer: halfway to each angular neighbour
            if n_h == 1:
                lo = h_ang[j]
                w = TWO_PI
            else:
                nxt = (j + 1) % n_h
                prv = (j + n_h - 1) % n_h
                gap_plus = (h_ang[nxt] - h_ang[j]) % TWO_PI
                gap_minus = (h_ang[j] - h_ang[prv]) % TWO_PI
                lo = h_ang[j] - 0.5 * gap_minus
                w = 0.5 * (gap_minus + gap_plus)
        incumbent = prev[j] if 0 <= prev[j] < n_t else -1
        if (
            incumbent >= 0
            and dist[incumbent] >= r_star
            and sector_contains(ang[incumbent], lo, w)
        ):
            out[j] = incumbent  # escort still in progress within own sector
            continue
        best = -1
        best_d = -1.0
        for i in range(n_t):
            if sector_contains(ang[i], lo, w) and dist[i] > best_d:
                best_d = dist[i]
                best = i
        out[j] = best


def _run(
    code, herders, targets, arena, anchor=-math.pi, leader_index=0, previous=None
) -> Assignment:
    herder_xy = np.array(
        [np.asarray(h.position, dtype=np.float64) for h in herders]
    ).reshape(len(herders), 2)
    target_xy = np.array(
        [np.asarray(t.position, dtype=np.float64) for t in targets]
    ).reshape(len(targets), 2)
    prev = np.full(len(herders), -1, dtype=np.int64)
    if previous is not None:
        for j, idx in enumerate(previous.chased):
            if idx is not None:
                prev[j] = idx
    out = np.empty(len(herders), dtype=np.int64)
    _assign(
        code,
        herder_xy,
        target_xy,
        float(arena.center[0]),
        float(arena.center[1]),
        float(anchor),
        leader_index,
        float(arena.goal_radius),
        prev,
        out,
    )
    return Assignment(tuple(None if i < 0 else int(i) for i in out))


def select_global(
    herders, targets, arena: Arena, previous: Assignment | None = None
) -> Assignment:
    """Ascending-index herders claim the farthest target not claimed by any
    other herder; a claim persists while its target stays outside the goal."""
    return _run(0, herders, targets, arena, previous=previous)


def select_static(
    herders,
    targets,
    arena: Arena,
    sector_anchor: float = -math.pi,
    previous: Assignment | None = None,
) -> Assignment:
    """Fixed sectors (anchor + (j)*2pi/N_H, anchor + (j+1)*2pi/N_H] per herder."""
    return _run(1, herders, targets, arena, anchor=sector_anchor, previous=previous)


def select_leader_follower(
    herders,
    targets,
    arena: Arena,
    leader_index: int = 0,
    previous: Assignment | None = None,
) -> Assignment:
    """Constant-width sectors centred on the leader's current angle; follower
    ``j`` gets the leader window shifted by 2*pi*(j - leader)/N_H."""
    return _run(2, herders, targets, arena, leader_index=leader_index, previous=previous)


def select_peer_to_peer(
    herders, targets, arena: Arena, previous: Assignment | None = None
) -> Assignment:
    """Each herder owns (theta_j - gap_minus/2, theta_j + gap_plus/2], where
    the gaps are the angular distances to its label neighbours."""
    return _run(3, herders, targets, arena, previous=previous)


def reassign(
    state,
    strategy: StrategyKind,
    arena: Arena,
    sector_anchor: float = -math.pi,
    leader_index: int = 0,
) -> Assignment:
    """Run the configured strategy on a world state snapshot, carrying the
    state's current assignment through the escort hysteresis."""
    return _run(
        strategy.code,
        state.herders,
        state.targets,
        arena,
        anchor=sector_anchor,
        leader_index=leader_index,
        previous=state.assignment,
    )
