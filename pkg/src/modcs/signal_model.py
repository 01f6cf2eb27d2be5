"""Piecewise-smooth sparse signal sequences with slowly changing support.

The model generates length-m signal sequences x_0, x_1, ... in which every
nonzero entry sits on a magnitude ladder r, 2r, ..., dr.  At each time step a
small batch of Sa entries enters the support at the bottom rung, existing
entries ramp up or down by one rung, and Sa entries at the bottom rung leave.
The top rung M = d*r is a holding level: entries that reach it stay until they
are picked (Sa per step) to start descending.  Support size and signal power
are exact invariants of the dynamics.

Two generators share this ladder structure and differ only in who moves:

* ``shift``  -- every entry keeps the direction it was born with; the rising
  cohort at each rung moves up one rung per step and the falling cohort moves
  down one rung per step (deterministic given the entry draws).
* ``redraw`` -- at every step each intermediate rung's 2*Sa occupants are
  re-split uniformly at random into Sa risers and Sa fallers.

All randomness is counter-based: each (seed, t, purpose) triple opens an
independent stream, so trajectories are reproducible and independent of
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

GEN_SHIFT = "shift"
GEN_REDRAW = "redraw"
GENERATORS = (GEN_SHIFT, GEN_REDRAW)

# purpose tags for the counter-based RNG streams
_TAG_SUPPORT0 = 10
_TAG_LEVELS0 = 11
_TAG_SIGNS0 = 12
_TAG_ADD = 1
_TAG_DECLINE = 2
_TAG_SIGN = 3
_TAG_SPLIT = 4


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the signal sequence model.

    m     : ambient dimension
    s0    : support size (constant over time)
    sa    : entries added / removed / moved per rung per step
    r     : rung spacing (smallest nonzero magnitude)
    d     : number of rungs; max magnitude is d*r
    generator : "shift" or "redraw"
    seed  : master seed for the trajectory
    """

    m: int
    s0: int
    sa: int
    r: float
    d: int
    generator: str = GEN_SHIFT
    seed: int = 0

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("m must be positive")
        if not (0 < self.s0 <= self.m):
            raise ValueError("need 0 < s0 <= m")
        if self.sa < 0:
            raise ValueError("sa must be >= 0")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.s0 + self.sa > self.m:
            raise ValueError("m too small: no room for new entries (need m >= s0 + sa)")
        # Every intermediate rung holds 2*sa entries and the top rung must keep
        # at least sa entries available to start descending each step.
        if self.s0 < (2 * self.d - 1) * self.sa:
            raise ValueError("s0 too small: need s0 >= (2d-1)*sa so the top rung "
                             "always has sa entries to draw from")

    @property
    def max_magnitude(self) -> float:
        return self.d * self.r

    def expected_power(self) -> float:
        """Exact squared norm of every x_t: (s0-(2d-2)sa)(dr)^2 + 2 sa r^2 Σ j^2."""
        top = self.s0 - (2 * self.d - 2) * self.sa
        ramp = sum(j * j for j in range(1, self.d))
        return (top * (self.d * self.r) ** 2) + 2 * self.sa * ramp * self.r ** 2


@dataclass(frozen=True)
class SignalModelState:
    """Trajectory state at one time index.

    level     : int array (m,); 0 = off support, j in 1..d = magnitude j*r
    sign      : int8 array (m,); +-1 on support, 0 off
    last_move : int8 array (m,); +1 entered/rose this step, -1 fell (a removed
                entry keeps level 0 and last_move -1 for this one step), 0 held.
                At t=0 the marks encode the assigned direction of travel for
                each intermediate-rung entry rather than an actual move.
    t         : time index
    """

    params: ModelParams
    level: np.ndarray
    sign: np.ndarray
    last_move: np.ndarray
    t: int


@dataclass(frozen=True)
class SparseSignal:
    """A realized signal: x (length m), its support, and its time index."""

    x: np.ndarray
    support: np.ndarray
    t: int


def _rng(params: ModelParams, t: int, tag: int, sub: int = 0):
    return np.random.default_rng((params.seed, t, tag, sub))


def init_state(params: ModelParams) -> SignalModelState:
    """Draw the t=0 state.

    The support (size s0) is uniform over the m coordinates.  Each rung
    j = 1..d-1 receives 2*sa entries, split sa rising / sa falling; the
    remaining s0-(2d-2)sa entries sit at the top rung.  Signs are iid +-1.
    """
    m, s0, sa, d = params.m, params.s0, params.sa, params.d
    support = _rng(params, 0, _TAG_SUPPORT0).choice(m, size=s0, replace=False)
    support = _rng(params, 0, _TAG_LEVELS0).permutation(support)

    level = np.zeros(m, dtype=np.int32)
    last_move = np.zeros(m, dtype=np.int8)
    pos = 0
    for j in range(1, d):
        rung = support[pos:pos + 2 * sa]
        level[rung] = j
        last_move[rung[:sa]] = 1      # rising destiny
        last_move[rung[sa:]] = -1     # falling destiny
        pos += 2 * sa
    level[support[pos:]] = d

    sign = np.zeros(m, dtype=np.int8)
    sign[support] = 2 * _rng(params, 0, _TAG_SIGNS0).integers(0, 2, size=s0) - 1
    return SignalModelState(params, level, sign, last_move, 0)


def signal(state: SignalModelState) -> SparseSignal:
    """Materialize x_t from the discrete state (x_i = sign_i * level_i * r)."""
    x = state.sign.astype(np.float64) * state.level * state.params.r
    return SparseSignal(x=x, support=np.flatnonzero(state.level), t=state.t)


def step(state: SignalModelState) -> SignalModelState:
    """Advance one time step, returning the state at t+1."""
    p = state.params
    t_new = state.t + 1
    level = state.level.copy()
    sign = state.sign.copy()
    move = np.zeros_like(state.last_move)

    if p.d == 1:
        # Degenerate ladder: pure support churn at the single magnitude.
        stable_pool = np.flatnonzero(state.level == 1)
        leaving = _rng(p, t_new, _TAG_DECLINE).choice(stable_pool, size=p.sa, replace=False)
        level[leaving] = 0
        sign[leaving] = 0
        move[leaving] = -1
    else:
        if p.generator == GEN_SHIFT:
            rising = state.last_move == 1
            falling = state.last_move == -1
            risers = np.flatnonzero(rising & (state.level >= 1) & (state.level < p.d))
            fallers = np.flatnonzero(falling & (state.level >= 1))
        else:  # redraw: re-split every intermediate rung uniformly
            risers_parts = []
            fallers_parts = []
            for j in range(1, p.d):
                rung = np.flatnonzero(state.level == j)
                up = _rng(p, t_new, _TAG_SPLIT, j).choice(rung, size=p.sa, replace=False)
                risers_parts.append(up)
                fallers_parts.append(np.setdiff1d(rung, up, assume_unique=True))
            risers = np.concatenate(risers_parts)
            fallers = np.concatenate(fallers_parts)

        # Sa of the current top-rung holders start descending.
        stable_pool = np.flatnonzero((state.level == p.d))
        if p.generator == GEN_SHIFT:
            # entries that just arrived at the top were rising last step and are
            # eligible: the pool is everyone at the top rung at time t.
            pass
        new_decliners = _rng(p, t_new, _TAG_DECLINE).choice(stable_pool, size=p.sa, replace=False)

        level[risers] += 1
        move[risers] = 1
        level[fallers] -= 1
        move[fallers] = -1
        level[new_decliners] -= 1
        move[new_decliners] = -1

        removed = np.flatnonzero((level == 0) & (state.level == 1))
        sign[removed] = 0

    # Sa fresh entries at the bottom rung, drawn from the old off-support set.
    off_pool = np.flatnonzero(state.level == 0)
    added = _rng(p, t_new, _TAG_ADD).choice(off_pool, size=p.sa, replace=False)
    level[added] = 1
    move[added] = 1
    sign[added] = 2 * _rng(p, t_new, _TAG_SIGN).integers(0, 2, size=p.sa) - 1

    return SignalModelState(p, level, sign, move, t_new)


@dataclass(frozen=True)
class CohortSets:
    """Transition sets at time t for one rung j (all plain frozensets).

    added     : entries that entered the support this step
    removed   : entries that left the support this step
    increased : entries that rose into rung j this step (empty at t=0 top rung)
    decreased : entries that fell into rung j-1 this step
    small     : entries with 0 < |x_t| < j*r
    """

    added: frozenset
    removed: frozenset
    increased: frozenset
    decreased: frozenset
    small: frozenset


def cohort_sets(state: SignalModelState, j: int) -> CohortSets:
    """Return (added, removed, rose-into-j, fell-into-(j-1), below-j) sets at time t.

    Valid for 1 <= j <= d.  At t=0 the "increased"/"decreased" sets report the
    seeded direction-of-travel marks (see init_state).
    """
    p = state.params
    if not (1 <= j <= p.d):
        raise ValueError(f"rung index j={j} outside 1..{p.d}")
    lvl, mv = state.level, state.last_move
    added = np.flatnonzero((lvl == 1) & (mv == 1))
    removed = np.flatnonzero((lvl == 0) & (mv == -1))
    increased = np.flatnonzero((lvl == j) & (mv == 1))
    decreased = np.flatnonzero((lvl == j - 1) & (mv == -1)) if j >= 2 else removed
    small = np.flatnonzero((lvl > 0) & (lvl < j))
    return CohortSets(
        added=frozenset(added.tolist()),
        removed=frozenset(removed.tolist()),
        increased=frozenset(increased.tolist()),
        decreased=frozenset(decreased.tolist()),
        small=frozenset(small.tolist()),
    )


def iterate_signals(params: ModelParams, horizon: int) -> Iterator[SparseSignal]:
    """Yield x_0, ..., x_horizon (horizon+1 signals)."""
    state = init_state(params)
    yield signal(state)
    for _ in range(horizon):
        state = step(state)
        yield signal(state)
