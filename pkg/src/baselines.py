"""Comparison MLB rules: static/adaptive step CIO tuning, tabular Q-learning and noMLB."""
from dataclasses import dataclass, field
import itertools

import numpy as np

from .env.types import CioMatrix

DEAD_ZONE = 0.1
STATIC_STEP_DB = 1.0
ADAPTIVE_GAIN = 10.0
ADAPTIVE_STEP_RANGE = (0.5, 3.0)
LOAD_BIN = 0.1
Q_NEIGHBORS = 6
Q_ALPHA = 0.5
Q_GAMMA = 0.99
Q_EPSILON = 0.1
Q_STEPS_DB = (-1.0, 0.0, 1.0)


def nearest_neighbors(positions, k=Q_NEIGHBORS):
    """k nearest SBSs of every SBS (by distance, ties -> lower id)."""
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    d2 = np.sum((positions[:, None, :] - positions[None, :, :]) ** 2, axis=-1)
    neighbors = {}
    for i in range(n):
        order = [j for j in np.lexsort((np.arange(n), d2[i])) if j != i]
        neighbors[i] = [int(j) for j in order[:k]]
    return neighbors


def neighbor_pairs(neighbors):
    """Symmetrized neighbor relation as sorted (i, j) pairs with i < j."""
    pairs = set()
    for i, js in neighbors.items():
        for j in js:
            pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


def all_pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _apply_rule(loads, cio, pairs, step_for):
    loads = np.asarray(loads, dtype=float)
    m = cio.offsets.copy()
    # every ordered pair (i, j) of neighbors in lexicographic order
    ordered = sorted({(i, j) for a, b in pairs for i, j in ((a, b), (b, a))})
    for i, j in ordered:
        diff = loads[i] - loads[j]
        if diff > DEAD_ZONE:
            v = float(np.clip(m[i, j] - step_for(diff), cio.o_min, cio.o_max))
            m[i, j] = v
            m[j, i] = -v
    return CioMatrix(m, cio.o_min, cio.o_max)


def rule_static(loads, cio, neighbors):
    """Lower O_ij by a fixed 1 dB wherever SBS i is more than 0.1 above neighbor j."""
    return _apply_rule(loads, cio, neighbors, lambda diff: STATIC_STEP_DB)


def adaptive_step(diff):
    low, high = ADAPTIVE_STEP_RANGE
    return float(np.clip(ADAPTIVE_GAIN * diff, low, high))


def rule_adaptive(loads, cio, neighbors):
    """Like rule_static, with a step proportional to the load gap (clamped to [0.5, 3] dB)."""
    return _apply_rule(loads, cio, neighbors, adaptive_step)


def no_mlb(cio):
    return CioMatrix.zeros(cio.n, cio.o_min, cio.o_max)


def load_bin(load):
    return int(np.floor(load / LOAD_BIN))


@dataclass
class QTable:
    """Q-values keyed by discretized state; unseen entries read as 0."""
    n_actions: int
    alpha: float = Q_ALPHA
    gamma: float = Q_GAMMA
    epsilon: float = Q_EPSILON
    values: dict = field(default_factory=dict)

    def row(self, state):
        return self.values.get(state, np.zeros(self.n_actions))

    def get(self, state, action):
        return float(self.row(state)[action])


def q_actions(n_links):
    """Joint {-1, 0, +1} dB step per neighbor link, in itertools.product order."""
    return list(itertools.product(Q_STEPS_DB, repeat=n_links))


def q_state(loads, neighbors):
    """(most overloaded SBS, its load bin, binned loads of its neighbors)."""
    loads = np.asarray(loads, dtype=float)
    hot = int(np.argmax(loads))
    return (hot, load_bin(loads[hot]), tuple(load_bin(loads[j]) for j in neighbors[hot]))


def qlearning_act(table, loads, cio, neighbors, rng):
    """epsilon-greedy CIO tweak on the links of the most overloaded SBS.

    Returns (new CioMatrix, state key, action index).
    """
    state = q_state(loads, neighbors)
    hot = state[0]
    links = neighbors[hot]
    actions = q_actions(len(links))
    if rng.random() < table.epsilon:
        a = int(rng.integers(len(actions)))
    else:
        a = int(np.argmax(table.row(state)[:len(actions)]))   # first maximum on ties
    m = cio.offsets.copy()
    for j, delta in zip(links, actions[a]):
        v = float(np.clip(m[hot, j] + delta, cio.o_min, cio.o_max))
        m[hot, j] = v
        m[j, hot] = -v
    return CioMatrix(m, cio.o_min, cio.o_max), state, a


def qlearning_update(table, s, a, r, s_next, terminal=False):
    """Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); other entries untouched."""
    if not np.isfinite(r):
        raise ValueError("reward must be finite")
    future = 0.0 if terminal else float(np.max(table.row(s_next)))
    row = table.row(s).copy()
    row[a] += table.alpha * (r + table.gamma * future - row[a])
    table.values[s] = row
    return row[a]
