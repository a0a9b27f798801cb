import numpy as np

from ..baselines import Q_NEIGHBORS, QTable, nearest_neighbors, q_state, qlearning_act, qlearning_update
from .base import MlbStrategy

QL_STREAM = 303


class QLearningStrategy(MlbStrategy):
    """Tabular Q-learning on the links of the most overloaded SBS; learns online every step."""

    name = "qlearning"
    learns = True

    def __init__(self, epsilon=None):
        self.epsilon = epsilon
        self.table = None
        self._neighbors = None
        self._rng = None
        self._last = None

    def _setup(self, env):
        self._neighbors = nearest_neighbors(env.scenario.sbs_positions, Q_NEIGHBORS)
        k = len(self._neighbors[0]) if self._neighbors else 0
        self.table = QTable(n_actions=3 ** k)
        if self.epsilon is not None:
            self.table.epsilon = self.epsilon
        self._rng = np.random.default_rng((env.scenario.seed, QL_STREAM))

    def act(self, env):
        if self.table is None:
            self._setup(env)
        if env.n_sbs < 2:
            self._last = None
            return env.state.cio
        cio, s, a = qlearning_act(self.table, env.loads, env.state.cio, self._neighbors, self._rng)
        self._last = (s, a)
        return cio

    def observe(self, env, reward, metrics):
        if self._last is None:
            return
        s, a = self._last
        qlearning_update(self.table, s, a, reward, q_state(env.loads, self._neighbors))
