from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import ReplayUnderflowError

REPLAY_CAPACITY = 100_000


@dataclass(eq=False)
class Transition:
    state: np.ndarray        # flattened StateVector
    action: np.ndarray       # CIO upper triangle
    reward: float
    next_state: np.ndarray


class ReplayBuffer:
    """Bounded FIFO of transitions; the oldest entry is evicted first."""

    def __init__(self, capacity=REPLAY_CAPACITY):
        if capacity < 1:
            raise ValueError("replay capacity must be >= 1")
        self.capacity = capacity
        self._items = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, idx):
        return self._items[idx]

    def append(self, transition):
        self._items.append(transition)


def sample_uniform(replay, k, rng):
    """K transitions drawn uniformly with replacement."""
    if k < 1:
        raise ValueError("batch size must be >= 1")
    if len(replay) < k:
        raise ReplayUnderflowError(f"replay holds {len(replay)} transitions, need {k}")
    idx = rng.integers(0, len(replay), size=k)
    return [replay[int(i)] for i in idx]


def stack_batch(batch):
    """(states, actions, rewards, next_states) arrays for a list of transitions."""
    states = np.stack([t.state for t in batch])
    actions = np.stack([t.action for t in batch])
    rewards = np.array([t.reward for t in batch], dtype=float)
    next_states = np.stack([t.next_state for t in batch])
    return states, actions, rewards, next_states
