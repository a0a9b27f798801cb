from types import SimpleNamespace

import numpy as np
import pytest

from src.agent.trainer import TrainingSettings
from src.env import generate_scenario


@pytest.fixture
def small_scenario():
    return generate_scenario(seed=7, n_sbs=4, n_users=30, area_side=200.0, demand=112_000.0)


@pytest.fixture
def tiny_settings():
    """Learner settings small enough for unit tests."""
    return TrainingSettings(hidden=(16, 16), batch_size=4, replay_capacity=500)


def _fake_state(rsrp, serving, loads, demand=112_000.0, sinr=1.0, n_prb=50.0):
    rsrp = np.asarray(rsrp, dtype=float)
    n_users, n_sbs = rsrp.shape
    return SimpleNamespace(
        n_users=n_users,
        rsrp=rsrp,
        serving=np.asarray(serving, dtype=int),
        sinr_all=np.full((n_users, n_sbs), sinr),
        demands=np.full(n_users, demand),
        loads=np.asarray(loads, dtype=float),
        scenario=SimpleNamespace(n_prbs=np.full(n_sbs, n_prb)),
    )


@pytest.fixture
def make_state():
    """Factory for a minimal NetworkState stand-in with hand-picked RSRPs."""
    return _fake_state

