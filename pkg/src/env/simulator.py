from dataclasses import dataclass
import math

import numpy as np

from ..errors import InvalidActionError
from .channel import loads_from_prbs, prb_rate, required_prbs, reward, rsrp_matrix, sinr_matrix
from .handover import evaluate_handovers
from .types import CioMatrix, HandoverOutcome, StateVector, StepMetrics

HEADING_RESAMPLE_PROB = 0.2
TIME_STEP_S = 1.0


@dataclass(eq=False)
class NetworkState:
    """Mutable per-step state of one simulation replica. Owned by a single worker."""
    scenario: object
    positions: np.ndarray
    speeds: np.ndarray
    headings: np.ndarray
    demands: np.ndarray
    serving: np.ndarray
    cio: CioMatrix
    rng: np.random.Generator
    t: int = 0
    rsrp: np.ndarray = None
    sinr_all: np.ndarray = None
    loads: np.ndarray = None

    @classmethod
    def initial(cls, scenario, replica=0):
        """Fresh state at t=0; `replica` selects an independent mobility stream."""
        users = scenario.users
        state = cls(
            scenario=scenario,
            positions=np.array([u.position for u in users], dtype=float).reshape(-1, 2),
            speeds=np.array([u.speed for u in users], dtype=float),
            headings=np.array([u.heading for u in users], dtype=float),
            demands=np.array([u.demand for u in users], dtype=float),
            serving=np.array([u.serving_cell for u in users], dtype=int),
            cio=CioMatrix.zeros(scenario.n_sbs),
            rng=np.random.default_rng((scenario.seed, replica)),
        )
        state.refresh_channel()
        state.refresh_loads()
        return state

    @property
    def n_users(self):
        return len(self.serving)

    def refresh_channel(self):
        sc = self.scenario
        self.rsrp = rsrp_matrix(self.positions, sc.sbs_positions, sc.tx_powers, sc.shadowing, sc.channel)
        self.sinr_all = sinr_matrix(self.rsrp, sc.channel.noise_power)

    def refresh_loads(self):
        ch = self.scenario.channel
        users = np.arange(self.n_users)
        rates = prb_rate(self.sinr_all[users, self.serving], ch.prb_bandwidth)
        prbs = np.atleast_1d(required_prbs(self.demands, rates, ch.prb_cap))
        self.loads = loads_from_prbs(prbs, self.serving, self.scenario.n_prbs)


def move_users(state, dt=TIME_STEP_S, resample_prob=HEADING_RESAMPLE_PROB):
    """Random walk with heading re-sampling and reflection at the area boundary."""
    n = state.n_users
    # always draw so the RNG stream does not depend on dt
    resample = state.rng.random(n) < resample_prob
    fresh = state.rng.uniform(0.0, 2 * math.pi, size=n)
    if n == 0 or dt == 0:
        return
    state.headings = np.where(resample, fresh, state.headings)

    side = state.scenario.area_side
    x = state.positions[:, 0] + state.speeds * np.cos(state.headings) * dt
    y = state.positions[:, 1] + state.speeds * np.sin(state.headings) * dt
    h = state.headings

    low, high = x < 0, x > side
    x = np.where(low, -x, np.where(high, 2 * side - x, x))
    h = np.where(low | high, math.pi - h, h)
    low, high = y < 0, y > side
    y = np.where(low, -y, np.where(high, 2 * side - y, y))
    h = np.where(low | high, -h, h)

    state.positions = np.column_stack([np.clip(x, 0, side), np.clip(y, 0, side)])
    state.headings = np.mod(h, 2 * math.pi)


def step(state, action, dt=TIME_STEP_S, resample_prob=HEADING_RESAMPLE_PROB):
    """Advance one time step: mobility -> channel -> handovers -> loads.

    Returns the (same, advanced) state, the 1/max-load reward and the step metrics.
    """
    if not isinstance(action, CioMatrix):
        raise InvalidActionError(f"Action must be a CioMatrix, got {type(action).__name__}")
    if action.n != state.scenario.n_sbs:
        raise InvalidActionError(f"Action is {action.n}x{action.n}, network has {state.scenario.n_sbs} SBSs")
    action.validate()
    state.cio = action

    move_users(state, dt, resample_prob)
    state.refresh_channel()
    state.refresh_loads()

    events = evaluate_handovers(state, action, state.scenario.channel)
    n_ok = 0
    for ev in events:
        if ev.outcome is HandoverOutcome.SUCCESS:
            state.serving[ev.user_id] = ev.target
            n_ok += 1
    if n_ok:
        state.refresh_loads()

    state.t += 1
    r = reward(state.loads)
    metrics = StepMetrics(step=state.t, reward=r, loads=state.loads.copy(),
                          ho_success=n_ok, ho_fail=len(events) - n_ok)
    return state, r, metrics


def observe_state(state, cluster):
    """Centered cluster loads and per-SBS edge-user fractions."""
    ids = np.asarray(cluster, dtype=int)
    if ids.size == 0:
        raise ValueError("cluster must be non-empty")
    loads = state.loads[ids]
    centered = loads - loads.mean()

    edge = np.zeros(len(ids))
    if state.n_users and state.scenario.n_sbs > 1:
        users = np.arange(state.n_users)
        serving_rsrp = state.rsrp[users, state.serving]
        others = state.rsrp.copy()
        others[users, state.serving] = -np.inf
        is_edge = (serving_rsrp - others.max(axis=1)) < state.scenario.channel.edge_gap_db
        for k, i in enumerate(ids):
            mine = state.serving == i
            count = int(mine.sum())
            edge[k] = is_edge[mine].sum() / count if count else 0.0
    return StateVector(centered_loads=centered, edge_fractions=edge)


class UdnEnvironment:
    """One simulation replica of a scenario; stepped by exactly one owner."""

    def __init__(self, scenario, replica=0, dt=TIME_STEP_S, resample_prob=HEADING_RESAMPLE_PROB):
        self.scenario = scenario
        self.replica = replica
        self.dt = dt
        self.resample_prob = resample_prob
        self.state = NetworkState.initial(scenario, replica)

    @property
    def n_sbs(self):
        return self.scenario.n_sbs

    @property
    def loads(self):
        return self.state.loads

    def reset(self):
        self.state = NetworkState.initial(self.scenario, self.replica)
        return self.state

    def step(self, action):
        return step(self.state, action, self.dt, self.resample_prob)

    def observe(self, cluster):
        return observe_state(self.state, cluster)

    def cluster_reward(self, cluster):
        return reward(self.state.loads[np.asarray(cluster, dtype=int)])
