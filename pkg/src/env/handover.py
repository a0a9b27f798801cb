import numpy as np

from .channel import prb_rate, required_prbs
from .types import HandoverEvent, HandoverOutcome


def a3_margins(rsrp_dbm, serving, offsets):
    """F_j - F_i - O_ij for every user (serving i) and candidate j; -inf on the serving cell."""
    users = np.arange(len(serving))
    margin = rsrp_dbm - rsrp_dbm[users, serving][:, None] - offsets[serving, :]
    margin[users, serving] = -np.inf
    return margin


def evaluate_handovers(state, cio, channel):
    """Run the A3 trigger plus admission control over every user.

    Users are processed in ascending id order. A user whose best neighbor j
    satisfies F_j - F_i > O_ij + Hys attempts a handover; it is BLOCKED when the
    target's load (updated as earlier attempts get admitted) exceeds the
    admission threshold. The state is not modified.
    """
    cio.validate()
    if state.n_users == 0:
        return []

    margin = a3_margins(state.rsrp, state.serving, cio.offsets)
    triggered = np.flatnonzero(np.any(margin > channel.hysteresis, axis=1))
    if triggered.size == 0:
        return []

    rates = prb_rate(state.sinr_all[triggered], channel.prb_bandwidth)
    contrib = required_prbs(state.demands[triggered][:, None], rates, channel.prb_cap)
    contrib = np.atleast_2d(contrib) / state.scenario.n_prbs[None, :]

    loads = state.loads.copy()
    events = []
    for row, u in enumerate(triggered):
        i = int(state.serving[u])
        j = int(np.argmax(margin[u]))  # first maximum -> lower SBS id on ties
        if loads[j] > channel.admission_threshold:
            events.append(HandoverEvent(int(u), i, j, HandoverOutcome.BLOCKED))
            continue
        loads[j] += contrib[row, j]
        loads[i] -= contrib[row, i]
        events.append(HandoverEvent(int(u), i, j, HandoverOutcome.SUCCESS))
    return events
