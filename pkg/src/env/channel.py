"""Radio link model: path loss, RSRP, full-buffer SINR, PRB rate and cell load."""
import numpy as np

from .types import ChannelParams

REWARD_CAP = 100.0
MIN_LOAD_FOR_REWARD = 0.01


def path_loss(d_km, channel=None):
    """128.1 + 37.6 log10(max(d, 0.035)) in dB; d in km. Accepts scalars or arrays."""
    ch = channel or ChannelParams()
    d = np.maximum(np.asarray(d_km, dtype=float), ch.pl_min_d)
    pl = ch.pl_intercept + ch.pl_slope * np.log10(d)
    return float(pl) if pl.ndim == 0 else pl


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def rsrp(user, sbs, channel=None):
    """Received power of `sbs` at `user` in dBm (tx power - path loss + shadowing)."""
    ch = channel or ChannelParams()
    dx = user.position[0] - sbs.position[0]
    dy = user.position[1] - sbs.position[1]
    d_km = float(np.hypot(dx, dy)) / 1000.0
    shadow = user.shadowing[sbs.id] if user.shadowing else 0.0
    return sbs.tx_power - path_loss(d_km, ch) + shadow


def rsrp_matrix(user_positions, sbs_positions, tx_powers, shadowing, channel):
    """Vectorized RSRP for every (user, SBS) pair, shape (U, N), dBm."""
    diff = user_positions[:, None, :] - sbs_positions[None, :, :]
    d_km = np.sqrt(np.sum(diff * diff, axis=-1)) / 1000.0
    return tx_powers[None, :] - path_loss(d_km, channel) + shadowing


def sinr_matrix(rsrp_dbm, noise_power_dbm):
    """Linear SINR each user would see if served by each SBS, shape (U, N).

    All other SBSs transmit (full buffer) and count as interference.
    """
    rx = db_to_linear(rsrp_dbm)
    total = rx.sum(axis=1, keepdims=True)
    noise = float(db_to_linear(noise_power_dbm))
    return rx / (noise + (total - rx))


def sinr(user, scenario):
    """Linear SINR of `user` on its serving cell within `scenario`."""
    ch = scenario.channel
    rx = np.array([db_to_linear(rsrp(user, c, ch)) for c in scenario.sbs_list])
    signal = rx[user.serving_cell]
    interference = rx.sum() - signal
    return float(signal / (float(db_to_linear(ch.noise_power)) + interference))


def prb_rate(sinr_linear, bandwidth=None):
    """Shannon rate of one PRB, B log2(1 + SINR) in bits/s."""
    b = ChannelParams().prb_bandwidth if bandwidth is None else bandwidth
    rate = b * np.log2(1.0 + np.asarray(sinr_linear, dtype=float))
    return float(rate) if rate.ndim == 0 else rate


def required_prbs(demand, rate, cap):
    """min(demand / rate, cap); a zero rate needs the cap."""
    demand = np.asarray(demand, dtype=float)
    rate = np.asarray(rate, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(rate > 0, demand / np.where(rate > 0, rate, 1.0), cap)
    need = np.where(demand == 0, 0.0, np.minimum(need, cap))
    return float(need) if need.ndim == 0 else need


def cell_load(sbs, assigned_users, scenario):
    """Sum of the PRBs the users served by `sbs` require, over its PRB budget."""
    if not assigned_users:
        return 0.0
    ch = scenario.channel
    rates = np.array([prb_rate(sinr(u, scenario), ch.prb_bandwidth) for u in assigned_users])
    demands = np.array([u.demand for u in assigned_users], dtype=float)
    return float(np.sum(required_prbs(demands, rates, ch.prb_cap))) / sbs.n_prb


def loads_from_prbs(prbs, serving, n_prbs):
    """Per-SBS load vector from per-user PRB needs and associations."""
    per_cell = np.bincount(serving, weights=prbs, minlength=len(n_prbs))
    return per_cell / n_prbs


def reward(loads):
    """1 / max load, capped at 100 when the network is (nearly) empty."""
    peak = float(np.max(loads))
    if peak < MIN_LOAD_FOR_REWARD:
        return REWARD_CAP
    return 1.0 / peak
