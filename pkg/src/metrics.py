"""Per-step metric series and the summary statistics reported for every controller."""
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

MOVING_AVERAGE_WINDOW = 200

STEP_COLUMNS = ["step", "reward", "max_load", "ho_success", "ho_fail", "load_std"]


@dataclass
class MetricsSeries:
    rewards: list = field(default_factory=list)
    loads: list = field(default_factory=list)        # one per-SBS load vector per step
    ho_success: list = field(default_factory=list)
    ho_fail: list = field(default_factory=list)

    def __len__(self):
        return len(self.rewards)

    def record(self, metrics):
        """Append one StepMetrics."""
        self.rewards.append(float(metrics.reward))
        self.loads.append(np.asarray(metrics.loads, dtype=float).copy())
        self.ho_success.append(int(metrics.ho_success))
        self.ho_fail.append(int(metrics.ho_fail))

    def load_matrix(self):
        return np.vstack(self.loads) if self.loads else np.zeros((0, 0))

    def to_frame(self, start_step=1):
        loads = self.load_matrix()
        n = len(self)
        return pd.DataFrame({
            "step": np.arange(start_step, start_step + n),
            "reward": np.asarray(self.rewards, dtype=float),
            "max_load": loads.max(axis=1) if n else np.zeros(0),
            "ho_success": np.asarray(self.ho_success, dtype=int),
            "ho_fail": np.asarray(self.ho_fail, dtype=int),
            "load_std": loads.std(axis=1) if n else np.zeros(0),
        }, columns=STEP_COLUMNS)


def moving_average(series, window=MOVING_AVERAGE_WINDOW):
    """Trailing mean over `window` values; the first window-1 points average the available prefix."""
    if window < 1:
        raise ValueError("window must be >= 1")
    values = pd.Series(series, dtype=float)
    if values.empty:
        raise ValueError("cannot smooth an empty series")
    return values.rolling(window, min_periods=1).mean().to_numpy()


def hfr(metrics):
    """Blocked handover attempts over all attempts; 0 when nothing was attempted."""
    fail = int(np.sum(metrics.ho_fail))
    total = fail + int(np.sum(metrics.ho_success))
    return fail / total if total else 0.0


def load_std(loads):
    """Population std-dev across SBSs, averaged over time. Accepts one vector or a (T, N) matrix."""
    loads = np.atleast_2d(np.asarray(loads, dtype=float))
    if loads.shape[1] < 1:
        raise ValueError("need at least one SBS")
    return float(np.mean(loads.std(axis=1)))


def normalized_gain(rewards, baseline):
    """Relative improvement of the mean reward over the baseline's mean reward."""
    rewards = np.asarray(rewards, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    if rewards.shape != baseline.shape:
        raise ValueError(f"mismatched horizons: {rewards.shape} vs {baseline.shape}")
    base = baseline.mean()
    return float((rewards.mean() - base) / base)


def summarize(frame):
    """Summary row computed from a per-step frame (the same numbers the step CSV yields)."""
    attempts = frame["ho_success"].sum() + frame["ho_fail"].sum()
    return {
        "steps": int(len(frame)),
        "mean_reward": float(frame["reward"].mean()),
        "mean_max_load": float(frame["max_load"].mean()),
        "hfr": float(frame["ho_fail"].sum() / attempts) if attempts else 0.0,
        "load_std": float(frame["load_std"].mean()),
        "ho_success": int(frame["ho_success"].sum()),
        "ho_fail": int(frame["ho_fail"].sum()),
    }
