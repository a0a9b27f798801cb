from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
import math

import numpy as np

from ..errors import InvalidActionError, ScenarioError

# LTE-like 10 MHz carrier
PRB_BANDWIDTH_HZ = 180_000.0
# Shannon-rate bandwidth per PRB after overheads; puts noMLB on the default
# 12-SBS / 200-user / 112 kbps layout at a peak load of about 0.74
EFFECTIVE_PRB_BANDWIDTH_HZ = 75_000.0
THERMAL_NOISE_DBM_HZ = -174.0
DEFAULT_N_PRB = 50
DEFAULT_TX_POWER_DBM = 46.0
CIO_MIN_DB = -6.0
CIO_MAX_DB = 6.0


@dataclass(frozen=True)
class ChannelParams:
    pl_intercept: float = 128.1      # dB
    pl_slope: float = 37.6           # dB per decade (km)
    pl_min_d: float = 0.035          # km
    shadow_sigma: float = 8.0        # dB
    noise_power: float = THERMAL_NOISE_DBM_HZ + 10 * math.log10(PRB_BANDWIDTH_HZ)  # dBm per PRB
    prb_bandwidth: float = EFFECTIVE_PRB_BANDWIDTH_HZ
    hysteresis: float = 3.0          # dB
    prb_cap: float = 25.0            # N_c
    admission_threshold: float = 0.8
    edge_gap_db: float = 6.0

    def __post_init__(self):
        for name in ("pl_min_d", "prb_bandwidth", "hysteresis", "prb_cap", "admission_threshold"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"ChannelParams.{name} must be positive")
        if self.shadow_sigma < 0:
            raise ScenarioError("ChannelParams.shadow_sigma must be >= 0")


@dataclass(frozen=True)
class SmallCell:
    id: int
    position: tuple
    tx_power: float = DEFAULT_TX_POWER_DBM
    n_prb: int = DEFAULT_N_PRB
    load: float = 0.0

    def __post_init__(self):
        if self.n_prb <= 0:
            raise ScenarioError(f"SBS {self.id}: n_prb must be > 0")
        if not math.isfinite(self.tx_power):
            raise ScenarioError(f"SBS {self.id}: tx_power must be finite")
        if self.load < 0:
            raise ScenarioError(f"SBS {self.id}: load must be >= 0")


@dataclass(frozen=True)
class User:
    id: int
    position: tuple
    speed: float
    heading: float
    demand: float
    serving_cell: int
    shadowing: tuple = ()   # dB, one entry per SBS

    def __post_init__(self):
        if not 1.0 <= self.speed <= 10.0:
            raise ScenarioError(f"User {self.id}: speed {self.speed} outside [1, 10] m/s")


@dataclass(frozen=True)
class Scenario:
    """Immutable network geometry plus the RNG seed it was drawn from."""
    sbs_list: tuple
    users: tuple
    area_side: float
    channel: ChannelParams = field(default_factory=ChannelParams)
    seed: int = 0

    def __post_init__(self):
        if not self.sbs_list:
            raise ScenarioError("Scenario needs at least one SBS")
        ids = [c.id for c in self.sbs_list]
        if len(set(ids)) != len(ids):
            raise ScenarioError("SBS ids must be unique")
        if ids != list(range(len(ids))):
            raise ScenarioError("SBS ids must be 0..N-1 in order")
        for item in (*self.sbs_list, *self.users):
            x, y = item.position
            if not (0 <= x <= self.area_side and 0 <= y <= self.area_side):
                raise ScenarioError(f"{type(item).__name__} {item.id} lies outside the area")
        for u in self.users:
            if not 0 <= u.serving_cell < len(self.sbs_list):
                raise ScenarioError(f"User {u.id} serves from unknown SBS {u.serving_cell}")
            if len(u.shadowing) != len(self.sbs_list):
                raise ScenarioError(f"User {u.id} shadowing vector has wrong length")

    @property
    def n_sbs(self):
        return len(self.sbs_list)

    @property
    def n_users(self):
        return len(self.users)

    @cached_property
    def sbs_positions(self):
        return np.array([c.position for c in self.sbs_list], dtype=float).reshape(-1, 2)

    @cached_property
    def tx_powers(self):
        return np.array([c.tx_power for c in self.sbs_list], dtype=float)

    @cached_property
    def n_prbs(self):
        return np.array([c.n_prb for c in self.sbs_list], dtype=float)

    @cached_property
    def shadowing(self):
        return np.array([u.shadowing for u in self.users], dtype=float).reshape(-1, self.n_sbs)


class CioMatrix:
    """Antisymmetric matrix of cell individual offsets O_ij in dB."""

    def __init__(self, offsets, o_min=CIO_MIN_DB, o_max=CIO_MAX_DB, validate=True):
        self.offsets = np.array(offsets, dtype=float)
        self.o_min = float(o_min)
        self.o_max = float(o_max)
        if validate:
            self.validate()

    @classmethod
    def zeros(cls, n, o_min=CIO_MIN_DB, o_max=CIO_MAX_DB):
        return cls(np.zeros((n, n)), o_min, o_max)

    @classmethod
    def from_upper(cls, values, n, o_min=CIO_MIN_DB, o_max=CIO_MAX_DB):
        """Rebuild the full matrix from its strict upper triangle (row-major)."""
        values = np.asarray(values, dtype=float)
        if values.shape != (n * (n - 1) // 2,):
            raise InvalidActionError(
                f"Expected {n * (n - 1) // 2} upper-triangle values for {n} cells, got {values.shape}")
        upper = np.zeros((n, n))
        upper[np.triu_indices(n, 1)] = np.clip(values, o_min, o_max)
        return cls(upper - upper.T, o_min, o_max)

    @classmethod
    def compose(cls, n, blocks, o_min=CIO_MIN_DB, o_max=CIO_MAX_DB):
        """Embed per-cluster matrices into an n x n matrix; inter-cluster offsets stay 0."""
        full = np.zeros((n, n))
        for ids, block in blocks:
            idx = np.asarray(ids, dtype=int)
            full[np.ix_(idx, idx)] = block.offsets
        return cls(full, o_min, o_max)

    @property
    def n(self):
        return self.offsets.shape[0]

    @property
    def bounds(self):
        return self.o_min, self.o_max

    def upper(self):
        return self.offsets[np.triu_indices(self.n, 1)].copy()

    def submatrix(self, ids):
        idx = np.asarray(ids, dtype=int)
        return CioMatrix(self.offsets[np.ix_(idx, idx)], self.o_min, self.o_max)

    def with_offset(self, i, j, value):
        """Set O_ij (clamped) and O_ji = -O_ij."""
        m = self.offsets.copy()
        v = float(np.clip(value, self.o_min, self.o_max))
        m[i, j] = v
        m[j, i] = -v
        return CioMatrix(m, self.o_min, self.o_max)

    def is_valid(self):
        m = self.offsets
        return (
            m.ndim == 2 and m.shape[0] == m.shape[1]
            and bool(np.all(np.isfinite(m)))
            and np.array_equal(m, -m.T)
            and bool(np.all(m >= self.o_min)) and bool(np.all(m <= self.o_max))
        )

    def validate(self):
        m = self.offsets
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidActionError(f"CIO matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidActionError("CIO matrix has non-finite entries")
        if not np.array_equal(m, -m.T):
            raise InvalidActionError("CIO matrix is not antisymmetric")
        if np.any(m < self.o_min) or np.any(m > self.o_max):
            raise InvalidActionError(f"CIO entries outside [{self.o_min}, {self.o_max}] dB")

    def copy(self):
        return CioMatrix(self.offsets.copy(), self.o_min, self.o_max, validate=False)

    def __eq__(self, other):
        return isinstance(other, CioMatrix) and np.array_equal(self.offsets, other.offsets)

    def __repr__(self):
        return f"CioMatrix(n={self.n}, max|O|={np.abs(self.offsets).max(initial=0.0):.2f} dB)"


@dataclass(frozen=True, eq=False)
class StateVector:
    centered_loads: np.ndarray
    edge_fractions: np.ndarray

    @property
    def dimension(self):
        return 2 * len(self.centered_loads)

    def as_array(self):
        return np.concatenate([self.centered_loads, self.edge_fractions])


class HandoverOutcome(Enum):
    SUCCESS = "SUCCESS"
    BLOCKED = "BLOCKED"


@dataclass(frozen=True)
class HandoverEvent:
    user_id: int
    source: int
    target: int
    outcome: HandoverOutcome


@dataclass(frozen=True, eq=False)
class StepMetrics:
    step: int
    reward: float
    loads: np.ndarray
    ho_success: int
    ho_fail: int

    @property
    def max_load(self):
        return float(np.max(self.loads))
