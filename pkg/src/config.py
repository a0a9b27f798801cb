"""Experiment configuration: dataclass defaults < key=value config file < CLI flags."""
from dataclasses import dataclass, fields, replace
import logging
import os

from dotenv import dotenv_values

from .agent.trainer import TrainingSettings
from .errors import ConfigError
from .strategies import CENTRALIZED, CONTROLLERS, TWO_LAYER

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class ExperimentConfig:
    # scenario
    n_sbs: int = 12
    n_users: int = 200
    area_side: float = 300.0
    cbr_kbps: float = 112.0
    # run
    controller: str = "nomlb"
    mode: str = TWO_LAYER
    seeds: int = 5
    first_seed: int = 0
    steps: int = 4000
    stage_length: int = 10_000
    ma_window: int = 200
    out: str = "results"
    scenario_path: str = ""
    jobs: int = 1
    # learner
    gamma: float = 0.99
    tau: float = 0.001
    batch_size: int = 64
    actor_rate: float = 1e-4
    critic_rate: float = 1e-3
    replay_capacity: int = 100_000
    max_staleness: int = 10
    optimizer: str = "adam"
    hidden: tuple = (400, 300)
    noise_sigma: float = 1.0
    rotate_every: int = 0
    threaded: bool = False
    # safeguard
    n_stages: int = 5
    eval_horizon: int = 0          # 0: one stage length
    safeguard: bool = True

    @property
    def demand(self):
        """Per-user CBR demand in bits/s."""
        return self.cbr_kbps * 1000.0

    @property
    def seed_list(self):
        return list(range(self.first_seed, self.first_seed + self.seeds))

    def validate(self):
        problems = {}
        positive = ("n_sbs", "area_side", "cbr_kbps", "seeds", "steps", "stage_length", "ma_window",
                    "jobs", "batch_size", "actor_rate", "critic_rate", "replay_capacity", "n_stages")
        for name in positive:
            if not getattr(self, name) > 0:
                problems[name] = f"must be > 0, got {getattr(self, name)!r}"
        for name in ("n_users", "max_staleness", "rotate_every", "eval_horizon", "first_seed"):
            if getattr(self, name) < 0:
                problems[name] = f"must be >= 0, got {getattr(self, name)!r}"
        if self.noise_sigma < 0:
            problems["noise_sigma"] = "must be >= 0"
        if not 0 <= self.gamma <= 1:
            problems["gamma"] = f"must be in [0, 1], got {self.gamma}"
        if not 0 < self.tau <= 1:
            problems["tau"] = f"must be in (0, 1], got {self.tau}"
        if self.controller not in CONTROLLERS:
            problems["controller"] = f"must be one of {', '.join(CONTROLLERS)}"
        if self.mode not in (TWO_LAYER, CENTRALIZED):
            problems["mode"] = f"must be {TWO_LAYER} or {CENTRALIZED}"
        if self.optimizer not in ("adam", "sgd"):
            problems["optimizer"] = "must be adam or sgd"
        if not self.hidden or any(h < 1 for h in self.hidden):
            problems["hidden"] = "needs at least one layer, every size >= 1"
        if self.scenario_path and not os.path.exists(self.scenario_path):
            problems["scenario_path"] = f"no such file: {self.scenario_path}"
        if problems:
            raise ConfigError(problems)
        return self

    def training_settings(self):
        return TrainingSettings(
            gamma=self.gamma, tau=self.tau, batch_size=self.batch_size, actor_rate=self.actor_rate,
            critic_rate=self.critic_rate, replay_capacity=self.replay_capacity,
            max_staleness=self.max_staleness, optimizer=self.optimizer, hidden=tuple(self.hidden),
            noise_sigma=self.noise_sigma, rotate_every=self.rotate_every, threaded=self.threaded,
        )


def _parse(field, raw):
    text = raw.strip()
    kind = field.type
    if kind is bool:
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind is tuple:
        return tuple(int(part) for part in text.replace(" ", "").split(",") if part)
    if kind is int:
        try:
            return int(text)
        except ValueError:
            number = float(text)        # accepts 1e5
            if not number.is_integer():
                raise ValueError(f"expected an integer, got {raw!r}") from None
            return int(number)
    if kind is float:
        return float(text)
    return text


def _key(name):
    return name.strip().lower().replace("-", "_")


def load_config(path, base=None):
    """Read a flat key=value file on top of `base` (defaults when None).

    Values are never exported to os.environ and environment variables are not consulted.
    """
    if not os.path.exists(path):
        raise ConfigError({"config": f"no such file: {path}"})
    raw = dotenv_values(path)
    known = {f.name: f for f in fields(ExperimentConfig)}
    values, problems = {}, {}
    for name, text in raw.items():
        key = _key(name)
        if key not in known:
            problems[key] = "unknown key"
            continue
        if text is None:
            problems[key] = "missing value"
            continue
        try:
            values[key] = _parse(known[key], text)
        except ValueError as e:
            problems[key] = str(e)
    if problems:
        raise ConfigError(problems)
    logger.debug(f"⚙️ [Config] {path}: {sorted(values)}")
    return replace(base or ExperimentConfig(), **values)


def apply_overrides(config, **overrides):
    """Explicit CLI values win; None means the flag was not given."""
    given = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(given) - {f.name for f in fields(ExperimentConfig)}
    if unknown:
        raise ConfigError({k: "unknown key" for k in sorted(unknown)})
    return replace(config, **given)
