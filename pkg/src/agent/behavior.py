"""Behavior policies that generate exploration samples for the off-policy learner."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..baselines import all_pairs, rule_adaptive, rule_static
from ..env.types import CioMatrix
from .learner import select_action

NOISE_SIGMA_DB = 1.0


class BehaviorKind(Enum):
    NOISY_TARGET = "noisy-target"
    RULE_STATIC = "rule-static"
    RULE_ADAPTIVE = "rule-adaptive"
    UNIFORM_RANDOM = "uniform-random"


# DRL-SBP explores with the noisy target only; DRL-MBP adds the two rule policies
SBP_KINDS = (BehaviorKind.NOISY_TARGET,)
MBP_KINDS = (BehaviorKind.NOISY_TARGET, BehaviorKind.RULE_STATIC, BehaviorKind.RULE_ADAPTIVE)


@dataclass(eq=False)
class BehaviorPolicy:
    kind: BehaviorKind
    rng: np.random.Generator
    noise_sigma: float = NOISE_SIGMA_DB

    @property
    def name(self):
        return self.kind.value


def behavior_action(policy, state, actor, cluster_size=None, current=None):
    """Exploratory action for `state`; always antisymmetric and within the CIO bounds.

    `current` is the CIO block in force for the cluster, the starting point of the rule policies.
    """
    s = state.as_array() if hasattr(state, "as_array") else np.asarray(state, dtype=float)
    n = cluster_size if cluster_size is not None else len(s) // 2
    low, high = actor.output_bounds
    kind = policy.kind

    if kind is BehaviorKind.NOISY_TARGET:
        target = select_action(actor, s, n).upper()
        noise = policy.rng.normal(0.0, policy.noise_sigma, size=target.shape)
        return CioMatrix.from_upper(target + noise, n, low, high)

    if kind is BehaviorKind.UNIFORM_RANDOM:
        return CioMatrix.from_upper(policy.rng.uniform(low, high, size=n * (n - 1) // 2), n, low, high)

    if current is None or current.n != n:
        current = CioMatrix.zeros(n, low, high)
    # centered loads keep every pairwise load difference, which is all the rules look at
    loads = s[:n]
    rule = rule_static if kind is BehaviorKind.RULE_STATIC else rule_adaptive
    return rule(loads, current, all_pairs(n))


@dataclass
class BehaviorSchedule:
    """Behavior policies used in turn by one worker, `rotate_every` iterations each."""
    policies: list
    rotate_every: int = 0     # 0: stick with the first policy

    def policy_for(self, iteration):
        if self.rotate_every <= 0 or len(self.policies) == 1:
            return self.policies[0]
        return self.policies[(iteration // self.rotate_every) % len(self.policies)]

    @property
    def name(self):
        return "+".join(p.name for p in self.policies)
