import logging

from ..baselines import nearest_neighbors, neighbor_pairs, rule_adaptive, rule_static
from .base import MlbStrategy

logger = logging.getLogger(__name__)


class RuleStrategy(MlbStrategy):
    """Step-size CIO tuning between neighboring SBSs, starting from the offsets in force."""

    def __init__(self, adaptive=False):
        self.adaptive = adaptive
        self.name = "rule-adaptive" if adaptive else "rule-static"
        self._rule = rule_adaptive if adaptive else rule_static
        self._pairs = None

    def _neighbor_pairs(self, env):
        if self._pairs is None:
            self._pairs = neighbor_pairs(nearest_neighbors(env.scenario.sbs_positions))
            logger.debug(f"    [Rules] {len(self._pairs)} neighbor links")
        return self._pairs

    def act(self, env):
        return self._rule(env.loads, env.state.cio, self._neighbor_pairs(env))
