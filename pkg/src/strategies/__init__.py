from .base import MlbStrategy
from .drl import CENTRALIZED, TWO_LAYER, DrlStrategy
from .nomlb import NoMlbStrategy
from .qlearning import QLearningStrategy
from .rules import RuleStrategy

CONTROLLERS = ("nomlb", "rule-static", "rule-adaptive", "qlearning", "drl-sbp", "drl-mbp")


def build_strategy(controller, mode=TWO_LAYER, settings=None, initial_checkpoint=None):
    """Controller instance for a CLI name."""
    if controller == "nomlb":
        return NoMlbStrategy()
    if controller in ("rule-static", "rule-adaptive"):
        return RuleStrategy(adaptive=controller == "rule-adaptive")
    if controller == "qlearning":
        return QLearningStrategy()
    if controller in ("drl-sbp", "drl-mbp"):
        return DrlStrategy(multi_behavior=controller == "drl-mbp", mode=mode, settings=settings,
                           initial_checkpoint=initial_checkpoint)
    raise ValueError(f"unknown controller {controller!r}; expected one of {', '.join(CONTROLLERS)}")
