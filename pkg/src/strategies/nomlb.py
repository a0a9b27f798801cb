from ..baselines import no_mlb
from .base import MlbStrategy


class NoMlbStrategy(MlbStrategy):
    """Plain A3 handovers: every offset stays at 0 dB."""

    name = "nomlb"

    def act(self, env):
        return no_mlb(env.state.cio)
