from .types import (
    ChannelParams, CioMatrix, HandoverEvent, HandoverOutcome, Scenario, SmallCell, StateVector,
    StepMetrics, User, CIO_MAX_DB, CIO_MIN_DB,
)
from .channel import cell_load, path_loss, prb_rate, required_prbs, reward, rsrp, sinr
from .handover import evaluate_handovers
from .scenario import ScenarioLoader, generate_scenario
from .simulator import NetworkState, UdnEnvironment, observe_state, step
