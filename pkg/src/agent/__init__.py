from .behavior import MBP_KINDS, SBP_KINDS, BehaviorKind, BehaviorPolicy, BehaviorSchedule, behavior_action
from .checkpoint import PolicyCheckpoint
from .learner import (
    AgentNetworks, actor_minibatch_gradient, critic_minibatch_gradient, mean_q, select_action, td_target,
)
from .parameter_server import ParameterServer, Submission, server_apply
from .replay import ReplayBuffer, Transition, sample_uniform
from .trainer import ParallelTrainer, TrainingSettings
from .worker import Worker, worker_iteration
