import logging

from ..agent.behavior import MBP_KINDS, SBP_KINDS
from ..agent.trainer import ParallelTrainer, TrainingSettings
from .base import MlbStrategy

logger = logging.getLogger(__name__)

TWO_LAYER = "two-layer"
CENTRALIZED = "centralized"


class DrlStrategy(MlbStrategy):
    """Off-policy actor-critic MLB.

    Each experiment step runs one training round (every behavior worker steps
    its own replica and submits gradients), then the deterministic target
    policy of the global actors controls the reported environment.
    """

    learns = True

    def __init__(self, multi_behavior=True, mode=TWO_LAYER, settings=None, initial_checkpoint=None):
        if mode not in (TWO_LAYER, CENTRALIZED):
            raise ValueError(f"unknown architecture mode {mode!r}")
        self.multi_behavior = multi_behavior
        self.mode = mode
        self.settings = settings or TrainingSettings()
        self.kinds = MBP_KINDS if multi_behavior else SBP_KINDS
        self.name = "drl-mbp" if multi_behavior else "drl-sbp"
        self.initial_checkpoint = initial_checkpoint
        self.trainer = None

    def on_recluster(self, env, assignment):
        if self.trainer is None:
            self.trainer = ParallelTrainer(env.scenario, self.kinds, self.settings)
        if self.mode == CENTRALIZED:
            clusters = [list(range(env.n_sbs))]
        else:
            clusters = assignment.clusters()
        self.trainer.set_clusters(clusters)
        if self.initial_checkpoint is not None:
            loaded = self.trainer.load_checkpoint(self.initial_checkpoint)
            logger.info(f"♻️ [DRL] Warm-started {loaded} cluster actor(s) from {self.initial_checkpoint.label}")
            self.initial_checkpoint = None

    def act(self, env):
        if self.trainer is None:
            raise RuntimeError("DrlStrategy needs on_recluster() before the first step")
        self.trainer.train_round()
        return self.trainer.target_action(env)

    def checkpoint(self, label):
        return self.trainer.checkpoint(label)

    def training_frame(self, worker_id=None):
        return self.trainer.training_frame(worker_id)

    def close(self):
        if self.trainer is not None:
            self.trainer.close()
