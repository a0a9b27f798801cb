"""Offline-evaluation safeguard.

An offline branch keeps learning (and re-clustering) on its own replica while
the online branch runs the last adopted policy. At every stage boundary both
policies are scored with the same seeded rollouts; the online branch adopts
the offline checkpoint only if it scores strictly higher.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
import logging
import os

import numpy as np
from tqdm import tqdm

from .agent.checkpoint import PolicyCheckpoint
from .clustering import LoadDrivenClusterer, LoadHistory
from .env.simulator import UdnEnvironment
from .errors import MissingScoreError
from .metrics import MetricsSeries

logger = logging.getLogger(__name__)

EVAL_SEEDS = (1001, 1002, 1003)
STAGE_LENGTH = 10_000
ONLINE_REPLICA = 0
OFFLINE_REPLICA = 500

LEDGER_COLUMNS = ["stage", "online_score", "offline_score", "decision", "adopted", "online_policy"]


class Decision(Enum):
    SWAP = "SWAP"
    KEEP = "KEEP"


@dataclass
class StageRecord:
    stage: int
    online: PolicyCheckpoint
    offline: PolicyCheckpoint
    online_score: float = None
    offline_score: float = None


def _check_clustering(checkpoint, clustering):
    if clustering is None:
        return checkpoint
    clusters = clustering.clusters() if hasattr(clustering, "clusters") else [list(c) for c in clustering]
    if clusters != checkpoint.clusters:
        raise ValueError(f"checkpoint {checkpoint.label} was trained on clusters {checkpoint.clusters}, got {clusters}")
    return checkpoint


def evaluate_policy(checkpoint, scenario, clustering=None, horizon=STAGE_LENGTH, seeds=EVAL_SEEDS):
    """Mean per-step reward of the deterministic policy, averaged over seeded replicas."""
    if horizon < 1:
        raise ValueError("evaluation horizon must be >= 1")
    if not seeds:
        raise ValueError("need at least one evaluation seed")
    checkpoint = _check_clustering(checkpoint, clustering)
    scores = []
    for seed in seeds:
        env = UdnEnvironment(scenario, replica=seed)
        total = 0.0
        for _ in range(horizon):
            _, r, _ = env.step(checkpoint.act(env))
            total += r
        scores.append(total / horizon)
    return float(np.mean(scores))


def stage_boundary(record):
    """SWAP iff the offline score is strictly higher than the online score."""
    if record.online_score is None or record.offline_score is None:
        raise MissingScoreError(f"stage {record.stage}: both branch scores are required")
    return Decision.SWAP if record.offline_score > record.online_score else Decision.KEEP


class SafeguardRunner:
    """Staged online/offline run.

    `strategy` is the learning controller of the offline branch (a DrlStrategy);
    the online branch starts on noMLB. With `enabled=False` the online branch
    adopts every offline checkpoint regardless of its score.
    """

    def __init__(self, scenario, strategy, n_stages=5, stage_length=STAGE_LENGTH, eval_horizon=None,
                 eval_seeds=EVAL_SEEDS, enabled=True, clusterer=None, concurrent=False,
                 checkpoint_dir=None, progress=False):
        if n_stages < 1 or stage_length < 1:
            raise ValueError("need at least one stage of at least one step")
        self.scenario = scenario
        self.strategy = strategy
        self.n_stages = n_stages
        self.stage_length = stage_length
        self.eval_horizon = eval_horizon or stage_length
        self.eval_seeds = tuple(eval_seeds)
        self.enabled = enabled
        self.clusterer = clusterer or LoadDrivenClusterer()
        self.concurrent = concurrent
        self.checkpoint_dir = checkpoint_dir
        self.progress = progress

        self.online_env = UdnEnvironment(scenario, replica=ONLINE_REPLICA)
        self.offline_env = UdnEnvironment(scenario, replica=OFFLINE_REPLICA)
        self.online = PolicyCheckpoint.no_mlb(scenario.n_sbs)
        self.online_metrics = MetricsSeries()
        self.offline_metrics = MetricsSeries()
        self.records = []
        self.ledger = []
        self._online_score = None

    def _evaluate(self, checkpoint):
        return evaluate_policy(checkpoint, self.scenario, horizon=self.eval_horizon, seeds=self.eval_seeds)

    def _run_online(self, stage):
        env, policy = self.online_env, self.online
        for _ in tqdm(range(self.stage_length), desc=f"online  stage {stage}", disable=not self.progress, leave=False):
            _, _, m = env.step(policy.act(env))
            self.online_metrics.record(m)

    def _run_offline(self, stage):
        env, strategy = self.offline_env, self.strategy
        loads = []
        for _ in tqdm(range(self.stage_length), desc=f"offline stage {stage}", disable=not self.progress, leave=False):
            _, r, m = env.step(strategy.act(env))
            strategy.observe(env, r, m)
            self.offline_metrics.record(m)
            loads.append(m.loads)
        return LoadHistory(np.vstack(loads), stage_start=stage * self.stage_length)

    def _recluster(self, history):
        assignment = self.clusterer.cluster(self.scenario.sbs_positions, history)
        self.strategy.on_recluster(self.offline_env, assignment)
        return assignment

    def run(self):
        logger.info(f"🛡️ [Safeguard] {self.n_stages} stages x {self.stage_length} steps "
                    f"({'enabled' if self.enabled else 'disabled'})")
        self._recluster(LoadHistory(self.offline_env.loads[None, :]))

        for stage in range(self.n_stages):
            if self.concurrent:
                with ThreadPoolExecutor(max_workers=2) as pool:
                    online_job = pool.submit(self._run_online, stage)
                    history = pool.submit(self._run_offline, stage).result()
                    online_job.result()
            else:
                self._run_online(stage)
                history = self._run_offline(stage)

            offline = self.strategy.checkpoint(f"offline-stage{stage}")
            if self._online_score is None:
                self._online_score = self._evaluate(self.online)
            record = StageRecord(stage, self.online, offline, self._online_score, self._evaluate(offline))
            decision = stage_boundary(record)
            adopt = decision is Decision.SWAP or not self.enabled
            self._save(record)

            logger.info(f"{'🔁' if adopt else '✅'} [Safeguard] Stage {stage}: online={record.online_score:.4f} "
                        f"offline={record.offline_score:.4f} -> {decision.value}")
            if adopt:
                self.online = offline
                self._online_score = record.offline_score
            self.records.append(record)
            self.ledger.append({
                "stage": stage, "online_score": record.online_score, "offline_score": record.offline_score,
                "decision": decision.value, "adopted": adopt, "online_policy": self.online.label,
            })
            self._recluster(history)
        self.strategy.close()
        return self.ledger

    def _save(self, record):
        if self.checkpoint_dir is None:
            return
        base = os.path.join(self.checkpoint_dir, f"stage_{record.stage}")
        record.online.save(os.path.join(base, "online"))
        record.offline.save(os.path.join(base, "offline"))
