"""Parallel off-policy training: behavior workers, per-cluster parameter servers, checkpoints."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
import logging

import numpy as np
import pandas as pd

from ..env.simulator import UdnEnvironment
from ..env.types import CIO_MAX_DB, CIO_MIN_DB
from ..neuralnet import HIDDEN_SIZES
from .behavior import NOISE_SIGMA_DB, BehaviorPolicy, BehaviorSchedule
from .checkpoint import PolicyCheckpoint
from .learner import ACTOR_RATE, BATCH_SIZE, CRITIC_RATE, GAMMA, TAU, AgentNetworks
from .parameter_server import MAX_STALENESS, ParameterServer
from .replay import REPLAY_CAPACITY, ReplayBuffer
from .worker import ClusterSlot, Worker, worker_iteration

logger = logging.getLogger(__name__)

# RNG stream tags, combined with the scenario seed
NET_STREAM = 101
WORKER_STREAM = 202

TRAINING_COLUMNS = ["iteration", "worker", "behavior", "reward", "critic_loss"]


@dataclass
class TrainingSettings:
    gamma: float = GAMMA
    tau: float = TAU
    batch_size: int = BATCH_SIZE
    actor_rate: float = ACTOR_RATE
    critic_rate: float = CRITIC_RATE
    replay_capacity: int = REPLAY_CAPACITY
    max_staleness: int = MAX_STALENESS
    optimizer: str = "adam"
    hidden: tuple = HIDDEN_SIZES
    noise_sigma: float = NOISE_SIGMA_DB
    rotate_every: int = 0       # > 0: every worker cycles through all behavior kinds
    threaded: bool = False
    bounds: tuple = (CIO_MIN_DB, CIO_MAX_DB)


class ParallelTrainer:
    """One worker per behavior kind, one parameter server per (multi-SBS) cluster.

    Round-robin mode runs the workers one after another and is bit-reproducible
    for a fixed scenario; threaded mode runs each round on a thread pool.
    """

    def __init__(self, scenario, kinds, settings=None):
        if not kinds:
            raise ValueError("at least one behavior kind is required")
        self.scenario = scenario
        self.kinds = list(kinds)
        self.settings = settings or TrainingSettings()
        self._net_rng = np.random.default_rng((scenario.seed, NET_STREAM))
        self.servers = []
        self.clusters = []
        self.rounds = 0
        self.logs = []
        self._executor = None

        s = self.settings
        self.workers = []
        for m, kind in enumerate(self.kinds):
            rng = np.random.default_rng((scenario.seed, WORKER_STREAM, m))
            order = self.kinds[m:] + self.kinds[:m] if s.rotate_every > 0 else [kind]
            schedule = BehaviorSchedule([BehaviorPolicy(k, rng, s.noise_sigma) for k in order], s.rotate_every)
            env = UdnEnvironment(scenario, replica=m + 1)
            self.workers.append(Worker(m, env, schedule, [], rng, s.batch_size, s.gamma, s.tau))
        logger.info(f"🧠 [Trainer] {len(self.workers)} worker(s): {[w.schedule.name for w in self.workers]}")

    def _fresh_server(self, size):
        s = self.settings
        nets = AgentNetworks.create(size, self._net_rng, s.bounds, s.hidden)
        return ParameterServer(nets.actor, nets.critic, s.actor_rate, s.critic_rate,
                               s.max_staleness, s.optimizer)

    def set_clusters(self, clusters):
        """Install a new clustering.

        A cluster with unchanged membership keeps its server and replays; one
        that only matches an old cluster's size starts from a copy of that
        server's parameters; anything else starts fresh.
        """
        clusters = [list(map(int, ids)) for ids in clusters]
        old = {tuple(ids): server for ids, server in zip(self.clusters, self.servers) if server is not None}
        old_replays = [{tuple(sl.ids): sl.replay for sl in w.slots} for w in self.workers]
        spare = {tuple(ids): server for ids, server in old.items() if ids not in map(tuple, clusters)}

        s = self.settings
        servers = []
        for ids in clusters:
            if len(ids) < 2:
                servers.append(None)
                continue
            key = tuple(ids)
            if key in old:
                servers.append(old[key])
                continue
            donor = next((k for k in spare if len(k) == len(ids)), None)
            if donor is not None:
                src = spare.pop(donor)
                servers.append(ParameterServer(src.actor.copy(), src.critic.copy(), s.actor_rate,
                                               s.critic_rate, s.max_staleness, s.optimizer))
                logger.debug(f"    [Trainer] Warm-started cluster {ids} from {list(donor)}")
            else:
                servers.append(self._fresh_server(len(ids)))

        for w, replays in zip(self.workers, old_replays):
            slots = []
            for ids, server in zip(clusters, servers):
                if server is None:
                    continue
                actor, critic, _ = server.snapshot()
                nets = AgentNetworks(actor, critic, actor.copy(), critic.copy())
                replay = replays.get(tuple(ids)) or ReplayBuffer(s.replay_capacity)
                slots.append(ClusterSlot(ids, nets, replay, server))
            w.slots = slots

        self.clusters, self.servers = clusters, servers

    def train_round(self):
        """Every worker runs one iteration; returns the iteration logs in worker order."""
        if not self.clusters:
            raise RuntimeError("set_clusters() must be called before training")
        if self.settings.threaded and len(self.workers) > 1:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=len(self.workers))
            logs = list(self._executor.map(worker_iteration, self.workers))
        else:
            logs = [worker_iteration(w) for w in self.workers]
        self.logs.extend(logs)
        self.rounds += 1
        return logs

    def target_action(self, env):
        """Deterministic action of the current global actors (no exploration)."""
        live = PolicyCheckpoint(self.scenario.n_sbs, self.clusters,
                                [None if server is None else server.actor for server in self.servers],
                                bounds=self.settings.bounds)
        return live.act(env)

    def checkpoint(self, label="policy"):
        snaps = [None if server is None else server.snapshot() for server in self.servers]
        return PolicyCheckpoint(self.scenario.n_sbs, [list(c) for c in self.clusters],
                                [None if snap is None else snap[0] for snap in snaps],
                                label=label, bounds=self.settings.bounds,
                                critics=[None if snap is None else snap[1] for snap in snaps])

    def load_checkpoint(self, ckpt):
        """Copy checkpoint actors (and critics, when saved) into servers of matching shape.

        Workers' local and guiding nets for a loaded cluster restart from the
        loaded parameters. Returns how many clusters were loaded.
        """
        loaded = 0
        for ids, server in zip(self.clusters, self.servers):
            if server is None or ids not in ckpt.clusters:
                continue
            h = ckpt.clusters.index(ids)
            actor = ckpt.actors[h]
            if actor is None or not actor.same_shape(server.actor):
                continue
            critic = ckpt.critics[h] if h < len(ckpt.critics) else None
            if critic is not None and not critic.same_shape(server.critic):
                critic = None
            server.restore(actor, critic)
            for w in self.workers:
                for slot in w.slots:
                    if slot.server is server:
                        nets = slot.nets
                        nets.actor.load_from(server.actor)
                        nets.guide_actor.load_from(server.actor)
                        nets.critic.load_from(server.critic)
                        nets.guide_critic.load_from(server.critic)
            loaded += 1
        return loaded

    def training_frame(self, worker_id=None):
        rows = [asdict(log) for log in self.logs if worker_id is None or log.worker == worker_id]
        return pd.DataFrame(rows, columns=TRAINING_COLUMNS)

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None
