"""Frozen policies: one actor (and the critic trained with it) per cluster, plus the clustering."""
from dataclasses import dataclass, field
import logging
import os

import numpy as np
import pandas as pd

from ..env.types import CioMatrix, CIO_MAX_DB, CIO_MIN_DB
from ..neuralnet import DenseNetwork
from .learner import select_action

logger = logging.getLogger(__name__)

MEMBERSHIP_FILE = "membership.csv"


@dataclass(eq=False)
class PolicyCheckpoint:
    """Immutable snapshot of a deterministic policy.

    `actors[h]` drives cluster `clusters[h]`; clusters with a single SBS (or a
    missing actor) keep zero offsets. A checkpoint without actors is noMLB.
    `critics[h]` is only needed to resume training and may be empty.
    """
    n_sbs: int
    clusters: list
    actors: list = field(default_factory=list)
    label: str = "policy"
    bounds: tuple = (CIO_MIN_DB, CIO_MAX_DB)
    critics: list = field(default_factory=list)

    @classmethod
    def no_mlb(cls, n_sbs):
        return cls(n_sbs=n_sbs, clusters=[list(range(n_sbs))], actors=[None], label="noMLB")

    @property
    def is_learned(self):
        return any(a is not None for a in self.actors)

    def act(self, env):
        """Deterministic CIO matrix for the environment's current state."""
        blocks = []
        for ids, actor in zip(self.clusters, self.actors):
            if actor is None or len(ids) < 2:
                continue
            blocks.append((ids, select_action(actor, env.observe(ids), len(ids))))
        return CioMatrix.compose(self.n_sbs, blocks, *self.bounds)

    def membership(self):
        labels = np.zeros(self.n_sbs, dtype=int)
        for h, ids in enumerate(self.clusters):
            labels[np.asarray(ids, dtype=int)] = h
        return labels

    def same_parameters(self, other):
        if len(self.actors) != len(other.actors) or self.clusters != other.clusters:
            return False
        for a, b in zip(self.actors, other.actors):
            if (a is None) != (b is None):
                return False
            if a is not None and not all(np.array_equal(x, y) for x, y in zip(a.parameters(), b.parameters())):
                return False
        return True

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        pd.DataFrame({"sbs_id": np.arange(self.n_sbs), "cluster_index": self.membership()}).to_csv(
            os.path.join(directory, MEMBERSHIP_FILE), index=False)
        for h, actor in enumerate(self.actors):
            if actor is not None:
                actor.save(os.path.join(directory, f"actor_{h}.npz"))
        for h, critic in enumerate(self.critics):
            if critic is not None:
                critic.save(os.path.join(directory, f"critic_{h}.npz"))
        logger.debug(f"💾 [Checkpoint] Saved {self.label} to {directory}")

    @classmethod
    def load(cls, directory, label="policy"):
        frame = pd.read_csv(os.path.join(directory, MEMBERSHIP_FILE))
        labels = frame.sort_values("sbs_id")["cluster_index"].to_numpy()
        H = int(labels.max()) + 1
        clusters = [np.flatnonzero(labels == h).tolist() for h in range(H)]
        actors = [_load_net(directory, f"actor_{h}.npz") for h in range(H)]
        critics = [_load_net(directory, f"critic_{h}.npz") for h in range(H)]
        if all(c is None for c in critics):
            critics = []
        bounds = next((a.output_bounds for a in actors if a is not None), (CIO_MIN_DB, CIO_MAX_DB))
        return cls(n_sbs=len(labels), clusters=clusters, actors=actors, label=label, bounds=bounds,
                   critics=critics)


def _load_net(directory, name):
    path = os.path.join(directory, name)
    return DenseNetwork.load(path) if os.path.exists(path) else None
