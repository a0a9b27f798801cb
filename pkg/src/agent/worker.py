"""Behavior-policy workers: each explores its own environment replica and feeds the servers."""
from dataclasses import dataclass
import logging

import numpy as np

from ..env.types import CioMatrix
from ..neuralnet import soft_update
from .behavior import behavior_action
from .learner import BATCH_SIZE, GAMMA, TAU, AgentNetworks, actor_minibatch_gradient, critic_minibatch_gradient
from .parameter_server import Submission
from .replay import ReplayBuffer, Transition, sample_uniform

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ClusterSlot:
    """A worker's private learning state for one cluster, bound to that cluster's server."""
    ids: list
    nets: AgentNetworks
    replay: ReplayBuffer
    server: object


@dataclass
class IterationLog:
    iteration: int
    worker: int
    behavior: str
    reward: float
    critic_loss: float      # NaN while every replay is still below the batch size


class Worker:
    def __init__(self, worker_id, env, schedule, slots, rng,
                 batch_size=BATCH_SIZE, gamma=GAMMA, tau=TAU):
        self.worker_id = worker_id
        self.env = env
        self.schedule = schedule
        self.slots = slots
        self.rng = rng
        self.batch_size = batch_size
        self.gamma = gamma
        self.tau = tau
        self.iteration = 0

    @property
    def clusters(self):
        return [slot.ids for slot in self.slots]


def worker_iteration(worker):
    """One exploration step plus one gradient submission per cluster.

    Order per cluster: synchronize from the server, soft-update the guiding
    nets toward the synchronized copies, act with the behavior policy. The
    composed action is applied once to the worker's environment, then each
    cluster stores its transition and, once its replay holds a full batch,
    submits both mini-batch gradients stamped with the sync iteration.
    """
    policy = worker.schedule.policy_for(worker.iteration)
    env = worker.env
    current = env.state.cio

    stamps, states, blocks = [], [], []
    for slot in worker.slots:
        nets = slot.nets
        stamps.append(slot.server.pull_into(nets.actor, nets.critic))
        soft_update(nets.guide_actor, nets.actor, worker.tau)
        soft_update(nets.guide_critic, nets.critic, worker.tau)

        s = env.observe(slot.ids)
        a = behavior_action(policy, s, nets.actor, len(slot.ids), current.submatrix(slot.ids))
        states.append(s)
        blocks.append((slot.ids, a))

    action = CioMatrix.compose(env.n_sbs, blocks, *current.bounds)
    _, r, _ = env.step(action)

    losses = []
    for slot, stamp, s, (ids, a) in zip(worker.slots, stamps, states, blocks):
        s_next = env.observe(ids)
        slot.replay.append(Transition(s.as_array(), a.upper(), env.cluster_reward(ids), s_next.as_array()))
        if len(slot.replay) < worker.batch_size:
            continue
        batch = sample_uniform(slot.replay, worker.batch_size, worker.rng)
        nets = slot.nets
        critic_grads, loss = critic_minibatch_gradient(
            batch, nets.critic, nets.guide_actor, nets.guide_critic, worker.gamma, stamp)
        actor_grads = actor_minibatch_gradient(batch, nets.actor, nets.critic, stamp)
        slot.server.submit(Submission(worker.worker_id, stamp, actor=actor_grads, critic=critic_grads))
        losses.append(loss)

    log = IterationLog(worker.iteration, worker.worker_id, policy.name, float(r),
                       float(np.mean(losses)) if losses else float("nan"))
    worker.iteration += 1
    return log
