"""Shared global actor/critic for one cluster, updated from worker gradient submissions."""
from dataclasses import dataclass
import logging
import threading

from ..neuralnet import Optimizer, apply_gradients
from .learner import ACTOR_RATE, CRITIC_RATE

logger = logging.getLogger(__name__)

MAX_STALENESS = 10


@dataclass(eq=False)
class Submission:
    """Both mini-batch gradients of one worker iteration; either may be None."""
    worker_id: int
    timestamp: int
    actor: object = None
    critic: object = None


class ParameterServer:
    def __init__(self, actor, critic, actor_rate=ACTOR_RATE, critic_rate=CRITIC_RATE,
                 max_staleness=MAX_STALENESS, optimizer="adam"):
        if max_staleness < 0:
            raise ValueError("max staleness must be >= 0")
        self.actor = actor
        self.critic = critic
        self.actor_opt = Optimizer(actor_rate, mode=optimizer)
        self.critic_opt = Optimizer(critic_rate, mode=optimizer)
        self.max_staleness = max_staleness
        self.iteration = 0
        self.dropped = 0
        self._lock = threading.Lock()

    def pull_into(self, actor, critic):
        """Copy the global parameters into a worker's local nets; returns the sync timestamp."""
        with self._lock:
            actor.load_from(self.actor)
            critic.load_from(self.critic)
            return self.iteration

    def snapshot(self):
        with self._lock:
            return self.actor.copy(), self.critic.copy(), self.iteration

    def restore(self, actor, critic=None):
        """Overwrite the global actor (and critic, if given) with saved parameters."""
        with self._lock:
            self.actor.load_from(actor)
            if critic is not None:
                self.critic.load_from(critic)

    def submit(self, submission):
        """Asynchronous update: each submission is applied as soon as it arrives."""
        server_apply(self, [submission])

    def is_stale(self, timestamp):
        return self.iteration - timestamp > self.max_staleness


def _total(grads):
    total = grads[0]
    for g in grads[1:]:
        total = total + g
    return total


def server_apply(server, submissions):
    """Drop stale submissions, apply the sum of the rest, advance the iteration counter."""
    with server._lock:
        fresh = []
        for sub in submissions:
            if server.is_stale(sub.timestamp):
                server.dropped += 1
                logger.debug(f"⚠️ [Server] Dropped stale gradient from worker {sub.worker_id} "
                             f"(ts={sub.timestamp}, now={server.iteration})")
            else:
                fresh.append(sub)

        critic_grads = [s.critic for s in fresh if s.critic is not None]
        actor_grads = [s.actor for s in fresh if s.actor is not None]
        if critic_grads:
            apply_gradients(server.critic, _total(critic_grads), server.critic_opt, ascent=False)
        if actor_grads:
            apply_gradients(server.actor, _total(actor_grads), server.actor_opt, ascent=True)
        server.iteration += 1
