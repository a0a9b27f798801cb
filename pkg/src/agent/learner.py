"""Deterministic actor-critic learning rules with guiding (slow-tracking) networks."""
from dataclasses import dataclass

import numpy as np

from ..env.types import CioMatrix, CIO_MAX_DB, CIO_MIN_DB
from ..errors import DimensionMismatchError, ReplayUnderflowError
from ..neuralnet import DenseNetwork
from .replay import stack_batch

GAMMA = 0.99
TAU = 0.001
BATCH_SIZE = 64
ACTOR_RATE = 1e-4
CRITIC_RATE = 1e-3


def state_dim(cluster_size):
    return 2 * cluster_size


def action_dim(cluster_size):
    return cluster_size * (cluster_size - 1) // 2


@dataclass
class AgentNetworks:
    """Actor/critic pair plus their guiding copies for one cluster."""
    actor: DenseNetwork
    critic: DenseNetwork
    guide_actor: DenseNetwork
    guide_critic: DenseNetwork

    @classmethod
    def create(cls, cluster_size, rng, bounds=(CIO_MIN_DB, CIO_MAX_DB), hidden=None):
        kw = {} if hidden is None else {"hidden": hidden}
        s, a = state_dim(cluster_size), action_dim(cluster_size)
        actor = DenseNetwork.actor(s, a, bounds, rng=rng, **kw)
        critic = DenseNetwork.critic(s, a, rng=rng, **kw)
        return cls(actor, critic, actor.copy(), critic.copy())

    def copy(self):
        return AgentNetworks(self.actor.copy(), self.critic.copy(),
                             self.guide_actor.copy(), self.guide_critic.copy())


def select_action(actor, state, cluster_size=None):
    """Target policy: actor output -> antisymmetric CIO matrix within bounds."""
    s = state.as_array() if hasattr(state, "as_array") else np.asarray(state, dtype=float)
    if s.shape != (actor.input_dim,):
        raise DimensionMismatchError(f"state dim {s.shape} does not match actor input {actor.input_dim}")
    n = cluster_size if cluster_size is not None else actor.input_dim // 2
    low, high = actor.output_bounds
    return CioMatrix.from_upper(actor.forward(s), n, low, high)


def td_target(transition, guide_actor, guide_critic, gamma=GAMMA):
    """y = r + gamma * Q_guide(s', pi_guide(s'))."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must be in [0, 1]")
    s_next = np.asarray(transition.next_state, dtype=float)
    a_next = guide_actor.forward(s_next)
    q_next = guide_critic.forward(np.concatenate([s_next, a_next]))[0]
    return transition.reward + gamma * q_next


def td_targets(rewards, next_states, guide_actor, guide_critic, gamma=GAMMA):
    a_next = guide_actor.forward(next_states)
    q_next = guide_critic.forward(np.hstack([next_states, a_next]))[:, 0]
    return rewards + gamma * q_next


def critic_minibatch_gradient(batch, critic, guide_actor, guide_critic, gamma=GAMMA, timestamp=0):
    """Mean of (Q - y) * dQ/dw over the batch: a descent step on it lowers the TD loss.

    Returns (gradients, loss) with loss the mean squared TD error.
    """
    if not batch:
        raise ReplayUnderflowError("empty mini-batch")
    states, actions, rewards, next_states = stack_batch(batch)
    y = td_targets(rewards, next_states, guide_actor, guide_critic, gamma)
    inputs = np.hstack([states, actions])
    q = critic.forward(inputs)[:, 0]
    err = q - y
    grads = critic.param_gradient(inputs, err[:, None], timestamp).scaled(1.0 / len(batch))
    return grads, float(np.mean(err * err))


def actor_minibatch_gradient(batch, actor, critic, timestamp=0):
    """Mean of d pi/d theta * dQ/da at a = pi(s): the ascent direction of the policy objective."""
    if not batch:
        raise ReplayUnderflowError("empty mini-batch")
    states = np.stack([t.state for t in batch])
    actions = actor.forward(states)
    n_state = states.shape[1]
    dq_da = critic.input_gradient(np.hstack([states, actions]), wrt=slice(n_state, None))
    return actor.param_gradient(states, dq_da, timestamp).scaled(1.0 / len(batch))


def mean_q(batch, actor, critic):
    states = np.stack([t.state for t in batch])
    return float(np.mean(critic.forward(np.hstack([states, actor.forward(states)]))))

