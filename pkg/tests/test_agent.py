import math

import numpy as np
import pytest

from src.agent import (
    MBP_KINDS, SBP_KINDS, AgentNetworks, BehaviorKind, BehaviorPolicy, BehaviorSchedule, ParallelTrainer,
    ParameterServer, PolicyCheckpoint, ReplayBuffer, Submission, Transition, actor_minibatch_gradient,
    behavior_action, critic_minibatch_gradient, mean_q, sample_uniform, select_action, server_apply, td_target,
)
from src.env import CioMatrix, UdnEnvironment
from src.errors import DimensionMismatchError, ReplayUnderflowError
from src.neuralnet import DenseNetwork, GradientSet, Optimizer, apply_gradients, soft_update


def _linear(sizes, weights, bias):
    net = DenseNetwork(sizes)
    net.weights[0][...] = weights
    net.biases[0][...] = bias
    return net


def _transition(s, a, r, s_next):
    return Transition(np.array(s, dtype=float), np.array(a, dtype=float), float(r), np.array(s_next, dtype=float))


# --- target and behavior policies -------------------------------------------

def test_agent_network_dimensions():
    nets = AgentNetworks.create(4, np.random.default_rng(0), hidden=(8, 8))
    assert nets.actor.input_dim == 8 and nets.actor.output_dim == 6
    assert nets.critic.input_dim == 14 and nets.critic.output_dim == 1
    assert all(np.array_equal(a, b) for a, b in zip(nets.actor.parameters(), nets.guide_actor.parameters()))


def test_select_action_is_a_valid_cio_matrix():
    nets = AgentNetworks.create(4, np.random.default_rng(0), hidden=(8, 8))
    rng = np.random.default_rng(1)
    for _ in range(100):
        cio = select_action(nets.actor, rng.normal(scale=5.0, size=8))
        assert cio.n == 4 and cio.is_valid()


def test_fresh_actor_starts_near_zero_offsets():
    nets = AgentNetworks.create(3, np.random.default_rng(0))
    assert np.all(np.abs(select_action(nets.actor, np.zeros(6)).offsets) < 0.1)


def test_select_action_rejects_wrong_state_dim():
    nets = AgentNetworks.create(3, np.random.default_rng(0), hidden=(8,))
    with pytest.raises(DimensionMismatchError):
        select_action(nets.actor, np.zeros(5))


@pytest.mark.parametrize("kind", list(BehaviorKind))
def test_every_behavior_policy_yields_valid_actions(kind):
    nets = AgentNetworks.create(4, np.random.default_rng(0), hidden=(8,))
    policy = BehaviorPolicy(kind, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    for _ in range(50):
        state = np.concatenate([rng.normal(scale=0.3, size=4), rng.uniform(size=4)])
        assert behavior_action(policy, state, nets.actor, 4).is_valid()


def test_noisy_target_is_centered_on_the_target():
    nets = AgentNetworks.create(3, np.random.default_rng(0), hidden=(8,))
    policy = BehaviorPolicy(BehaviorKind.NOISY_TARGET, np.random.default_rng(5), noise_sigma=0.5)
    state = np.zeros(6)
    target = select_action(nets.actor, state).upper()
    draws = np.array([behavior_action(policy, state, nets.actor).upper() for _ in range(4000)])
    assert np.abs(draws.mean(axis=0) - target) == pytest.approx(np.zeros(3), abs=0.05)
    assert not np.allclose(draws[0], target)


def test_rule_behavior_steps_offsets_away_from_the_loaded_cell():
    nets = AgentNetworks.create(2, np.random.default_rng(0), hidden=(8,))
    state = np.array([0.2, -0.2, 0.0, 0.0])    # SBS 0 is 0.4 above SBS 1
    static = behavior_action(BehaviorPolicy(BehaviorKind.RULE_STATIC, None), state, nets.actor)
    adaptive = behavior_action(BehaviorPolicy(BehaviorKind.RULE_ADAPTIVE, None), state, nets.actor)
    assert static.offsets[0, 1] == pytest.approx(-1.0)
    assert adaptive.offsets[0, 1] == pytest.approx(-3.0)
    start = CioMatrix.zeros(2).with_offset(0, 1, -5.5)
    assert behavior_action(BehaviorPolicy(BehaviorKind.RULE_STATIC, None), state, nets.actor,
                           current=start).offsets[0, 1] == -6.0


def test_behavior_schedule_rotation():
    policies = [BehaviorPolicy(k, None) for k in MBP_KINDS]
    schedule = BehaviorSchedule(policies, rotate_every=2)
    assert [schedule.policy_for(i).kind for i in range(7)] == [
        MBP_KINDS[0], MBP_KINDS[0], MBP_KINDS[1], MBP_KINDS[1], MBP_KINDS[2], MBP_KINDS[2], MBP_KINDS[0]]
    assert BehaviorSchedule(policies).policy_for(99).kind is MBP_KINDS[0]
    assert schedule.name == "noisy-target+rule-static+rule-adaptive"


# --- learning rules -----------------------------------------------------------

def test_td_target_with_constant_guide_critic():
    guide_actor = _linear((1, 1), 0.0, 0.0)
    guide_critic = _linear((2, 1), 0.0, 2.0)
    t = _transition([0.3], [1.0], 1.0, [0.7])
    assert td_target(t, guide_actor, guide_critic, gamma=0.5) == pytest.approx(2.0)
    assert td_target(t, guide_actor, guide_critic, gamma=0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        td_target(t, guide_actor, guide_critic, gamma=1.5)


def test_critic_gradient_hand_computed():
    critic = _linear((2, 1), [[0.0], [2.0]], 0.0)
    guide_actor = _linear((1, 1), 0.0, 0.0)
    guide_critic = _linear((2, 1), 0.0, 0.0)
    batch = [_transition([0.0], [1.0], 1.0, [0.0]), _transition([0.0], [3.0], 2.0, [0.0])]
    grads, loss = critic_minibatch_gradient(batch, critic, guide_actor, guide_critic, gamma=0.99, timestamp=4)
    assert grads.weights[0][:, 0] == pytest.approx([0.0, 6.5])
    assert grads.biases[0] == pytest.approx([2.5])
    assert loss == pytest.approx(8.5)
    assert grads.timestamp == 4


def test_critic_gradient_vanishes_at_a_fitted_point():
    critic = _linear((2, 1), 0.0, 2.0)
    batch = [_transition([0.1], [0.5], 1.0, [0.2])] * 3
    grads, loss = critic_minibatch_gradient(batch, critic, _linear((1, 1), 0.0, 0.0), critic.copy(), gamma=0.5)
    assert all(np.all(a == 0) for a in grads.arrays())
    assert loss == 0.0


def test_one_sample_batch_matches_a_single_transition_gradient():
    rng = np.random.default_rng(0)
    nets = AgentNetworks.create(2, rng, hidden=(6,))
    for _ in range(100):
        t = _transition(rng.normal(size=4), rng.uniform(-6, 6, size=1), rng.uniform(0.5, 3), rng.normal(size=4))
        grads, _ = critic_minibatch_gradient([t], nets.critic, nets.guide_actor, nets.guide_critic, gamma=0.9)
        x = np.concatenate([t.state, t.action])
        err = nets.critic.forward(x)[0] - td_target(t, nets.guide_actor, nets.guide_critic, gamma=0.9)
        direct = nets.critic.param_gradient(x, np.array([err]))
        assert all(np.array_equal(a, b) for a, b in zip(grads.arrays(), direct.arrays()))


def test_one_sample_actor_batch_matches_a_single_transition_gradient():
    rng = np.random.default_rng(1)
    nets = AgentNetworks.create(3, rng, hidden=(6,))
    for _ in range(100):
        t = _transition(rng.normal(size=6), rng.uniform(-6, 6, size=3), 1.0, rng.normal(size=6))
        grads = actor_minibatch_gradient([t], nets.actor, nets.critic)
        a = nets.actor.forward(t.state)
        dq_da = nets.critic.input_gradient(np.concatenate([t.state, a]), wrt=slice(6, None))
        direct = nets.actor.param_gradient(t.state, dq_da)
        assert all(np.array_equal(x, y) for x, y in zip(grads.arrays(), direct.arrays()))


def test_small_actor_ascent_step_raises_mean_q():
    rng = np.random.default_rng(7)
    for _ in range(10):
        nets = AgentNetworks.create(3, rng, hidden=(16, 16))
        batch = [_transition(rng.normal(size=6), np.zeros(3), 0.0, rng.normal(size=6)) for _ in range(32)]
        before = mean_q(batch, nets.actor, nets.critic)
        grads = actor_minibatch_gradient(batch, nets.actor, nets.critic)
        apply_gradients(nets.actor, grads, Optimizer(1e-4, "sgd"), ascent=True)
        assert mean_q(batch, nets.actor, nets.critic) > before


def test_guide_lag_shrinks_by_one_minus_tau_per_update():
    tau, n = 0.01, 50
    source = DenseNetwork((3, 4, 2), rng=np.random.default_rng(0))
    guide = DenseNetwork((3, 4, 2), rng=np.random.default_rng(1))
    gap = [g - s for g, s in zip(guide.parameters(), source.parameters())]
    for _ in range(n):
        soft_update(guide, source, tau)
    for g, s, d in zip(guide.parameters(), source.parameters(), gap):
        assert g - s == pytest.approx((1 - tau) ** n * d, rel=1e-9, abs=1e-12)


def test_empty_batches_are_rejected():
    nets = AgentNetworks.create(2, np.random.default_rng(0), hidden=(4,))
    with pytest.raises(ReplayUnderflowError):
        critic_minibatch_gradient([], nets.critic, nets.guide_actor, nets.guide_critic)
    with pytest.raises(ReplayUnderflowError):
        actor_minibatch_gradient([], nets.actor, nets.critic)


class _QuadraticCritic:
    """Q(s, a) = -(a - 3)^2."""

    def input_gradient(self, x, wrt=None):
        return -2.0 * (x[:, wrt] - 3.0)


def test_actor_ascent_converges_to_the_critic_maximum():
    actor = _linear((1, 1), 0.0, 0.0)
    opt = Optimizer(0.01, "sgd")
    batch = [_transition([0.0], [0.0], 0.0, [0.0])] * 4
    for _ in range(10_000):
        apply_gradients(actor, actor_minibatch_gradient(batch, actor, _QuadraticCritic()), opt, ascent=True)
    assert actor.biases[0][0] == pytest.approx(3.0, abs=1e-2)


# --- replay -------------------------------------------------------------------

def test_replay_evicts_oldest_first():
    replay = ReplayBuffer(capacity=3)
    for i in range(5):
        replay.append(_transition([i], [0.0], i, [i]))
    assert len(replay) == 3
    assert [t.reward for t in replay] == [2.0, 3.0, 4.0]


def test_sample_uniform_errors():
    replay = ReplayBuffer(10)
    replay.append(_transition([0.0], [0.0], 0.0, [0.0]))
    with pytest.raises(ReplayUnderflowError):
        sample_uniform(replay, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_uniform(replay, 0, np.random.default_rng(0))
    assert len(sample_uniform(replay, 1, np.random.default_rng(0))) == 1


def test_sample_uniform_is_uniform_with_replacement():
    replay = ReplayBuffer(10)
    for i in range(10):
        replay.append(_transition([i], [0.0], i, [i]))
    rng = np.random.default_rng(42)
    drawn = [int(t.reward) for _ in range(10_000) for t in sample_uniform(replay, 10, rng)]
    counts = np.bincount(drawn, minlength=10)
    chi2 = float(np.sum((counts - 10_000.0) ** 2 / 10_000.0))
    assert chi2 < 21.666     # df=9, alpha=0.01
    # with replacement: some batch of 10 from 10 items repeats an item
    assert any(len({int(t.reward) for t in sample_uniform(replay, 10, rng)}) < 10 for _ in range(20))


# --- parameter server ---------------------------------------------------------

def _server(max_staleness=10):
    return ParameterServer(_linear((1, 1), 1.0, 0.0), _linear((2, 1), 0.0, 0.0),
                           actor_rate=0.1, critic_rate=0.1, max_staleness=max_staleness, optimizer="sgd")


def _grad_like(net, value, ts=0):
    g = GradientSet.zeros_like(net, ts)
    for a in g.arrays():
        a[...] = value
    return g


def test_server_sums_fresh_submissions():
    server = _server()
    subs = [Submission(0, 0, critic=_grad_like(server.critic, 1.0)),
            Submission(1, 0, critic=_grad_like(server.critic, 2.0), actor=_grad_like(server.actor, 1.0))]
    server_apply(server, subs)
    assert server.critic.biases[0][0] == pytest.approx(-0.3)     # descent on the summed critic gradient
    assert server.actor.weights[0][0, 0] == pytest.approx(1.1)  # ascent for the actor
    assert server.iteration == 1


def _random_grads(net, rng):
    g = GradientSet.zeros_like(net)
    for a in g.arrays():
        a[...] = rng.normal(size=a.shape)
    return g


def test_summed_submissions_match_sequential_application():
    rng = np.random.default_rng(11)
    together, apart = _server(), _server()
    subs = [Submission(m, 0, actor=_random_grads(together.actor, rng), critic=_random_grads(together.critic, rng))
            for m in range(3)]
    server_apply(together, subs)
    for sub in subs:
        server_apply(apart, [sub])
    for a, b in zip([*together.actor.parameters(), *together.critic.parameters()],
                    [*apart.actor.parameters(), *apart.critic.parameters()]):
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_server_drops_stale_submissions():
    server = _server(max_staleness=10)
    for _ in range(11):
        server_apply(server, [])
    server.submit(Submission(0, 0, critic=_grad_like(server.critic, 1.0)))
    assert server.dropped == 1
    assert server.critic.biases[0][0] == 0.0
    server.submit(Submission(0, 2, critic=_grad_like(server.critic, 1.0)))
    assert server.dropped == 1
    assert server.critic.biases[0][0] == pytest.approx(-0.1)


def test_pull_into_copies_global_parameters():
    server = _server()
    actor, critic = _linear((1, 1), 5.0, 5.0), _linear((2, 1), 5.0, 5.0)
    assert server.pull_into(actor, critic) == 0
    assert actor.weights[0][0, 0] == 1.0 and critic.biases[0][0] == 0.0


# --- workers and trainer --------------------------------------------------------

def test_training_rounds_log_losses_once_the_replay_is_full(small_scenario, tiny_settings):
    trainer = ParallelTrainer(small_scenario, MBP_KINDS, tiny_settings)
    trainer.set_clusters([[0, 1], [2, 3]])
    first = trainer.train_round()
    assert [log.worker for log in first] == [0, 1, 2]
    assert [log.behavior for log in first] == ["noisy-target", "rule-static", "rule-adaptive"]
    assert all(math.isnan(log.critic_loss) for log in first)
    for _ in range(5):
        logs = trainer.train_round()
    assert all(np.isfinite(log.critic_loss) for log in logs)
    assert all(server.iteration > 0 for server in trainer.servers)
    frame = trainer.training_frame(0)
    assert len(frame) == 6 and frame["iteration"].tolist() == list(range(6))


def test_workers_explore_separate_replicas(small_scenario, tiny_settings):
    trainer = ParallelTrainer(small_scenario, MBP_KINDS, tiny_settings)
    assert [w.env.replica for w in trainer.workers] == [1, 2, 3]


def test_round_robin_training_is_reproducible(small_scenario, tiny_settings):
    runs = []
    for _ in range(2):
        trainer = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
        trainer.set_clusters([[0, 1, 2, 3]])
        for _ in range(8):
            trainer.train_round()
        runs.append(trainer)
    assert runs[0].checkpoint().same_parameters(runs[1].checkpoint())
    assert runs[0].training_frame().equals(runs[1].training_frame())


def test_set_clusters_keeps_warm_starts_or_refreshes(small_scenario, tiny_settings):
    trainer = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    trainer.set_clusters([[0, 1], [2, 3]])
    first = list(trainer.servers)

    trainer.set_clusters([[0, 1], [2, 3]])
    assert trainer.servers[0] is first[0] and trainer.servers[1] is first[1]

    trainer.set_clusters([[0, 2], [1, 3]])
    assert trainer.servers[0] is not first[0]
    assert np.array_equal(trainer.servers[0].actor.weights[0], first[0].actor.weights[0])

    trainer.set_clusters([[0], [1, 2, 3]])
    assert trainer.servers[0] is None
    assert trainer.servers[1].actor.input_dim == 6
    assert [slot.ids for slot in trainer.workers[0].slots] == [[1, 2, 3]]


def test_target_action_leaves_cross_cluster_offsets_at_zero(small_scenario, tiny_settings):
    trainer = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    trainer.set_clusters([[0, 1], [2, 3]])
    cio = trainer.target_action(UdnEnvironment(small_scenario))
    assert cio.is_valid()
    assert cio.offsets[0, 2] == cio.offsets[1, 3] == 0.0


def test_trainer_requires_clusters(small_scenario, tiny_settings):
    with pytest.raises(RuntimeError):
        ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings).train_round()
    with pytest.raises(ValueError):
        ParallelTrainer(small_scenario, [], tiny_settings)


# --- checkpoints -----------------------------------------------------------------

def test_no_mlb_checkpoint_acts_with_zero_offsets(small_scenario):
    ckpt = PolicyCheckpoint.no_mlb(4)
    assert not ckpt.is_learned
    assert np.all(ckpt.act(UdnEnvironment(small_scenario)).offsets == 0.0)


def test_checkpoint_round_trip(small_scenario, tiny_settings, tmp_path):
    trainer = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    trainer.set_clusters([[0, 3], [1, 2]])
    ckpt = trainer.checkpoint("stage-1")
    ckpt.save(tmp_path / "ckpt")
    loaded = PolicyCheckpoint.load(tmp_path / "ckpt", "stage-1")
    assert loaded.clusters == [[0, 3], [1, 2]]
    assert loaded.same_parameters(ckpt)
    env = UdnEnvironment(small_scenario)
    assert np.array_equal(loaded.act(env).offsets, ckpt.act(env).offsets)


def test_checkpoint_is_frozen_against_further_training(small_scenario, tiny_settings):
    trainer = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    trainer.set_clusters([[0, 1, 2, 3]])
    ckpt = trainer.checkpoint()
    before = [p.copy() for p in ckpt.actors[0].parameters()]
    for _ in range(10):
        trainer.train_round()
    assert all(np.array_equal(a, b) for a, b in zip(before, ckpt.actors[0].parameters()))


def test_load_checkpoint_copies_matching_actors(small_scenario, tiny_settings):
    source = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    source.set_clusters([[0, 1], [2, 3]])
    ckpt = source.checkpoint()

    target = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    target.set_clusters([[0, 1], [2], [3]])
    assert target.load_checkpoint(ckpt) == 1
    assert np.array_equal(target.servers[0].actor.weights[0], ckpt.actors[0].weights[0])


def test_checkpoint_carries_the_critics(small_scenario, tiny_settings, tmp_path):
    trainer = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    trainer.set_clusters([[0, 1], [2, 3]])
    for _ in range(6):
        trainer.train_round()
    ckpt = trainer.checkpoint()
    ckpt.save(tmp_path / "ckpt")
    assert (tmp_path / "ckpt" / "critic_0.npz").exists() and (tmp_path / "ckpt" / "critic_1.npz").exists()
    loaded = PolicyCheckpoint.load(tmp_path / "ckpt")
    for saved, server in zip(loaded.critics, trainer.servers):
        assert all(np.array_equal(a, b) for a, b in zip(saved.parameters(), server.critic.parameters()))


def test_training_resumes_from_a_saved_checkpoint(small_scenario, tiny_settings, tmp_path):
    source = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    source.set_clusters([[0, 1], [2, 3]])
    for _ in range(6):
        source.train_round()
    source.checkpoint().save(tmp_path / "stage_0")

    resumed = ParallelTrainer(small_scenario, SBP_KINDS, tiny_settings)
    resumed.set_clusters([[0, 1], [2, 3]])
    assert resumed.load_checkpoint(PolicyCheckpoint.load(tmp_path / "stage_0")) == 2
    for old, new in zip(source.servers, resumed.servers):
        assert all(np.array_equal(a, b) for a, b in zip(old.critic.parameters(), new.critic.parameters()))
        assert all(np.array_equal(a, b) for a, b in zip(old.actor.parameters(), new.actor.parameters()))
    for slot in resumed.workers[0].slots:
        for guide, live in ((slot.nets.guide_critic, slot.server.critic), (slot.nets.guide_actor, slot.server.actor)):
            assert all(np.array_equal(a, b) for a, b in zip(guide.parameters(), live.parameters()))
