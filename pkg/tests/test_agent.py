import numpy as np
import pandas as pd
import pytest
from conftest import constant_mask, one_slice, single_cell
from numpy.testing import assert_allclose, assert_array_equal

from dirp.agent.dirp import LearningAgent, make_agents, run_dirp
from dirp.agent.metrics import CSV_COLUMNS, MetricsLog, concat_logs
from dirp.agent.replay import ReplayBuffer, Transition
from dirp.agent.schedule import Phase, PhaseSchedule
from dirp.env.simulator import NetworkEnv
from dirp.harness.baselines import run_bl_dist
from dirp.mdp.observation import ObservationBuilder
from dirp.mdp.reward import RewardKind
from dirp.misc.errors import ConfigurationError, ContractError, DirpError
from dirp.misc.simplexops import on_simplex


def _transition(t, cell=0, S=3, A=2):
    return Transition(np.full(S, t, dtype=float), np.full(A, 1.0 / A), np.full(S, t + 1.0), float(t), t, cell)


def test_replay_is_fifo():
    buf = ReplayBuffer(3, 2, capacity=3)
    for t in range(5):
        buf.add(_transition(t))
    assert len(buf) == 3
    assert [tr.timestamp for tr in buf.transitions()] == [2, 3, 4]
    assert_array_equal(buf.batch().rewards, [2.0, 3.0, 4.0])


def test_replay_rejects_bad_transitions():
    buf = ReplayBuffer(3, 2)
    with pytest.raises(ContractError):
        buf.add(_transition(0, S=4))
    with pytest.raises(ContractError):
        buf.add(Transition(np.zeros(3), np.ones(2) / 2, np.zeros(3), np.nan))
    with pytest.raises(ContractError):
        ReplayBuffer(3, 2, capacity=0)


def test_sampling_needs_enough_transitions():
    buf = ReplayBuffer(3, 2)
    rng = np.random.default_rng(0)
    with pytest.raises(ContractError):
        buf.sample(1, rng)
    buf.extend(_transition(t) for t in range(3))
    with pytest.raises(ContractError):
        buf.sample(4, rng)
    batch = buf.sample(3, rng)
    assert sorted(batch.rewards) == [0.0, 1.0, 2.0]


def test_sampling_reaches_every_transition():
    buf = ReplayBuffer(3, 2, capacity=50)
    buf.extend(_transition(t) for t in range(80))
    rng = np.random.default_rng(1)
    seen = set()
    for _ in range(200):
        seen.update(buf.sample(8, rng).rewards.tolist())
    assert seen == set(float(t) for t in range(30, 80))


def test_minibatches_cover_buffer_once():
    buf = ReplayBuffer(3, 2, capacity=20)
    buf.extend(_transition(t) for t in range(11))
    batches = list(buf.minibatches(4, np.random.default_rng(2)))
    assert [len(b) for b in batches] == [4, 4, 3]
    assert sorted(np.concatenate([b.rewards for b in batches])) == [float(t) for t in range(11)]


def test_transitions_by_cell():
    buf = ReplayBuffer(3, 2)
    buf.extend(_transition(t, cell=t % 3) for t in range(9))
    assert buf.count(1) == 3
    assert [tr.timestamp for tr in buf.transitions(cell=1)] == [1, 4, 7]


def test_schedule_phases():
    schedule = PhaseSchedule(exploration=2, training=3, evaluation=1, start=10)
    assert [schedule.phase(t) for t in range(10, 16)] == [Phase.EXPLORE] * 2 + [Phase.TRAIN] * 3 + [Phase.EVAL]
    assert schedule.end == 16
    with pytest.raises(ContractError):
        schedule.phase(16)
    with pytest.raises(ContractError):
        schedule.phase(9)
    assert schedule.without_exploration().horizon == 4
    assert schedule.shifted(0).phase(0) == Phase.EXPLORE


def test_schedule_must_not_be_empty():
    with pytest.raises(ValueError):
        PhaseSchedule(exploration=0, training=0, evaluation=0)


def test_heuristic_ramp():
    schedule = PhaseSchedule(exploration=5, training=3, evaluation=1)
    probs = [schedule.heuristic_probability(t) for t in range(5)]
    assert_allclose(probs, [0.5, 0.6, 0.7, 0.8, 0.9])
    assert schedule.heuristic_probability(6) == 0.9


def test_eval_action_is_actor_output():
    agent = LearningAgent(6, 2, seed=0)
    schedule = PhaseSchedule(exploration=0, training=0, evaluation=3)
    x = np.linspace(0, 1, 6)
    assert_array_equal(agent.select_action(x, 0, schedule, hint=np.array([0.9, 0.1])), agent.td3.act(x))
    assert agent.epsilon == 1.0


def test_full_epsilon_and_certain_heuristic_follow_hint():
    agent = LearningAgent(6, 2, seed=0)
    schedule = PhaseSchedule(exploration=0, training=10, evaluation=1, heuristic_start=1.0, heuristic_end=1.0)
    agent.reset_epsilon(1.0)
    hint = np.array([0.3, 0.7])
    assert_array_equal(agent.choose(np.zeros(6), 0, schedule, hint), hint)


def test_exploration_without_heuristic_draws_partitions():
    agent = LearningAgent(6, 3, seed=0)
    schedule = PhaseSchedule(exploration=10, training=0, evaluation=1, heuristic_start=0.0, heuristic_end=0.0)
    hint = np.array([0.2, 0.3, 0.5])
    draws = [agent.select_action(np.zeros(6), t, schedule, hint) for t in range(10)]
    assert all(on_simplex(a) for a in draws)
    assert not any(np.array_equal(a, hint) for a in draws)


def test_epsilon_decays_only_while_training():
    agent = LearningAgent(6, 2, seed=0)
    schedule = PhaseSchedule(exploration=3, training=50, evaluation=5, epsilon0=0.8, decay=0.95)
    agent.reset_epsilon(schedule.epsilon0)
    expected = 0.8
    for t in range(schedule.horizon):
        agent.select_action(np.zeros(6), t, schedule)
        if schedule.phase(t) == Phase.TRAIN:
            expected *= 0.95
        assert agent.epsilon == pytest.approx(expected, rel=1e-12)
    assert agent.epsilon == pytest.approx(0.8 * 0.95**50, rel=1e-12)


def test_training_waits_for_a_full_batch(tiny_hyper):
    agent = LearningAgent(3, 2, tiny_hyper, seed=0)
    schedule = PhaseSchedule(exploration=0, training=10, evaluation=1)
    for t in range(3):
        agent.observe_and_store(_transition(t))
        assert agent.maybe_train(t, schedule) is None
    agent.observe_and_store(_transition(3))
    assert agent.maybe_train(3, schedule) is not None
    assert agent.maybe_train(10, schedule) is None


def test_agents_are_independently_seeded(small_env, tiny_hyper):
    builder = ObservationBuilder(small_env.topology, small_env.slices)
    agents = make_agents(builder, tiny_hyper, seed=0)
    assert len({a.td3.actor.checksum() for a in agents}) == 3
    again = make_agents(builder, tiny_hyper, seed=0)
    assert [a.td3.actor.checksum() for a in agents] == [a.td3.actor.checksum() for a in again]


def _dirp(env, hyper, schedule, seed=0, kind=RewardKind.MAX_MIN):
    agents = make_agents(ObservationBuilder(env.topology, env.slices), hyper, seed=seed)
    return run_dirp(env, agents, schedule, kind, seed=seed), agents


def test_run_dirp_logs_every_timestamp(small, tiny_hyper, tiny_schedule):
    env = NetworkEnv(*small, seed=0)
    log, agents = _dirp(env, tiny_hyper, tiny_schedule)
    assert len(log) == tiny_schedule.horizon
    assert log.t == list(range(30))
    assert log.phase.count("explore") == 5
    assert log.phase.count("eval") == 5
    frame = log.to_frame()
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 30 * 3 * 2
    assert_allclose(log.actions.sum(axis=-1), 1.0)
    assert_allclose(log.global_rewards, log.local_rewards.min(axis=1))
    assert all(a.td3.train_steps == 20 for a in agents)
    assert all(a.td3.actor_updates == 10 for a in agents)


def test_run_dirp_log_reward_is_cell_mean(small, tiny_hyper, tiny_schedule):
    env = NetworkEnv(*small, seed=0)
    log, _ = _dirp(env, tiny_hyper, tiny_schedule, kind=RewardKind.LOG_UTILITY)
    assert_allclose(log.global_rewards, log.local_rewards.mean(axis=1))


def test_run_dirp_is_reproducible(small, tiny_hyper, tiny_schedule, tmp_path):
    a, _ = _dirp(NetworkEnv(*small, seed=4), tiny_hyper, tiny_schedule, seed=4)
    b, _ = _dirp(NetworkEnv(*small, seed=4), tiny_hyper, tiny_schedule, seed=4)
    assert a.same_values(b)
    assert a.to_csv(tmp_path / "a.csv").read_bytes() == b.to_csv(tmp_path / "b.csv").read_bytes()


def test_run_dirp_checks_clock_and_agents(small, tiny_hyper, tiny_schedule):
    env = NetworkEnv(*small, seed=0)
    builder = ObservationBuilder(env.topology, env.slices)
    agents = make_agents(builder, tiny_hyper)
    env.step(np.full((3, 2), 0.5))
    with pytest.raises(ContractError):
        run_dirp(env, agents, tiny_schedule)
    with pytest.raises(ConfigurationError):
        run_dirp(NetworkEnv(*small), agents[:2], tiny_schedule)
    uncoordinated = make_agents(ObservationBuilder(env.topology, env.slices, coordination=False), tiny_hyper)
    with pytest.raises(ConfigurationError):
        run_dirp(NetworkEnv(*small), uncoordinated, tiny_schedule)


def test_single_cell_dirp_equals_independent_learner(tiny_hyper, tiny_schedule):
    slices = [one_slice(name="a"), one_slice(thr_req=1e6, delay_req=1.5e-3, packet=900.0, name="b")]
    topology = single_cell([[6, 4]])
    mask = constant_mask(2, 0.8)
    dirp, _ = _dirp(NetworkEnv(topology, slices, mask, seed=1), tiny_hyper, tiny_schedule, seed=1)
    dist = run_bl_dist(NetworkEnv(topology, slices, mask, seed=1), tiny_schedule, hyper=tiny_hyper, seed=1)
    assert dist.scheme == "bl-dist"
    assert dirp.same_values(dist)


def test_metrics_select_and_concat(small, tiny_hyper, tiny_schedule):
    log, _ = _dirp(NetworkEnv(*small, seed=0), tiny_hyper, tiny_schedule)
    evals = log.select(log.phase_mask("eval"))
    assert len(evals) == 5
    assert evals.t == list(range(25, 30))
    both = concat_logs([evals, evals], scheme="x")
    assert len(both) == 10
    assert both.scheme == "x"
    assert_allclose(log.demand_share().sum(axis=-1), 1.0)


def test_empty_metrics_frame():
    assert list(MetricsLog().to_frame().columns) == CSV_COLUMNS


def test_streamed_metrics_are_appended_as_produced(small, tiny_hyper, tiny_schedule, tmp_path):
    path = tmp_path / "seed0" / "metrics.csv"
    log = MetricsLog("dirp", 0, path=path, flush_every=7)
    assert list(pd.read_csv(path).columns) == CSV_COLUMNS
    assert len(pd.read_csv(path)) == 0

    env = NetworkEnv(*small, seed=0)
    agents = make_agents(ObservationBuilder(env.topology, env.slices), tiny_hyper)
    assert run_dirp(env, agents, tiny_schedule, log=log) is log
    assert log.pending == 2
    written = pd.read_csv(path)
    assert len(written) == 28 * 3 * 2
    assert written["t"].max() == 27

    assert log.close() == path
    assert log.pending == 0
    assert path.read_bytes() == log.to_csv(tmp_path / "whole.csv").read_bytes()


def test_metrics_stream_rejects_bad_flush_interval(tmp_path):
    with pytest.raises(DirpError):
        MetricsLog("x", path=tmp_path / "m.csv", flush_every=0)
    assert MetricsLog("x").close() is None
