import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
from conftest import make_kpi
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from dirp.agent.metrics import MetricsLog
from dirp.agent.schedule import PhaseSchedule
from dirp.cmd.core import main
from dirp.env.simulator import NetworkEnv
from dirp.harness.baselines import centralized_agent, run_bl_heur, run_centralized
from dirp.harness.experiment import (
    ExperimentConfig,
    Scheme,
    load_config,
    load_summaries,
    run_experiment,
    run_seed,
)
from dirp.harness.heuristic import bl_heur_action, bl_heur_actions
from dirp.harness.plots import PlotKind, emit_plots, survival_curve
from dirp.harness.summary import (
    Aggregation,
    RunSummary,
    aggregate,
    compare_frame,
    compare_table,
    convergence_step,
    summarize_log,
    traffic_correlation,
)
from dirp.io.scenario import load_scenario
from dirp.misc.errors import ConfigurationError
from dirp.misc.simplexops import on_simplex
from dirp.td3.agent import Td3Agent
from dirp.td3.hyper import Td3Hyper

CONFIGS = Path(__file__).parent.parent / "configs"

TINY_HYPER = {"batch_size": 4, "actor_hidden": [8], "critic_hidden": [8]}


def test_heuristic_follows_demand():
    kpi = make_kpi(np.ones((2, 4)), np.ones((2, 4)), demand=[[2e6, 6e6, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
    assert_allclose(bl_heur_action(kpi, 0), [0.25, 0.75, 0.0, 0.0])
    assert_allclose(bl_heur_action(kpi, 1), [0.25, 0.25, 0.25, 0.25])
    assert bl_heur_actions(kpi).shape == (2, 4)


def test_heuristic_ignores_demand_scale():
    rng = np.random.default_rng(0)
    demand = rng.uniform(0, 1e7, size=(3, 4))
    a = bl_heur_actions(make_kpi(np.ones((3, 4)), np.ones((3, 4)), demand=demand))
    b = bl_heur_actions(make_kpi(np.ones((3, 4)), np.ones((3, 4)), demand=demand * 17.0))
    assert_allclose(a, b)


def test_bl_heur_run(small_env, tiny_schedule):
    log = run_bl_heur(small_env, tiny_schedule)
    assert len(log) == tiny_schedule.horizon
    assert log.scheme == "bl-heur"
    demand = log.demand
    # each partition follows the demand observed one step earlier
    assert_allclose(log.actions[1:], demand[:-1] / demand[:-1].sum(axis=-1, keepdims=True))


def test_centralized_agent_controls_every_cell(small_env):
    agent = centralized_agent(small_env, seed=0)
    assert agent.state_dim == 30
    assert agent.action_dim == 6
    assert agent.groups == 3
    assert agent.hyper.actor_hidden == (384, 192, 64)


def test_run_centralized(small_env, tiny_schedule):
    agent = centralized_agent(small_env, Td3Hyper(batch_size=4, actor_hidden=(8,), critic_hidden=(8,)), seed=0)
    log = run_centralized(small_env, agent, tiny_schedule)
    assert log.scheme == "bl-cen"
    assert all(on_simplex(a.reshape(-1), groups=3) for a in log.actions)
    assert_allclose(log.global_rewards, log.local_rewards.min(axis=1))
    assert agent.td3.train_steps == tiny_schedule.training
    assert len(agent.buffer) == tiny_schedule.horizon


def test_run_centralized_checks_dimensions(small, tiny_schedule):
    bad = centralized_agent(NetworkEnv(*load_scenario("default")), Td3Hyper(actor_hidden=(8,), critic_hidden=(8,)))
    with pytest.raises(ConfigurationError):
        run_centralized(NetworkEnv(*small), bad, tiny_schedule)


def _hand_log():
    log = MetricsLog("hand", seed=3)
    phases = ["train", "train", "eval", "eval"]
    thr = [[[1.0, 1.0]], [[1.0, 1.0]], [[1.2, 0.5]], [[1.0, 1.0]]]
    rewards = [0.1, 0.2, 0.5, 1.0]
    for t in range(4):
        log.record(
            t,
            phases[t],
            np.array([[0.5 + 0.1 * t, 0.5 - 0.1 * t]]),
            np.zeros((1, 2)),
            np.array(thr[t]),
            np.full((1, 2), 2.0),
            np.array([rewards[t]]),
            rewards[t],
            np.array([[1.0 + t, 1.0]]),
            np.array([0.5, 0.5]),
        )
    return log


def test_summary_metrics():
    s = summarize_log(_hand_log(), start_window=2)
    assert s.seed == 3
    assert s.mean_eval_reward == pytest.approx(0.75)
    assert s.slice_throughput_satisfaction == pytest.approx([1.0, 0.75])
    assert s.min_slice_throughput_satisfaction == pytest.approx(0.75)
    assert s.min_slice_delay_satisfaction == pytest.approx(1.0)
    assert s.mean_satisfaction == pytest.approx(0.875)
    assert s.fully_satisfied_ratio == pytest.approx(0.5)
    assert s.violation_ratio == pytest.approx(0.25)
    assert s.start_reward == pytest.approx(0.15)
    assert s.convergence_step is None
    assert s.throughput_samples == [[1.2, 1.0], [0.5, 1.0]]
    assert len(s.action_trace) == 2


def test_summary_fraction_satisfied():
    s = summarize_log(_hand_log(), Aggregation.FRACTION_SATISFIED)
    assert s.slice_throughput_satisfaction == pytest.approx([1.0, 0.5])


def test_summary_needs_evaluation():
    log = _hand_log()
    with pytest.raises(ConfigurationError):
        summarize_log(log.select(log.phase_mask("train")))


def test_summary_skips_generalist_steps():
    log = MetricsLog("x")
    gen = _hand_log()
    log.extend(gen, phase_prefix="gen-")
    log.extend(_hand_log())
    s = summarize_log(log, start_window=2)
    assert s.start_reward == pytest.approx(0.15)
    assert len(s.reward_trajectory) == 8


def test_convergence_step():
    rewards = np.concatenate([np.zeros(100), np.ones(100)])
    assert convergence_step(rewards, 1.0) == 147
    assert convergence_step(np.ones(10), 1.0) is None
    assert convergence_step(np.zeros(200), 1.0) is None


def test_traffic_correlation():
    share = np.stack([np.linspace(0.4, 0.9, 20), np.linspace(0.6, 0.1, 20)], axis=-1)[:, None, :]
    actions = share * 0.5 + 0.2
    assert traffic_correlation(actions, share) == [pytest.approx(1.0)]
    assert traffic_correlation(np.full_like(share, 0.5), share) == [None]


def test_survival_curve():
    xs, ys = survival_curve([1.5, 0.5, 2.0, 1.0])
    assert_array_equal(xs, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert_allclose(ys, [1.0, 0.75, 0.5, 0.25, 0.0])
    with pytest.raises(ConfigurationError):
        survival_curve([])


def _summary(scheme="hand"):
    return aggregate([summarize_log(_hand_log())], scheme, "maxmin", Aggregation.TIME_MEAN)


def test_aggregate_and_compare():
    s = aggregate([summarize_log(_hand_log()), summarize_log(_hand_log())], "hand", "maxmin", Aggregation.TIME_MEAN)
    assert s.seeds == [3, 3]
    assert s.mean_eval_reward == pytest.approx(0.75)
    assert s.reward_trajectory == pytest.approx([0.1, 0.2, 0.5, 1.0])
    frame = compare_frame([s, _summary("other")])
    assert list(frame["scheme"]) == ["hand", "other"]
    assert frame["eval reward"].tolist() == pytest.approx([0.75, 0.75])
    table = compare_table([s, _summary("other")])
    lines = table.splitlines()
    assert len(lines) == 3
    assert lines[0].split()[:2] == ["scheme", "reward"]
    assert "0.7500" in lines[2]
    assert lines[2].split()[0] == "other"
    with pytest.raises(ConfigurationError):
        aggregate([], "x", "maxmin", Aggregation.TIME_MEAN)


def test_summary_file_roundtrip(tmp_path):
    s = _summary()
    loaded = RunSummary.load(s.save(tmp_path / "summary.json"))
    assert loaded == s
    assert load_summaries([tmp_path])[0] == s


@pytest.mark.parametrize("kind", list(PlotKind))
def test_plots_are_svg(kind, tmp_path):
    paths = emit_plots([_summary(), _summary("other")], kind, tmp_path)
    assert paths == [tmp_path / f"{PlotKind(kind).value}.svg"]
    root = ET.parse(paths[0]).getroot()
    assert root.tag.endswith("svg")


def test_plots_need_summaries(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_plots([], PlotKind.REWARD_CURVE, tmp_path)


def test_config_validation():
    assert ExperimentConfig().name == "dirp-maxmin"
    with pytest.raises(ValidationError):
        ExperimentConfig(phases={"exploration": 10, "training": 10, "evaluation": 0})
    with pytest.raises(ValidationError):
        ExperimentConfig(seeds=[1, 1])
    with pytest.raises(ValidationError):
        ExperimentConfig(hyper={"batch": 3})
    with pytest.raises(ValidationError):
        ExperimentConfig(episodes=3)
    config = ExperimentConfig().with_overrides(scheme="tl-dirp", reward="log", seeds=None)
    assert config.name == "tl-dirp-log"
    assert config.seeds == [0, 1, 2]
    with pytest.raises(ConfigurationError):
        config.with_overrides(scheme="nope")


def test_centralized_config_uses_wide_networks():
    config = ExperimentConfig(scheme="bl-cen", hyper={"batch_size": 8})
    assert config.td3_hyper().actor_hidden == (384, 192, 64)
    assert config.td3_hyper().batch_size == 8


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.name)
def test_shipped_configs(path):
    if path.name == "three-cells.json":
        topology, slices, _ = load_scenario(path)
        assert topology.num_cells == 3
        assert [s.name for s in slices] == ["embb", "urllc"]
        return
    config = load_config(path)
    load_scenario(config.scenario, config.scenario_seed)


def _tiny_config(tmp_path, scheme="dirp", **kwargs):
    values = dict(
        scenario="small",
        scheme=scheme,
        seeds=[0, 1],
        phases={"exploration": 3, "training": 8, "evaluation": 3},
        generalist={"exploration": 2, "training": 5, "evaluation": 0},
        centralized_exploration=2,
        hyper=TINY_HYPER,
        offline_epochs=1,
        output_dir=str(tmp_path),
        save_packages=True,
    )
    values.update(kwargs)
    return ExperimentConfig(**values)


@pytest.mark.parametrize("scheme", [s.value for s in Scheme])
def test_every_scheme_runs(scheme, tmp_path):
    config = _tiny_config(tmp_path, scheme, seeds=[0])
    summary = run_experiment(config)
    assert summary.scheme == scheme
    seed_dir = config.run_dir / "seed0"
    assert (seed_dir / "metrics.csv").exists()
    assert (config.run_dir / "summary.json").exists()
    assert ExperimentConfig.model_validate_json((config.run_dir / "config.json").read_text()) == config
    if scheme != "bl-heur":
        checkpoints = sorted((seed_dir / "checkpoints").glob("*.json"))
        assert checkpoints
        assert isinstance(Td3Agent.load(checkpoints[0]), Td3Agent)
    if Scheme(scheme).is_transfer:
        assert (seed_dir / "packages" / "cell00" / "package.json").exists()


def test_seed_metrics_stream_includes_generalist_rows(tmp_path):
    config = _tiny_config(tmp_path, "tl-dirp", seeds=[0])
    log, _ = run_seed(config, 0)
    path = config.run_dir / "seed0" / "metrics.csv"
    assert path.read_bytes() == log.to_csv(tmp_path / "whole.csv").read_bytes()
    phases = set(log.phase)
    assert phases == {"gen-explore", "gen-train", "train", "eval"}
    assert len(log) == 7 + 11


def test_experiment_is_reproducible_across_job_counts(tmp_path):
    serial = run_experiment(_tiny_config(tmp_path / "a", n_jobs=1))
    parallel = run_experiment(_tiny_config(tmp_path / "b", n_jobs=2))
    for seed in (0, 1):
        a = (tmp_path / "a" / "dirp-maxmin" / f"seed{seed}" / "metrics.csv").read_bytes()
        b = (tmp_path / "b" / "dirp-maxmin" / f"seed{seed}" / "metrics.csv").read_bytes()
        assert a == b
    assert serial.mean_eval_reward == parallel.mean_eval_reward
    assert serial.reward_trajectory == parallel.reward_trajectory


def test_cli_run_plot_compare(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DIRP_PROGRESS", "false")
    config_path = tmp_path / "config.json"
    config_path.write_text(_tiny_config(tmp_path / "runs").model_dump_json())

    assert main(["--log-level", "error", "run", "--config", str(config_path), "--seed", "4"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[1].startswith("dirp")
    run_dir = tmp_path / "runs" / "dirp-maxmin"
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["seeds"] == [4]

    assert main(["plot", "--in", str(run_dir), "--out", str(tmp_path / "plots")]) == 0
    printed = capsys.readouterr().out.split()
    assert len(printed) == len(PlotKind)
    assert all(Path(p).exists() for p in printed)

    assert main(["compare", str(run_dir), str(run_dir / "summary.json")]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3

    checkpoint = run_dir / "seed4" / "checkpoints" / "cell00.json"
    assert main(["inspect-checkpoint", str(checkpoint)]) == 0
    assert "actor" in capsys.readouterr().out


def test_cli_failures(tmp_path, monkeypatch):
    assert main(["inspect-checkpoint", str(tmp_path / "missing.json")]) == 1
    assert main(["compare", str(tmp_path / "missing.json")]) == 1
    monkeypatch.setenv("DIRP_LOG_LEVEL", "loud")
    assert main(["compare", str(tmp_path)]) == 1


def test_cli_rejects_unknown_scheme():
    with pytest.raises(SystemExit):
        main(["run", "--scheme", "nope"])


def test_phase_schedule_in_config():
    config = ExperimentConfig(phases={"exploration": 1, "training": 2, "evaluation": 3})
    assert config.phases == PhaseSchedule(exploration=1, training=2, evaluation=3)
