import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from dirp.approx.activations import Activation
from dirp.approx.adam import AdamState, adam_step
from dirp.approx.mlp import ParamSet
from dirp.io.checkpoint import (
    describe_checkpoint,
    dumps_paramset,
    load_checkpoint,
    load_networks,
    loads_paramset,
    save_checkpoint,
)
from dirp.io.scenario import load_scenario, parse_scenario
from dirp.misc.errors import CheckpointError, ConfigurationError, DirpError
from dirp.misc.settings import DirpSettings


@pytest.fixture
def trained():
    rng = np.random.default_rng(0)
    net = ParamSet.initialize([5, 7, 3], rng, Activation.DECOUPLED_SOFTMAX)
    adam = AdamState.for_network(net, lr=1e-3)
    _, tape = net.forward(rng.normal(size=(4, 5)))
    grad, _ = net.backward(tape, rng.normal(size=(4, 3)))
    adam_step(net, grad, adam)
    return net, adam


def test_paramset_bytes_are_exact(trained):
    net, adam = trained
    loaded, loaded_adam = loads_paramset(dumps_paramset(net, adam))
    assert loaded.checksum() == net.checksum()
    assert loaded.architecture == net.architecture
    assert loaded_adam.t == 1
    for a, b in zip(loaded_adam.m, adam.m):
        assert_array_equal(a, b)


def test_checkpoint_file(trained, tmp_path):
    net, adam = trained
    path = save_checkpoint(
        tmp_path / "sub" / "ckpt.json",
        {"actor": net, "copy": net.copy()},
        {"actor": adam},
        hyper={"gamma": 0.1},
        metadata={"cell": 2},
    )
    nets = load_networks(path)
    assert set(nets) == {"actor", "copy"}
    assert nets["actor"][1] is not None
    assert nets["copy"][1] is None
    assert nets["copy"][0].checksum() == net.checksum()
    doc = load_checkpoint(path)
    assert doc.metadata == {"cell": 2}

    text = describe_checkpoint(path)
    assert "actor: 5 -> 7:relu -> 3:decoupled_softmax" in text
    assert "adam step 1" in text
    assert "meta.cell = 2" in text


def test_newer_checkpoint_version_rejected(trained, tmp_path):
    net, _ = trained
    path = save_checkpoint(tmp_path / "ckpt.json", {"actor": net})
    doc = json.loads(path.read_text())
    doc["networks"]["actor"]["version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointError):
        load_networks(path)


def test_malformed_checkpoints_rejected(trained, tmp_path):
    net, _ = trained
    path = save_checkpoint(tmp_path / "ckpt.json", {"actor": net})
    doc = json.loads(path.read_text())
    doc["networks"]["actor"]["layers"][0]["bias"] = [0.0]
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointError):
        load_networks(path)

    path.write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)

    with pytest.raises(CheckpointError):
        loads_paramset(b'{"layers": [], "unexpected": 1}')

    with pytest.raises(DirpError):
        load_checkpoint(tmp_path / "missing.json")


def test_checkpoint_with_broken_chain(trained, tmp_path):
    net, _ = trained
    path = save_checkpoint(tmp_path / "ckpt.json", {"actor": net})
    doc = json.loads(path.read_text())
    layer = doc["networks"]["actor"]["layers"][1]
    layer["in_dim"] = 2
    layer["weight"] = [row[:2] for row in layer["weight"]]
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointError):
        load_networks(path)


SLICES = [
    {
        "name": "a",
        "thr_req": 4e6,
        "delay_req": 1e-3,
        "per_ue_offered_rate": 4e6,
        "max_users_per_group": 10,
        "packet_size": 1200,
    },
    {
        "name": "b",
        "thr_req": 1e6,
        "delay_req": 1.5e-3,
        "per_ue_offered_rate": 1e6,
        "max_users_per_group": 10,
        "packet_size": 900,
    },
]


def _explicit(mask):
    return {
        "topology": {
            "neighbor_sets": [[1], [0]],
            "gain": [[1.0, 0.1], [0.1, 1.0]],
            "nominal_users": [[3, 4], [5, 6]],
        },
        "slices": SLICES,
        "mask": mask,
    }


def test_inline_scenario():
    topology, slices, mask = parse_scenario(json.dumps(_explicit({"values": [[1.0, 0.5], [0.2, 0.4]]})))
    assert topology.num_cells == 2
    assert topology.neighbor_sets == [{1}, {0}]
    assert [s.name for s in slices] == ["a", "b"]
    assert mask.period == 2
    assert_array_equal(mask.at(1), [0.5, 0.4])


def test_csv_mask_rows_are_slices(tmp_path):
    (tmp_path / "mask.csv").write_text("1.0,0.5,0.25\n0.2,0.4,0.6\n")
    (tmp_path / "scenario.json").write_text(json.dumps(_explicit({"csv": "mask.csv"})))
    _, _, mask = load_scenario(tmp_path / "scenario.json")
    assert mask.values.shape == (2, 3)
    assert_array_equal(mask.at(2), [0.25, 0.6])


def test_synthetic_mask_scenario():
    _, _, mask = parse_scenario(json.dumps(_explicit({"synthetic": {"days": 7, "steps_per_day": 24}})), seed=5)
    assert mask.period == 168
    _, _, again = parse_scenario(json.dumps(_explicit({"synthetic": {"days": 7, "steps_per_day": 24}})), seed=5)
    assert_array_equal(mask.values, again.values)


def test_grid_scenario():
    doc = _explicit({"values": [[1.0], [1.0]]})
    doc["topology"] = {"grid": {"rows": 1, "cols": 2}, "nominal_users": [[3, 4], [5, 6]]}
    topology, _, _ = parse_scenario(json.dumps(doc))
    assert topology.neighbor_sets == [{1}, {0}]


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["mask"].update({"csv": "other.csv"}),
        lambda d: d["topology"].update({"grid": {"rows": 1, "cols": 2}}),
        lambda d: d["topology"].pop("gain"),
        lambda d: d.update({"extra": 1}),
        lambda d: d["slices"].pop(),
        lambda d: d["topology"].update({"neighbor_sets": [[1], []]}),
        lambda d: d["mask"].update({"values": [[1.5, 0.5], [0.2, 0.4]]}),
    ],
    ids=["two-masks", "two-layouts", "no-gain", "unknown-field", "slice-count", "asymmetric", "mask-range"],
)
def test_invalid_scenarios(mutate):
    doc = _explicit({"values": [[1.0, 0.5], [0.2, 0.4]]})
    mutate(doc)
    with pytest.raises(ConfigurationError):
        parse_scenario(json.dumps(doc))


def test_missing_csv_mask(tmp_path):
    with pytest.raises(ConfigurationError):
        parse_scenario(json.dumps(_explicit({"csv": "absent.csv"})), base=tmp_path)


def test_builtin_and_missing_scenarios(tmp_path):
    topology, _, _ = load_scenario("small")
    assert topology.num_cells == 3
    with pytest.raises(DirpError):
        load_scenario(tmp_path / "absent.json")


def test_settings_from_environment():
    settings = DirpSettings.from_env({"DIRP_LOG_LEVEL": "DEBUG", "DIRP_PROGRESS": "0", "HOME": "/root"})
    assert settings.log_level == "debug"
    assert settings.progress is False
    assert settings.output_dir == "runs"
    assert DirpSettings.from_env({}) == DirpSettings()
    with pytest.raises(ConfigurationError):
        DirpSettings.from_env({"DIRP_PROGRESS": "sometimes"})
