import json

import pytest

from phasescope.archive import manifest_hash
from phasescope.config import (MitigationConfig, ScanConfig, apply_overrides, expand_grid, load_config,
                               parse_overrides)
from phasescope.exception import ConfigError
from phasescope.model import Boundary
from phasescope.noise import ConfusionModel, NoiseModel

MINIMAL = {"model": {"num_sites": 4, "j2": [0.1, 0.2, 0.3]}}


def test_defaults():
    config = ScanConfig.from_dict(MINIMAL)
    assert config.boundary is Boundary.OPEN
    assert config.noise is None
    assert config.mitigation.levels == ["raw"]
    assert config.overlap_shots == config.shots
    assert config.calibration_shots == config.shots
    assert [mp.j2 for mp in config.grid()] == [0.1, 0.2, 0.3]
    assert config.ansatz.num_parameters == 12


def test_grid_range():
    assert expand_grid({"start": 0.2, "stop": 0.9, "step": 0.05}) == tuple(
        round(0.2 + 0.05 * k, 10) for k in range(15))
    assert expand_grid(0.4) == (0.4,)
    with pytest.raises(ConfigError):
        expand_grid({"start": 0.2, "stop": 0.9, "step": 0})


def test_mitigation_levels():
    assert MitigationConfig(trex=True, zne=True).levels == ["raw", "trex", "zne"]
    assert MitigationConfig(trex=True, twirl=True, zne=True).levels == ["raw", "trex", "twirl", "zne"]


@pytest.mark.parametrize("document", [
    {},
    {"model": {"num_sites": 4, "j2": [0.3, 0.2]}},
    {"model": {"num_sites": 4, "j2": [0.2, 0.2]}},
    {"model": {"num_sites": 4, "j2": []}},
    {"model": {"num_sites": 4, "j2": [0.1], "colour": 1}},
    {"model": {"num_sites": 4, "j2": [0.1]}, "extra": 1},
    {"model": {"num_sites": 4, "j2": [0.1]}, "mitigation": {"zne": True, "lambdas": [3, 5]}},
    {"model": {"num_sites": 4, "j2": [0.1]}, "mitigation": {"zne": True, "lambdas": [1, 2]}},
    {"model": {"num_sites": 4, "j2": [0.1]}, "mitigation": {"zne": True, "lambdas": [1]}},
    {"model": {"num_sites": 4, "j2": [0.1]}, "shots": 0},
    {"model": {"num_sites": 4, "j2": [0.1]}, "workers": 0},
    {"model": {"num_sites": 4, "j2": [0.1]}, "ansatz": {"layers": 0}},
    {"model": {"num_sites": 4, "j2": [-0.1]}},
    {"model": {"num_sites": 4, "j2": [0.1], "boundary": "twisted"}},
    {"model": {"num_sites": 4, "j2": [0.1]}, "noise": {"p2": 2.0}},
    {"model": {"num_sites": 4, "j2": [0.1]}, "noise": {"p01": 0.7}},
    {"model": {"num_sites": 4, "j2": [0.1]}, "optimizer": {"tolerance": 1}},
])
def test_invalid_documents(document):
    with pytest.raises(ConfigError):
        ScanConfig.from_dict(document)


def test_dict_round_trip():
    document = dict(MINIMAL, noise={"p2": 0.01, "epsilon": 0.03, "p01": 0.02, "p10": 0.05},
                    mitigation={"trex": True, "zne": True, "lambdas": [1, 3, 5]}, fs_shots=500)
    config = ScanConfig.from_dict(document)
    assert config.noise == NoiseModel(0.01, 0.03, ConfusionModel(0.02, 0.05))
    assert config.overlap_shots == 500
    assert ScanConfig.from_dict(config.to_dict()) == config
    assert ScanConfig.from_dict(json.loads(json.dumps(config.to_dict()))) == config


def test_parse_overrides():
    pairs = parse_overrides(["--noise.p2", "0.01", "--model.bx=0.2", "--output", "elsewhere"])
    assert pairs == [("noise.p2", "0.01"), ("model.bx", "0.2"), ("output", "elsewhere")]
    with pytest.raises(ConfigError):
        parse_overrides(["--noise.p2"])
    with pytest.raises(ConfigError):
        parse_overrides(["stray"])


def test_overrides_replace_ideal_noise():
    data = apply_overrides(dict(MINIMAL, noise="ideal"), [("noise.p2", "0.05"), ("model.bx", "0.2")])
    config = ScanConfig.from_dict(data)
    assert config.noise.cnot_pauli_error == 0.05
    assert config.noise.readout == NoiseModel().readout
    assert config.bx == 0.2
    assert MINIMAL["model"].get("bx") is None


def test_override_values_are_json():
    data = apply_overrides(MINIMAL, [("model.j2", "[0.5, 0.6]"), ("mitigation.trex", "true"),
                                     ("model.boundary", "periodic")])
    config = ScanConfig.from_dict(data)
    assert config.j2 == (0.5, 0.6)
    assert config.mitigation.trex
    assert config.boundary is Boundary.PERIODIC


def test_override_into_scalar_fails():
    with pytest.raises(ConfigError):
        apply_overrides(MINIMAL, [("model.j2.start", "3")])


def test_load_config(temp_dir):
    path = temp_dir / "scan.json"
    path.write_text(json.dumps(MINIMAL))
    config = load_config(str(path), [("seed", "99")])
    assert config.seed == 99
    with pytest.raises(ConfigError):
        load_config(str(temp_dir / "missing.json"))
    bad = temp_dir / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_hash_ignores_workers_and_output():
    a = ScanConfig.from_dict(dict(MINIMAL, workers=1, output="a")).to_dict()
    b = ScanConfig.from_dict(dict(MINIMAL, workers=4, output="b")).to_dict()
    c = ScanConfig.from_dict(dict(MINIMAL, seed=2)).to_dict()
    assert manifest_hash(a) == manifest_hash(b)
    assert manifest_hash(a) != manifest_hash(c)
    assert len(manifest_hash(a)) == 12
