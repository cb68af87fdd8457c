"""
Scan configuration: one JSON document describing the model grid, the
ansatz, the noise, the mitigation switches and the shot budgets.

Command line flags override fields by dotted path, for example
``--noise.p2 0.01`` or ``--model.bx 0.2``. Values are parsed as JSON
literals and taken as plain strings when that fails.
"""
import copy
import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .exception import ConfigError, PhaseScopeUserError
from .mitigation import DEFAULT_LAMBDAS, DEFAULT_TWIRLS
from .model import Boundary, ModelParams
from .noise import NoiseModel
from .vqe import AnsatzSpec, ScanStrategy, Schedule

logger = logging.getLogger(__name__)

_SECTIONS = {
    "model": {"num_sites", "boundary", "bx", "j2", "j1"},
    "ansatz": {"layers"},
    "mitigation": {"trex", "twirl", "zne", "num_twirls", "lambdas", "calibration_shots"},
    "optimizer": {"max_iterations", "gradient_tol", "initial_step", "restarts"},
    "noise": {"p2", "epsilon", "p01", "p10", "readout", "batch_shots"},
}
_SCALARS = {"shots", "fs_shots", "seed", "workers", "output"}


@dataclass(frozen=True)
class MitigationConfig:
    trex: bool = False
    twirl: bool = False
    zne: bool = False
    num_twirls: int = DEFAULT_TWIRLS
    lambdas: Tuple[int, ...] = DEFAULT_LAMBDAS
    calibration_shots: Optional[int] = None

    @property
    def levels(self):
        """Mitigation levels reported per point, cumulative."""
        levels = ["raw"]
        if self.trex:
            levels.append("trex")
        if self.twirl:
            levels.append("twirl")
        if self.zne:
            levels.append("zne")
        return levels


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 5000
    gradient_tol: float = 1e-6
    initial_step: float = 0.5
    restarts: int = 0


@dataclass(frozen=True)
class ScanConfig:
    """
    Attributes
    ----------
    num_sites : int
    boundary : Boundary
    bx : float
    j2 : tuple of float
        Strictly increasing.
    layers : int
    noise : NoiseModel or None
        None for the ideal (noise-free, still sampled) device.
    mitigation : MitigationConfig
    optimizer : OptimizerConfig
    shots : int
        Per measurement basis and fold factor.
    fs_shots : int
        Per overlap circuit.
    seed : int
        Master seed every other seed is derived from.
    workers : int
    output : str
    """
    num_sites: int
    j2: Tuple[float, ...]
    boundary: Boundary = Boundary.OPEN
    bx: float = 0.1
    j1: float = 1.0
    layers: int = 1
    noise: Optional[NoiseModel] = None
    mitigation: MitigationConfig = field(default_factory=MitigationConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    shots: int = 100000
    fs_shots: Optional[int] = None
    seed: int = 1234
    workers: int = 1
    output: str = "runs"

    def grid(self) -> List[ModelParams]:
        return [ModelParams(self.num_sites, j2, self.bx, self.boundary, self.j1) for j2 in self.j2]

    @property
    def ansatz(self) -> AnsatzSpec:
        return AnsatzSpec(self.num_sites, self.layers, self.boundary)

    @property
    def overlap_shots(self):
        return self.fs_shots if self.fs_shots is not None else self.shots

    @property
    def calibration_shots(self):
        m = self.mitigation
        return m.calibration_shots if m.calibration_shots is not None else self.shots

    def strategy(self) -> ScanStrategy:
        o = self.optimizer
        schedule = Schedule(max_iterations=o.max_iterations, gradient_tol=o.gradient_tol,
                            initial_step=o.initial_step)
        return ScanStrategy(seed=self.seed, schedule=schedule, workers=self.workers, restarts=o.restarts)

    def to_dict(self):
        """The canonical form that is hashed into the run directory name."""
        m = self.mitigation
        o = self.optimizer
        return {
            "model": {"num_sites": self.num_sites, "boundary": self.boundary.value, "bx": self.bx,
                      "j1": self.j1, "j2": list(self.j2)},
            "ansatz": {"layers": self.layers},
            "noise": self.noise.to_dict() if self.noise is not None else "ideal",
            "mitigation": {"trex": m.trex, "twirl": m.twirl, "zne": m.zne, "num_twirls": m.num_twirls,
                           "lambdas": list(m.lambdas), "calibration_shots": m.calibration_shots},
            "optimizer": {"max_iterations": o.max_iterations, "gradient_tol": o.gradient_tol,
                          "initial_step": o.initial_step, "restarts": o.restarts},
            "shots": self.shots,
            "fs_shots": self.fs_shots,
            "seed": self.seed,
            "workers": self.workers,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, data):
        """
        Raises
        ------
        ConfigError
            Unknown keys, missing model fields or invalid values.
        """
        try:
            return _parse(data)
        except ConfigError:
            raise
        except (PhaseScopeUserError, KeyError, TypeError, ValueError) as ex:
            raise ConfigError("Invalid scan configuration: {0}".format(ex)) from ex


def _check_keys(data, allowed, where):
    if not isinstance(data, dict):
        raise ConfigError("{0} must be an object".format(where))
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError("Unknown key(s) in {0}: {1}".format(where, ", ".join(unknown)))


def expand_grid(j2):
    """A J2 list, or an inclusive {start, stop, step} range."""
    if isinstance(j2, dict):
        _check_keys(j2, {"start", "stop", "step"}, "model.j2")
        start, stop, step = float(j2["start"]), float(j2["stop"]), float(j2["step"])
        if step <= 0:
            raise ConfigError("model.j2.step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 10) for k in range(max(count, 0)))
    if isinstance(j2, (int, float)):
        return (float(j2),)
    return tuple(float(v) for v in j2)


def _parse(data):
    _check_keys(data, set(_SECTIONS) | _SCALARS, "config")
    model = data.get("model")
    if model is None:
        raise ConfigError("Missing model section")
    _check_keys(model, _SECTIONS["model"], "model")
    j2 = expand_grid(model["j2"])
    if not j2:
        raise ConfigError("Empty J2 grid")
    if any(b <= a for a, b in zip(j2, j2[1:])):
        raise ConfigError("model.j2 must be strictly increasing")

    ansatz = data.get("ansatz", {})
    _check_keys(ansatz, _SECTIONS["ansatz"], "ansatz")

    noise = data.get("noise", "ideal")
    if noise == "ideal" or noise is None:
        noise = None
    else:
        _check_keys(noise, _SECTIONS["noise"], "noise")
        noise = NoiseModel.from_dict(noise)

    mitigation = data.get("mitigation", {})
    _check_keys(mitigation, _SECTIONS["mitigation"], "mitigation")
    mitigation = MitigationConfig(
        trex=bool(mitigation.get("trex", False)),
        twirl=bool(mitigation.get("twirl", False)),
        zne=bool(mitigation.get("zne", False)),
        num_twirls=int(mitigation.get("num_twirls", DEFAULT_TWIRLS)),
        lambdas=tuple(int(v) for v in mitigation.get("lambdas", DEFAULT_LAMBDAS)),
        calibration_shots=mitigation.get("calibration_shots"))
    if mitigation.num_twirls < 1:
        raise ConfigError("mitigation.num_twirls must be positive")
    if mitigation.zne:
        lambdas = mitigation.lambdas
        if len(set(lambdas)) < 2 or any(v < 1 or v % 2 == 0 for v in lambdas):
            raise ConfigError("mitigation.lambdas needs two or more distinct positive odd factors")
        if 1 not in lambdas:
            raise ConfigError("mitigation.lambdas must include the unfolded circuit, 1")

    optimizer = data.get("optimizer", {})
    _check_keys(optimizer, _SECTIONS["optimizer"], "optimizer")
    optimizer = OptimizerConfig(**optimizer)

    config = ScanConfig(
        num_sites=int(model["num_sites"]),
        j2=j2,
        boundary=Boundary(model.get("boundary", "open")),
        bx=float(model.get("bx", 0.1)),
        j1=float(model.get("j1", 1.0)),
        layers=int(ansatz.get("layers", 1)),
        noise=noise,
        mitigation=mitigation,
        optimizer=optimizer,
        shots=int(data.get("shots", 100000)),
        fs_shots=None if data.get("fs_shots") is None else int(data["fs_shots"]),
        seed=int(data.get("seed", 1234)),
        workers=int(data.get("workers", 1)),
        output=str(data.get("output", "runs")))
    if config.shots < 1 or config.overlap_shots < 1 or config.calibration_shots < 1:
        raise ConfigError("Shot counts must be positive")
    if config.workers < 1:
        raise ConfigError("workers must be positive")
    if config.layers < 1:
        raise ConfigError("ansatz.layers must be positive")
    config.grid()
    return config


def parse_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def apply_overrides(data, overrides):
    """
    Return a copy of the config document with each (dotted path, value)
    pair set. A noise section given as "ideal" is replaced by the default
    noise model before one of its fields is set.
    """
    data = copy.deepcopy(data)
    for path, value in overrides:
        keys = path.split(".")
        if not all(keys):
            raise ConfigError("Bad override path {0!r}".format(path))
        node = data
        for key in keys[:-1]:
            child = node.get(key)
            if key == "noise" and not isinstance(child, dict):
                child = {"p2": NoiseModel().cnot_pauli_error, "epsilon": NoiseModel().cnot_coherent_angle,
                         "p01": NoiseModel().readout.p01, "p10": NoiseModel().readout.p10}
            elif child is None:
                child = {}
            elif not isinstance(child, dict):
                raise ConfigError("Cannot set {0}: {1} is not a section".format(path, key))
            node[key] = child
            node = child
        node[keys[-1]] = parse_value(value) if isinstance(value, str) else value
        logger.debug("Override %s = %r", path, node[keys[-1]])
    return data


def parse_overrides(args):
    """
    ['--noise.p2', '0.01', '--model.bx=0.2'] -> [('noise.p2', '0.01'), ('model.bx', '0.2')]
    """
    pairs = []
    args = list(args)
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith("--"):
            raise ConfigError("Unexpected argument {0!r}".format(arg))
        if "=" in arg:
            path, value = arg[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(args):
                raise ConfigError("Missing value for {0}".format(arg))
            path, value = arg[2:], args[i + 1]
            i += 2
        pairs.append((path, value))
    return pairs


def load_document(path):
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, ValueError) as ex:
        raise ConfigError("Cannot read config {0}: {1}".format(path, ex)) from ex


def load_config(path=None, overrides=()) -> ScanConfig:
    data = load_document(path) if path else {}
    return ScanConfig.from_dict(apply_overrides(data, overrides))

# Copyright 2026, phasescope developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
