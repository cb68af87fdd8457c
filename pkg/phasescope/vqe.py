"""
Variational ground states of the ANNNI chain.

The ansatz is a brick of RY rows and staggered CNOT rounds. Parameters
are trained on the noise-free statevector by gradient descent with
parameter-shift gradients and a backtracking line search. Scans chain
points together, each point starting from the optimum of the previous
one; long chains first fit the exact ground state by overlap before
switching to the energy.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import dask
import numpy as np

from .engine import (Circuit, Gate, Statevector, compile_observable,
                     run_amplitudes, run_batch)
from .exception import (DimensionMismatchError, OptimizationError, PhaseScopeError,
                        PhaseScopeUserError)
from .impl import bits
from .model import (Boundary, ModelParams, SpectrumResult, build_hamiltonian,
                    classical_configuration, exact_diagonalize)
from .symmetry import SymmetryGroup

logger = logging.getLogger(__name__)

# Chains at least this long are bootstrapped through the overlap cost.
BOOTSTRAP_SITES = 12

_SHIFT = 0.5 * math.pi


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int
    layers: int = 1
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.layers < 1:
            raise PhaseScopeUserError("The ansatz needs at least one layer")
        if self.num_qubits < 2:
            raise PhaseScopeUserError("The ansatz needs at least two qubits")

    @property
    def num_parameters(self):
        return self.num_qubits * (2 * self.layers + 1)

    @property
    def final_row(self):
        """Parameter index of the closing RY on qubit 0."""
        return 2 * self.layers * self.num_qubits

    @classmethod
    def for_model(cls, mp: ModelParams, layers=1):
        return cls(mp.num_sites, layers, mp.boundary)

    def to_dict(self):
        return {"num_qubits": self.num_qubits, "layers": self.layers, "boundary": self.boundary.value}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class ParamVector:
    """Rotation angles in radians, in parameter slot order."""
    angles: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in np.ravel(self.angles)))

    def __len__(self):
        return len(self.angles)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.angles, dtype=dtype or float)

    @classmethod
    def from_array(cls, values):
        return cls(tuple(np.asarray(values, dtype=float).tolist()))


class CostKind(Enum):
    ENERGY = "energy"
    NEGATIVE_OVERLAP = "negative-overlap"


@dataclass(frozen=True)
class Schedule:
    """
    Gradient descent settings. The run stops when the gradient norm
    drops below gradient_tol or after max_iterations steps.
    """
    max_iterations: int = 5000
    gradient_tol: float = 1e-6
    initial_step: float = 0.5
    max_step: float = 8.0
    shrink: float = 0.5
    growth: float = 2.0
    armijo: float = 1e-4
    min_step: float = 1e-12


@dataclass(frozen=True, eq=False)
class OptimizeReport:
    final_params: ParamVector
    final_cost: float
    cost_history: Tuple[float, ...]
    converged: bool
    cost_kind: CostKind
    iterations: int = 0
    gradient_norm: float = float("nan")
    start: str = ""


def cnot_rounds(spec: AnsatzSpec):
    """
    (even, odd) CNOT bonds of one layer. A periodic chain adds the wrap
    bond (N-1, 0) to the round matching the parity of N-1.
    """
    n = spec.num_qubits
    even = [(i, i + 1) for i in range(0, n - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n - 1, 2)]
    if spec.boundary is Boundary.PERIODIC and n > 2:
        (odd if (n - 1) % 2 else even).append((n - 1, 0))
    return even, odd


def build_ansatz(spec: AnsatzSpec) -> Circuit:
    n = spec.num_qubits
    even, odd = cnot_rounds(spec)
    gates = []
    slot = 0

    def rotation_row():
        nonlocal slot
        for q in range(n):
            gates.append(Gate.ry(q, param=slot))
            slot += 1

    for _ in range(spec.layers):
        rotation_row()
        gates.extend(Gate.cnot(c, t) for c, t in even)
        rotation_row()
        gates.extend(Gate.cnot(c, t) for c, t in odd)
    rotation_row()
    return Circuit(n, tuple(gates), slot, "ansatz-N{0}-L{1}".format(n, spec.layers))


class EnergyCost:
    """<H> of the circuit output, with a batched form for gradients."""
    kind = CostKind.ENERGY

    def __init__(self, circuit: Circuit, hamiltonian):
        if hamiltonian.num_qubits != circuit.num_qubits:
            raise DimensionMismatchError("Hamiltonian and circuit sizes differ")
        self.circuit = circuit
        self.observable = compile_observable(hamiltonian)

    def __call__(self, params):
        return self.observable(run_amplitudes(self.circuit, params))

    def batch(self, params_matrix):
        return self.observable.batch(run_batch(self.circuit, params_matrix))


class OverlapCost:
    """1 - |<target|C(params)|0>|**2."""
    kind = CostKind.NEGATIVE_OVERLAP

    def __init__(self, circuit: Circuit, target: Statevector):
        if target.num_qubits != circuit.num_qubits:
            raise DimensionMismatchError("Target and circuit sizes differ")
        self.circuit = circuit
        self.target = target.amplitudes

    def __call__(self, params):
        return 1.0 - abs(np.vdot(self.target, run_amplitudes(self.circuit, params))) ** 2

    def batch(self, params_matrix):
        return 1.0 - np.abs(run_batch(self.circuit, params_matrix) @ self.target.conj()) ** 2


def energy_cost(circuit, params, hamiltonian) -> float:
    return EnergyCost(circuit, hamiltonian)(params)


def overlap_cost(circuit, params, target: Statevector) -> float:
    return OverlapCost(circuit, target)(params)


def parameter_shift_gradient(cost, params):
    """
    g_k = [C(params + pi/2 e_k) - C(params - pi/2 e_k)] / 2.

    Exact when every parameter drives exactly one RY or RZ gate. Costs
    with a ``batch`` method get all shifted points in one call.
    """
    params = np.asarray(params, dtype=float)
    size = params.size
    shifts = np.concatenate([np.eye(size), -np.eye(size)]) * _SHIFT
    points = params[None, :] + shifts
    if hasattr(cost, "batch"):
        values = np.asarray(cost.batch(points), dtype=float)
    else:
        values = np.array([cost(p) for p in points], dtype=float)
    return 0.5 * (values[:size] - values[size:])


def _checked(value):
    value = float(value)
    if not math.isfinite(value):
        raise OptimizationError("Non-finite cost {0!r}".format(value))
    return value


def optimize(circuit, initial, cost: Callable, schedule: Optional[Schedule] = None,
             cost_kind: Optional[CostKind] = None, gradient: Optional[Callable] = None,
             start="") -> OptimizeReport:
    """
    Gradient descent with a backtracking (Armijo) line search.

    Parameters
    ----------
    circuit : Circuit
        Only used to check the parameter count.
    initial : ParamVector or array_like
    cost : callable
        Maps a parameter array to a real cost.
    schedule : Schedule, optional
    cost_kind : CostKind, optional
        Taken from ``cost.kind`` when not given.
    gradient : callable, optional
        Defaults to the parameter-shift rule.

    Raises
    ------
    OptimizationError
        The cost is not finite somewhere along the path.
    """
    schedule = schedule or Schedule()
    if cost_kind is None:
        cost_kind = getattr(cost, "kind", CostKind.ENERGY)
    gradient = gradient or (lambda p: parameter_shift_gradient(cost, p))
    phi = np.array(initial, dtype=float)
    if circuit is not None and phi.size != circuit.num_parameters:
        raise DimensionMismatchError(
            "Circuit has {0} parameters, initial point has {1}".format(circuit.num_parameters, phi.size))
    if not np.all(np.isfinite(phi)):
        raise OptimizationError("Initial parameters are not finite")

    value = _checked(cost(phi))
    history = [value]
    step = schedule.initial_step
    converged = False
    gnorm = float("nan")
    iteration = 0
    for iteration in range(1, schedule.max_iterations + 1):
        g = np.asarray(gradient(phi), dtype=float)
        gnorm = float(np.linalg.norm(g))
        if not math.isfinite(gnorm):
            raise OptimizationError("Non-finite gradient")
        if gnorm < schedule.gradient_tol:
            converged = True
            break
        while True:
            trial = phi - step * g
            trial_value = _checked(cost(trial))
            if trial_value <= value - schedule.armijo * step * gnorm * gnorm:
                break
            step *= schedule.shrink
            if step < schedule.min_step:
                break
        if step < schedule.min_step:
            logger.debug("Line search stalled at |g|=%.3g after %d iterations", gnorm, iteration)
            break
        phi, value = trial, trial_value
        history.append(value)
        step = min(step * schedule.growth, schedule.max_step)
        if iteration % 100 == 0:
            logger.debug("iteration %d: cost %.12g, |g| %.3g", iteration, value, gnorm)
    return OptimizeReport(ParamVector.from_array(phi), value, tuple(history), converged,
                          cost_kind, iteration, gnorm, start)


def initial_parameters(spec: AnsatzSpec, seed: int, scale: float = 0.1) -> np.ndarray:
    """Uniform in [-scale, scale], away from the |0...0> saddle."""
    return np.random.default_rng(seed).uniform(-scale, scale, spec.num_parameters)


def classical_seed(spec: AnsatzSpec, configuration: int, base) -> np.ndarray:
    """
    base plus pi on the closing RY row wherever the classical
    configuration has a 1, so that near-zero angles elsewhere prepare
    that basis state.
    """
    angles = np.array(base, dtype=float)
    for q in range(spec.num_qubits):
        if (configuration >> q) & 1:
            angles[spec.final_row + q] += math.pi
    return angles


def desymmetrize_target(spec: SpectrumResult, generators: SymmetryGroup, breaking_tol=None) -> Statevector:
    """
    A symmetry-broken representative of the ED ground space.

    Picks the basis state b with the largest ground-state amplitude,
    projects it onto the ground space, and keeps the part of that state
    nearer (in Hamming distance) to b than to any other image of b under
    the group. The cut is only accepted when it stays within breaking_tol
    (default 1e-2 * max(1, |E0|)) of the ground energy; otherwise there
    is no broken symmetry to speak of and the ground-space state is
    returned as is. The global phase makes the amplitude of b positive.
    """
    n = spec.model.num_sites
    ground = spec.vectors[:, :max(1, spec.ground_degeneracy)]
    magnitudes = np.abs(spec.vectors[:, 0])
    if magnitudes.max() - magnitudes.min() < 1e-12:
        logger.info("Flat ground state amplitudes, using basis state 0")
        dominant = 0
    else:
        dominant = int(np.argmax(magnitudes))

    aligned = ground @ ground[dominant, :].conj()
    aligned = aligned * (abs(aligned[dominant]) / aligned[dominant])
    aligned = aligned / np.linalg.norm(aligned)

    orbit = [o for o in generators.orbit(dominant) if o != dominant]
    if not orbit:
        return Statevector(aligned, n)

    index = bits.basis_indices(n)
    own = bits.bit_matrix(index ^ dominant, n).sum(axis=1)
    nearest_other = np.min([bits.bit_matrix(index ^ o, n).sum(axis=1) for o in orbit], axis=0)
    broken = np.where(own <= nearest_other, aligned, 0.0)
    broken = broken / np.linalg.norm(broken)

    if breaking_tol is None:
        breaking_tol = 1e-2 * max(1.0, abs(spec.ground_energy))
    cost = compile_observable(build_hamiltonian(spec.model))(broken) - spec.ground_energy
    if cost > breaking_tol:
        logger.debug("Symmetry cut costs %.3g, keeping the symmetric state", cost)
        return Statevector(aligned, n)
    return Statevector(broken, n)


class BootstrapPolicy(Enum):
    AUTO = "auto"
    ALWAYS = "always"
    NEVER = "never"


@dataclass(frozen=True)
class ScanStrategy:
    """
    How scan_optimize seeds and runs each point.

    Attributes
    ----------
    warm_start : bool
        Start each point from the previous point's optimum.
    classical_seed : bool
        Also start from the lowest classical configuration and keep
        whichever start ends lower.
    bootstrap : BootstrapPolicy
        AUTO fits the desymmetrized ED ground state by overlap first for
        chains of 12 sites and more.
    seed : int
    init_scale : float
    schedule : Schedule
    workers : int
        Thread pool size when points are independent (warm_start off).
    restarts : int
        Extra random starts per point, each with its own derived seed.
    """
    warm_start: bool = True
    classical_seed: bool = True
    bootstrap: BootstrapPolicy = BootstrapPolicy.AUTO
    seed: int = 1234
    init_scale: float = 0.1
    schedule: Schedule = field(default_factory=Schedule)
    workers: int = 1
    restarts: int = 0


@dataclass(frozen=True, eq=False)
class ScanPointResult:
    model: ModelParams
    params: Optional[ParamVector]
    report: Optional[OptimizeReport]
    failed: bool = False
    message: str = ""
    bootstrap_report: Optional[OptimizeReport] = None

    @property
    def energy(self):
        return self.report.final_cost if self.report else float("nan")


def _bootstrap_needed(mp, strategy):
    if strategy.bootstrap is BootstrapPolicy.ALWAYS:
        return True
    return strategy.bootstrap is BootstrapPolicy.AUTO and mp.num_sites >= BOOTSTRAP_SITES


def _optimize_point(mp, spec, circuit, strategy, base, warm):
    try:
        energy = EnergyCost(circuit, build_hamiltonian(mp))
        first = warm if warm is not None else base
        if _bootstrap_needed(mp, strategy):
            spectrum = exact_diagonalize(mp, num_states=8)
            target = desymmetrize_target(spectrum, SymmetryGroup.for_model(mp))
            fitted = optimize(circuit, first, OverlapCost(circuit, target), strategy.schedule, start="bootstrap")
            report = optimize(circuit, fitted.final_params, energy, strategy.schedule, start="bootstrap")
            return ScanPointResult(mp, report.final_params, report, bootstrap_report=fitted)

        starts = [("warm" if warm is not None else "random", first)]
        if strategy.classical_seed:
            starts.append(("classical", classical_seed(spec, classical_configuration(mp), base)))
        for i in range(strategy.restarts):
            seed = int(np.random.SeedSequence(strategy.seed, spawn_key=(i + 1,)).generate_state(1)[0])
            starts.append(("restart{0}".format(i + 1), initial_parameters(spec, seed, strategy.init_scale)))
        best = None
        for label, start in starts:
            report = optimize(circuit, start, energy, strategy.schedule, start=label)
            if best is None or report.final_cost < best.final_cost:
                best = report
        logger.info("J2=%.4g Bx=%.4g: E=%.10g from %s start (%d iterations)",
                    mp.j2, mp.bx, best.final_cost, best.start, best.iterations)
        return ScanPointResult(mp, best.final_params, best)
    except PhaseScopeError as ex:
        logger.warning("Optimization failed at J2=%g: %s", mp.j2, ex)
        return ScanPointResult(mp, None, None, failed=True, message=str(ex))


def scan_optimize(grid: Sequence[ModelParams], spec: AnsatzSpec,
                  strategy: Optional[ScanStrategy] = None) -> List[ScanPointResult]:
    """
    Optimize every grid point, results in grid order.

    With warm starts the points run one after the other. Without them
    the points are independent and go through a dask thread pool.
    A failing point is flagged and does not stop the scan.
    """
    grid = list(grid)
    if not grid:
        raise PhaseScopeUserError("Empty scan grid")
    strategy = strategy or ScanStrategy()
    circuit = build_ansatz(spec)
    base = initial_parameters(spec, strategy.seed, strategy.init_scale)
    for mp in grid:
        if mp.num_sites != spec.num_qubits:
            raise DimensionMismatchError("Grid point with {0} sites for a {1} qubit ansatz"
                                         .format(mp.num_sites, spec.num_qubits))
    if not strategy.warm_start:
        tasks = [dask.delayed(_optimize_point)(mp, spec, circuit, strategy, base, None) for mp in grid]
        return list(dask.compute(*tasks, scheduler="threads", num_workers=max(1, strategy.workers)))

    results = []
    warm = None
    for mp in grid:
        result = _optimize_point(mp, spec, circuit, strategy, base, warm)
        if not result.failed:
            warm = np.asarray(result.params)
        results.append(result)
    return results


def save_parameters(path, result: ScanPointResult, spec: AnsatzSpec, seed: int):
    """The per-point handoff file between optimization and execution."""
    report = result.report
    data = {
        "model": result.model.to_dict(),
        "ansatz": spec.to_dict(),
        "angles": list(result.params.angles) if result.params else None,
        "final_cost": report.final_cost if report else None,
        "cost_kind": report.cost_kind.value if report else None,
        "converged": report.converged if report else False,
        "iterations": report.iterations if report else 0,
        "start": report.start if report else "",
        "seed": seed,
        "failed": result.failed,
        "message": result.message,
    }
    with open(path, "w") as f:
        json.dump(data, f, sort_keys=True, indent=2)
        f.write("\n")


def load_parameters(path):
    """
    Returns
    -------
    model : ModelParams
    spec : AnsatzSpec
    params : ParamVector or None
        None for a point that failed to optimize.
    data : dict
        The whole file.
    """
    with open(path, "r") as f:
        data = json.load(f)
    params = ParamVector(data["angles"]) if data.get("angles") is not None else None
    return ModelParams.from_dict(data["model"]), AnsatzSpec.from_dict(data["ansatz"]), params, data

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
