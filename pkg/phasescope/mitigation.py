"""
Error mitigation: twirled readout (TREX), CNOT folding and exponential
zero-noise extrapolation.

TREX applies a random X layer before every measurement and undoes it
on the classical bits. Averaged over the layers, readout errors turn
into a plain attenuation of every Z string, prod_i c_i over its support,
which a calibration on |0...0> measures and the correction divides out.

Zero-noise extrapolation runs the circuit with every CNOT repeated
lambda times (lambda odd) and fits E(lambda) = E0 exp(a lambda) in the
log domain by weighted least squares.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .engine import Circuit, GateKind
from .exception import MitigationError, PhaseScopeUserError, UnmeasurableTermError
from .noise import apply_pauli_frame, random_pauli_frames
from .impl import bits
from .pauli import PauliSum, basis_frames, shot_values, split_by_basis
from .records import Basis, Estimate, framed_estimate, pool_frames

logger = logging.getLogger(__name__)

DEFAULT_TWIRLS = 16
DEFAULT_LAMBDAS = (1, 3, 5)

# Below this attenuation the correction amplifies shot noise too much.
MIN_ATTENUATION = 0.1

# Calibration stderr above this marks the calibration low-confidence.
_LOW_CONFIDENCE = 0.1


@dataclass(frozen=True, eq=False)
class TrexCalibration:
    """
    Attributes
    ----------
    factors : tuple of float
        c_i, the measured <Z_i> on |0...0> through twirled readout.
    stderr : tuple of float
    shots : int
    tag : str
        Scan point the calibration belongs to.
    low_confidence : bool
    """
    factors: Tuple[float, ...]
    stderr: Tuple[float, ...]
    shots: int
    tag: str = ""
    low_confidence: bool = False

    @property
    def num_qubits(self):
        return len(self.factors)

    @classmethod
    def ideal(cls, num_qubits):
        return cls((1.0,) * num_qubits, (0.0,) * num_qubits, 0, "ideal")

    def scale(self, support):
        return float(np.prod([self.factors[q] for q in support]))

    def to_dict(self):
        return {"factors": list(self.factors), "stderr": list(self.stderr), "shots": self.shots,
                "tag": self.tag, "low_confidence": self.low_confidence}


def split_shots(shots, parts):
    """Even split, the remainder going to the earliest parts."""
    if parts < 1:
        raise PhaseScopeUserError("Need at least one part")
    base, extra = divmod(int(shots), parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def derived_seed(seed, *key):
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1)[0])


def trex_execute(circuit: Circuit, params, executor, basis, shots: int, num_twirls: int = DEFAULT_TWIRLS,
                 seed: int = 0, gate_twirl: bool = False, noise_scale: int = 1, tags=None):
    """
    Execute num_twirls instantiations, each with its own random X layer
    before measurement and, with gate_twirl, its own random CNOT frames.

    Returns
    -------
    list of MeasurementRecord
        Raw counts with the X layer in readout_mask; frame_id is the
        instantiation index.
    """
    if num_twirls < 1:
        raise PhaseScopeUserError("Need at least one twirl instantiation")
    n = circuit.num_qubits
    rng = np.random.default_rng(seed)
    records = []
    for i, part in enumerate(split_shots(shots, num_twirls)):
        mask = int(rng.integers(0, 1 << n))
        executed = apply_pauli_frame(circuit, random_pauli_frames(circuit, rng)) if gate_twirl else circuit
        if part == 0:
            continue
        records.append(executor.run(executed, params, basis, part, derived_seed(seed, i), readout_mask=mask,
                                    circuit_id=circuit.circuit_id, frame_id=i,
                                    noise_scale=noise_scale, tags=dict(tags or {})))
    return records


def calibration_records(executor, num_qubits: int, shots: int, seed: int, num_twirls: int = DEFAULT_TWIRLS, tag=""):
    """The raw data of trex_calibrate, for archiving."""
    empty = Circuit(num_qubits, (), 0, "calibration")
    return trex_execute(empty, None, executor, Basis.Z, shots, num_twirls, seed,
                        tags={"role": "calibration", "point": tag})


def calibration_from_records(records, num_qubits: int, tag="") -> TrexCalibration:
    frames = pool_frames(records, Basis.Z)
    if frames is None:
        raise UnmeasurableTermError("Calibration needs Z-basis records")
    estimates = [framed_estimate(frames, lambda outcomes, q=q: bits.signs(outcomes, 1 << q))
                 for q in range(num_qubits)]
    stderr = tuple(e.stderr for e in estimates)
    low = any(s > _LOW_CONFIDENCE for s in stderr)
    if low:
        logger.warning("Low-confidence TREX calibration %s (max stderr %.3g)", tag, max(stderr))
    shots = int(sum(np.sum(weights) for _, weights, _ in frames))
    return TrexCalibration(tuple(e.value for e in estimates), stderr, shots, tag, low)


def trex_calibrate(executor, num_qubits: int, shots: int, seed: int, num_twirls: int = DEFAULT_TWIRLS,
                   tag="") -> TrexCalibration:
    """
    Measure each qubit's twirled readout attenuation c_i = 1 - p01 - p10
    by preparing |0...0> under random X layers.
    """
    records = calibration_records(executor, num_qubits, shots, seed, num_twirls, tag)
    return calibration_from_records(records, num_qubits, tag)


def trex_correct(obs: PauliSum, records, cal: TrexCalibration) -> Estimate:
    """
    Like expectation_from_counts, with every term divided by the
    product of c_i over its support.

    The stderr has two parts: the spread of the corrected per-shot value
    (and between twirl frames) of each basis group, and the calibration
    uncertainty, propagated to first order. A c_i error moves every term
    on qubit i the same way, so its contributions add before squaring.

    Raises
    ------
    MitigationError
        Some c_i is below 0.1.
    """
    if cal.num_qubits != obs.num_qubits:
        raise PhaseScopeUserError("Calibration for {0} qubits, observable on {1}".format(cal.num_qubits, obs.num_qubits))
    weak = [q for q, c in enumerate(cal.factors) if c < MIN_ATTENUATION]
    if weak:
        raise MitigationError("Readout attenuation below {0} on qubits {1}".format(MIN_ATTENUATION, weak))
    records = list(records)
    constant, groups = split_by_basis(obs)
    value = constant
    variance = 0.0
    # d value / d log c_i, up to sign
    sensitivity = np.zeros(cal.num_qubits)
    for basis, terms in groups.items():
        frames = basis_frames(records, basis, obs.num_qubits, terms[0].letters)
        scales = [cal.scale(term.support) for term in terms]
        estimate = framed_estimate(frames, lambda outcomes: shot_values(terms, outcomes, basis, scales))
        value += estimate.value
        variance += estimate.stderr ** 2
        for term, scale in zip(terms, scales):
            corrected = framed_estimate(frames, lambda outcomes: shot_values([term], outcomes, basis, [scale])).value
            for q in term.support:
                sensitivity[q] += corrected
    relative = np.asarray(cal.stderr) / np.asarray(cal.factors)
    variance += float(np.sum((sensitivity * relative) ** 2))
    return Estimate(value, math.sqrt(variance))


def fold_cnots(circuit: Circuit, factor: int) -> Circuit:
    """Replace every CNOT by factor copies of itself, factor odd."""
    if factor < 1 or factor % 2 == 0:
        raise MitigationError("Fold factor must be a positive odd integer, got {0}".format(factor))
    gates = []
    for gate in circuit.gates:
        gates.extend([gate] * factor if gate.kind is GateKind.CNOT else [gate])
    circuit_id = "{0}@fold{1}".format(circuit.circuit_id, factor) if factor > 1 else circuit.circuit_id
    return Circuit(circuit.num_qubits, tuple(gates), circuit.num_parameters, circuit_id)


@dataclass(frozen=True, eq=False)
class ZneFit:
    """
    Zero-noise extrapolation of one observable.

    e0, a, covariance and e0_stderr describe the chosen fit; fit_kind is
    "exponential" unless the estimates changed sign or hit zero, in
    which case the linear fit E0 + b lambda is used and the point is
    flagged. The linear fit is always recorded.
    """
    lambdas: Tuple[int, ...]
    estimates: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    e0: float
    a: float
    covariance: np.ndarray
    e0_stderr: float
    fit_kind: str
    residual: float
    linear_e0: float
    linear_slope: float
    linear_e0_stderr: float

    @property
    def flagged(self):
        return self.fit_kind != "exponential"

    def estimate(self):
        return Estimate(self.e0, self.e0_stderr)


def _weighted_line(x, y, sigma):
    """
    Least squares y = b0 + b1 x. Weighted by 1/sigma**2 with an absolute
    covariance when every sigma is positive; unweighted, covariance
    scaled by the residual variance, when none is.
    """
    design = np.column_stack([np.ones_like(x), x])
    if np.all(sigma > 0):
        w = 1.0 / sigma ** 2
        normal = design.T @ (w[:, None] * design)
        beta = np.linalg.solve(normal, design.T @ (w * y))
        covariance = np.linalg.inv(normal)
        residual = float(np.sum(w * (y - design @ beta) ** 2))
    else:
        beta = np.linalg.lstsq(design, y, rcond=None)[0]
        rss = float(np.sum((y - design @ beta) ** 2))
        dof = len(x) - 2
        covariance = np.linalg.inv(design.T @ design) * (rss / dof if dof > 0 else 0.0)
        residual = rss
    return beta, covariance, residual


def zne_fit(points) -> ZneFit:
    """
    Fit E(lambda) = E0 exp(a lambda).

    Parameters
    ----------
    points : iterable of (lambda, value, stderr)

    Raises
    ------
    MitigationError
        Fewer than two distinct fold factors, or a factor that is not a
        positive odd integer.
    """
    points = sorted((int(lam), float(value), float(err)) for lam, value, err in points)
    lambdas = np.array([p[0] for p in points], dtype=float)
    values = np.array([p[1] for p in points])
    sigma = np.array([p[2] for p in points])
    if len(set(lambdas)) < 2:
        raise MitigationError("Extrapolation needs at least two distinct fold factors")
    if any(lam < 1 or lam % 2 == 0 for lam in lambdas):
        raise MitigationError("Fold factors must be positive odd integers")
    if np.any(sigma > 0) and not np.all(sigma > 0):
        sigma = np.where(sigma > 0, sigma, sigma[sigma > 0].min())

    beta, cov, linear_residual = _weighted_line(lambdas, values, sigma)
    linear_e0, slope, linear_err = float(beta[0]), float(beta[1]), math.sqrt(max(0.0, cov[0, 0]))

    signs = np.sign(values)
    if np.all(values != 0) and np.all(signs == signs[0]):
        sign = float(signs[0])
        logs = np.log(np.abs(values))
        beta, cov, residual = _weighted_line(lambdas, logs, sigma / np.abs(values))
        e0 = sign * math.exp(beta[0])
        jacobian = np.diag([e0, 1.0])
        covariance = jacobian @ cov @ jacobian.T
        return ZneFit(tuple(int(l) for l in lambdas), tuple(values), tuple(sigma), e0, float(beta[1]),
                      covariance, math.sqrt(max(0.0, covariance[0, 0])), "exponential", residual,
                      linear_e0, slope, linear_err)

    logger.info("ZNE estimates change sign, falling back to a linear fit")
    return ZneFit(tuple(int(l) for l in lambdas), tuple(values), tuple(sigma), linear_e0, slope, cov,
                  linear_err, "linear", linear_residual, linear_e0, slope, linear_err)

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
