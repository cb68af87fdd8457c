"""
A simulated noisy device.

Noise enters in two places. After every CNOT the pair picks up a
systematic ZZ over-rotation and, with probability p2, a uniformly random
non-identity two-qubit Pauli. After measurement every bit is flipped
according to its qubit's confusion probabilities. Single-qubit gates
are ideal.

Shots are simulated as trajectories: each shot draws a fault pattern
(which CNOTs failed and how), shots sharing a pattern share one
statevector, and the outcomes are drawn from that state. This is the
same distribution as simulating every shot on its own.

Pauli frames for twirling the CNOTs live here too, since they are
tied to how the device applies its gate noise.
"""
import functools
import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .engine import Circuit, Gate, GateKind, bind_parameters, draw_outcomes, rotate_to_basis, unitary
from .exception import PhaseScopeUserError
from .impl import kernels
from .pauli import PauliTerm, conjugate_by_cnot
from .records import Basis, MeasurementRecord

logger = logging.getLogger(__name__)

PAULI_PAIRS = tuple("".join(p) for p in itertools.product("IXYZ", repeat=2))

## Faults drawn after a CNOT, index k + 1 in a fault pattern.
FAULT_PAIRS = PAULI_PAIRS[1:]

_DEFAULT_BATCH_SHOTS = 25000


@dataclass(frozen=True)
class ConfusionModel:
    """
    Readout errors of one qubit.

    Attributes
    ----------
    p01 : float
        Probability of reading 1 when the qubit is in 0.
    p10 : float
        Probability of reading 0 when the qubit is in 1.
    """
    p01: float = 0.0
    p10: float = 0.0

    def __post_init__(self):
        for name in ("p01", "p10"):
            value = float(getattr(self, name))
            if not 0.0 <= value < 0.5:
                raise PhaseScopeUserError("{0} must be in [0, 0.5), got {1}".format(name, value))
            object.__setattr__(self, name, value)

    @property
    def attenuation(self):
        """Scale of <Z> after the readout is symmetrized by X-frames."""
        return 1.0 - self.p01 - self.p10


@dataclass(frozen=True)
class NoiseModel:
    """
    Attributes
    ----------
    cnot_pauli_error : float
        Probability p2 of a random non-identity Pauli after each CNOT.
    cnot_coherent_angle : float
        ZZ over-rotation angle applied after each CNOT, radians.
    readout : ConfusionModel or tuple of ConfusionModel
        One model shared by every qubit, or one per qubit.
    batch_shots : int
        Shots per seeded batch. Batch b draws from
        SeedSequence(seed, spawn_key=(b,)).
    """
    cnot_pauli_error: float = 0.01
    cnot_coherent_angle: float = 0.02
    readout: Union[ConfusionModel, Tuple[ConfusionModel, ...]] = ConfusionModel(0.02, 0.04)
    batch_shots: int = _DEFAULT_BATCH_SHOTS

    def __post_init__(self):
        if not 0.0 <= self.cnot_pauli_error <= 1.0:
            raise PhaseScopeUserError("cnot_pauli_error must be in [0, 1]")
        if not np.isfinite(self.cnot_coherent_angle):
            raise PhaseScopeUserError("cnot_coherent_angle must be finite")
        if self.batch_shots < 1:
            raise PhaseScopeUserError("batch_shots must be positive")
        if not isinstance(self.readout, ConfusionModel):
            object.__setattr__(self, "readout", tuple(self.readout))

    @classmethod
    def ideal(cls):
        return cls(0.0, 0.0, ConfusionModel())

    @classmethod
    def readout_only(cls, p01, p10):
        return cls(0.0, 0.0, ConfusionModel(p01, p10))

    def confusion(self, qubit):
        if isinstance(self.readout, ConfusionModel):
            return self.readout
        return self.readout[qubit]

    @property
    def has_gate_noise(self):
        return self.cnot_pauli_error > 0 or self.cnot_coherent_angle != 0

    def to_dict(self):
        if isinstance(self.readout, ConfusionModel):
            readout = {"p01": self.readout.p01, "p10": self.readout.p10}
        else:
            readout = [{"p01": c.p01, "p10": c.p10} for c in self.readout]
        return {"p2": self.cnot_pauli_error, "epsilon": self.cnot_coherent_angle, "readout": readout}

    @classmethod
    def from_dict(cls, data):
        """
        Accepts {p2, epsilon, p01, p10} with a shared confusion model, or
        {p2, epsilon, readout: [{p01, p10}, ...]} with one per qubit.
        """
        defaults = cls()
        readout = data.get("readout")
        if isinstance(readout, dict):
            readout = ConfusionModel(**readout)
        elif readout is not None:
            readout = tuple(ConfusionModel(**r) for r in readout)
        else:
            readout = ConfusionModel(data.get("p01", defaults.readout.p01), data.get("p10", defaults.readout.p10))
        return cls(float(data.get("p2", defaults.cnot_pauli_error)),
                   float(data.get("epsilon", defaults.cnot_coherent_angle)),
                   readout,
                   int(data.get("batch_shots", defaults.batch_shots)))


def batch_rng(seed, batch):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(batch,)))


@functools.lru_cache(maxsize=1024)
def _fault_term(num_qubits, control, target, fault):
    return PauliTerm.on(num_qubits, {control: FAULT_PAIRS[fault - 1][0], target: FAULT_PAIRS[fault - 1][1]})


class _Trajectories:
    """Statevectors of one circuit under every fault pattern it meets."""

    def __init__(self, circuit, params, noise):
        self.circuit = circuit
        self.params = params
        self.noise = noise
        self.n = circuit.num_qubits
        self.cnots = [i for i, g in enumerate(circuit.gates) if g.kind is GateKind.CNOT]
        # checkpoints[k]: fault-free state right after CNOT k and its ZZ error.
        self.checkpoints = []
        psi = np.zeros(1 << self.n, dtype=complex)
        psi[0] = 1.0
        start = 0
        for position in self.cnots:
            psi = self._advance(psi, start, position + 1)
            self.checkpoints.append(psi)
            start = position + 1
        self.fault_free = self._advance(psi, start, len(circuit.gates))

    def _advance(self, psi, start, stop):
        for gate in self.circuit.gates[start:stop]:
            if gate.kind is GateKind.CNOT:
                psi = kernels.apply_cnot(psi, self.n, *gate.qubits)
                if self.noise.cnot_coherent_angle:
                    psi = kernels.apply_zz_rotation(psi, self.n, gate.qubits[0], gate.qubits[1],
                                                    self.noise.cnot_coherent_angle)
            else:
                psi = kernels.apply_single(psi, self.n, gate.qubits[0], gate.matrix(self.params))
        return psi

    def state(self, pattern):
        faults = np.flatnonzero(pattern)
        if faults.size == 0:
            return self.fault_free
        psi = self.checkpoints[faults[0]]
        for k in range(faults[0], len(self.cnots)):
            if pattern[k]:
                control, target = self.circuit.gates[self.cnots[k]].qubits
                psi = _fault_term(self.n, control, target, int(pattern[k])).apply(psi)
            stop = self.cnots[k + 1] + 1 if k + 1 < len(self.cnots) else len(self.circuit.gates)
            psi = self._advance(psi, self.cnots[k] + 1, stop)
        return psi


def apply_readout(outcomes, noise: NoiseModel, num_qubits, rng):
    """Flip every bit of every outcome per its qubit's confusion model."""
    outcomes = np.array(outcomes, dtype=np.int64)
    for q in range(num_qubits):
        confusion = noise.confusion(q)
        if confusion.p01 == 0 and confusion.p10 == 0:
            continue
        bit = (outcomes >> q) & 1
        threshold = np.where(bit == 0, confusion.p01, confusion.p10)
        flip = rng.random(outcomes.size) < threshold
        outcomes ^= flip.astype(np.int64) << q
    return outcomes


def noisy_execute(circuit: Circuit, params, noise: NoiseModel, basis, shots: int, seed: int,
                  readout_mask: int = 0, **metadata) -> MeasurementRecord:
    """
    Execute shots trajectories and read them out through the noisy
    readout.

    Parameters
    ----------
    readout_mask : int
        X gates on these qubits right before measurement (after the
        basis rotation). The record stores raw counts plus the mask.
    **metadata
        Passed on to MeasurementRecord (circuit_id, frame_id, tags, ...).
    """
    if shots < 1:
        raise PhaseScopeUserError("Need at least one shot")
    basis = Basis(basis)
    params = bind_parameters(circuit, params)
    n = circuit.num_qubits
    dim = 1 << n
    trajectories = _Trajectories(circuit, params, noise)
    num_cnots = len(trajectories.cnots)
    histogram = np.zeros(dim, dtype=np.int64)

    for batch, start in enumerate(range(0, shots, noise.batch_shots)):
        size = min(noise.batch_shots, shots - start)
        rng = batch_rng(seed, batch)
        if noise.cnot_pauli_error > 0 and num_cnots:
            hit = rng.random((size, num_cnots)) < noise.cnot_pauli_error
            which = rng.integers(1, len(FAULT_PAIRS) + 1, size=(size, num_cnots))
            patterns, inverse = np.unique(np.where(hit, which, 0), axis=0, return_inverse=True)
            group_sizes = np.bincount(np.ravel(inverse), minlength=len(patterns))
        else:
            patterns = np.zeros((1, num_cnots), dtype=np.int64)
            group_sizes = np.array([size])

        ideal = np.zeros(dim, dtype=np.int64)
        for pattern, group in zip(patterns, group_sizes):
            psi = rotate_to_basis(trajectories.state(pattern), n, basis)
            ideal += draw_outcomes(np.abs(psi) ** 2, int(group), rng)
        outcomes = np.repeat(np.arange(dim, dtype=np.int64), ideal) ^ readout_mask
        outcomes = apply_readout(outcomes, noise, n, rng)
        histogram += np.bincount(outcomes, minlength=dim)

    counts = {int(k): int(histogram[k]) for k in np.flatnonzero(histogram)}
    return MeasurementRecord(basis, n, counts, readout_mask=readout_mask, seed=seed, **metadata)


class Executor:
    """
    Handle on a (simulated) device. ``noise=None`` is an ideal device
    that still samples shots.
    """

    def __init__(self, noise: NoiseModel = None):
        self.noise = noise if noise is not None else NoiseModel.ideal()

    @property
    def is_ideal(self):
        return self.noise == NoiseModel.ideal()

    def run(self, circuit, params, basis, shots, seed, readout_mask=0, **metadata) -> MeasurementRecord:
        return noisy_execute(circuit, params, self.noise, basis, shots, seed, readout_mask, **metadata)

    def __repr__(self):
        return "Executor({0!r})".format(self.noise)


## One twirl frame of a CNOT: Paulis on (control, target) before and after.
CnotFrame = namedtuple("CnotFrame", ["before", "after"])


def cnot_frame(letters):
    """The frame with the given two letters before the CNOT."""
    before = PauliTerm(letters)
    return CnotFrame(before, conjugate_by_cnot(before, 0, 1))


def all_cnot_frames():
    return [cnot_frame(letters) for letters in PAULI_PAIRS]


def random_pauli_frames(circuit: Circuit, rng):
    return [cnot_frame(PAULI_PAIRS[int(k)]) for k in rng.integers(0, 16, size=circuit.cnot_count)]


def _pauli_gates(letter, qubit):
    if letter == "X":
        return [Gate.x(qubit)]
    if letter == "Y":
        return [Gate.ry(qubit, np.pi)]
    if letter == "Z":
        return [Gate.rz(qubit, np.pi)]
    return []


def _frame_gates(term, control, target):
    return _pauli_gates(term.letters[0], control) + _pauli_gates(term.letters[1], target)


def apply_pauli_frame(circuit: Circuit, frames: Sequence[CnotFrame]) -> Circuit:
    """
    Surround the k-th CNOT with frames[k]: the 'before' Paulis ahead of
    it and the 'after' Paulis behind it, as X, RY(pi) and RZ(pi) gates.
    The circuit is logically unchanged up to a global phase.
    """
    if len(frames) != circuit.cnot_count:
        raise PhaseScopeUserError("{0} frames for {1} CNOTs".format(len(frames), circuit.cnot_count))
    gates = []
    frames = iter(frames)
    for gate in circuit.gates:
        if gate.kind is not GateKind.CNOT:
            gates.append(gate)
            continue
        frame = next(frames)
        if frame.before.num_qubits != 2 or conjugate_by_cnot(
                PauliTerm(frame.before.letters), 0, 1).letters != frame.after.letters:
            raise PhaseScopeUserError("Frame {0} -> {1} is not a CNOT conjugate pair"
                                      .format(frame.before.letters, frame.after.letters))
        control, target = gate.qubits
        gates += _frame_gates(frame.before, control, target)
        gates.append(gate)
        gates += _frame_gates(frame.after, control, target)
    return Circuit(circuit.num_qubits, tuple(gates), circuit.num_parameters, circuit.circuit_id)


def pauli_transfer_matrix(kraus_weights):
    """
    PTM R[i, j] = Tr(P_i L(P_j)) / 4 of the two-qubit channel
    L(rho) = sum_w w U rho U^dagger, Paulis in PAULI_PAIRS order.
    """
    paulis = [PauliTerm(p).to_matrix() for p in PAULI_PAIRS]
    ptm = np.zeros((16, 16))
    for j, pj in enumerate(paulis):
        image = sum(w * u @ pj @ u.conj().T for w, u in kraus_weights)
        for i, pi in enumerate(paulis):
            ptm[i, j] = np.trace(pi @ image).real / 4.0
    return ptm


def twirled_cnot_ptm(angle, pauli_error=0.0, frames=None):
    """
    PTM of the error channel of one noisy CNOT, CNOT^-1 composed with
    the noisy gate, averaged exactly over the given frames (all 16 by
    default). A single identity frame gives the bare, untwirled error.
    """
    frames = all_cnot_frames() if frames is None else list(frames)
    cnot = unitary(Circuit(2, (Gate.cnot(0, 1),)))
    zz = np.diag(np.exp(-0.5j * angle * np.array([1, -1, -1, 1])))
    faults = [np.eye(4)] + [PauliTerm(p).to_matrix() for p in FAULT_PAIRS]
    fault_weights = [1.0 - pauli_error] + [pauli_error / len(FAULT_PAIRS)] * len(FAULT_PAIRS)
    channel = []
    for frame in frames:
        before = unitary(Circuit(2, tuple(_frame_gates(frame.before, 0, 1))))
        after = unitary(Circuit(2, tuple(_frame_gates(frame.after, 0, 1))))
        for fault, weight in zip(faults, fault_weights):
            noisy = after @ fault @ zz @ cnot @ before
            channel.append((weight / len(frames), noisy @ cnot))
    return pauli_transfer_matrix(channel)

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
