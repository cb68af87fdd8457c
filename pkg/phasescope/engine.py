"""
Dense statevector simulation.

Gates, circuits and states for up to a couple of dozen qubits. The gate
set is RY, RZ, X and CNOT. Rotation gates either carry a fixed angle or
are bound to a slot of the parameter vector, in which case the applied
angle is ``scale * params[param] + angle``. Keeping the scale on the
gate lets Circuit.inverse() reuse the same parameter vector.
"""
import functools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .exception import DimensionMismatchError, PhaseScopeInternalError, PhaseScopeUserError
from .impl import bits, kernels
from .pauli import PauliSum, PauliTerm
from .records import Basis, MeasurementRecord

logger = logging.getLogger(__name__)

_NORM_TOLERANCE = 1e-10


class GateKind(Enum):
    RY = "RY"
    RZ = "RZ"
    X = "X"
    CNOT = "CNOT"


@dataclass(frozen=True)
class Gate:
    """
    One gate. ``qubits`` is (control, target) for CNOT.
    """
    kind: GateKind
    qubits: Tuple[int, ...]
    angle: float = 0.0
    param: Optional[int] = None
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.kind is GateKind.CNOT else 1
        if len(self.qubits) != arity:
            raise PhaseScopeUserError("{0} acts on {1} qubit(s)".format(self.kind.value, arity))
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise PhaseScopeUserError("CNOT control and target must differ")
        if self.param is not None and not self.is_rotation:
            raise PhaseScopeUserError("Only rotations can be parameterized")

    @classmethod
    def ry(cls, qubit, angle=0.0, param=None):
        return cls(GateKind.RY, (qubit,), angle, param)

    @classmethod
    def rz(cls, qubit, angle=0.0, param=None):
        return cls(GateKind.RZ, (qubit,), angle, param)

    @classmethod
    def x(cls, qubit):
        return cls(GateKind.X, (qubit,))

    @classmethod
    def cnot(cls, control, target):
        return cls(GateKind.CNOT, (control, target))

    @property
    def is_rotation(self):
        return self.kind in (GateKind.RY, GateKind.RZ)

    def resolved_angle(self, params=None):
        if self.param is None:
            return self.angle
        if params is None:
            raise PhaseScopeUserError("Gate is bound to parameter {0} but no parameters given".format(self.param))
        return self.scale * float(params[self.param]) + self.angle

    def inverse(self):
        if self.is_rotation:
            return replace(self, angle=-self.angle, scale=-self.scale)
        return self

    def matrix(self, params=None):
        """2x2 matrix of a single-qubit gate."""
        if self.kind is GateKind.RY:
            return kernels.ry_matrix(self.resolved_angle(params))
        if self.kind is GateKind.RZ:
            return kernels.rz_matrix(self.resolved_angle(params))
        if self.kind is GateKind.X:
            return kernels.X_MATRIX
        raise PhaseScopeUserError("CNOT has no single-qubit matrix")


@dataclass(frozen=True)
class Circuit:
    """
    An ordered gate list acting on |0...0>.

    ``num_parameters`` is the length of the parameter vector the circuit
    expects; every bound gate references an index below it.
    """
    num_qubits: int
    gates: Tuple[Gate, ...] = ()
    num_parameters: int = 0
    circuit_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise PhaseScopeUserError("A circuit needs at least one qubit")
        for gate in self.gates:
            for q in gate.qubits:
                if not 0 <= q < self.num_qubits:
                    raise DimensionMismatchError(
                        "Gate {0} on qubit {1} outside a {2} qubit circuit".format(gate.kind.value, q, self.num_qubits))
            if gate.param is not None and not 0 <= gate.param < self.num_parameters:
                raise DimensionMismatchError("Parameter slot {0} out of range".format(gate.param))

    @property
    def slots(self):
        """Parameter index of every bound gate, in gate order."""
        return tuple(g.param for g in self.gates if g.param is not None)

    @property
    def cnot_count(self):
        return sum(1 for g in self.gates if g.kind is GateKind.CNOT)

    def with_id(self, circuit_id):
        return replace(self, circuit_id=circuit_id)

    def inverse(self):
        return Circuit(self.num_qubits, tuple(g.inverse() for g in reversed(self.gates)),
                       self.num_parameters, self.circuit_id + "^-1" if self.circuit_id else "")

    def compose(self, other):
        """
        This circuit followed by other. The parameter vector of the
        result is this circuit's parameters followed by other's.
        """
        if other.num_qubits != self.num_qubits:
            raise DimensionMismatchError("Cannot compose circuits on different qubit counts")
        offset = self.num_parameters
        shifted = tuple(g if g.param is None else replace(g, param=g.param + offset) for g in other.gates)
        return Circuit(self.num_qubits, self.gates + shifted, offset + other.num_parameters)

    def append(self, gates):
        return replace(self, gates=self.gates + tuple(gates))

    def relabel(self, mapping):
        """The same circuit with qubit q replaced by mapping[q]."""
        _check_permutation(mapping, self.num_qubits)
        return replace(self, gates=tuple(
            replace(g, qubits=tuple(mapping[q] for q in g.qubits)) for g in self.gates))


class Statevector:
    """
    Normalized state of num_qubits qubits, little-endian amplitudes.

    The amplitude array is a read-only copy.
    """

    def __init__(self, amplitudes, num_qubits=None, *, normalize=False):
        amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
        if num_qubits is None:
            num_qubits = int(round(math.log2(amplitudes.size))) if amplitudes.size else 0
        if amplitudes.size != 1 << num_qubits or num_qubits < 1:
            raise DimensionMismatchError("{0} amplitudes is not a {1} qubit state".format(amplitudes.size, num_qubits))
        norm = float(np.linalg.norm(amplitudes))
        if normalize:
            if norm == 0:
                raise PhaseScopeUserError("Cannot normalize the zero vector")
            amplitudes = amplitudes / norm
        elif abs(norm - 1.0) > _NORM_TOLERANCE:
            raise PhaseScopeInternalError("State norm drifted to {0!r}".format(norm))
        amplitudes.flags.writeable = False
        self._amplitudes = amplitudes
        self._num_qubits = num_qubits

    @classmethod
    def zero(cls, num_qubits):
        return cls.basis_state(num_qubits, 0)

    @classmethod
    def basis_state(cls, num_qubits, index):
        amplitudes = np.zeros(1 << num_qubits, dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes, num_qubits)

    @classmethod
    def from_bits(cls, letters):
        """'0110' style, qubit 0 first."""
        return cls.basis_state(len(letters), int(letters[::-1], 2))

    @property
    def amplitudes(self):
        return self._amplitudes

    @property
    def num_qubits(self):
        return self._num_qubits

    def probabilities(self):
        p = np.abs(self._amplitudes) ** 2
        return p / p.sum()

    def __repr__(self):
        return "Statevector(num_qubits={0})".format(self._num_qubits)


def _check_permutation(permutation, num_qubits):
    if sorted(int(p) for p in permutation) != list(range(num_qubits)):
        raise PhaseScopeUserError("{0} is not a permutation of {1} qubits".format(list(permutation), num_qubits))


def _apply(amplitudes, num_qubits, gate, params):
    if gate.kind is GateKind.CNOT:
        return kernels.apply_cnot(amplitudes, num_qubits, *gate.qubits)
    return kernels.apply_single(amplitudes, num_qubits, gate.qubits[0], gate.matrix(params))


def apply_gate(state: Statevector, g: Gate, params=None) -> Statevector:
    for q in g.qubits:
        if not 0 <= q < state.num_qubits:
            raise DimensionMismatchError("Qubit {0} out of range".format(q))
    return Statevector(_apply(state.amplitudes, state.num_qubits, g, params), state.num_qubits)


def bind_parameters(circuit, params):
    if params is None:
        params = ()
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.size != circuit.num_parameters:
        raise DimensionMismatchError(
            "Circuit expects {0} parameters, got {1}".format(circuit.num_parameters, params.size))
    return params


def run_amplitudes(circuit: Circuit, params=None, initial=None):
    """run() without the Statevector wrapper, for the hot loops."""
    params = bind_parameters(circuit, params)
    n = circuit.num_qubits
    if initial is None:
        psi = np.zeros(1 << n, dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.array(initial, dtype=complex)
    for gate in circuit.gates:
        psi = _apply(psi, n, gate, params)
    return psi


def run_batch(circuit: Circuit, params_matrix):
    """
    Run the circuit once per row of params_matrix.

    Returns a (rows, 2**N) amplitude array.
    """
    params_matrix = np.atleast_2d(np.asarray(params_matrix, dtype=float))
    if params_matrix.shape[1] != circuit.num_parameters:
        raise DimensionMismatchError(
            "Circuit expects {0} parameters, got {1}".format(circuit.num_parameters, params_matrix.shape[1]))
    n = circuit.num_qubits
    states = np.zeros((params_matrix.shape[0], 1 << n), dtype=complex)
    states[:, 0] = 1.0
    for gate in circuit.gates:
        if gate.kind is GateKind.CNOT:
            states = states[:, kernels.cnot_permutation(n, *gate.qubits)]
        elif gate.param is None:
            states = kernels.apply_single_batch(states, n, gate.qubits[0], gate.matrix())
        else:
            angles = gate.scale * params_matrix[:, gate.param] + gate.angle
            make = kernels.ry_matrices if gate.kind is GateKind.RY else kernels.rz_matrices
            states = kernels.apply_single_batch(states, n, gate.qubits[0], make(angles))
    return states


def run(circuit: Circuit, params=None) -> Statevector:
    """C(params)|0...0>."""
    return Statevector(run_amplitudes(circuit, params), circuit.num_qubits)


def unitary(circuit: Circuit, params=None):
    """Dense matrix of the circuit, column j is C|j>."""
    dim = 1 << circuit.num_qubits
    logger.debug("Dense unitary of %d qubits", circuit.num_qubits)
    return np.column_stack([run_amplitudes(circuit, params, np.eye(dim, dtype=complex)[j]) for j in range(dim)])


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>."""
    if a.num_qubits != b.num_qubits:
        raise DimensionMismatchError("Inner product of {0} and {1} qubit states".format(a.num_qubits, b.num_qubits))
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def rotate_to_basis(amplitudes, num_qubits, basis):
    """Pre-rotation that turns a measurement in basis into a Z measurement."""
    if Basis(basis) is Basis.X:
        matrix = kernels.ry_matrix(-0.5 * math.pi)
        for q in range(num_qubits):
            amplitudes = kernels.apply_single(amplitudes, num_qubits, q, matrix)
    return amplitudes


def draw_outcomes(probabilities, shots, rng):
    """Multinomial sample, returned as a histogram array over outcomes."""
    p = np.clip(probabilities, 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def sample_counts(state: Statevector, basis, shots: int, seed: int, **metadata) -> MeasurementRecord:
    """
    Born-rule sample of shots outcomes in the Z or X basis.
    """
    if shots < 1:
        raise PhaseScopeUserError("Need at least one shot")
    basis = Basis(basis)
    psi = rotate_to_basis(state.amplitudes, state.num_qubits, basis)
    histogram = draw_outcomes(np.abs(psi) ** 2, shots, np.random.default_rng(seed))
    counts = {int(k): int(histogram[k]) for k in np.flatnonzero(histogram)}
    return MeasurementRecord(basis, state.num_qubits, counts, seed=seed, **metadata)


def permute_qubits(state: Statevector, permutation: Sequence[int]) -> Statevector:
    """Move the value of qubit i to qubit permutation[i]."""
    _check_permutation(permutation, state.num_qubits)
    index = bits.basis_indices(state.num_qubits)
    out = np.empty_like(state.amplitudes)
    out[bits.permute_bits(index, permutation)] = state.amplitudes
    return Statevector(out, state.num_qubits)


def shift_permutation(num_qubits, k):
    """Site i goes to (i + k) mod N."""
    return tuple((i + k) % num_qubits for i in range(num_qubits))


def apply_pauli(state: Statevector, term: PauliTerm) -> Statevector:
    """The Pauli string applied to the state, coefficient ignored."""
    if term.num_qubits != state.num_qubits:
        raise DimensionMismatchError("Pauli string does not match the state size")
    return Statevector(term.apply(state.amplitudes), state.num_qubits)


class CompiledObservable:
    """
    A PauliSum prepared for repeated exact expectation values.

    Z-only terms collapse into one diagonal, every other term keeps the
    index of its partner basis state and the phase picked up on the way.
    """

    def __init__(self, obs: PauliSum):
        self.num_qubits = obs.num_qubits
        index = bits.basis_indices(obs.num_qubits)
        self.diagonal = obs.diagonal()
        self.flips = []
        for term in obs:
            if term.x_mask == 0:
                continue
            phase = 1j ** term.letters.count("Y")
            self.flips.append((term.coefficient, index ^ term.x_mask,
                               phase * bits.signs(index, term.z_mask)))

    def __call__(self, amplitudes):
        total = float(np.dot(self.diagonal, np.abs(amplitudes) ** 2))
        for coefficient, partner, phases in self.flips:
            total += coefficient * float(np.vdot(amplitudes[partner], phases * amplitudes).real)
        return total

    def batch(self, states):
        """Expectation for every row of a (rows, 2**N) array."""
        totals = (np.abs(states) ** 2) @ self.diagonal
        for coefficient, partner, phases in self.flips:
            totals = totals + coefficient * np.sum(states[:, partner].conj() * phases * states, axis=1).real
        return totals


@functools.lru_cache(maxsize=64)
def compile_observable(obs: PauliSum) -> CompiledObservable:
    return CompiledObservable(obs)


def expectation_amplitudes(amplitudes, obs: PauliSum):
    return compile_observable(obs)(amplitudes)


def expectation(state: Statevector, obs: PauliSum) -> float:
    """Exact <state|obs|state>."""
    if obs.num_qubits != state.num_qubits:
        raise DimensionMismatchError(
            "Observable on {0} qubits, state on {1}".format(obs.num_qubits, state.num_qubits))
    return expectation_amplitudes(state.amplitudes, obs)

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
