"""
Pauli string algebra.

A PauliTerm is a real coefficient times a tensor product of single
qubit Paulis. letters[k] acts on qubit k, so the text form "ZZII" has
Z on qubits 0 and 1. A PauliSum is the canonical merged sum of terms,
sorted by letters, and is what Hamiltonians and observables are made of.
"""
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .exception import DimensionMismatchError, PhaseScopeUserError, UnmeasurableTermError
from .impl import bits
from .records import Basis, Estimate, framed_estimate, pool_frames

_LETTERS = "IXYZ"

# (x, z) symplectic bits, Y = i X Z.
_XZ = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_FROM_XZ = {v: k for k, v in _XZ.items()}

_PRODUCT = {
    ("X", "Y"): (1j, "Z"), ("Y", "Z"): (1j, "X"), ("Z", "X"): (1j, "Y"),
    ("Y", "X"): (-1j, "Z"), ("Z", "Y"): (-1j, "X"), ("X", "Z"): (-1j, "Y"),
}

_Y_PHASE = (1, 1j, -1, -1j)

_MATRIX = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _single_product(a, b):
    if a == "I":
        return 1, b
    if b == "I":
        return 1, a
    if a == b:
        return 1, "I"
    return _PRODUCT[(a, b)]


@dataclass(frozen=True)
class PauliTerm:
    """
    A real coefficient times a Pauli string.

    Attributes
    ----------
    letters : str
        One of I, X, Y, Z per qubit, qubit 0 first.
    coefficient : float
    """
    letters: str
    coefficient: float = 1.0

    def __post_init__(self):
        letters = str(self.letters).upper()
        if not letters or any(c not in _LETTERS for c in letters):
            raise PhaseScopeUserError("Invalid Pauli string {0!r}".format(self.letters))
        if not math.isfinite(self.coefficient):
            raise PhaseScopeUserError("Pauli coefficient must be finite")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @classmethod
    def on(cls, num_qubits, paulis, coefficient=1.0):
        """Build from a {qubit: letter} map, identity elsewhere."""
        letters = ["I"] * num_qubits
        for qubit, letter in paulis.items():
            if not 0 <= qubit < num_qubits:
                raise DimensionMismatchError("Qubit {0} out of range".format(qubit))
            letters[qubit] = letter
        return cls("".join(letters), coefficient)

    @property
    def num_qubits(self):
        return len(self.letters)

    @property
    def x_mask(self):
        return bits.mask_of(k for k, c in enumerate(self.letters) if c in "XY")

    @property
    def z_mask(self):
        return bits.mask_of(k for k, c in enumerate(self.letters) if c in "ZY")

    @property
    def support(self):
        return tuple(k for k, c in enumerate(self.letters) if c != "I")

    @property
    def is_identity(self):
        return not self.support

    def measurement_basis(self):
        """The basis this term is diagonal in, None if there is none."""
        used = set(self.letters) - {"I"}
        if not used or used == {"Z"}:
            return Basis.Z
        if used == {"X"}:
            return Basis.X
        return None

    def scaled(self, factor):
        return PauliTerm(self.letters, self.coefficient * factor)

    def to_matrix(self):
        """Dense 2^N x 2^N matrix, little-endian basis order."""
        result = np.array([[self.coefficient]], dtype=complex)
        for letter in reversed(self.letters):
            result = np.kron(result, _MATRIX[letter])
        return result

    def apply(self, amplitudes):
        """The term (without its coefficient) applied to an amplitude vector."""
        amplitudes = np.asarray(amplitudes)
        if amplitudes.shape != (1 << self.num_qubits,):
            raise DimensionMismatchError("Amplitude vector does not match the Pauli string")
        index = bits.basis_indices(self.num_qubits)
        phase = 1j ** self.letters.count("Y")
        out = np.empty(amplitudes.shape, dtype=complex)
        out[index ^ self.x_mask] = phase * bits.signs(index, self.z_mask) * amplitudes
        return out

    def __str__(self):
        return "{0!r} {1}".format(self.coefficient, self.letters)


def multiply(a: PauliTerm, b: PauliTerm) -> Tuple[complex, PauliTerm]:
    """
    Qubit-wise product a*b.

    Returns
    -------
    phase : complex
        One of 1, -1, 1j, -1j.
    product : PauliTerm
        Coefficient is the product of the two real coefficients.
    """
    if a.num_qubits != b.num_qubits:
        raise DimensionMismatchError(
            "Cannot multiply {0} and {1} qubit Pauli strings".format(a.num_qubits, b.num_qubits))
    phase = 1
    letters = []
    for pa, pb in zip(a.letters, b.letters):
        p, letter = _single_product(pa, pb)
        phase *= p
        letters.append(letter)
    return complex(phase), PauliTerm("".join(letters), a.coefficient * b.coefficient)


def conjugate_by_cnot(t: PauliTerm, control: int, target: int) -> PauliTerm:
    """
    CNOT t CNOT for the CNOT with the given control and target.

    The sign picked up by the conjugation goes into the coefficient.
    """
    n = t.num_qubits
    if not (0 <= control < n and 0 <= target < n):
        raise DimensionMismatchError("CNOT qubits ({0}, {1}) out of range".format(control, target))
    if control == target:
        raise PhaseScopeUserError("CNOT control and target must differ")
    xc, zc = _XZ[t.letters[control]]
    xt, zt = _XZ[t.letters[target]]
    flip = xc & zt & (xt ^ zc ^ 1)
    letters = list(t.letters)
    letters[control] = _FROM_XZ[(xc, zc ^ zt)]
    letters[target] = _FROM_XZ[(xt ^ xc, zt)]
    return PauliTerm("".join(letters), -t.coefficient if flip else t.coefficient)


@dataclass(frozen=True)
class PauliSum:
    """
    Canonical sum of Pauli terms: no repeated strings, sorted by letters.

    Build it with PauliSum.from_terms, which merges duplicates.
    """
    terms: Tuple[PauliTerm, ...]
    num_qubits: int

    def __post_init__(self):
        for term in self.terms:
            if term.num_qubits != self.num_qubits:
                raise DimensionMismatchError("All terms must act on {0} qubits".format(self.num_qubits))
        letters = [term.letters for term in self.terms]
        if letters != sorted(set(letters)):
            raise PhaseScopeUserError("PauliSum terms are not in canonical form")

    @classmethod
    def from_terms(cls, terms: Iterable[PauliTerm], num_qubits=None):
        merged = {}
        for term in terms:
            if num_qubits is None:
                num_qubits = term.num_qubits
            merged[term.letters] = merged.get(term.letters, 0.0) + term.coefficient
        if num_qubits is None:
            raise PhaseScopeUserError("An empty PauliSum needs an explicit qubit count")
        return cls(tuple(PauliTerm(k, merged[k]) for k in sorted(merged)), num_qubits)

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        if other.num_qubits != self.num_qubits:
            raise DimensionMismatchError("Cannot add sums on different qubit counts")
        return PauliSum.from_terms(self.terms + other.terms, self.num_qubits)

    def scaled(self, factor):
        return PauliSum(tuple(t.scaled(factor) for t in self.terms), self.num_qubits)

    def to_matrix(self, dtype=complex):
        """
        Dense matrix. A real dtype is allowed when the phases of all
        terms are real, which is the case for every ANNNI operator.
        """
        dim = 1 << self.num_qubits
        result = np.zeros((dim, dim), dtype=dtype)
        index = bits.basis_indices(self.num_qubits)
        for term in self.terms:
            phase = _Y_PHASE[term.letters.count("Y") % 4]
            if isinstance(phase, complex) and not np.iscomplexobj(result):
                raise PhaseScopeUserError("Term {0} needs a complex matrix".format(term.letters))
            result[index ^ term.x_mask, index] += term.coefficient * phase * bits.signs(index, term.z_mask)
        return result

    def apply(self, amplitudes):
        """The whole sum applied to an amplitude vector."""
        out = np.zeros(np.shape(amplitudes), dtype=complex)
        for term in self.terms:
            out += term.coefficient * term.apply(amplitudes)
        return out

    def diagonal(self):
        """Diagonal of the Z-only part, one entry per basis state."""
        index = bits.basis_indices(self.num_qubits)
        result = np.zeros(index.shape, dtype=float)
        for term in self.terms:
            if term.x_mask == 0:
                result += term.coefficient * bits.signs(index, term.z_mask)
        return result

    def to_text(self):
        return "".join("{0}\n".format(term) for term in self.terms)

    @classmethod
    def from_text(cls, text):
        terms = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            coefficient, letters = line.split()
            terms.append(PauliTerm(letters, float(coefficient)))
        return cls.from_terms(terms)


def split_by_basis(obs: PauliSum):
    """
    Returns
    -------
    constant : float
        Sum of the identity coefficients.
    groups : dict of Basis to list of PauliTerm
        The other terms by the basis they are read from.

    Raises
    ------
    UnmeasurableTermError
        A term mixes X with Z or Y.
    """
    constant = 0.0
    groups = {}
    for term in obs:
        if term.is_identity:
            constant += term.coefficient
            continue
        basis = term.measurement_basis()
        if basis is None:
            raise UnmeasurableTermError("Term {0} is not diagonal in the X or Z basis".format(term.letters))
        groups.setdefault(basis, []).append(term)
    return constant, groups


def shot_values(terms, outcomes, basis, scales=None):
    """sum_t coeff_t * parity_t(outcome) / scale_t for every outcome."""
    values = np.zeros(np.shape(outcomes), dtype=float)
    for k, term in enumerate(terms):
        mask = term.x_mask if basis is Basis.X else term.z_mask
        scale = 1.0 if scales is None else scales[k]
        values += term.coefficient * bits.signs(outcomes, mask) / scale
    return values


def basis_frames(records, basis, num_qubits, letters=""):
    """pool_frames with the checks every estimator needs."""
    frames = pool_frames(records, basis)
    if frames is None:
        raise UnmeasurableTermError("Term {0} needs a {1}-basis record".format(letters, basis.value))
    if frames[0][2] != num_qubits:
        raise DimensionMismatchError("Records have {0} qubits, observable has {1}".format(frames[0][2], num_qubits))
    return frames


def expectation_from_counts(obs: PauliSum, records) -> Estimate:
    """
    Estimate <obs> from measurement records.

    Terms made of I and Z are read from the Z-basis records, terms made
    of I and X from the X-basis records; records in the same basis are
    pooled. Terms read from one basis share their shots, so the stderr
    of each basis is the spread of the per-shot value of the whole group
    (binomial for a single term) and the bases add in quadrature.

    Raises
    ------
    UnmeasurableTermError
        A term mixes X with Z or Y, or its basis has no record.
    """
    records = list(records)
    constant, groups = split_by_basis(obs)
    value = constant
    variance = 0.0
    for basis, terms in groups.items():
        frames = basis_frames(records, basis, obs.num_qubits, terms[0].letters)
        estimate = framed_estimate(frames, lambda outcomes: shot_values(terms, outcomes, basis))
        value += estimate.value
        variance += estimate.stderr ** 2
    return Estimate(value, math.sqrt(variance))

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
