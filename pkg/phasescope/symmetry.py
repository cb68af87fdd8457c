"""
Symmetry actions of the ANNNI chain.

Two kinds of actions commute with the Hamiltonian: the global spin flip
X^N, and on a periodic chain the cyclic shifts sending site i to
(i + k) mod N. Both map basis states to basis states without phases,
so an action is fully described by where it sends a basis index.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .engine import Gate, Statevector, shift_permutation
from .exception import PhaseScopeUserError, SymmetryError
from .impl import bits

logger = logging.getLogger(__name__)

# Dense commutator check up to this many sites.
_CHECK_SITES = 10
_CHECK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SymmetryElement:
    """
    Shift by ``shift`` sites, followed by a global flip when ``flip``.
    The two commute, so the order does not matter.
    """
    label: str
    flip: bool = False
    shift: int = 0

    @property
    def is_identity(self):
        return not self.flip and self.shift == 0

    def map_indices(self, indices, num_qubits):
        out = np.asarray(indices, dtype=np.int64)
        if self.shift % num_qubits:
            out = bits.permute_bits(out, shift_permutation(num_qubits, self.shift))
        if self.flip:
            out = out ^ ((1 << num_qubits) - 1)
        return out

    def apply(self, state: Statevector) -> Statevector:
        index = bits.basis_indices(state.num_qubits)
        out = np.empty_like(state.amplitudes)
        out[self.map_indices(index, state.num_qubits)] = state.amplitudes
        return Statevector(out, state.num_qubits)

    def flip_layer(self, num_qubits):
        """X gates realizing the flip part, empty when there is none."""
        return tuple(Gate.x(q) for q in range(num_qubits)) if self.flip else ()

    def qubit_map(self, num_qubits):
        return shift_permutation(num_qubits, self.shift)


IDENTITY = SymmetryElement("I")


@dataclass(frozen=True)
class SymmetryGroup:
    """
    The identity plus the symmetry generators used to align states.

    Attributes
    ----------
    num_qubits : int
    generators : tuple of SymmetryElement
        Identity first.
    """
    num_qubits: int
    generators: Tuple[SymmetryElement, ...]

    def __post_init__(self):
        generators = tuple(self.generators)
        if not any(g.is_identity for g in generators):
            generators = (IDENTITY,) + generators
        object.__setattr__(self, "generators", generators)

    @property
    def cardinality(self):
        return len(self.generators)

    @property
    def labels(self):
        return tuple(g.label for g in self.generators)

    def __iter__(self):
        return iter(self.generators)

    def by_label(self, label):
        for g in self.generators:
            if g.label == label:
                return g
        raise PhaseScopeUserError("No symmetry action labeled {0!r}".format(label))

    @classmethod
    def for_model(cls, mp, flip=True, shifts=None, check=True):
        """
        Spin flip and, on periodic chains, every shift k in [1, N).

        Raises
        ------
        SymmetryError
            A requested action does not commute with H (checked with
            dense matrices up to 10 sites).
        """
        n = mp.num_sites
        if shifts is None:
            shifts = mp.periodic
        generators = [IDENTITY]
        if flip:
            generators.append(SymmetryElement("X", flip=True))
        if shifts:
            generators += [SymmetryElement("T{0}".format(k), shift=k) for k in range(1, n)]
        group = cls(n, tuple(generators))
        if check and n <= _CHECK_SITES:
            from .model import build_hamiltonian
            group.check_commutes(build_hamiltonian(mp))
        return group

    def check_commutes(self, hamiltonian):
        h = hamiltonian.to_matrix(dtype=float)
        index = bits.basis_indices(self.num_qubits)
        for g in self.generators:
            image = g.map_indices(index, self.num_qubits)
            error = float(np.max(np.abs(h[np.ix_(image, image)] - h)))
            if error > _CHECK_TOLERANCE:
                raise SymmetryError("{0} does not commute with H (error {1:.3g})".format(g.label, error))

    def orbit(self, index):
        """Basis indices reachable from index under the generated group."""
        seen = {int(index)}
        frontier = [int(index)]
        while frontier:
            current = frontier.pop()
            for g in self.generators:
                image = int(g.map_indices(np.array([current]), self.num_qubits)[0])
                if image not in seen:
                    seen.add(image)
                    frontier.append(image)
        return tuple(sorted(seen))

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
