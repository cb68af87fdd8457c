"""
Dense gate kernels on flat amplitude arrays.

The flat array is viewed as a rank-N tensor of shape (2,)*N in C order,
so qubit q (bit q of the index) is tensor axis N-1-q.
"""
import functools

import numpy as np

from . import bits


def _axis(qubit, num_qubits):
    return num_qubits - 1 - qubit


def apply_single(amplitudes, num_qubits, qubit, matrix):
    psi = amplitudes.reshape((2,) * num_qubits)
    axis = _axis(qubit, num_qubits)
    psi = np.tensordot(matrix, psi, axes=([1], [axis]))
    return np.moveaxis(psi, 0, axis).reshape(-1)


@functools.lru_cache(maxsize=256)
def _cnot_indices(num_qubits, control, target):
    index = bits.basis_indices(num_qubits)
    chosen = index[(((index >> control) & 1) == 1) & (((index >> target) & 1) == 0)]
    chosen.flags.writeable = False
    return chosen, chosen | (1 << target)


def apply_cnot(amplitudes, num_qubits, control, target):
    low, high = _cnot_indices(num_qubits, control, target)
    out = amplitudes.copy()
    out[low] = amplitudes[high]
    out[high] = amplitudes[low]
    return out


@functools.lru_cache(maxsize=256)
def _zz_signs(num_qubits, a, b):
    signs = bits.signs(bits.basis_indices(num_qubits), (1 << a) | (1 << b))
    signs.flags.writeable = False
    return signs


def apply_zz_rotation(amplitudes, num_qubits, a, b, angle):
    """exp(-i angle/2 Z_a Z_b)."""
    signs = _zz_signs(num_qubits, a, b)
    return amplitudes * np.exp(-0.5j * angle * signs)


def ry_matrix(angle):
    c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(angle):
    return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)


X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)


def apply_single_batch(states, num_qubits, qubit, matrices):
    """
    Same gate on every row of a (batch, 2**N) array. matrices is either
    one 2x2 matrix or one per row, shape (batch, 2, 2).
    """
    batch = states.shape[0]
    view = states.reshape(batch, 1 << (num_qubits - 1 - qubit), 2, 1 << qubit)
    if matrices.ndim == 2:
        out = np.einsum("ij,bajc->baic", matrices, view)
    else:
        out = np.einsum("bij,bajc->baic", matrices, view)
    return out.reshape(batch, -1)


@functools.lru_cache(maxsize=256)
def cnot_permutation(num_qubits, control, target):
    """Index map p with new[i] = old[p[i]]."""
    low, high = _cnot_indices(num_qubits, control, target)
    perm = bits.basis_indices(num_qubits)
    perm[low] = high
    perm[high] = low
    perm.flags.writeable = False
    return perm


def ry_matrices(angles):
    c, s = np.cos(0.5 * angles), np.sin(0.5 * angles)
    return np.array([[c, -s], [s, c]], dtype=complex).transpose(2, 0, 1)


def rz_matrices(angles):
    phase = np.exp(-0.5j * angles)
    zero = np.zeros_like(phase)
    return np.array([[phase, zero], [zero, phase.conj()]]).transpose(2, 0, 1)

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
