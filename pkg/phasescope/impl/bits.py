"""
Bit twiddling on basis-state indices.

Bit k of a basis index is the value of qubit k (little-endian). All
helpers here work on numpy integer arrays so that whole state vectors
or whole count tables are processed at once.
"""
import numpy as np


def basis_indices(num_qubits):
    return np.arange(1 << num_qubits, dtype=np.int64)


def mask_of(qubits):
    """Integer with bit q set for every q in qubits."""
    mask = 0
    for q in qubits:
        mask |= 1 << int(q)
    return mask


def parity(values, mask):
    """
    Parity (0 or 1) of the bits selected by mask, elementwise.

    Loops over the set bits of the mask rather than over the values,
    the masks seen here have a handful of bits at most.
    """
    values = np.asarray(values, dtype=np.int64)
    result = np.zeros(values.shape, dtype=np.int64)
    bit = 0
    mask = int(mask)
    while mask:
        if mask & 1:
            result ^= (values >> bit) & 1
        mask >>= 1
        bit += 1
    return result


def signs(values, mask):
    """(-1)**parity, the eigenvalue of the Z string on mask."""
    return 1 - 2 * parity(values, mask)


def bit_matrix(values, num_qubits):
    """Shape (len(values), num_qubits) array of 0/1, column k is qubit k."""
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(num_qubits, dtype=np.int64)
    return (values[:, None] >> shifts[None, :]) & 1


def permute_bits(values, permutation):
    """
    Move the value of bit i to bit permutation[i], elementwise.
    """
    values = np.asarray(values, dtype=np.int64)
    result = np.zeros(values.shape, dtype=np.int64)
    for source, dest in enumerate(permutation):
        result |= ((values >> source) & 1) << int(dest)
    return result


def format_bits(value, num_qubits):
    """Qubit 0 first, the same order as PauliTerm letters."""
    return "".join(str((int(value) >> k) & 1) for k in range(num_qubits))

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
