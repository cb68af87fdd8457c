"""
Measurement records: the raw data every estimate is computed from.

A MeasurementRecord holds the outcome histogram of one circuit
execution in one measurement basis. Outcome integers are little-endian,
bit k is the reading of qubit k. When a readout X-frame was applied
before measurement the record keeps the raw (flipped) counts together
with the frame mask; estimators always work on the logical counts,
i.e. the raw outcomes XOR the frame mask.

Records are archived as JSON-lines, one record per line.
"""
import json
import math
from collections import namedtuple
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping

import numpy as np

from .exception import DimensionMismatchError, PhaseScopeUserError

##@brief Measurement basis of a record.
class Basis(Enum):
    Z = "Z"
    X = "X"

##@brief A value with its one-sigma standard error.
Estimate = namedtuple("Estimate", ["value", "stderr"])


@dataclass(frozen=True)
class MeasurementRecord:
    """
    Outcome histogram of one execution.

    Attributes
    ----------
    basis : Basis
        Logical measurement basis. X-basis records were rotated into
        the Z basis before sampling.
    num_qubits : int
    counts : dict of int to int
        Raw outcome histogram, as read out.
    circuit_id : str
        Free-form label of the executed circuit.
    frame_id : int
        Index of the twirl instantiation (readout X layer and, when gate
        twirled, CNOT frames), 0 when not twirled.
    readout_mask : int
        X-frame applied right before measurement, bit q set when qubit
        q was flipped.
    noise_scale : int
        CNOT fold factor the circuit was executed with.
    seed : int
    tags : dict
        Pipeline bookkeeping such as role, level and generator label.
    """
    basis: Basis
    num_qubits: int
    counts: Mapping[int, int]
    circuit_id: str = ""
    frame_id: int = 0
    readout_mask: int = 0
    noise_scale: int = 1
    seed: int = 0
    tags: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis(self.basis))
        limit = 1 << self.num_qubits
        cleaned = {}
        for key, value in sorted(self.counts.items()):
            key, value = int(key), int(value)
            if key < 0 or key >= limit:
                raise DimensionMismatchError(
                    "Outcome {0} does not fit in {1} qubits".format(key, self.num_qubits))
            if value < 0:
                raise PhaseScopeUserError("Negative count for outcome {0}".format(key))
            if value:
                cleaned[key] = value
        object.__setattr__(self, "counts", cleaned)
        object.__setattr__(self, "tags", dict(self.tags))

    @property
    def shots(self):
        return sum(self.counts.values())

    def logical_counts(self):
        """Counts with the readout X-frame undone."""
        mask = self.readout_mask
        return {key ^ mask: value for key, value in self.counts.items()}

    def unflipped(self):
        """A copy whose raw counts are the logical counts and has no frame."""
        return replace(self, counts=self.logical_counts(), readout_mask=0)

    def outcome_arrays(self):
        """(outcomes, weights) as int64 arrays, logical outcomes."""
        logical = self.logical_counts()
        outcomes = np.fromiter(logical.keys(), dtype=np.int64, count=len(logical))
        weights = np.fromiter(logical.values(), dtype=np.int64, count=len(logical))
        return outcomes, weights

    def to_json(self):
        return json.dumps({
            "basis": self.basis.value,
            "num_qubits": self.num_qubits,
            "shots": self.shots,
            "counts": {str(k): v for k, v in self.counts.items()},
            "circuit_id": self.circuit_id,
            "frame_id": self.frame_id,
            "readout_mask": self.readout_mask,
            "noise_scale": self.noise_scale,
            "seed": self.seed,
            "tags": self.tags,
        }, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        shots = data.pop("shots", None)
        data["counts"] = {int(k): v for k, v in data["counts"].items()}
        record = cls(**data)
        if shots is not None and shots != record.shots:
            raise PhaseScopeUserError(
                "Record claims {0} shots but counts sum to {1}".format(shots, record.shots))
        return record


def pool(records, basis):
    """
    Merge the logical counts of all records in the given basis.

    Returns
    -------
    outcomes, weights : numpy.ndarray
    num_qubits : int
    """
    merged: Dict[int, int] = {}
    num_qubits = None
    for record in records:
        if record.basis is not basis:
            continue
        if num_qubits is None:
            num_qubits = record.num_qubits
        elif num_qubits != record.num_qubits:
            raise DimensionMismatchError("Records disagree on the qubit count")
        for key, value in record.logical_counts().items():
            merged[key] = merged.get(key, 0) + value
    if num_qubits is None:
        return None
    if not merged:
        raise PhaseScopeUserError("Empty counts in {0}-basis records".format(basis.value))
    outcomes = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
    weights = np.fromiter(merged.values(), dtype=np.int64, count=len(merged))
    return outcomes, weights, num_qubits


def pool_frames(records, basis):
    """
    pool() separately for every frame_id, in frame order. None when no
    record is in the basis.
    """
    groups: Dict[int, List[MeasurementRecord]] = {}
    for record in records:
        if record.basis is basis:
            groups.setdefault(record.frame_id, []).append(record)
    if not groups:
        return None
    frames = [pool(groups[k], basis) for k in sorted(groups)]
    if len({f[2] for f in frames}) > 1:
        raise DimensionMismatchError("Records disagree on the qubit count")
    return frames


def framed_estimate(frames, shot_values) -> Estimate:
    """
    Mean of a per-shot value over every shot of every frame.

    The stderr is the larger of the shot-to-shot spread and, with two or
    more frames, the spread between the frame means. Each frame draws its
    own random readout layer (and gate frames), so the frame means differ
    by more than shot noise whenever readout is asymmetric.

    Parameters
    ----------
    frames : list of (outcomes, weights, num_qubits)
        As returned by pool_frames.
    shot_values : callable
        Maps an outcome array to the value of each outcome.
    """
    sums, squares, shots = [], [], []
    for outcomes, weights, _ in frames:
        values = np.asarray(shot_values(outcomes), dtype=float)
        w = weights.astype(float)
        sums.append(float(np.dot(values, w)))
        squares.append(float(np.dot(values * values, w)))
        shots.append(float(np.sum(w)))
    total = sum(shots)
    mean = sum(sums) / total
    variance = max(0.0, sum(squares) / total - mean * mean) / total
    k = len(frames)
    if k > 1:
        w = np.array(shots)
        frame_means = np.array(sums) / w
        between = k / (k - 1) * float(np.sum(w * w * (frame_means - mean) ** 2)) / (total * total)
        variance = max(variance, between)
    return Estimate(mean, math.sqrt(variance))


def write_jsonl(path, records: Iterable[MeasurementRecord]):
    with open(path, "w") as f:
        for record in records:
            f.write(record.to_json())
            f.write("\n")


def read_jsonl(path) -> List[MeasurementRecord]:
    with open(path, "r") as f:
        return [MeasurementRecord.from_json(line) for line in f if line.strip()]

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
