"""
Noise-robust observables and transition detection.

Everything here accepts either exact statevectors or measurement
records, so the same code produces the noise-free reference curves and
the estimates from (simulated) experimental data:

* the energy and its Hellmann-Feynman derivative <H_A>,
* the <XX> and <ZZ> correlation matrices, aligned across a periodic
  scan by cyclic relabeling,
* the fidelity susceptibility from circuit inversion, maximized over
  the symmetry generators of the chain,
* the detection of intervals where these observables jump.
"""
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import dask
import numpy as np
import scipy.stats

from .engine import (Circuit, Statevector, expectation, inner_product, rotate_to_basis,
                     run_amplitudes)
from .exception import DimensionMismatchError, PhaseScopeUserError, UnmeasurableTermError
from .impl import bits
from .mitigation import derived_seed, trex_correct
from .model import ModelParams, build_ha, build_hamiltonian, exact_diagonalize
from .pauli import PauliSum, expectation_from_counts
from .records import Basis, Estimate, MeasurementRecord, framed_estimate, pool_frames
from .symmetry import IDENTITY, SymmetryElement, SymmetryGroup

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 5.0
DEFAULT_FLOOR = 1e-9

__all__ = [
    "SymmetryGroup", "CorrelationMatrix", "ScanRecord", "TransitionInterval", "ReliabilityNote",
    "Preparation", "FidelityEstimate", "estimate_observable", "energy_estimate", "energy_derivative",
    "correlation_matrix", "shift_matrix", "align_correlations", "align_scan", "correlation_profile",
    "overlap_circuit", "overlap_record", "survival_from_record", "fidelity_overlap",
    "fs_from_survivals", "practical_fs", "aligned_fidelity", "ed_fidelity_scan",
    "midpoints", "detect_transitions", "reliability_notes",
]

# ---------- energy and its derivative ----------

def estimate_observable(obs: PauliSum, source, calibration=None) -> Estimate:
    """
    <obs> from a Statevector (exact, zero stderr) or from records,
    TREX-corrected when a calibration is given.
    """
    if isinstance(source, Statevector):
        return Estimate(expectation(source, obs), 0.0)
    if calibration is not None:
        return trex_correct(obs, source, calibration)
    return expectation_from_counts(obs, source)


def energy_estimate(source, mp: ModelParams, calibration=None) -> Estimate:
    return estimate_observable(build_hamiltonian(mp), source, calibration)


def energy_derivative(source, mp: ModelParams, calibration=None) -> Estimate:
    """
    dE/dJ2 as the Hellmann-Feynman expectation <H_A>. H_A is diagonal in
    Z, so only the Z-basis records are used.

    Raises
    ------
    UnmeasurableTermError
        No Z-basis record.
    """
    return estimate_observable(build_ha(mp), source, calibration)

# ---------- correlation matrices ----------

@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """
    <sigma_i sigma_j> for all site pairs, sigma being X or Z.

    Attributes
    ----------
    basis : Basis
    values : numpy.ndarray
        Symmetric N x N, unit diagonal.
    stderr : numpy.ndarray
        Zero for exact matrices and on the diagonal.
    """
    basis: Basis
    values: np.ndarray
    stderr: np.ndarray

    @property
    def num_sites(self):
        return self.values.shape[0]

    def to_dict(self):
        return {"basis": self.basis.value,
                "values": [[float(v) for v in row] for row in self.values],
                "stderr": [[float(v) for v in row] for row in self.stderr]}

    @classmethod
    def from_dict(cls, data):
        return cls(Basis(data["basis"]), np.array(data["values"], dtype=float), np.array(data["stderr"], dtype=float))


def _exact_correlations(state: Statevector, basis):
    n = state.num_qubits
    probabilities = np.abs(rotate_to_basis(state.amplitudes, n, basis)) ** 2
    index = bits.basis_indices(n)
    values = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = float(np.dot(bits.signs(index, (1 << i) | (1 << j)), probabilities))
    return values, np.zeros((n, n))


def correlation_matrix(source, basis, calibration=None) -> CorrelationMatrix:
    """
    All pairs from the same bitstring ensemble: the pooled records of
    the given basis, or the exact distribution of a Statevector.

    With a calibration, entry (i, j) is divided by c_i * c_j.

    Raises
    ------
    UnmeasurableTermError
        No record in the requested basis.
    """
    basis = Basis(basis)
    if isinstance(source, Statevector):
        values, stderr = _exact_correlations(source, basis)
        return CorrelationMatrix(basis, values, stderr)

    frames = pool_frames(list(source), basis)
    if frames is None:
        raise UnmeasurableTermError("No {0}-basis record for the correlation matrix".format(basis.value))
    n = frames[0][2]
    values = np.eye(n)
    stderr = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            mask = (1 << i) | (1 << j)
            mean, sem = framed_estimate(frames, lambda outcomes: bits.signs(outcomes, mask))
            if calibration is not None:
                scale = calibration.scale((i, j))
                mean, sem = mean / scale, sem / scale
            values[i, j] = values[j, i] = mean
            stderr[i, j] = stderr[j, i] = sem
    return CorrelationMatrix(basis, values, stderr)


def shift_matrix(values, k):
    """Relabel site i as (i + k) mod N on both axes."""
    return np.roll(np.roll(np.asarray(values), k, axis=0), k, axis=1)


def _shifted(matrix: CorrelationMatrix, k):
    if k == 0:
        return matrix
    return CorrelationMatrix(matrix.basis, shift_matrix(matrix.values, k), shift_matrix(matrix.stderr, k))


def align_correlations(ref: CorrelationMatrix, cur: CorrelationMatrix,
                       periodic: bool = True) -> Tuple[CorrelationMatrix, int]:
    """
    Undo a cyclic relabeling of cur relative to ref.

    Returns the k in [0, N) minimizing the summed squared difference
    between cur shifted back by k and ref, smallest k on ties, together
    with the shifted matrix. Open chains have no shift symmetry and get
    k = 0.
    """
    if ref.num_sites != cur.num_sites:
        raise DimensionMismatchError("Cannot align {0} and {1} site matrices".format(ref.num_sites, cur.num_sites))
    if not periodic:
        return cur, 0
    distances = [float(np.sum((shift_matrix(cur.values, -k) - ref.values) ** 2)) for k in range(cur.num_sites)]
    k = int(np.argmin(distances))
    if k:
        logger.debug("Correlations aligned by a shift of %d sites", k)
    return _shifted(cur, -k), k


def correlation_profile(matrix: CorrelationMatrix, site: int = 0):
    """<sigma_site sigma_i> for every i, with stderr."""
    return matrix.values[site].copy(), matrix.stderr[site].copy()

# ---------- fidelity susceptibility ----------

##@brief A circuit and the parameters that prepare one scan point's state.
Preparation = namedtuple("Preparation", ["circuit", "params"])

##@brief Generator-maximized fidelity susceptibility of one scan interval.
FidelityEstimate = namedtuple("FidelityEstimate", ["chi", "stderr", "label", "survivals"])


def overlap_circuit(circ_a: Circuit, circ_b: Circuit, generator: SymmetryElement = IDENTITY) -> Circuit:
    """
    C_B^-1 U C_A. The flip part of U is an X layer between the two
    halves; the shift part relabels the qubits of the inverted half.
    Parameters are those of A followed by those of B.
    """
    n = circ_a.num_qubits
    if circ_b.num_qubits != n:
        raise DimensionMismatchError("Overlap of {0} and {1} qubit circuits".format(n, circ_b.num_qubits))
    inverse = circ_b.inverse()
    if generator.shift % n:
        inverse = inverse.relabel([(q - generator.shift) % n for q in range(n)])
    compound = circ_a.append(generator.flip_layer(n)).compose(inverse)
    return compound.with_id("overlap[{0}|{1}|{2}]".format(circ_a.circuit_id, generator.label, circ_b.circuit_id))


def _joint_params(params_a, params_b):
    return np.concatenate([np.asarray(params_a if params_a is not None else (), dtype=float).reshape(-1),
                           np.asarray(params_b if params_b is not None else (), dtype=float).reshape(-1)])


def overlap_record(circ_a, params_a, circ_b, params_b, generator: SymmetryElement, executor,
                   shots: int, seed: int, **metadata) -> MeasurementRecord:
    if shots is None or shots < 1:
        raise PhaseScopeUserError("An overlap estimate needs at least one shot")
    compound = overlap_circuit(circ_a, circ_b, generator)
    params = _joint_params(params_a, params_b)
    tags = dict(metadata.pop("tags", None) or {})
    tags.setdefault("role", "overlap")
    tags.setdefault("generator", generator.label)
    return executor.run(compound, params, Basis.Z, shots, seed, circuit_id=compound.circuit_id, tags=tags, **metadata)


def survival_from_record(record: MeasurementRecord) -> Estimate:
    """Fraction of all-zeros outcomes, with binomial stderr."""
    shots = record.shots
    if shots < 1:
        raise PhaseScopeUserError("Survival of an empty record")
    p = record.logical_counts().get(0, 0) / shots
    return Estimate(p, math.sqrt(p * (1.0 - p) / shots))


def fidelity_overlap(circ_a, params_a, circ_b, params_b, generator: SymmetryElement = IDENTITY,
                     executor=None, shots: Optional[int] = None, seed: int = 0, **metadata) -> Estimate:
    """
    |<psi_B|U|psi_A>|**2 as the survival probability of |0...0> through
    C_B^-1 U C_A.

    Without an executor the survival is computed exactly. With one, the
    compound circuit is sampled and the stderr is binomial.

    Raises
    ------
    PhaseScopeUserError
        An executor with no shots.
    """
    if executor is None:
        compound = overlap_circuit(circ_a, circ_b, generator)
        psi = run_amplitudes(compound, _joint_params(params_a, params_b))
        return Estimate(min(1.0, float(abs(psi[0]) ** 2)), 0.0)
    record = overlap_record(circ_a, params_a, circ_b, params_b, generator, executor, shots, seed, **metadata)
    return survival_from_record(record)


def fs_from_survivals(survivals: Dict[str, Estimate]) -> FidelityEstimate:
    """
    1 - max over generators of sqrt(survival). The stderr comes from
    the winning generator, sigma / (2 sqrt(s)). The first label wins
    ties.
    """
    if not survivals:
        raise PhaseScopeUserError("No survival estimates")
    label = max(survivals, key=lambda name: survivals[name].value)
    survival, sigma = survivals[label]
    survival = min(max(survival, 0.0), 1.0)
    overlap = math.sqrt(survival)
    stderr = sigma / (2.0 * overlap) if overlap > 0 else 0.0
    return FidelityEstimate(1.0 - overlap, stderr, label, dict(survivals))


def practical_fs(a: Preparation, b: Preparation, group: SymmetryGroup, executor=None,
                 shots: Optional[int] = None, seed: int = 0, workers: int = 1) -> FidelityEstimate:
    """
    Fidelity susceptibility between two scan points, aligned over the
    symmetry generators (identity included).

    Each generator gets its own overlap circuit and a seed derived from
    seed and the generator's position in the group.
    """
    generators = list(group)
    tasks = [dask.delayed(fidelity_overlap)(a.circuit, a.params, b.circuit, b.params, g, executor, shots,
                                            derived_seed(seed, i))
             for i, g in enumerate(generators)]
    estimates = dask.compute(*tasks, scheduler="threads", num_workers=max(1, workers))
    return fs_from_survivals({g.label: e for g, e in zip(generators, estimates)})


def aligned_fidelity(a: Statevector, b: Statevector, group: SymmetryGroup) -> FidelityEstimate:
    """practical_fs on exact statevectors."""
    survivals = {g.label: Estimate(abs(inner_product(b, g.apply(a))) ** 2, 0.0) for g in group}
    return fs_from_survivals(survivals)


def ed_fidelity_scan(grid: Sequence[ModelParams], group: Optional[SymmetryGroup] = None) -> List[float]:
    """
    1 - |<psi0(k)|psi0(k+1)>| between consecutive ED ground states,
    maximized over group when one is given.
    """
    states = [exact_diagonalize(mp, num_states=1).ground_state for mp in grid]
    if group is None:
        return [1.0 - abs(inner_product(x, y)) for x, y in zip(states, states[1:])]
    return [aligned_fidelity(x, y, group).chi for x, y in zip(states, states[1:])]

# ---------- scans and transition detection ----------

@dataclass(frozen=True, eq=False)
class ScanRecord:
    """
    Everything measured at one grid point.

    Attributes
    ----------
    model : ModelParams
    energy, derivative : Estimate or None
    zz, xx : CorrelationMatrix or None
    chi : Estimate or None
        Fidelity susceptibility to the next grid point.
    chi_label : str
        Generator that maximized the overlap.
    shift : int
        Cyclic shift applied when aligning the correlations.
    flags : tuple of str
    """
    model: ModelParams
    energy: Optional[Estimate] = None
    derivative: Optional[Estimate] = None
    zz: Optional[CorrelationMatrix] = None
    xx: Optional[CorrelationMatrix] = None
    chi: Optional[Estimate] = None
    chi_label: str = ""
    shift: int = 0
    flags: Tuple[str, ...] = ()

    @property
    def j2(self):
        return self.model.j2


##@brief Scan interval (lo, hi) flagged as a transition.
TransitionInterval = namedtuple("TransitionInterval", ["lo", "hi", "evidence", "chi"])

##@brief Cross-referencing remark about one scan point.
ReliabilityNote = namedtuple("ReliabilityNote", ["j2", "kind", "message"])


def midpoints(j2):
    j2 = np.asarray(j2, dtype=float)
    return 0.5 * (j2[1:] + j2[:-1])


def _check_order(scan):
    j2 = [r.j2 for r in scan]
    if any(b <= a for a, b in zip(j2, j2[1:])):
        raise PhaseScopeUserError("Scan must be ordered by strictly increasing J2")


def align_scan(scan: Sequence[ScanRecord]) -> List[ScanRecord]:
    """
    Chain the correlation alignment along the scan: every point is
    aligned to the already aligned previous point, and the XX matrix
    follows the shift found on ZZ.
    """
    out = []
    previous = None
    for record in scan:
        if record.zz is None or previous is None or not record.model.periodic:
            out.append(record)
            previous = record.zz if record.zz is not None else previous
            continue
        zz, k = align_correlations(previous, record.zz, periodic=True)
        xx = _shifted(record.xx, -k) if record.xx is not None else None
        out.append(replace(record, zz=zz, xx=xx, shift=k))
        previous = zz
    return out


def _robust_exceed(values, threshold, floor):
    """Mask of values above median + threshold * max(MAD, floor); NaN never exceeds."""
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    if np.count_nonzero(finite) < 2:
        return np.zeros(values.shape, dtype=bool)
    center = float(np.median(values[finite]))
    spread = float(scipy.stats.median_abs_deviation(values[finite], scale="normal"))
    limit = center + threshold * max(spread, floor)
    with np.errstate(invalid="ignore"):
        return np.where(finite, values > limit, False)


def _matrix_change(a, b):
    if a is None or b is None:
        return float("nan")
    n = a.num_sites
    off = ~np.eye(n, dtype=bool)
    return float(np.mean(np.abs(a.values[off] - b.values[off])))


def _interval_metrics(scan):
    chi = np.array([r.chi.value if r.chi is not None else np.nan for r in scan[:-1]])
    derivative = np.array([r.derivative.value if r.derivative is not None else np.nan for r in scan])
    step = np.abs(np.diff(derivative))
    zz = np.array([_matrix_change(a.zz, b.zz) for a, b in zip(scan, scan[1:])])
    xx = np.array([_matrix_change(a.xx, b.xx) for a, b in zip(scan, scan[1:])])
    return chi, step, zz, xx


def detect_transitions(scan: Sequence[ScanRecord], chi_threshold: float = DEFAULT_THRESHOLD,
                       derivative_threshold: float = DEFAULT_THRESHOLD,
                       correlation_threshold: float = DEFAULT_THRESHOLD,
                       floor: float = DEFAULT_FLOOR) -> List[TransitionInterval]:
    """
    Flag interval (J2_k, J2_k+1) when its fidelity susceptibility, or
    the jump of dE/dJ2 across it, is an outlier: strictly above
    median + T * MAD (normal-consistent MAD, at least floor).

    Each flagged interval lists its evidence among "fs", "derivative"
    and "correlation", the last meaning the aligned ZZ matrix changed
    by an outlying amount across the interval. Intervals without a chi
    are left out of the FS statistic.
    """
    scan = list(scan)
    if len(scan) < 3:
        return []
    _check_order(scan)
    chi, step, zz, _ = _interval_metrics(scan)
    by_chi = _robust_exceed(chi, chi_threshold, floor)
    by_step = _robust_exceed(step, derivative_threshold, floor)
    by_zz = _robust_exceed(zz, correlation_threshold, floor)

    intervals = []
    for k in range(len(scan) - 1):
        if not (by_chi[k] or by_step[k]):
            continue
        evidence = [tag for tag, hit in (("fs", by_chi[k]), ("derivative", by_step[k]), ("correlation", by_zz[k]))
                    if hit]
        intervals.append(TransitionInterval(scan[k].j2, scan[k + 1].j2, tuple(evidence),
                                            None if np.isnan(chi[k]) else float(chi[k])))
    logger.info("%d transition interval(s) in a %d point scan", len(intervals), len(scan))
    return intervals


def reliability_notes(scan: Sequence[ScanRecord], threshold: float = DEFAULT_THRESHOLD,
                      floor: float = DEFAULT_FLOOR) -> List[ReliabilityNote]:
    """
    Per-point remarks from cross-referencing the observables.

    A point whose XX correlations jump on every side while neither the
    fidelity susceptibility, the ZZ correlations nor the derivative move
    is reported as an XX anomaly: the structure did not change, so the
    X-basis data is suspect. Flags carried by the records themselves
    are reported too.
    """
    scan = list(scan)
    notes = []
    for record in scan:
        for flag in record.flags:
            notes.append(ReliabilityNote(record.j2, flag, "point flagged: {0}".format(flag)))
    if len(scan) < 3:
        return notes
    _check_order(scan)
    chi, step, zz, xx = _interval_metrics(scan)
    supported = (_robust_exceed(chi, threshold, floor) | _robust_exceed(step, threshold, floor)
                 | _robust_exceed(zz, threshold, floor))
    anomalous = _robust_exceed(xx, threshold, floor) & ~supported
    for k, record in enumerate(scan):
        sides = [anomalous[i] for i in (k - 1, k) if 0 <= i < len(anomalous)]
        if sides and all(sides):
            notes.append(ReliabilityNote(
                record.j2, "xx-anomaly",
                "XX correlations change without support from the fidelity susceptibility or ZZ correlations"))
    for note in notes:
        if note.kind == "xx-anomaly":
            logger.warning("J2=%g: %s", note.j2, note.message)
    return notes

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
