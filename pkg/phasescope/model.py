"""
The ANNNI chain and its exact solution.

    H = -J1 sum Z_i Z_{i+1} + J2 sum Z_i Z_{i+2} + Bx sum X_i

Exact diagonalization is a dense symmetric eigensolve (scipy.linalg.eigh),
which is the ground truth for every quantity the rest of the package
estimates. The perturbative helpers evaluate the fidelity susceptibility
and the energy curvature with respect to J2 from the spectrum.
"""
import logging
import math
import struct
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional

import numpy as np
import scipy.linalg

from .engine import Statevector
from .exception import (DegenerateGroundStateError, ModelSizeError,
                        PhaseScopeInternalError, PhaseScopeUserError)
from .pauli import PauliSum, PauliTerm

logger = logging.getLogger(__name__)

MAX_DENSE_SITES = 14

# Full spectrum by default up to this size, 2**12 = 4096 levels.
FULL_SPECTRUM_SITES = 12

_DEFAULT_TRUNCATED_STATES = 32

_RESIDUAL_TOLERANCE = 1e-8

# |<H_A>_{n0}|**2 below this is treated as zero when the gap is zero.
_COUPLING_TOLERANCE = 1e-12

## (1 - |<psi(J2 - d)|psi(J2 + d)>|) / d**2 tends to this constant times
## perturbative_chi. The overlap spans 2d and the fidelity falls off as
## 1 - chi * (2d)**2 / 2.
SYMMETRIC_OVERLAP_KAPPA = 2.0


class Boundary(Enum):
    OPEN = "open"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class ModelParams:
    """
    One point of the ANNNI phase diagram.

    Attributes
    ----------
    num_sites : int
        Chain length N, at least 3.
    j2 : float
        Next-nearest coupling in units of J1, non-negative.
    bx : float
        Transverse field in units of J1.
    boundary : Boundary
    j1 : float
        Energy unit, 1.0 unless there is a reason to change it.
    """
    num_sites: int
    j2: float
    bx: float
    boundary: Boundary = Boundary.OPEN
    j1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "num_sites", int(self.num_sites))
        for name in ("j2", "bx", "j1"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise PhaseScopeUserError("{0} must be finite".format(name))
            object.__setattr__(self, name, value)
        if self.num_sites < 3:
            raise PhaseScopeUserError("The ANNNI chain needs at least 3 sites")
        if self.j2 < 0:
            raise PhaseScopeUserError("J2 must be non-negative, got {0}".format(self.j2))

    @property
    def periodic(self):
        return self.boundary is Boundary.PERIODIC

    def with_j2(self, j2):
        return replace(self, j2=j2)

    def to_dict(self):
        return {"num_sites": self.num_sites, "j2": self.j2, "bx": self.bx,
                "boundary": self.boundary.value, "j1": self.j1}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def bonds(mp: ModelParams, distance: int):
    """Site pairs (i, i + distance), wrapped on a periodic chain."""
    n = mp.num_sites
    if mp.periodic:
        return [(i, (i + distance) % n) for i in range(n)]
    return [(i, i + distance) for i in range(n - distance)]


def _zz(n, i, j, coefficient):
    return PauliTerm.on(n, {i: "Z", j: "Z"}, coefficient)


def build_hamiltonian(mp: ModelParams) -> PauliSum:
    n = mp.num_sites
    terms = [_zz(n, i, j, -mp.j1) for i, j in bonds(mp, 1)]
    terms += [_zz(n, i, j, mp.j2) for i, j in bonds(mp, 2)]
    terms += [PauliTerm.on(n, {i: "X"}, mp.bx) for i in range(n)]
    return PauliSum.from_terms(terms, n)


def build_ha(mp: ModelParams) -> PauliSum:
    """dH/dJ2, the next-nearest ZZ sum with unit coefficients."""
    n = mp.num_sites
    return PauliSum.from_terms([_zz(n, i, j, 1.0) for i, j in bonds(mp, 2)], n)


def diagonal_energies(mp: ModelParams):
    """Classical energy of every Z basis state (the field term drops out)."""
    return build_hamiltonian(mp).diagonal()


def classical_configuration(mp: ModelParams) -> int:
    """Lowest-energy Z basis state, lowest index on ties."""
    return int(np.argmin(diagonal_energies(mp)))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """
    Lowest eigenpairs of H, ascending.

    Attributes
    ----------
    model : ModelParams
    energies : numpy.ndarray
    vectors : numpy.ndarray
        Column n is the eigenvector of energies[n].
    ground_degeneracy : int
        Number of energies within degeneracy_tol of the ground energy.
    degeneracy_tol : float
    """
    model: ModelParams
    energies: np.ndarray
    vectors: np.ndarray
    ground_degeneracy: int
    degeneracy_tol: float

    @property
    def states(self) -> List[Statevector]:
        return [Statevector(self.vectors[:, n], self.model.num_sites) for n in range(len(self.energies))]

    @property
    def ground_energy(self):
        return float(self.energies[0])

    @property
    def ground_state(self):
        return Statevector(self.vectors[:, 0], self.model.num_sites)

    @property
    def is_complete(self):
        return len(self.energies) == 1 << self.model.num_sites

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("n,energy\n")
            for n, energy in enumerate(self.energies):
                f.write("{0},{1!r}\n".format(n, float(energy)))

    def dump_amplitudes(self, path, n=0):
        """
        Binary dump of eigenvector n: little-endian uint32 N, then 2**N
        (real, imag) pairs of float64.
        """
        with open(path, "wb") as f:
            f.write(struct.pack("<I", self.model.num_sites))
            f.write(np.ascontiguousarray(self.vectors[:, n], dtype="<c16").tobytes())


def load_amplitudes(path) -> Statevector:
    with open(path, "rb") as f:
        (num_qubits,) = struct.unpack("<I", f.read(4))
        amplitudes = np.frombuffer(f.read(), dtype="<c16")
    return Statevector(amplitudes, num_qubits, normalize=True)


def exact_diagonalize(mp: ModelParams, num_states: Optional[int] = None,
                      degeneracy_tol: Optional[float] = None) -> SpectrumResult:
    """
    Dense eigensolve of the ANNNI Hamiltonian.

    Parameters
    ----------
    mp : ModelParams
    num_states : int, optional
        Number of low-lying levels to keep. Full spectrum by default up
        to 12 sites, 32 levels above that.
    degeneracy_tol : float, optional
        Defaults to 1e-8 * max(1, |E0|).

    Raises
    ------
    ModelSizeError
        More than 14 sites.
    """
    n = mp.num_sites
    if n > MAX_DENSE_SITES:
        raise ModelSizeError("Dense diagonalization is limited to {0} sites, got {1}".format(MAX_DENSE_SITES, n))
    dim = 1 << n
    if num_states is None:
        num_states = dim if n <= FULL_SPECTRUM_SITES else _DEFAULT_TRUNCATED_STATES
    num_states = max(1, min(int(num_states), dim))

    if mp.bx == 0:
        # Already diagonal. A stable sort keeps the choice among
        # degenerate levels deterministic: lowest basis index first.
        diagonal = diagonal_energies(mp)
        order = np.argsort(diagonal, kind="stable")[:num_states]
        energies = diagonal[order]
        vectors = np.zeros((dim, num_states))
        vectors[order, np.arange(num_states)] = 1.0
    else:
        h = build_hamiltonian(mp).to_matrix(dtype=float)
        if num_states == dim:
            energies, vectors = scipy.linalg.eigh(h)
        else:
            energies, vectors = scipy.linalg.eigh(h, subset_by_index=[0, num_states - 1])
        residual = np.linalg.norm(h @ vectors - vectors * energies, axis=0)
        worst = float(residual.max())
        if worst > _RESIDUAL_TOLERANCE:
            raise PhaseScopeInternalError("Eigenpair residual {0:.3g} too large".format(worst))

    if degeneracy_tol is None:
        degeneracy_tol = 1e-8 * max(1.0, abs(float(energies[0])))
    degeneracy = int(np.count_nonzero(energies - energies[0] <= degeneracy_tol))
    logger.debug("ED N=%d J2=%g Bx=%g: E0=%.12g, degeneracy %d",
                 n, mp.j2, mp.bx, energies[0], degeneracy)
    return SpectrumResult(mp, np.asarray(energies, dtype=float), np.asarray(vectors),
                          degeneracy, float(degeneracy_tol))


def _couplings(spec: SpectrumResult, ha: PauliSum):
    """
    Gaps E_n - E_0 and |<n|H_A|0>|**2 for the excited levels that enter
    the perturbative sums.

    A level inside the ground-state tolerance is dropped when it does
    not couple to the ground state through H_A (symmetry partners and
    exactly degenerate product states), and is a hard error otherwise.
    """
    if not spec.is_complete:
        logger.warning("Perturbative sum over a truncated spectrum (%d levels)", len(spec.energies))
    ground = spec.vectors[:, 0]
    elements = np.abs(spec.vectors.conj().T @ ha.apply(ground)) ** 2
    gaps = spec.energies - spec.energies[0]
    gaps, elements = gaps[1:], elements[1:]
    degenerate = gaps <= spec.degeneracy_tol
    if np.any(elements[degenerate] > _COUPLING_TOLERANCE):
        raise DegenerateGroundStateError(
            "Ground state at J2={0} is degenerate with a level that couples through the perturbation"
            .format(spec.model.j2))
    keep = ~degenerate
    return gaps[keep], elements[keep]


def perturbative_chi(spec: SpectrumResult, ha: PauliSum) -> float:
    """sum_n |<n|H_A|0>|**2 / (E_n - E_0)**2."""
    gaps, elements = _couplings(spec, ha)
    return float(np.sum(elements / gaps ** 2))


def second_derivative(spec: SpectrumResult, ha: PauliSum) -> float:
    """
    d2 E0 / dJ2**2 from second order perturbation theory.

    Returns the signed curvature, -2 sum_n |<n|H_A|0>|**2 / (E_n - E_0),
    which is never positive. Its magnitude is the positive sum.
    """
    gaps, elements = _couplings(spec, ha)
    return -2.0 * float(np.sum(elements / gaps))


def ground_state_overlap(a: SpectrumResult, b: SpectrumResult) -> float:
    return float(abs(np.vdot(a.vectors[:, 0], b.vectors[:, 0])))


def finite_difference_chi(mp: ModelParams, delta: float) -> float:
    """
    (1 - |<psi0(J2 - delta)|psi0(J2 + delta)>|) / delta**2 from ED.

    Tends to SYMMETRIC_OVERLAP_KAPPA * perturbative_chi as delta -> 0.
    """
    if delta <= 0 or mp.j2 - delta < 0:
        raise PhaseScopeUserError("Need 0 < delta <= J2, got {0}".format(delta))
    lower = exact_diagonalize(mp.with_j2(mp.j2 - delta), num_states=1)
    upper = exact_diagonalize(mp.with_j2(mp.j2 + delta), num_states=1)
    return (1.0 - ground_state_overlap(lower, upper)) / delta ** 2

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
