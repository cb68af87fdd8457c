#!/usr/bin/env python3

"""
Quick invariant checks of an installed phasescope, run by
``phase-scope selftest``. Each check takes well under a second.
"""

import logging
import math
import sys
from collections import namedtuple

import numpy as np

from ..analysis import aligned_fidelity, align_correlations, correlation_matrix, shift_matrix
from ..engine import Statevector, expectation
from ..mitigation import zne_fit
from ..model import Boundary, ModelParams, build_ha, diagonal_energies, exact_diagonalize
from ..noise import twirled_cnot_ptm
from ..pauli import PauliTerm, multiply
from ..records import Basis
from ..symmetry import SymmetryGroup

logger = logging.getLogger(__name__)

CheckResult = namedtuple("CheckResult", ["name", "passed", "detail"])


def check_pauli_product():
    phase, product = multiply(PauliTerm("X"), PauliTerm("Y"))
    return phase == 1j and product.letters == "Z", "XY = {0} {1}".format(phase, product.letters)


def check_twirl_diagonal():
    ptm = twirled_cnot_ptm(0.02, 0.01)
    off = float(np.max(np.abs(ptm - np.diag(np.diag(ptm)))))
    return off < 1e-10, "largest off-diagonal {0:.3g}".format(off)


def check_degenerate_point():
    mp = ModelParams(12, 0.5, 0.0, Boundary.PERIODIC)
    diagonal = diagonal_energies(mp)
    antiphase = int("001100110011"[::-1], 2)
    degeneracy = exact_diagonalize(mp, num_states=16).ground_degeneracy
    ok = diagonal[0] == -6.0 and diagonal[antiphase] == -6.0 and degeneracy > 2
    return ok, "ferro {0}, antiphase {1}, degeneracy {2}".format(diagonal[0], diagonal[antiphase], degeneracy)


def check_hellmann_feynman():
    mp = ModelParams(4, 0.3, 0.3)
    h = 1e-4
    ground = exact_diagonalize(mp, num_states=1).ground_state
    force = expectation(ground, build_ha(mp))
    upper = exact_diagonalize(mp.with_j2(mp.j2 + h), num_states=1).ground_energy
    lower = exact_diagonalize(mp.with_j2(mp.j2 - h), num_states=1).ground_energy
    error = abs(force - (upper - lower) / (2 * h))
    return error < 1e-4, "|<H_A> - dE/dJ2| = {0:.3g}".format(error)


def check_generator_alignment():
    group = SymmetryGroup.for_model(ModelParams(4, 0.2, 0.1))
    fs = aligned_fidelity(Statevector.zero(4), Statevector.basis_state(4, 15), group)
    return abs(fs.chi) < 1e-12 and fs.label == "X", "chi {0:.3g} via {1}".format(fs.chi, fs.label)


def check_zne_recovery():
    e0, a = -2.0, -0.1
    points = [(lam, e0 * math.exp(a * lam), 0.01) for lam in (1, 3, 5)]
    fit = zne_fit(points)
    error = abs(fit.e0 - e0) / abs(e0)
    return error < 1e-8 and fit.fit_kind == "exponential", "relative error {0:.3g}".format(error)


def check_shift_alignment():
    state = Statevector.from_bits("00110011")
    ref = correlation_matrix(state, Basis.Z)
    cur = correlation_matrix(state, Basis.Z)
    cur = type(cur)(cur.basis, shift_matrix(cur.values, 1), cur.stderr)
    aligned, k = align_correlations(ref, cur)
    return k == 1 and np.array_equal(aligned.values, ref.values), "recovered shift {0}".format(k)


CHECKS = (
    ("pauli-product", check_pauli_product),
    ("twirl-diagonal", check_twirl_diagonal),
    ("degenerate-point", check_degenerate_point),
    ("hellmann-feynman", check_hellmann_feynman),
    ("generator-alignment", check_generator_alignment),
    ("zne-recovery", check_zne_recovery),
    ("shift-alignment", check_shift_alignment),
)


def run_selftest():
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check()
        except Exception as ex:
            passed, detail = False, "{0}: {1}".format(type(ex).__name__, ex)
        logger.info("%s %s: %s", "ok  " if passed else "FAIL", name, detail)
        results.append(CheckResult(name, bool(passed), detail))
    return results


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    sys.exit(0 if all(r.passed for r in run_selftest()) else 1)

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
