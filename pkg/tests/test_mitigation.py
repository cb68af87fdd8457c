import math

import numpy as np
import pytest

from phasescope.engine import Circuit, Gate, expectation, inner_product, run
from phasescope.exception import MitigationError
from phasescope.model import ModelParams, build_hamiltonian, classical_configuration, exact_diagonalize
from phasescope.mitigation import (MIN_ATTENUATION, TrexCalibration, calibration_from_records, derived_seed,
                                   fold_cnots, split_shots, trex_calibrate, trex_correct, trex_execute, zne_fit)
from phasescope.noise import ConfusionModel, Executor, NoiseModel
from phasescope.pauli import PauliSum, PauliTerm, expectation_from_counts
from phasescope.records import Basis, MeasurementRecord
from phasescope.vqe import (AnsatzSpec, EnergyCost, Schedule, build_ansatz, classical_seed, initial_parameters,
                            optimize)

SYMMETRIC_READOUT = Executor(NoiseModel.readout_only(0.05, 0.05))


def test_split_shots():
    assert split_shots(10, 3) == [4, 3, 3]
    assert sum(split_shots(100001, 16)) == 100001


def test_derived_seeds_differ():
    assert derived_seed(1, 0) != derived_seed(1, 1)
    assert derived_seed(1, 2, 3) == derived_seed(1, 2, 3)


def test_trex_execute_records():
    circuit = build_ansatz(AnsatzSpec(3, 1))
    params = initial_parameters(AnsatzSpec(3, 1), 0, 1.0)
    records = trex_execute(circuit, params, SYMMETRIC_READOUT, Basis.Z, 1000, num_twirls=8, seed=3,
                           tags={"level": "trex"})
    assert [r.frame_id for r in records] == list(range(8))
    assert sum(r.shots for r in records) == 1000
    assert all(r.tags == {"level": "trex"} for r in records)
    again = trex_execute(circuit, params, SYMMETRIC_READOUT, Basis.Z, 1000, num_twirls=8, seed=3)
    assert [r.counts for r in records] == [r.counts for r in again]
    assert [r.readout_mask for r in records] == [r.readout_mask for r in again]


def test_gate_twirl_keeps_ideal_distribution():
    spec = AnsatzSpec(3, 1)
    circuit = build_ansatz(spec)
    params = initial_parameters(spec, 4, 1.0)
    records = trex_execute(circuit, params, Executor(), Basis.Z, 40000, num_twirls=4, seed=1, gate_twirl=True)
    obs = PauliSum.from_terms([PauliTerm("ZZI"), PauliTerm("IZZ")])
    state = run(circuit, params)
    exact = sum(np.vdot(state.amplitudes, t.to_matrix() @ state.amplitudes).real for t in obs)
    value, stderr = expectation_from_counts(obs, records)
    assert abs(value - exact) < 5 * stderr + 1e-9


def test_calibration_measures_attenuation():
    cal = trex_calibrate(SYMMETRIC_READOUT, 3, 60000, seed=2)
    assert cal.num_qubits == 3
    assert not cal.low_confidence
    for c, s in zip(cal.factors, cal.stderr):
        assert abs(c - 0.9) < 5 * s


def test_ideal_calibration_is_exact():
    cal = trex_calibrate(Executor(), 2, 100, seed=0)
    assert cal.factors == (1.0, 1.0)


def test_trex_correction_removes_readout_bias():
    circuit = Circuit(3, (Gate.x(1),))
    obs = PauliSum.from_terms([PauliTerm("IZI"), PauliTerm("ZZI", 0.5)])
    records = trex_execute(circuit, None, SYMMETRIC_READOUT, Basis.Z, 60000, seed=5)
    raw, _ = expectation_from_counts(obs, records)
    assert raw == pytest.approx(-0.9 - 0.5 * 0.81, abs=0.02)
    cal = trex_calibrate(SYMMETRIC_READOUT, 3, 60000, seed=6)
    value, stderr = trex_correct(obs, records, cal)
    assert abs(value - (-1.5)) < 5 * stderr


def test_trex_correction_refuses_weak_readout():
    cal = TrexCalibration((1.0, 0.5 * MIN_ATTENUATION), (0.0, 0.0), 100)
    records = trex_execute(Circuit(2), None, Executor(), Basis.Z, 100)
    with pytest.raises(MitigationError):
        trex_correct(PauliSum.from_terms([PauliTerm("ZI")]), records, cal)


def test_trex_stderr_includes_calibration():
    cal = TrexCalibration((0.9, 0.9), (0.01, 0.01), 1000)
    records = [MeasurementRecord(Basis.Z, 2, {0b00: 1000})]
    value, stderr = trex_correct(PauliSum.from_terms([PauliTerm("ZZ")]), records, cal)
    assert value == pytest.approx(1 / 0.81)
    # no shot spread; both c_i errors move the single term
    assert stderr == pytest.approx(math.sqrt(2) * (1 / 0.81) * (0.01 / 0.9))


def test_calibration_stderr_covers_frame_spread():
    # qubit 0 reads +1 in one frame and -1 in the other
    records = [MeasurementRecord(Basis.Z, 1, {0: 100}, frame_id=0),
               MeasurementRecord(Basis.Z, 1, {1: 100}, frame_id=1)]
    cal = calibration_from_records(records, 1)
    assert cal.factors == (0.0,)
    assert cal.stderr[0] == pytest.approx(1.0)
    assert cal.shots == 200


@pytest.fixture(scope="module")
def annni_state():
    mp = ModelParams(4, 0.3, 0.1)
    spec = AnsatzSpec(4, 2)
    circuit = build_ansatz(spec)
    start = classical_seed(spec, classical_configuration(mp), initial_parameters(spec, 0, 0.1))
    report = optimize(circuit, start, EnergyCost(circuit, build_hamiltonian(mp)),
                      Schedule(max_iterations=500, gradient_tol=1e-6))
    params = np.asarray(report.final_params)
    return mp, circuit, params, expectation(run(circuit, params), build_hamiltonian(mp))


def _trex_energy(mp, circuit, params, executor, shots, seed):
    records = []
    for b, basis in enumerate((Basis.Z, Basis.X)):
        records += trex_execute(circuit, params, executor, basis, shots, seed=derived_seed(seed, b))
    cal = trex_calibrate(executor, mp.num_sites, shots, derived_seed(seed, 2))
    return trex_correct(build_hamiltonian(mp), records, cal)


def test_trex_ground_state_energy(annni_state):
    mp, circuit, params, energy = annni_state
    ed = exact_diagonalize(mp, num_states=1).ground_energy
    executor = Executor(NoiseModel.readout_only(0.02, 0.04))
    value, stderr = _trex_energy(mp, circuit, params, executor, 100000, seed=1)
    assert abs(value - ed) < 4 * stderr + abs(energy - ed)


@pytest.mark.slow
def test_trex_energy_is_unbiased(annni_state):
    mp, circuit, params, energy = annni_state
    executor = Executor(NoiseModel.readout_only(0.02, 0.04))
    z = []
    for seed in range(100):
        value, stderr = _trex_energy(mp, circuit, params, executor, 100000, seed)
        z.append((value - energy) / stderr)
    assert abs(np.mean(z)) < 0.3
    assert 0.5 <= np.var(z) <= 2.0


def test_fold_cnots():
    spec = AnsatzSpec(4, 1)
    circuit = build_ansatz(spec)
    folded = fold_cnots(circuit, 3)
    assert folded.cnot_count == 3 * circuit.cnot_count
    assert folded.circuit_id.endswith("@fold3")
    assert fold_cnots(circuit, 1).circuit_id == circuit.circuit_id
    params = initial_parameters(spec, 0, 1.0)
    assert abs(inner_product(run(circuit, params), run(folded, params))) == pytest.approx(1.0)
    with pytest.raises(MitigationError):
        fold_cnots(circuit, 2)


def test_folding_amplifies_gate_noise():
    spec = AnsatzSpec(3, 1)
    circuit = build_ansatz(spec)
    params = np.zeros(spec.num_parameters)
    executor = Executor(NoiseModel(0.05, 0.0, ConfusionModel()))
    obs = PauliSum.from_terms([PauliTerm("ZZI"), PauliTerm("IZZ")])
    values = [expectation_from_counts(obs, [executor.run(fold_cnots(circuit, lam), params, Basis.Z, 40000, 1)])[0]
              for lam in (1, 3, 5)]
    assert values[0] > values[1] > values[2]


def test_zne_recovers_exponential():
    points = [(lam, -2.0 * math.exp(-0.1 * lam), 0.01) for lam in (1, 3, 5)]
    fit = zne_fit(points)
    assert fit.fit_kind == "exponential"
    assert not fit.flagged
    assert fit.e0 == pytest.approx(-2.0, rel=1e-10)
    assert fit.a == pytest.approx(-0.1, rel=1e-10)
    assert fit.e0_stderr > 0


def test_zne_without_errors():
    fit = zne_fit([(1, 0.9, 0.0), (3, 0.9 ** 3, 0.0)])
    assert fit.e0 == pytest.approx(1.0)


def test_zne_falls_back_to_linear_on_sign_change():
    fit = zne_fit([(1, 0.1, 0.01), (3, -0.1, 0.01), (5, -0.3, 0.01)])
    assert fit.fit_kind == "linear"
    assert fit.flagged
    assert fit.e0 == pytest.approx(0.2)
    assert fit.linear_e0 == fit.e0


@pytest.mark.parametrize("points", [
    [(1, 1.0, 0.1)],
    [(1, 1.0, 0.1), (1, 0.9, 0.1)],
    [(1, 1.0, 0.1), (2, 0.9, 0.1)],
])
def test_zne_rejects_bad_factors(points):
    with pytest.raises(MitigationError):
        zne_fit(points)
