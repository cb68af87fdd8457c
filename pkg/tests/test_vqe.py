import numpy as np
import pytest

from phasescope.engine import Statevector, expectation, run
from phasescope.exception import DimensionMismatchError, PhaseScopeUserError
from phasescope.model import Boundary, ModelParams, build_hamiltonian, diagonal_energies, exact_diagonalize
from phasescope.symmetry import SymmetryGroup
from phasescope.vqe import (AnsatzSpec, BootstrapPolicy, CostKind, EnergyCost, OverlapCost, ScanStrategy,
                            Schedule, build_ansatz, classical_seed, cnot_rounds, desymmetrize_target, energy_cost,
                            initial_parameters, load_parameters, optimize, overlap_cost, parameter_shift_gradient,
                            save_parameters, scan_optimize)


FAST = Schedule(max_iterations=300, gradient_tol=1e-5)


@pytest.mark.parametrize("n, layers", [(4, 1), (5, 2), (8, 3)])
def test_parameter_count(n, layers):
    spec = AnsatzSpec(n, layers)
    circuit = build_ansatz(spec)
    assert circuit.num_parameters == n * (2 * layers + 1)
    assert sorted(circuit.slots) == list(range(circuit.num_parameters))
    assert spec.final_row == 2 * layers * n


def test_cnot_rounds():
    assert cnot_rounds(AnsatzSpec(4, 1)) == ([(0, 1), (2, 3)], [(1, 2)])
    assert cnot_rounds(AnsatzSpec(4, 1, "periodic")) == ([(0, 1), (2, 3)], [(1, 2), (3, 0)])
    assert cnot_rounds(AnsatzSpec(5, 1, "periodic")) == ([(0, 1), (2, 3), (4, 0)], [(1, 2), (3, 4)])
    assert build_ansatz(AnsatzSpec(4, 2)).cnot_count == 6


def test_invalid_ansatz():
    with pytest.raises(PhaseScopeUserError):
        AnsatzSpec(4, 0)


def test_cost_functions():
    spec = AnsatzSpec(4, 1)
    circuit = build_ansatz(spec)
    hamiltonian = build_hamiltonian(ModelParams(4, 0.3, 0.5))
    params = initial_parameters(spec, 2, scale=1.0)
    state = run(circuit, params)
    assert energy_cost(circuit, params, hamiltonian) == pytest.approx(expectation(state, hamiltonian))
    assert overlap_cost(circuit, params, state) == pytest.approx(0.0, abs=1e-12)
    assert overlap_cost(circuit, params, Statevector.basis_state(4, 0)) > 0


def test_parameter_shift_matches_finite_difference():
    spec = AnsatzSpec(4, 1)
    circuit = build_ansatz(spec)
    cost = EnergyCost(circuit, build_hamiltonian(ModelParams(4, 0.3, 0.5)))
    params = initial_parameters(spec, 5, scale=1.0)
    gradient = parameter_shift_gradient(cost, params)
    h = 1e-6
    for k in range(params.size):
        e = np.zeros(params.size)
        e[k] = h
        assert gradient[k] == pytest.approx((cost(params + e) - cost(params - e)) / (2 * h), abs=1e-6)


def test_batched_cost_matches_single():
    spec = AnsatzSpec(4, 1)
    circuit = build_ansatz(spec)
    target = exact_diagonalize(ModelParams(4, 0.3, 0.5)).ground_state
    cost = OverlapCost(circuit, target)
    points = np.stack([initial_parameters(spec, s, 1.0) for s in range(3)])
    assert np.allclose(cost.batch(points), [cost(p) for p in points])


def test_classical_seed_prepares_configuration():
    spec = AnsatzSpec(5, 1)
    configuration = 0b10110
    params = classical_seed(spec, configuration, np.zeros(spec.num_parameters))
    state = run(build_ansatz(spec), params)
    assert abs(state.amplitudes[configuration]) == pytest.approx(1.0)


def test_optimize_is_variational():
    mp = ModelParams(4, 0.3, 0.5)
    spec = AnsatzSpec(4, 1)
    circuit = build_ansatz(spec)
    start = classical_seed(spec, 0, np.zeros(spec.num_parameters))
    report = optimize(circuit, start, EnergyCost(circuit, build_hamiltonian(mp)), FAST)
    assert report.cost_kind is CostKind.ENERGY
    assert report.final_cost >= exact_diagonalize(mp).ground_energy - 1e-9
    assert report.final_cost <= diagonal_energies(mp).min()
    assert list(report.cost_history) == sorted(report.cost_history, reverse=True)


def test_optimize_checks_size():
    circuit = build_ansatz(AnsatzSpec(4, 1))
    with pytest.raises(DimensionMismatchError):
        optimize(circuit, np.zeros(3), lambda p: 0.0)


def test_overlap_fit_reaches_product_state():
    spec = AnsatzSpec(3, 1)
    circuit = build_ansatz(spec)
    target = Statevector.from_bits("101")
    start = classical_seed(spec, 0b101, initial_parameters(spec, 3, 0.3))
    report = optimize(circuit, start, OverlapCost(circuit, target),
                      Schedule(max_iterations=2000, gradient_tol=1e-8))
    assert report.cost_kind is CostKind.NEGATIVE_OVERLAP
    assert report.final_cost < 1e-6


def test_desymmetrize_target_breaks_flip():
    mp = ModelParams(4, 0.2, 0.1)
    spec = exact_diagonalize(mp)
    target = desymmetrize_target(spec, SymmetryGroup.for_model(mp))
    weights = np.abs(target.amplitudes[[0, 15]]) ** 2
    assert weights.max() > 0.9
    assert weights.min() < 0.05


@pytest.mark.slow
def test_desymmetrize_target_picks_one_antiphase_sector():
    mp = ModelParams(12, 0.6, 0.1, Boundary.PERIODIC)
    spec = exact_diagonalize(mp, num_states=4)
    group = SymmetryGroup.for_model(mp)
    target = desymmetrize_target(spec, group).amplitudes
    dominant = int(np.argmax(np.abs(target)))
    orbit = group.orbit(dominant)
    # four cyclic relabelings of up-up-down-down
    assert len(orbit) == 4
    # each sector is represented by its product state projected on the low-lying quartet
    low = spec.vectors
    overlaps = []
    for b in orbit:
        representative = low @ low[b, :].conj()
        representative = representative / np.linalg.norm(representative)
        overlaps.append(abs(np.vdot(representative, target)) ** 2)
    assert max(overlaps) >= 0.99
    assert sorted(overlaps)[-2] < 0.01


@pytest.mark.slow
def test_open_chain_of_8_reaches_ground_energy():
    grid = [ModelParams(8, round(0.2 + 0.05 * k, 10), 0.1) for k in range(15)]
    results = scan_optimize(grid, AnsatzSpec(8, 1), ScanStrategy(seed=3))
    for r in results:
        assert not r.failed
        exact = exact_diagonalize(r.model, num_states=1).ground_energy
        assert exact - 1e-9 <= r.energy < exact + 5e-2


def test_scan_is_deterministic():
    grid = [ModelParams(4, j2, 0.5) for j2 in (0.1, 0.3)]
    strategy = ScanStrategy(schedule=FAST, seed=7, bootstrap=BootstrapPolicy.NEVER)
    a = scan_optimize(grid, AnsatzSpec(4, 1), strategy)
    b = scan_optimize(grid, AnsatzSpec(4, 1), strategy)
    for x, y in zip(a, b):
        assert not x.failed
        assert x.params.angles == y.params.angles


def test_independent_points_with_restarts():
    grid = [ModelParams(4, j2, 0.5) for j2 in (0.1, 0.3, 0.6)]
    strategy = ScanStrategy(schedule=FAST, warm_start=False, restarts=1, workers=2)
    results = scan_optimize(grid, AnsatzSpec(4, 1), strategy)
    assert [r.model.j2 for r in results] == [0.1, 0.3, 0.6]
    for r in results:
        assert r.energy >= exact_diagonalize(r.model).ground_energy - 1e-9


def test_scan_size_mismatch():
    with pytest.raises(DimensionMismatchError):
        scan_optimize([ModelParams(5, 0.1, 0.5)], AnsatzSpec(4, 1))


def test_parameter_file(temp_dir):
    grid = [ModelParams(4, 0.3, 0.5)]
    spec = AnsatzSpec(4, 1)
    result = scan_optimize(grid, spec, ScanStrategy(schedule=FAST))[0]
    path = temp_dir / "params.json"
    save_parameters(path, result, spec, 7)
    model, loaded_spec, params, data = load_parameters(path)
    assert model == grid[0]
    assert loaded_spec == spec
    assert params.angles == result.params.angles
    assert data["seed"] == 7
