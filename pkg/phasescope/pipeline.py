"""
The batch stages behind the command line: optimize, scan, summarize,
analyze and the exact-diagonalization dump.

Acquisition and post-processing are separate. cmd_scan archives every
MeasurementRecord first and then calls cmd_summarize, which rebuilds
the results table from the run directory alone and can be re-run
offline.
"""
import logging
import os
from typing import List, Optional

import dask
import numpy as np

from . import archive
from .analysis import (CorrelationMatrix, ScanRecord, aligned_fidelity, align_scan, correlation_matrix,
                       detect_transitions, energy_derivative, energy_estimate, fs_from_survivals,
                       overlap_record, reliability_notes, survival_from_record)
from .config import ScanConfig
from .engine import expectation, run
from .exception import PhaseScopeError, PhaseScopeUserError
from .mitigation import (calibration_from_records, calibration_records, derived_seed, fold_cnots,
                         trex_execute, zne_fit)
from .model import (MAX_DENSE_SITES, build_ha, build_hamiltonian, exact_diagonalize, perturbative_chi,
                    second_derivative)
from .noise import Executor
from .records import Basis, Estimate, read_jsonl, write_jsonl
from .symmetry import SymmetryGroup
from .vqe import build_ansatz, load_parameters, save_parameters, scan_optimize

logger = logging.getLogger(__name__)

LEVELS = ("raw", "trex", "twirl", "zne")
REFERENCE_LEVELS = ("ideal", "ed")
_STAGES = {"raw": 0, "trex": 1, "twirl": 2, "zne": 3, "calibration": 4, "overlap": 5}
_BASES = (Basis.Z, Basis.X)


def results_columns():
    columns = ["index", "j2", "bx", "num_sites", "boundary", "status", "flags"]
    for level in LEVELS + REFERENCE_LEVELS:
        for name in ("energy", "derivative"):
            columns += ["{0}_{1}".format(name, level), "{0}_{1}_stderr".format(name, level)]
    columns += ["zne_fit", "zne_a", "zne_derivative_fit", "zne_linear_energy",
                "chi", "chi_stderr", "chi_label", "chi_ideal", "chi_ed"]
    return columns


def _point_seed(config, index, stage, *key):
    return derived_seed(config.seed, index, _STAGES[stage], *key)


def _config_from_run(run):
    return ScanConfig.from_dict(archive.read_manifest(run)["config"])

# ---------- optimize ----------

def cmd_optimize(config: ScanConfig):
    """
    Optimize every grid point and archive the parameters.

    Returns
    -------
    run : RunDirectory
    results : list of ScanPointResult
    """
    config_dict = config.to_dict()
    run = archive.RunDirectory.for_config(config_dict, config.output).create()
    grid = config.grid()
    archive.write_manifest(run, config_dict, grid)
    logger.info("Optimizing %d points into %s", len(grid), run.root)
    results = scan_optimize(grid, config.ansatz, config.strategy())
    for i, result in enumerate(results):
        save_parameters(run.params_path(i), result, config.ansatz, config.seed)
    failed = sum(1 for r in results if r.failed)
    if failed:
        logger.warning("%d of %d points failed to optimize", failed, len(results))
    return run, results

# ---------- scan: acquisition ----------

def _load_point(run, index):
    path = run.params_path(index)
    if not os.path.isfile(path):
        return None, "missing-parameters"
    _, _, params, data = load_parameters(path)
    if params is None:
        return None, "optimization-failed"
    return np.asarray(params), None if data.get("converged", False) else "not-converged"


def _measure(executor, circuit, params, config, index, level, basis_index, basis, lam=1):
    m = config.mitigation
    tags = {"role": "measurement", "level": level, "point": index}
    seed = _point_seed(config, index, level, basis_index, lam)
    if level == "raw" or (level == "zne" and not (m.trex or m.twirl)):
        return [executor.run(circuit, params, basis, config.shots, seed, circuit_id=circuit.circuit_id,
                             noise_scale=lam, tags=tags)]
    gate_twirl = level == "twirl" or (level == "zne" and m.twirl)
    return trex_execute(circuit, params, executor, basis, config.shots, m.num_twirls, seed,
                        gate_twirl=gate_twirl, noise_scale=lam, tags=tags)


def acquire_point(index, mp, params, next_params, circuit, executor, config: ScanConfig, group):
    """All records of one scan point, in a fixed order."""
    records = []
    if params is None:
        return records
    m = config.mitigation
    for b, basis in enumerate(_BASES):
        records += _measure(executor, circuit, params, config, index, "raw", b, basis)
        if m.trex:
            records += _measure(executor, circuit, params, config, index, "trex", b, basis)
        if m.twirl:
            records += _measure(executor, circuit, params, config, index, "twirl", b, basis)
        if m.zne:
            for lam in m.lambdas:
                if lam != 1:
                    records += _measure(executor, fold_cnots(circuit, lam), params, config, index, "zne", b, basis,
                                        lam)
    if m.trex:
        records += calibration_records(executor, mp.num_sites, config.calibration_shots,
                                       _point_seed(config, index, "calibration"), m.num_twirls, str(index))
    if next_params is not None:
        for g_index, generator in enumerate(group):
            records.append(overlap_record(circuit, params, circuit, next_params, generator, executor,
                                          config.overlap_shots, _point_seed(config, index, "overlap", g_index),
                                          tags={"role": "overlap", "pair": [index, index + 1]}))
    logger.info("Point %d (J2=%g): %d records", index, mp.j2, len(records))
    return records


def cmd_scan(config: ScanConfig, summarize: bool = True):
    """
    Execute the archived parameters of every point on the configured
    device and archive the records, then summarize.

    A point without usable parameters is skipped and flagged.
    """
    run = archive.RunDirectory.for_config(config.to_dict(), config.output)
    if not run.exists():
        raise PhaseScopeUserError("No parameter archive for this config in {0}; run optimize first".format(run.root))
    run.create()
    grid = config.grid()
    circuit = build_ansatz(config.ansatz)
    executor = Executor(config.noise)
    group = SymmetryGroup.for_model(grid[0])
    loaded = [_load_point(run, i) for i in range(len(grid))]
    params = [p for p, _ in loaded]

    tasks = [dask.delayed(acquire_point)(i, mp, params[i], params[i + 1] if i + 1 < len(grid) else None,
                                         circuit, executor, config, group)
             for i, mp in enumerate(grid)]
    logger.info("Scanning %d points on %r with %d worker(s)", len(grid), executor, config.workers)
    per_point = dask.compute(*tasks, scheduler="threads", num_workers=config.workers)
    for i, records in enumerate(per_point):
        write_jsonl(run.records_path(i), records)
    if summarize:
        cmd_summarize(run)
    return run

# ---------- summarize: post-processing from the archive ----------

def _select(records, role, level=None):
    return [r for r in records
            if r.tags.get("role") == role and (level is None or r.tags.get("level") == level)]


def _zne_base(config):
    m = config.mitigation
    return "twirl" if m.twirl else ("trex" if m.trex else "raw")


def _level_estimates(mp, records, calibration):
    energy = energy_estimate(records, mp, calibration)
    derivative = energy_derivative(records, mp, calibration)
    zz = correlation_matrix(records, Basis.Z, calibration)
    xx = correlation_matrix(records, Basis.X, calibration)
    return energy, derivative, zz, xx


def _zne_estimates(mp, records, config, calibration, row, flags):
    base = _zne_base(config)
    by_scale = {1: _select(records, "measurement", base)}
    for r in _select(records, "measurement", "zne"):
        by_scale.setdefault(r.noise_scale, []).append(r)
    points_e, points_d = [], []
    for lam in sorted(by_scale):
        e = energy_estimate(by_scale[lam], mp, calibration)
        d = energy_derivative(by_scale[lam], mp, calibration)
        points_e.append((lam, e.value, e.stderr))
        points_d.append((lam, d.value, d.stderr))
    fit_e = zne_fit(points_e)
    fit_d = zne_fit(points_d)
    row["zne_fit"] = fit_e.fit_kind
    row["zne_a"] = fit_e.a
    row["zne_derivative_fit"] = fit_d.fit_kind
    row["zne_linear_energy"] = fit_e.linear_e0
    if fit_e.flagged:
        flags.append("zne-linear-energy")
    if fit_d.flagged:
        flags.append("zne-linear-derivative")
    return fit_e.estimate(), fit_d.estimate()


def _put(row, name, level, estimate):
    row["{0}_{1}".format(name, level)] = float(estimate.value)
    row["{0}_{1}_stderr".format(name, level)] = float(estimate.stderr)


def summarize_point(index, mp, records, params, circuit, config: ScanConfig):
    """
    Returns
    -------
    row : dict
        One results table row, without the interval columns.
    correlations : dict
        level -> {"ZZ": ..., "XX": ...} as dicts.
    state : Statevector or None
        The noise-free VQE state, for the ideal interval columns.
    ed_state : Statevector or None
    flags : list of str
    """
    row = {"index": index, "j2": mp.j2, "bx": mp.bx, "num_sites": mp.num_sites, "boundary": mp.boundary.value}
    flags = []
    correlations = {}
    state = ed_state = None

    if mp.num_sites <= MAX_DENSE_SITES:
        ed_state = exact_diagonalize(mp, num_states=1).ground_state
        _put(row, "energy", "ed", Estimate(expectation(ed_state, build_hamiltonian(mp)), 0.0))
        _put(row, "derivative", "ed", Estimate(expectation(ed_state, build_ha(mp)), 0.0))
        correlations["ed"] = {"ZZ": correlation_matrix(ed_state, Basis.Z).to_dict(),
                              "XX": correlation_matrix(ed_state, Basis.X).to_dict()}

    if params is None:
        return row, correlations, state, ed_state, flags

    state = run(circuit, params)
    _put(row, "energy", "ideal", Estimate(expectation(state, build_hamiltonian(mp)), 0.0))
    _put(row, "derivative", "ideal", energy_derivative(state, mp))
    correlations["ideal"] = {"ZZ": correlation_matrix(state, Basis.Z).to_dict(),
                             "XX": correlation_matrix(state, Basis.X).to_dict()}

    m = config.mitigation
    calibration = None
    if m.trex:
        try:
            calibration = calibration_from_records(_select(records, "calibration"), mp.num_sites, str(index))
            if calibration.low_confidence:
                flags.append("low-confidence-calibration")
        except PhaseScopeError as ex:
            flags.append("calibration-failed")
            logger.warning("Point %d: calibration failed: %s", index, ex)

    for level in config.mitigation.levels:
        try:
            if level == "zne":
                energy, derivative = _zne_estimates(mp, records, config, calibration, row, flags)
            else:
                selected = _select(records, "measurement", level)
                energy, derivative, zz, xx = _level_estimates(mp, selected, None if level == "raw" else calibration)
                correlations[level] = {"ZZ": zz.to_dict(), "XX": xx.to_dict()}
            _put(row, "energy", level, energy)
            _put(row, "derivative", level, derivative)
        except PhaseScopeError as ex:
            flags.append("{0}-failed".format(level))
            logger.warning("Point %d: %s estimates failed: %s", index, level, ex)
    return row, correlations, state, ed_state, flags


def _overlap_chi(records, index):
    survivals = {}
    for r in _select(records, "overlap"):
        if list(r.tags.get("pair", [])) == [index, index + 1]:
            survivals[r.tags["generator"]] = survival_from_record(r)
    return fs_from_survivals(survivals) if survivals else None


def cmd_summarize(run):
    """
    Rebuild results.csv and the correlation sidecars from the archived
    parameters and records.
    """
    config = _config_from_run(run)
    grid = config.grid()
    circuit = build_ansatz(config.ansatz)
    group = SymmetryGroup.for_model(grid[0])

    def one(i, mp):
        params, status = _load_point(run, i)
        path = run.records_path(i)
        records = read_jsonl(path) if os.path.isfile(path) else []
        row, correlations, state, ed_state, flags = summarize_point(i, mp, records, params, circuit, config)
        if status is not None:
            flags.insert(0, status)
        row["status"] = "ok" if params is not None else status
        row["flags"] = ";".join(flags)
        return row, correlations, state, ed_state, _overlap_chi(records, i)

    tasks = [dask.delayed(one)(i, mp) for i, mp in enumerate(grid)]
    summaries = dask.compute(*tasks, scheduler="threads", num_workers=config.workers)

    rows = []
    for i, (row, correlations, state, ed_state, chi) in enumerate(summaries):
        if chi is not None:
            row.update(chi=chi.chi, chi_stderr=chi.stderr, chi_label=chi.label)
        if i + 1 < len(summaries):
            following = summaries[i + 1]
            if state is not None and following[2] is not None:
                row["chi_ideal"] = aligned_fidelity(state, following[2], group).chi
            if ed_state is not None and following[3] is not None:
                row["chi_ed"] = aligned_fidelity(ed_state, following[3], group).chi
        archive.write_json(run.correlations_path(i), {"index": i, "j2": row["j2"], "levels": correlations})
        rows.append(row)
    archive.write_results_csv(run.results_path, results_columns(), rows)
    logger.info("Wrote %d rows to %s", len(rows), run.results_path)
    return rows

# ---------- analyze ----------

def _estimate(row, name, level):
    value = row.get("{0}_{1}".format(name, level))
    if value is None:
        return None
    return Estimate(value, row.get("{0}_{1}_stderr".format(name, level)) or 0.0)


def _best_level(rows):
    for level in reversed(LEVELS):
        if any(row.get("energy_{0}".format(level)) is not None for row in rows):
            return level
    return "ideal"


def load_scan(run, level: Optional[str] = None) -> List[ScanRecord]:
    """
    ScanRecords from a summarized run. level picks the energy and
    derivative columns (default: the most mitigated level present);
    correlations come from the same level, or from the most mitigated
    non-extrapolated level for "zne".
    """
    config = _config_from_run(run)
    _, rows = archive.read_results_csv(run.results_path)
    if not rows:
        return []
    level = level or _best_level(rows)
    if level not in LEVELS + REFERENCE_LEVELS:
        raise PhaseScopeUserError("Unknown level {0!r}".format(level))
    matrix_level = _zne_base(config) if level == "zne" else level
    chi_column = {"ideal": "chi_ideal", "ed": "chi_ed"}.get(level, "chi")
    grid = config.grid()

    scan = []
    for row in rows:
        index = int(row["index"])
        sidecar = archive.read_json(run.correlations_path(index)).get("levels", {})
        matrices = sidecar.get(matrix_level, {})
        chi = row.get(chi_column)
        chi_stderr = row.get("chi_stderr") if chi_column == "chi" else 0.0
        flags = tuple(f for f in (row.get("flags") or "").split(";") if f)
        scan.append(ScanRecord(
            model=grid[index],
            energy=_estimate(row, "energy", level),
            derivative=_estimate(row, "derivative", level),
            zz=CorrelationMatrix.from_dict(matrices["ZZ"]) if "ZZ" in matrices else None,
            xx=CorrelationMatrix.from_dict(matrices["XX"]) if "XX" in matrices else None,
            chi=Estimate(chi, chi_stderr or 0.0) if chi is not None else None,
            chi_label=row.get("chi_label") or "",
            flags=flags))
    return scan


def cmd_analyze(run, level: Optional[str] = None, threshold: float = 5.0):
    """
    Align the correlations along the scan, detect transitions and write
    report.json with the evidence-tagged intervals and reliability notes.
    """
    rows = archive.read_results_csv(run.results_path)[1] if os.path.isfile(run.results_path) else []
    level = level or (_best_level(rows) if rows else None)
    scan = align_scan(load_scan(run, level)) if rows else []
    intervals = detect_transitions(scan, threshold, threshold, threshold)
    notes = reliability_notes(scan, threshold)
    report = {
        "level": level,
        "intervals": [{"lo": iv.lo, "hi": iv.hi, "midpoint": 0.5 * (iv.lo + iv.hi),
                       "evidence": list(iv.evidence), "chi": iv.chi} for iv in intervals],
        "notes": [{"j2": n.j2, "kind": n.kind, "message": n.message} for n in notes],
        "shifts": [r.shift for r in scan],
    }
    os.makedirs(run.root, exist_ok=True)
    archive.write_json(run.report_path, report)
    logger.info("Report: %d interval(s), %d note(s)", len(intervals), len(notes))
    return report

# ---------- exact diagonalization dump ----------

def ed_columns():
    return ["index", "j2", "energy", "gap", "degeneracy", "derivative", "curvature", "chi_perturbative",
            "chi_overlap", "flags"]


def cmd_ed(config: ScanConfig, num_states: Optional[int] = None):
    """
    Exact reference values for every grid point into ``<run>/ed/``:
    ed.csv, the spectrum of each point and its ground-state amplitudes.
    """
    config_dict = config.to_dict()
    run = archive.RunDirectory.for_config(config_dict, config.output).create()
    if not run.exists():
        archive.write_manifest(run, config_dict, config.grid())
    folder = os.path.join(run.root, "ed")
    os.makedirs(folder, exist_ok=True)
    grid = config.grid()
    group = SymmetryGroup.for_model(grid[0])

    spectra = dask.compute(*[dask.delayed(exact_diagonalize)(mp, num_states=num_states) for mp in grid],
                           scheduler="threads", num_workers=config.workers)
    rows = []
    for i, (mp, spec) in enumerate(zip(grid, spectra)):
        spec.to_csv(os.path.join(folder, "spectrum_{0:03d}.csv".format(i)))
        spec.dump_amplitudes(os.path.join(folder, "ground_{0:03d}.bin".format(i)))
        ha = build_ha(mp)
        row = {"index": i, "j2": mp.j2, "energy": spec.ground_energy, "degeneracy": spec.ground_degeneracy,
               "derivative": expectation(spec.ground_state, ha)}
        above = spec.energies[spec.ground_degeneracy:]
        row["gap"] = float(above[0] - spec.energies[0]) if above.size else None
        try:
            row["chi_perturbative"] = perturbative_chi(spec, ha)
            row["curvature"] = second_derivative(spec, ha)
        except PhaseScopeError as ex:
            row["flags"] = "degenerate"
            logger.warning("J2=%g: %s", mp.j2, ex)
        if i + 1 < len(spectra):
            row["chi_overlap"] = aligned_fidelity(spec.ground_state, spectra[i + 1].ground_state, group).chi
        rows.append(row)
    archive.write_results_csv(os.path.join(folder, "ed.csv"), ed_columns(), rows)
    logger.info("ED reference for %d points in %s", len(rows), folder)
    return rows

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
