import json
import os

import numpy as np
import pytest

from phasescope import archive, pipeline
from phasescope.analysis import align_scan, detect_transitions
from phasescope.config import ScanConfig
from phasescope.exception import PhaseScopeUserError
from phasescope.records import read_jsonl
from phasescope.tools.cli import EXIT_CONFIG, EXIT_OK, main

from conftest import NOISY_SCAN, SMALL_SCAN


def _results(run):
    return archive.read_results_csv(run.results_path)


def test_optimize_archives_parameters(small_run):
    config, run = small_run
    manifest = archive.read_manifest(run)
    assert manifest["hash"] == os.path.basename(run.root)
    assert len(manifest["points"]) == 5
    for i in range(5):
        assert os.path.isfile(run.params_path(i))
        assert os.path.isfile(run.records_path(i))
        assert os.path.isfile(run.correlations_path(i))


def test_optimize_is_reproducible(small_run, temp_dir):
    config, run = small_run
    before = [open(run.params_path(i)).read() for i in range(5)]
    again = ScanConfig.from_dict(dict(SMALL_SCAN, output=str(temp_dir / "small_again")))
    rerun, results = pipeline.cmd_optimize(again)
    assert os.path.basename(rerun.root) == os.path.basename(run.root)
    assert [open(rerun.params_path(i)).read() for i in range(5)] == before
    assert not any(r.failed for r in results)


def test_results_table(small_run):
    config, run = small_run
    columns, rows = _results(run)
    assert columns == pipeline.results_columns()
    assert [row["index"] for row in rows] == list(range(5))
    assert [row["j2"] for row in rows] == [0.1, 0.3, 0.5, 0.7, 0.9]
    for row in rows:
        assert row["status"] == "ok"
        assert row["num_sites"] == 4 and row["boundary"] == "open"
        assert abs(row["energy_raw"] - row["energy_ideal"]) < 5 * row["energy_raw_stderr"] + 1e-3
        assert row["energy_ed"] <= row["energy_ideal"] + 1e-9
        assert row["energy_ideal_stderr"] == 0.0
        assert row["energy_trex"] is None and row["energy_zne"] is None
    for row in rows[:-1]:
        assert 0.0 <= row["chi"] <= 1.0
        assert row["chi_label"] in ("I", "X")
        assert row["chi_ideal"] is not None and row["chi_ed"] is not None
    assert rows[-1]["chi"] is None and rows[-1]["chi_ed"] is None


def test_summarize_reproduces_table(small_run):
    config, run = small_run
    with open(run.results_path) as f:
        before = f.read()
    pipeline.cmd_summarize(run)
    with open(run.results_path) as f:
        assert f.read() == before


def test_correlation_sidecars(small_run):
    config, run = small_run
    sidecar = archive.read_json(run.correlations_path(2))
    assert sidecar["index"] == 2 and sidecar["j2"] == 0.5
    assert set(sidecar["levels"]) == {"raw", "ideal", "ed"}
    zz = sidecar["levels"]["ed"]["ZZ"]
    assert zz["basis"] == "Z"


def test_load_scan_levels(small_run):
    config, run = small_run
    scan = pipeline.load_scan(run)
    assert len(scan) == 5
    assert scan[0].zz is not None and scan[0].xx is not None
    assert scan[-1].chi is None
    ed = pipeline.load_scan(run, "ed")
    assert all(r.energy.stderr == 0.0 for r in ed)
    with pytest.raises(PhaseScopeUserError):
        pipeline.load_scan(run, "bogus")


def test_analyze_report(small_run):
    config, run = small_run
    report = pipeline.cmd_analyze(run)
    assert set(report) == {"level", "intervals", "notes", "shifts"}
    assert report["level"] == "raw"
    # open chains are never realigned
    assert report["shifts"] == [0] * 5
    with open(run.report_path) as f:
        assert json.load(f) == report
    assert pipeline.cmd_analyze(run, "ed")["level"] == "ed"


def test_analyze_empty_run(temp_dir):
    run = archive.RunDirectory(temp_dir / "nothing_here")
    report = pipeline.cmd_analyze(run)
    assert report == {"level": None, "intervals": [], "notes": [], "shifts": []}


def test_scan_needs_parameters(temp_dir):
    config = ScanConfig.from_dict(dict(SMALL_SCAN, seed=12345, output=str(temp_dir / "unoptimized")))
    with pytest.raises(PhaseScopeUserError):
        pipeline.cmd_scan(config)


def test_noisy_mitigation_levels(noisy_run):
    config, run = noisy_run
    _, rows = _results(run)
    assert len(rows) == 3
    for row in rows:
        for level in ("raw", "trex", "twirl", "zne"):
            assert row["energy_" + level] is not None
            assert row["derivative_" + level] is not None
        assert row["zne_fit"] in ("exponential", "linear")
        assert row["zne_linear_energy"] is not None
        assert "calibration-failed" not in (row["flags"] or "")
    # noise can only lift the energy above the noise-free state on average
    assert sum(row["energy_raw"] - row["energy_ideal"] for row in rows) > 0
    sidecar = archive.read_json(run.correlations_path(0))
    assert {"raw", "trex", "twirl", "ideal", "ed"} <= set(sidecar["levels"])
    assert pipeline.cmd_analyze(run)["level"] == "zne"


def test_noisy_records_have_calibration(noisy_run):
    config, run = noisy_run
    records = read_jsonl(run.records_path(0))
    roles = {r.tags.get("role") for r in records}
    assert roles == {"measurement", "calibration", "overlap"}
    scales = {r.noise_scale for r in records if r.tags.get("level") == "zne"}
    assert scales == {3}


def test_ed_dump(small_run):
    config, run = small_run
    rows = pipeline.cmd_ed(config, num_states=4)
    folder = os.path.join(run.root, "ed")
    assert len(rows) == 5
    for name in ("ed.csv", "spectrum_000.csv", "ground_004.bin"):
        assert os.path.isfile(os.path.join(folder, name))
    assert os.path.getsize(os.path.join(folder, "ground_000.bin")) == 4 + 16 * 16
    _, results = _results(run)
    for row, result in zip(rows, results):
        assert row["energy"] == pytest.approx(result["energy_ed"], abs=1e-9)
        assert row["gap"] > 0
    assert rows[-1].get("chi_overlap") is None
    columns, table = archive.read_results_csv(os.path.join(folder, "ed.csv"))
    assert columns == pipeline.ed_columns()
    assert len(table) == 5


def _config_file(temp_dir, name, document):
    path = temp_dir / (name + ".json")
    path.write_text(json.dumps(dict(document, output=str(temp_dir / name))))
    return str(path)


def test_cli_selftest():
    assert main(["selftest"]) == EXIT_OK


def test_cli_round_trip(temp_dir):
    path = _config_file(temp_dir, "cli", SMALL_SCAN)
    args = ["--config", path, "--model.j2", "[0.2,0.6]"]
    assert main(["--quiet", "optimize"] + args) == EXIT_OK
    assert main(["scan"] + args + ["--workers", "2"]) == EXIT_OK
    assert main(["analyze"] + args + ["--level", "ideal"]) == EXIT_OK
    config = ScanConfig.from_dict(dict(SMALL_SCAN, model=dict(SMALL_SCAN["model"], j2=[0.2, 0.6]),
                                       output=str(temp_dir / "cli")))
    run = archive.RunDirectory.for_config(config.to_dict(), config.output)
    assert archive.read_json(run.report_path)["level"] == "ideal"
    _, rows = archive.read_results_csv(run.results_path)
    assert [row["j2"] for row in rows] == [0.2, 0.6]


def test_cli_errors(temp_dir):
    bad = dict(SMALL_SCAN, model=dict(SMALL_SCAN["model"], j2=[0.5, 0.1]))
    assert main(["optimize", "--config", _config_file(temp_dir, "bad", bad)]) == EXIT_CONFIG
    assert main(["optimize", "--config", str(temp_dir / "missing.json")]) == EXIT_CONFIG
    path = _config_file(temp_dir, "cli_missing_run", SMALL_SCAN)
    assert main(["scan", "--config", path, "--seed", "987"]) == 1


@pytest.mark.slow
def test_ed_dump_locates_transition(temp_dir):
    config = ScanConfig.from_dict({
        "model": {"num_sites": 10, "boundary": "open", "bx": 0.1, "j2": {"start": 0.3, "stop": 0.7, "step": 0.05}},
        "output": str(temp_dir / "ed_large"),
    })
    rows = pipeline.cmd_ed(config, num_states=4)
    chi = [row["chi_overlap"] for row in rows[:-1]]
    peak = int(max(range(len(chi)), key=chi.__getitem__))
    assert 0.4 < 0.5 * (rows[peak]["j2"] + rows[peak + 1]["j2"]) < 0.6


def _scanned_copy(temp_dir, document, name):
    config = ScanConfig.from_dict(dict(document, output=str(temp_dir / name)))
    pipeline.cmd_optimize(config)
    return config, pipeline.cmd_scan(config)


def test_scan_is_byte_identical(noisy_run, temp_dir):
    config, run = noisy_run
    # workers are not part of the run identity
    twin_config, twin = _scanned_copy(temp_dir, dict(NOISY_SCAN, workers=3), "noisy_twin")
    assert os.path.basename(twin.root) == os.path.basename(run.root)
    with open(run.results_path, "rb") as a, open(twin.results_path, "rb") as b:
        assert a.read() == b.read()
    for i in range(3):
        with open(run.records_path(i), "rb") as a, open(twin.records_path(i), "rb") as b:
            assert a.read() == b.read()


@pytest.mark.slow
def test_zne_recovers_noise_free_energy(temp_dir):
    document = {
        "model": {"num_sites": 4, "boundary": "open", "bx": 0.1,
                  "j2": {"start": 0.2, "stop": 0.9, "step": 0.1}},
        "noise": {},
        "mitigation": {"trex": True, "twirl": True, "zne": True, "lambdas": [1, 3, 5]},
        "shots": 100000,
        "seed": 21,
    }
    config, run = _scanned_copy(temp_dir, document, "zne_n4")
    _, rows = _results(run)
    assert len(rows) == 8
    within = [abs(row["energy_zne"] - row["energy_ideal"]) <= 3 * row["energy_zne_stderr"] for row in rows]
    assert sum(within) >= 0.9 * len(rows)
    # the unmitigated energies sit above the noise-free ones
    assert all(row["energy_raw"] > row["energy_ideal"] for row in rows)


@pytest.fixture(scope="module")
def unmitigated_n8(temp_dir):
    document = {
        "model": {"num_sites": 8, "boundary": "open", "bx": 0.1,
                  "j2": {"start": 0.2, "stop": 0.9, "step": 0.05}},
        "noise": {},
        "shots": 100000,
        "seed": 8,
    }
    config, run = _scanned_copy(temp_dir, document, "unmitigated_n8")
    return config, run


@pytest.mark.slow
def test_unmitigated_correlation_signs(unmitigated_n8):
    config, run = unmitigated_n8
    raw = pipeline.load_scan(run, "raw")
    ideal = pipeline.load_scan(run, "ideal")
    # ferromagnetic at J2=0.2, antiphase at J2=0.9
    for k in (0, -1):
        assert np.array_equal(np.sign(raw[k].zz.values[0]), np.sign(ideal[k].zz.values[0]))
    ed = pipeline.load_scan(run, "ed")
    assert np.all(ed[0].zz.values[0] > 0)
    assert list(np.sign(ed[-1].zz.values[0][:4])) == [1, 1, -1, -1]


@pytest.mark.slow
def test_unmitigated_transitions_match_noise_free(unmitigated_n8):
    config, run = unmitigated_n8
    flagged = {}
    for level in ("raw", "ideal"):
        intervals = detect_transitions(align_scan(pipeline.load_scan(run, level)))
        flagged[level] = {(iv.lo, iv.hi) for iv in intervals}
    assert flagged["raw"] == flagged["ideal"]


@pytest.mark.slow
def test_unmitigated_derivative_beats_energy(unmitigated_n8):
    config, run = unmitigated_n8
    _, rows = _results(run)
    ratio_ok = [abs(row["energy_raw"] - row["energy_ed"]) > 10 * abs(row["derivative_raw"] - row["derivative_ed"])
                for row in rows]
    assert sum(ratio_ok) >= 0.8 * len(rows)
