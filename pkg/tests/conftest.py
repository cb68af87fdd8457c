import pytest
import pathlib

TEMP_TEST_DATA_DIR = "phasescope_test_tmp"

@pytest.fixture(scope="session")
def temp_dir(tmpdir_factory):
    tdir = tmpdir_factory.mktemp(TEMP_TEST_DATA_DIR)
    return pathlib.Path(str(tdir))

@pytest.fixture(params=[
    (4, "open"),
    (5, "open"),
    (4, "periodic"),
    (6, "periodic"),
    ],
    ids=["open4", "open5", "periodic4", "periodic6"],
    scope="session")
def chain(request):
    return request.param

SMALL_SCAN = {
    "model": {"num_sites": 4, "boundary": "open", "bx": 0.5, "j2": [0.1, 0.3, 0.5, 0.7, 0.9]},
    "ansatz": {"layers": 1},
    "noise": "ideal",
    "optimizer": {"max_iterations": 300, "gradient_tol": 1e-5},
    "shots": 4000,
    "seed": 11,
}

NOISY_SCAN = {
    "model": {"num_sites": 3, "boundary": "open", "bx": 0.5, "j2": [0.2, 0.4, 0.6]},
    "noise": {"p2": 0.02, "epsilon": 0.02, "p01": 0.02, "p10": 0.04},
    "mitigation": {"trex": True, "twirl": True, "zne": True, "num_twirls": 4, "lambdas": [1, 3]},
    "optimizer": {"max_iterations": 300, "gradient_tol": 1e-5},
    "shots": 4000,
    "seed": 5,
}

def _scanned(temp_dir, document, name):
    from phasescope import pipeline
    from phasescope.config import ScanConfig
    config = ScanConfig.from_dict(dict(document, output=str(temp_dir / name)))
    pipeline.cmd_optimize(config)
    run = pipeline.cmd_scan(config)
    return config, run

@pytest.fixture(scope="session")
def small_run(temp_dir):
    return _scanned(temp_dir, SMALL_SCAN, "small")

@pytest.fixture(scope="session")
def noisy_run(temp_dir):
    return _scanned(temp_dir, NOISY_SCAN, "noisy")
