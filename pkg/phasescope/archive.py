"""
Run directory layout and file codecs.

A run lives in ``<output>/<hash>/`` where hash is derived from the
scan configuration, so the optimize and scan stages of one config share
a directory and a different config never overwrites it::

    manifest.json
    params/point_NNN.json
    records/point_NNN.jsonl
    correlations/point_NNN.json
    results.csv
    report.json

Nothing written here carries a timestamp; re-running a config
reproduces every file byte for byte.
"""
import csv
import hashlib
import json
import logging
import math
import os

from .exception import PhaseScopeUserError

logger = logging.getLogger(__name__)

SCHEMA_LINE = "# phasescope results schema v1"

# Config fields that do not change any result.
_UNHASHED = ("workers", "output")


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def manifest_hash(config_dict):
    """
    First 12 hex digits of the git blob SHA-1 of the canonical config,
    leaving out the fields that cannot change a result.
    """
    hashed = {k: v for k, v in config_dict.items() if k not in _UNHASHED}
    data = canonical_json(hashed).encode("utf-8")
    blob = b"blob " + str(len(data)).encode("ascii") + b"\0" + data
    return hashlib.sha1(blob).hexdigest()[:12]


class RunDirectory:
    """
    Paths inside one run directory.
    """

    def __init__(self, root):
        self.root = os.fspath(root)

    @classmethod
    def for_config(cls, config_dict, output):
        return cls(os.path.join(os.fspath(output), manifest_hash(config_dict)))

    def _point(self, kind, index, ext):
        return os.path.join(self.root, kind, "point_{0:03d}.{1}".format(index, ext))

    def params_path(self, index):
        return self._point("params", index, "json")

    def records_path(self, index):
        return self._point("records", index, "jsonl")

    def correlations_path(self, index):
        return self._point("correlations", index, "json")

    @property
    def manifest_path(self):
        return os.path.join(self.root, "manifest.json")

    @property
    def results_path(self):
        return os.path.join(self.root, "results.csv")

    @property
    def report_path(self):
        return os.path.join(self.root, "report.json")

    def create(self):
        for kind in ("params", "records", "correlations"):
            os.makedirs(os.path.join(self.root, kind), exist_ok=True)
        return self

    def exists(self):
        return os.path.isfile(self.manifest_path)

    def __repr__(self):
        return "RunDirectory({0!r})".format(self.root)


def write_json(path, data):
    with open(path, "w") as f:
        json.dump(data, f, sort_keys=True, indent=2)
        f.write("\n")


def read_json(path):
    with open(path, "r") as f:
        return json.load(f)


def write_manifest(run: RunDirectory, config_dict, grid):
    write_json(run.manifest_path, {
        "hash": manifest_hash(config_dict),
        "config": config_dict,
        "points": [{"index": i, "j2": mp.j2, "params": os.path.relpath(run.params_path(i), run.root)}
                   for i, mp in enumerate(grid)],
    })


def read_manifest(run: RunDirectory):
    if not run.exists():
        raise PhaseScopeUserError("No manifest in {0}".format(run.root))
    return read_json(run.manifest_path)


def format_cell(value):
    """Empty for missing values, repr precision for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def parse_cell(text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_results_csv(path, columns, rows):
    """rows is a list of dicts keyed by column; missing keys are empty."""
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(c)) for c in columns])


def read_results_csv(path):
    """
    Returns
    -------
    columns : list of str
    rows : list of dict
    """
    with open(path, "r", newline="") as f:
        header = f.readline().rstrip("\n")
        if header != SCHEMA_LINE:
            raise PhaseScopeUserError("{0} is not a phasescope results table (header {1!r})".format(path, header))
        reader = csv.reader(f)
        columns = next(reader, [])
        rows = [{c: parse_cell(v) for c, v in zip(columns, line)} for line in reader if line]
    return columns, rows

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
