import os
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import xarray as xr
from xarray.backends import BackendEntrypoint

from . import archive
from .analysis import ScanRecord, midpoints
from .exception import PhaseScopeUserError
from .pipeline import load_scan


@dataclass(order=True, frozen=True)
class AttrKeyField:
    num_sites: str = "num_sites"
    boundary: str = "boundary"
    bx: str = "bx"
    level: str = "level"
    source: str = "source"


@dataclass(order=True, frozen=True)
class DimKeyField:
    j2: str = "j2"
    interval: str = "interval"
    site_i: str = "site_i"
    site_j: str = "site_j"


_MATRICES = {"ZZ": "zz", "XX": "xx"}


def _values(estimates):
    value = np.array([e.value if e is not None else np.nan for e in estimates], dtype=float)
    stderr = np.array([e.stderr if e is not None else np.nan for e in estimates], dtype=float)
    return value, stderr


def _matrices(matrices, n):
    values = np.full((len(matrices), n, n), np.nan)
    stderr = np.full((len(matrices), n, n), np.nan)
    for k, m in enumerate(matrices):
        if m is not None:
            values[k] = m.values
            stderr[k] = m.stderr
    return values, stderr


def scan_to_dataset(scan: Sequence[ScanRecord], level: str = "") -> xr.Dataset:
    """
    Per-point values along ``j2``, correlation matrices along
    (``j2``, ``site_i``, ``site_j``) and the fidelity susceptibility
    along ``interval``, whose ``j2_mid`` coordinate holds the interval
    midpoints.
    """
    scan = list(scan)
    j2 = np.array([r.j2 for r in scan], dtype=float)
    n = scan[0].model.num_sites if scan else 0
    ds = xr.Dataset(coords={
        DimKeyField.j2: j2,
        DimKeyField.site_i: np.arange(n),
        DimKeyField.site_j: np.arange(n),
    })
    ds = ds.assign_coords({DimKeyField.interval: np.arange(max(len(scan) - 1, 0))})
    ds = ds.assign_coords(j2_mid=(DimKeyField.interval, midpoints(j2) if len(scan) > 1 else np.zeros(0)))

    for name in ("energy", "derivative"):
        value, stderr = _values([getattr(r, name) for r in scan])
        ds[name] = (DimKeyField.j2, value)
        ds[name + "_stderr"] = (DimKeyField.j2, stderr)

    matrix_dims = (DimKeyField.j2, DimKeyField.site_i, DimKeyField.site_j)
    for name in _MATRICES.values():
        value, stderr = _matrices([getattr(r, name) for r in scan], n)
        ds[name] = (matrix_dims, value)
        ds[name + "_stderr"] = (matrix_dims, stderr)

    value, stderr = _values([r.chi for r in scan[:-1]])
    ds["chi"] = (DimKeyField.interval, value)
    ds["chi_stderr"] = (DimKeyField.interval, stderr)
    ds["chi_label"] = (DimKeyField.interval, np.array([r.chi_label for r in scan[:-1]], dtype=object))
    ds["shift"] = (DimKeyField.j2, np.array([r.shift for r in scan], dtype=np.int64))

    if scan:
        ds.attrs[AttrKeyField.num_sites] = n
        ds.attrs[AttrKeyField.boundary] = scan[0].model.boundary.value
        ds.attrs[AttrKeyField.bx] = scan[0].model.bx
    ds.attrs[AttrKeyField.level] = level
    return ds


def open_run(run_dir: Union[str, os.PathLike], level: str = None) -> xr.Dataset:
    """A summarized run directory as a Dataset."""
    run = archive.RunDirectory(run_dir)
    ds = scan_to_dataset(load_scan(run, level), level or "")
    ds.attrs[AttrKeyField.source] = str(run_dir)
    return ds


class PhaseScopeBackendEntrypoint(BackendEntrypoint):
    """``xr.open_dataset(run_dir, engine="phasescope_engine")``."""

    open_dataset_parameters = ("filename_or_obj", "drop_variables", "level")

    def open_dataset(
        self,
        filename_or_obj: Union[str, os.PathLike],
        drop_variables: Union[tuple, None] = None,
        level: str = None,
    ):
        path = os.fspath(filename_or_obj)
        if os.path.basename(path) == "results.csv":
            path = os.path.dirname(path)
        ds = open_run(path, level)
        if drop_variables:
            ds = ds.drop_vars(list(drop_variables), errors="ignore")
        return ds

    def guess_can_open(self, filename_or_obj: Union[str, os.PathLike]):
        try:
            path = os.fspath(filename_or_obj)
        except TypeError:
            return False
        if os.path.basename(path) == "results.csv":
            return True
        return os.path.isfile(os.path.join(path, "results.csv"))


@xr.register_dataset_accessor("phasescope")
class PhaseScope:
    def __init__(self, xarray_obj):
        self._obj = xarray_obj

    def _check_variable_has_dims(self, data_variable, dims):
        if data_variable not in self._obj:
            raise PhaseScopeUserError("Dataset has no {0!r} variable".format(data_variable))
        if tuple(self._obj[data_variable].dims) != tuple(dims):
            raise PhaseScopeUserError("Variable {0!r} has dims {1}, expected {2}".format(
                data_variable, tuple(self._obj[data_variable].dims), tuple(dims)))

    def midpoints(self):
        """J2 midpoint of every interval, where chi is plotted."""
        return self._obj["j2_mid"].values

    def increment(self, dim=DimKeyField.j2):
        """Grid step along dim, 0 for fewer than two points.

        Parameters
        ----------
        dim: str
        """
        if self._obj[dim].size < 2:
            return 0
        steps = self._obj[dim].diff(dim).values
        if np.ptp(steps) > 1e-9:
            raise PhaseScopeUserError("Irregular grid along {0}".format(dim))
        return float(steps[0])

    def correlation(self, basis="ZZ", j2=None):
        """
        The correlation matrix of one point, or all of them.

        Parameters
        ----------
        basis: str
            "ZZ" or "XX".
        j2: float, optional
            Nearest grid point is used.
        """
        name = _MATRICES[basis.upper()]
        self._check_variable_has_dims(name, (DimKeyField.j2, DimKeyField.site_i, DimKeyField.site_j))
        if j2 is None:
            return self._obj[name]
        return self._obj[name].sel({DimKeyField.j2: j2}, method="nearest")

    def profile(self, basis="ZZ", site=0):
        """<sigma_site sigma_j> along (j2, site_j)."""
        return self.correlation(basis).isel({DimKeyField.site_i: site})

    def to_results_csv(self, filename):
        """
        Write the per-point values as a results table. chi of the
        interval starting at a point goes on that point's row.

        Parameters
        ----------
        filename: str
        """
        for name in ("energy", "derivative"):
            self._check_variable_has_dims(name, (DimKeyField.j2,))
        ds = self._obj
        chi = ds["chi"].values
        chi_stderr = ds["chi_stderr"].values
        rows = []
        for k, j2 in enumerate(ds[DimKeyField.j2].values):
            rows.append({
                "j2": float(j2),
                "energy": float(ds["energy"].values[k]),
                "energy_stderr": float(ds["energy_stderr"].values[k]),
                "derivative": float(ds["derivative"].values[k]),
                "derivative_stderr": float(ds["derivative_stderr"].values[k]),
                "chi": float(chi[k]) if k < chi.size else None,
                "chi_stderr": float(chi_stderr[k]) if k < chi.size else None,
                "shift": int(ds["shift"].values[k]),
            })
        columns = ["j2", "energy", "energy_stderr", "derivative", "derivative_stderr", "chi", "chi_stderr", "shift"]
        archive.write_results_csv(filename, columns, rows)

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
