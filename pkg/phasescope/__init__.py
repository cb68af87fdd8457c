from .model import Boundary, ModelParams, build_hamiltonian, exact_diagonalize
from .engine import Circuit, Statevector, run
from .vqe import AnsatzSpec, build_ansatz, optimize, scan_optimize
from .noise import Executor, NoiseModel
from .config import ScanConfig, load_config
from .xarray import PhaseScope, open_run

# Copyright 2026, phasescope developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
