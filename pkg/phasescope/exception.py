#!/usr/bin/env python3

"""
Defines exceptions that may be raised by phasescope.

The same classes are raised from the public modules and from the
helpers in phasescope.impl, so callers only ever need to catch
PhaseScopeError or one of its subclasses.
"""
##@package phasescope.exception
#@brief Exceptions that may be raised by phasescope.

##@brief Base class for all exceptions thrown by phasescope.
class PhaseScopeError(Exception):
    """
    Base class for all exceptions thrown by phasescope.
    """
    pass

##@brief Exception that might be caused by the calling application.
class PhaseScopeUserError(PhaseScopeError):
    """
    Exception that might be caused by the calling application.

    Typically an argument that is out of range, a mismatch between the
    qubit count of an observable and a state, or an invalid config file.
    """
    pass

##@brief Exception that might be caused by a bug in phasescope.
class PhaseScopeInternalError(PhaseScopeError):
    """
    Exception that might be caused by a bug in phasescope.

    Raised when a numerical self check fails, e.g. a state that lost
    its normalization or an eigenpair with a large residual.
    """
    pass

##@brief Sizes of states, circuits, observables or matrices disagree.
class DimensionMismatchError(PhaseScopeUserError):
    """
    Sizes of states, circuits, observables or matrices disagree.
    """
    pass

##@brief A Pauli term cannot be estimated from the supplied records.
class UnmeasurableTermError(PhaseScopeUserError):
    """
    A Pauli term cannot be estimated from the supplied records.

    Terms made of I and Z need a Z-basis record, terms made of I and X
    need an X-basis record. Terms mixing X and Z, or containing Y, are
    never measurable from the two bases this package records.
    """
    pass

##@brief The dense eigensolver was asked for a chain that is too long.
class ModelSizeError(PhaseScopeUserError):
    """
    The dense eigensolver was asked for a chain that is too long.
    """
    pass

##@brief The scan configuration is invalid.
class ConfigError(PhaseScopeUserError):
    """
    The scan configuration is invalid.

    The command line tool maps this to exit code 2.
    """
    pass

##@brief A perturbative oracle was evaluated at a level crossing.
class DegenerateGroundStateError(PhaseScopeError):
    """
    A perturbative oracle was evaluated at a level crossing.

    The perturbative sums divide by E_n - E_0. A partner level inside
    the degeneracy tolerance that also couples to the ground state
    through the perturbation makes the sum meaningless.
    """
    pass

##@brief A symmetry generator does not commute with the Hamiltonian.
class SymmetryError(PhaseScopeError):
    """
    A symmetry generator does not commute with the Hamiltonian.

    The typical cause is asking for shift generators on an open chain.
    """
    pass

##@brief The classical optimizer met a non-finite cost.
class OptimizationError(PhaseScopeError):
    """
    The classical optimizer met a non-finite cost.
    """
    pass

##@brief An error mitigation step cannot be carried out.
class MitigationError(PhaseScopeError):
    """
    An error mitigation step cannot be carried out.

    Examples are an even fold factor, too few fold factors for a fit,
    and readout attenuation so strong that inverting it would amplify
    the shot noise beyond use.
    """
    pass

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
