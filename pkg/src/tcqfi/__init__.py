"""Quantum Fisher information of GHZ-encoded atoms in a single-mode cavity.

Three routes to the detuning QFI of ``s`` two-level atoms coupled to one mode
(Tavis-Cummings model), with and without periodic majority-vote correction:

* :mod:`tcqfi.exact_sim` evolves the joint atom-field state exactly;
* :mod:`tcqfi.method1` uses closed forms valid for a large Fock state;
* :mod:`tcqfi.method2` uses a dressed single-atom basis and a Pauli transfer
  matrix for the corrected code state.
"""
__version__ = "0.1.0"

from .errors import (ApproximationBreakdown, DimensionError, EigenCrossingError, EigensolverError,
                     InvariantViolation, TcqfiError, TruncationError)
from .model import Coherent, Fock, ModelParams
from .qec import KrausSet, collective_correction, majority_correction, three_qubit_correction
from .qfi import qfi_from_stencil, qfi_spectral, sld_oracle, stencil_qfi
from .exact_sim import QecSchedule, Trajectory, simulate

__all__ = [
    "__version__", "ApproximationBreakdown", "DimensionError", "EigenCrossingError",
    "EigensolverError", "InvariantViolation", "TcqfiError", "TruncationError",
    "Coherent", "Fock", "ModelParams", "KrausSet", "collective_correction",
    "majority_correction", "three_qubit_correction", "qfi_from_stencil", "qfi_spectral",
    "sld_oracle", "stencil_qfi", "QecSchedule", "Trajectory", "simulate",
]
