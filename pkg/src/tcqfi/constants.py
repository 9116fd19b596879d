"""Numerical tolerances shared by every module.

Tests and runtime checks reference these names rather than literals so that a
single edit retunes the whole package.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10      # trace, Hermiticity, Kraus completeness
    spectral: float = 1e-9         # eigen-reconstruction, unitarity, psd floor
    partial_trace: float = 1e-12
    norm: float = 1e-12
    qfi_negative: float = 1e-8     # QFI values in (-qfi_negative, 0) are clipped
    coherent_tail: float = 1e-10
    leakage: float = 1e-6          # population allowed on the top Fock level
    support_cutoff: float = 1e-12  # eigenvalue floor in QFI sums
    degeneracy: float = 1e-9       # eigenvalue gap below which vectors are grouped


TOL = Tolerances()

# Largest dense Hilbert-space dimension any builder will allocate.
DIM_CAP = 2 ** 16

# Relative finite-difference step: h = FD_REL_STEP * max(1, |tau0|).
FD_REL_STEP = 1e-5
