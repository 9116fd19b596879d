"""Bit-flip repetition-code correction channels.

All channels here act on the atomic factor only.  When a correction is applied
to a joint atom-field state the Kraus operators are extended by the identity on
the field.  Codewords are ``|0...0>`` and ``|1...1>``; any other computational
basis state is returned to whichever codeword is nearer in Hamming distance.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import DIM_CAP, TOL
from .errors import DimensionError, InvariantViolation
from .model import excitation_counts
from .operators import HilbertDims


@dataclass(frozen=True)
class KrausSet:
    operators: tuple
    target_dims: HilbertDims

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a Kraus set needs at least one operator")
        a = self.target_dims.atom_dim
        for k in ops:
            if k.shape != (a, a):
                raise DimensionError(f"Kraus operator shape {k.shape} does not match atom dim {a}")
        object.__setattr__(self, "operators", ops)

    @property
    def atom_dim(self) -> int:
        return self.target_dims.atom_dim

    def completeness_defect(self) -> float:
        total = sum(k.conj().T @ k for k in self.operators)
        return float(np.abs(total - np.eye(self.atom_dim)).max())

    def check(self, tol=TOL) -> "KrausSet":
        d = self.completeness_defect()
        if d > tol.structural:
            raise InvariantViolation(f"Kraus set not trace preserving: |sum K^dagger K - I| = {d:.3e}")
        return self

    def superoperator(self) -> np.ndarray:
        """Row-major vectorized channel, ``vec(K rho K^dagger) = (K (x) K^*) vec(rho)``."""
        return sum(np.kron(k, k.conj()) for k in self.operators)

    def nonzeros(self):
        """Per operator, the list of ``(row, col, value)`` entries."""
        out = []
        for k in self.operators:
            r, c = np.nonzero(np.abs(k) > 0)
            out.append([(int(i), int(j), complex(k[i, j])) for i, j in zip(r, c)])
        return out


def _kraus(ops: Sequence[np.ndarray], atom_dim: int) -> KrausSet:
    return KrausSet(tuple(ops), HilbertDims(atom_dim, 1)).check()


def _pauli_x_on(site: int, s: int) -> np.ndarray:
    """``X`` on one atom (site 0 is the most significant bit)."""
    dim = 2 ** s
    idx = np.arange(dim) ^ (1 << (s - 1 - site))
    x = np.zeros((dim, dim))
    x[idx, np.arange(dim)] = 1.0
    return x


def three_qubit_correction() -> KrausSet:
    """``{P0, X1 P1, X2 P2, X3 P3}`` with ``P_i = X_i P0 X_i``."""
    p0 = np.zeros((8, 8))
    p0[0, 0] = p0[7, 7] = 1.0
    ops = [p0]
    for i in range(3):
        x = _pauli_x_on(i, 3)
        ops.append(x @ (x @ p0 @ x))
    return _kraus(ops, 8)


def _require_odd(s: int):
    if s < 1 or s % 2 == 0:
        raise ValueError(f"majority correction needs an odd number of atoms, got s={s}")


def majority_correction(s: int) -> KrausSet:
    """Majority-vote correction on ``2^s`` product states.

    One Kraus operator per flip pattern ``p`` of weight below ``s/2``:
    ``K_p = |0...0><p| + |1...1><not p|``.
    """
    _require_odd(s)
    if s < 3:
        raise ValueError(f"majority correction needs s >= 3, got s={s}")
    dim = 2 ** s
    if dim > DIM_CAP:
        raise DimensionError(f"2^{s} exceeds the dimension cap {DIM_CAP}")
    full = dim - 1
    ops = []
    for w in range((s + 1) // 2):
        for sites in itertools.combinations(range(s), w):
            p = sum(1 << (s - 1 - j) for j in sites)
            k = np.zeros((dim, dim))
            k[0, p] = 1.0
            k[full, full ^ p] = 1.0
            ops.append(k)
    return _kraus(ops, dim)


def collective_correction(s: int) -> KrausSet:
    """Majority-vote correction on the symmetric sector, levels ``k = 0..s``.

    ``K_i = |0><i| + |s><s-i|`` for ``i < s/2``.
    """
    _require_odd(s)
    ops = []
    for i in range((s + 1) // 2):
        k = np.zeros((s + 1, s + 1))
        k[0, i] = 1.0
        k[s, s - i] = 1.0
        ops.append(k)
    return _kraus(ops, s + 1)


def correction_for_basis(s: int, basis: str) -> KrausSet:
    if basis == "collective":
        return collective_correction(s)
    if s == 3:
        return three_qubit_correction()
    return majority_correction(s)


def rotate(ch: KrausSet, phases: np.ndarray) -> KrausSet:
    """Conjugate every operator by ``diag(phases)``."""
    d = np.asarray(phases)
    ops = [d[:, None] * k * d.conj()[None, :] for k in ch.operators]
    return KrausSet(tuple(ops), ch.target_dims)


def cavity_frame_phases(s: int, basis: str, omega_c: float, t: float) -> np.ndarray:
    """Diagonal of ``exp(-i omega_c t n_exc)`` on the atomic basis."""
    return np.exp(-1j * omega_c * t * excitation_counts(s, basis))


def apply_channel(rho, ch: KrausSet, field_dim: int | None = None) -> np.ndarray:
    """``sum_K K rho K^dagger``, with field identity if ``rho`` is a joint state."""
    rho = np.asarray(rho)
    a = ch.atom_dim
    n = rho.shape[0]
    if rho.ndim != 2 or rho.shape[1] != n:
        raise DimensionError(f"expected a square density matrix, got {rho.shape}")
    if field_dim is None:
        if n % a:
            raise DimensionError(f"state dimension {n} is not a multiple of atom dim {a}")
        field_dim = n // a
    if n != a * field_dim:
        raise DimensionError(f"state dimension {n} != {a} x {field_dim}")
    if field_dim == 1:
        return sum(k @ rho @ k.conj().T for k in ch.operators)
    r4 = rho.reshape(a, field_dim, a, field_dim)
    out = np.zeros_like(r4, dtype=complex)
    for k in ch.operators:
        out += np.einsum("ga,ambn,hb->gmhn", k, r4, k.conj(), optimize=True)
    return out.reshape(n, n)
