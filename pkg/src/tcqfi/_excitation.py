"""Excitation-number block engine for atom-field density matrices.

The Tavis-Cummings Hamiltonian conserves ``N = m + e(alpha)`` (photons plus
excited atoms), so it is block diagonal with blocks of at most ``A`` states,
``A`` being the atomic dimension.  A joint state is stored atom-major as

    R[alpha, beta, N, M] = rho[(alpha, N - e_alpha), (beta, M - e_beta)]

so ``U rho U^dagger`` becomes a batch of ``A x A`` products and a correction
that maps ``alpha -> gamma`` at fixed photon number becomes a shift along ``N``.
Slots with ``N - e_alpha`` outside ``[0, d)`` are padding and stay zero.

A :class:`BlockState` may carry only a subset ``support`` of atomic rows and
columns (everything else zero).  Right after a majority-vote correction the
support is the two codewords, which makes the next evolution step cheap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvariantViolation


@dataclass
class BlockState:
    R: np.ndarray          # (k, k, B, B)
    support: np.ndarray    # k atomic indices


class ExcitationBlocks:
    """Block eigendecomposition of an excitation-conserving Hamiltonian."""

    def __init__(self, h, exc, field_dim: int, conservation_tol: float = 1e-12):
        exc = np.asarray(exc, dtype=int)
        self.exc = exc
        self.A = len(exc)
        self.d = field_dim
        self.B = field_dim + int(exc.max())
        A, d, B = self.A, self.d, self.B
        coo = sp.coo_matrix(h)
        ra, rm = np.divmod(coo.row, d)
        ca, cm = np.divmod(coo.col, d)
        n_row = rm + exc[ra]
        n_col = cm + exc[ca]
        bad = n_row != n_col
        if bad.any() and np.abs(coo.data[bad]).max() > conservation_tol:
            raise InvariantViolation("Hamiltonian does not conserve the excitation number")
        ok = ~bad
        hb = np.zeros((B, A, A), dtype=complex)
        np.add.at(hb, (n_row[ok], ra[ok], ca[ok]), coo.data[ok])
        m = np.arange(B)[:, None] - exc[None, :]
        self.valid = (m >= 0) & (m < d)  # (B, A)
        pad = ~self.valid
        both = self.valid[:, :, None] & self.valid[:, None, :]
        hb = hb * both
        # Padding slots get large distinct energies so eigh keeps them separate.
        hb[:, np.arange(A), np.arange(A)] += np.where(pad, 1e3 + np.arange(A)[None, :], 0)
        self.evals, self.evecs = np.linalg.eigh(hb)
        self._mask = both | (np.eye(A, dtype=bool)[None] & pad[:, :, None])
        # Blocks above the top Fock level miss states the true dynamics would reach.
        self.incomplete = np.arange(B) >= d

    @property
    def full_support(self) -> np.ndarray:
        return np.arange(self.A)

    def unitary(self, t: float) -> np.ndarray:
        """Per-block propagators, shape ``(B, A, A)``."""
        ph = np.exp(-1j * self.evals * t)
        u = (self.evecs * ph[:, None, :]) @ self.evecs.conj().transpose(0, 2, 1)
        return np.where(self._mask, u, 0.0)

    # layout conversion ----------------------------------------------------
    def vector(self, psi) -> np.ndarray:
        """Joint state vector in the ``(A, B)`` block layout."""
        p2 = np.asarray(psi).reshape(self.A, self.d)
        v = np.zeros((self.A, self.B), dtype=complex)
        for a in range(self.A):
            v[a, self.exc[a]:self.exc[a] + self.d] = p2[a]
        return v

    def pure_state(self, psi) -> BlockState:
        v = self.vector(psi)
        return BlockState(v[:, None, :, None] * v.conj()[None, :, None, :], self.full_support)

    def to_blocks(self, rho) -> BlockState:
        A, d, B = self.A, self.d, self.B
        r4 = np.asarray(rho).reshape(A, d, A, d)
        R = np.zeros((A, A, B, B), dtype=complex)
        for a in range(A):
            ea = self.exc[a]
            for b in range(A):
                eb = self.exc[b]
                R[a, b, ea:ea + d, eb:eb + d] = r4[a, :, b, :]
        return BlockState(R, self.full_support)

    def from_blocks(self, st: BlockState) -> np.ndarray:
        A, d = self.A, self.d
        r4 = np.zeros((A, d, A, d), dtype=complex)
        for i, a in enumerate(st.support):
            ea = self.exc[a]
            for j, b in enumerate(st.support):
                eb = self.exc[b]
                r4[a, :, b, :] = st.R[i, j, ea:ea + d, eb:eb + d]
        return r4.reshape(A * d, A * d)

    # dynamics -------------------------------------------------------------
    @staticmethod
    def evolve_vector(v, U) -> np.ndarray:
        return np.einsum("nac,cn->an", U, v)

    def evolve(self, st: BlockState, U) -> BlockState:
        """``U rho U^dagger``; the result has full atomic support."""
        B, A = self.B, self.A
        k = len(st.support)
        us = U[:, :, st.support]                                   # (N, a, i)
        left = np.matmul(us, st.R.transpose(2, 0, 1, 3).reshape(B, k, k * B))
        left = left.reshape(B, A, k, B).transpose(3, 0, 1, 2).reshape(B, B * A, k)
        out = np.matmul(left, us.conj().transpose(0, 2, 1))        # (M, N a, b)
        return BlockState(out.reshape(B, B, A, A).transpose(2, 3, 1, 0), self.full_support)

    def apply_kraus(self, st: BlockState, kraus_nonzeros) -> BlockState:
        """Apply an atomic channel given as per-operator ``(row, col, value)`` lists.

        The output support is the set of rows any operator writes to.
        """
        exc = self.exc
        pos = {int(a): i for i, a in enumerate(st.support)}
        targets = sorted({g for ent in kraus_nonzeros for g, _, _ in ent})
        tpos = {g: i for i, g in enumerate(targets)}
        out = np.zeros((len(targets), len(targets), self.B, self.B), dtype=complex)
        for ent in kraus_nonzeros:
            ent = [(g, a, p) for g, a, p in ent if a in pos]
            for g, a, p in ent:
                for dd, b, q in ent:
                    _shift_add(out[tpos[g], tpos[dd]], p * np.conj(q) * st.R[pos[a], pos[b]],
                               exc[g] - exc[a], exc[dd] - exc[b])
        return BlockState(out, np.array(targets))

    # observables ------------------------------------------------------------
    def reduced_atomic(self, st: BlockState) -> np.ndarray:
        out = np.zeros((self.A, self.A), dtype=complex)
        for i, a in enumerate(st.support):
            for j, b in enumerate(st.support):
                out[a, b] = np.trace(st.R[i, j], offset=int(self.exc[b] - self.exc[a]))
        return out

    def reduced_from_vector(self, v) -> np.ndarray:
        cols = np.stack([v[a, self.exc[a]:self.exc[a] + self.d] for a in range(self.A)])
        return cols @ cols.conj().T

    @staticmethod
    def populations(st: BlockState) -> np.ndarray:
        """Diagonal populations, shape ``(k, B)``."""
        k = len(st.support)
        return np.real(np.einsum("iinn->in", st.R)) if k else np.zeros((0, st.R.shape[2]))

    def trace(self, st: BlockState) -> float:
        return float(self.populations(st).sum())

    def leakage(self, st: BlockState) -> float:
        """Population in blocks cut by the Fock truncation."""
        return float(self.populations(st)[:, self.incomplete].sum())

    def vector_leakage(self, v) -> float:
        return float(np.sum(np.abs(v[:, self.incomplete]) ** 2))


def _shift_add(out, x, dn: int, dm: int):
    B = x.shape[0]
    sn = slice(max(0, dn), B + min(0, dn))
    on = slice(max(0, -dn), B - max(0, dn))
    sm = slice(max(0, dm), B + min(0, dm))
    om = slice(max(0, -dm), B - max(0, dm))
    out[sn, sm] += x[on, om]
