"""Tavis-Cummings Hamiltonians and initial states.

Conventions
-----------
* hbar = 1; every frequency is an angular frequency and time is its inverse.
* Single-atom basis ``|0> = ground``, ``|1> = excited``; ``sigma_z = diag(-1, +1)``
  so ``S_z = sum_i sigma_z^(i)`` has eigenvalue ``2k - s`` on states with ``k``
  excited atoms.  The GHZ codewords are ``|0...0>`` (no excitations) and
  ``|1...1>``.
* Product basis is big-endian: atom 1 is the most significant bit.
* Collective basis ``|k>``, ``k = 0..s`` excited atoms, ascending ``S_z``.
* ``sigma_+ = |1><0|``.  Passing ``sigma_convention="literal"`` uses
  ``sigma_x + i sigma_y = 2|1><0|`` instead, which doubles the effective coupling.
  The standard choice is what the closed forms (Rabi frequency
  ``sqrt(delta^2 + (n+1) Omega^2)`` and the linear error-rate law) assume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Union

import numpy as np
import scipy.sparse as sp

from .constants import DIM_CAP, TOL
from .errors import DimensionError
from .operators import HilbertDims


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"photon number must be >= 0, got {self.n}")

    @property
    def mean_photons(self) -> float:
        return float(self.n)


@dataclass(frozen=True)
class Coherent:
    alpha: complex

    @property
    def mean_photons(self) -> float:
        return abs(self.alpha) ** 2


FieldInit = Union[Fock, Coherent]
Basis = Literal["full", "collective"]


def default_n_max(s: int, field_init: FieldInit) -> int:
    """Smallest truncation that provably contains the dynamics."""
    if isinstance(field_init, Fock):
        return field_init.n + s + 3
    a = abs(field_init.alpha)
    return int(math.ceil(a * a + 10 * a + 20))


@dataclass(frozen=True)
class ModelParams:
    s: int
    omega_c: float
    omega_a: float
    Omega: float
    field_init: FieldInit
    n_max: int | None = None
    sigma_convention: Literal["standard", "literal"] = "standard"

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"need at least one atom, got s={self.s}")
        if self.sigma_convention not in ("standard", "literal"):
            raise ValueError(f"unknown sigma convention {self.sigma_convention!r}")
        if self.n_max is None:
            object.__setattr__(self, "n_max", default_n_max(self.s, self.field_init))
        fi = self.field_init
        if isinstance(fi, Fock):
            if fi.n + self.s > self.n_max:
                raise ValueError(
                    f"Fock({fi.n}) with s={self.s} needs n_max >= {fi.n + self.s}, got {self.n_max}"
                )
        elif isinstance(fi, Coherent):
            need = default_n_max(self.s, fi)
            if self.n_max < need:
                raise ValueError(
                    f"Coherent(|alpha|={abs(fi.alpha):.4g}) needs n_max >= {need}, got {self.n_max}"
                )
        else:
            raise TypeError(f"field_init must be Fock or Coherent, got {type(fi).__name__}")

    def delta(self) -> float:
        return self.omega_a - self.omega_c

    def with_delta(self, delta: float) -> "ModelParams":
        """Same model at detuning ``delta``; the cavity frequency is held fixed."""
        return replace(self, omega_a=self.omega_c + delta)

    @property
    def coupling_scale(self) -> float:
        return 2.0 if self.sigma_convention == "literal" else 1.0

    @property
    def field_dim(self) -> int:
        return self.n_max + 1

    def dims(self, basis: Basis = "full") -> HilbertDims:
        atom_dim = 2 ** self.s if basis == "full" else self.s + 1
        return HilbertDims(atom_dim, self.field_dim)


@dataclass(frozen=True)
class CollectiveOperators:
    S_z: np.ndarray
    S_plus: np.ndarray
    S_minus: np.ndarray = field(repr=False)


def collective_operators(s: int, coupling_scale: float = 1.0) -> CollectiveOperators:
    k = np.arange(s + 1)
    s_z = np.diag(2.0 * k - s)
    s_plus = np.zeros((s + 1, s + 1))
    for i in range(s):
        s_plus[i + 1, i] = math.sqrt((i + 1) * (s - i))
    s_plus *= coupling_scale
    return CollectiveOperators(s_z, s_plus, s_plus.T.copy())


def single_atom_operators(coupling_scale: float = 1.0):
    """``(sigma_z, sigma_plus)`` in the ``(|0>=ground, |1>=excited)`` basis."""
    sz = np.diag([-1.0, 1.0])
    splus = coupling_scale * np.array([[0.0, 0.0], [1.0, 0.0]])
    return sz, splus


def excitation_counts(s: int, basis: Basis) -> np.ndarray:
    """Number of excited atoms for each atomic basis index."""
    if basis == "collective":
        return np.arange(s + 1)
    idx = np.arange(2 ** s)
    return np.array([bin(i).count("1") for i in idx])


def field_operators(n_max: int):
    d = n_max + 1
    a = sp.diags(np.sqrt(np.arange(1, d)), 1, shape=(d, d), format="csr")
    return a, sp.diags(np.arange(d, dtype=float), 0, format="csr")


def _embed_site(op, site: int, s: int):
    eye2 = sp.identity(2, format="csr")
    out = None
    for j in range(s):
        f = sp.csr_matrix(op) if j == site else eye2
        out = f if out is None else sp.kron(out, f, format="csr")
    return out


def _check_cap(dim: int, cap: int):
    if dim > cap:
        raise DimensionError(f"Hilbert-space dimension {dim} exceeds cap {cap}")


def full_hamiltonian_sparse(p: ModelParams, cap: int = DIM_CAP) -> sp.csr_matrix:
    dims = p.dims("full")
    _check_cap(dims.total, cap)
    sz, splus = single_atom_operators(p.coupling_scale)
    a, num = field_operators(p.n_max)
    ia = sp.identity(dims.atom_dim, format="csr")
    if_ = sp.identity(dims.field_dim, format="csr")
    h = p.omega_c * sp.kron(ia, num)
    for i in range(p.s):
        zi = _embed_site(sz, i, p.s)
        pi = _embed_site(splus, i, p.s)
        h = h + 0.5 * p.omega_a * sp.kron(zi, if_)
        h = h + 0.5 * p.Omega * (sp.kron(pi, a) + sp.kron(pi.T, a.T))
    return sp.csr_matrix(h)


def build_full_hamiltonian(p: ModelParams, cap: int = DIM_CAP) -> np.ndarray:
    """Dense product-basis Hamiltonian on ``2^s (n_max + 1)`` states."""
    return full_hamiltonian_sparse(p, cap).toarray().astype(complex)


def collective_hamiltonians_sparse(p: ModelParams):
    ops = collective_operators(p.s, p.coupling_scale)
    a, num = field_operators(p.n_max)
    ia = sp.identity(p.s + 1, format="csr")
    if_ = sp.identity(p.field_dim, format="csr")
    sz = sp.csr_matrix(ops.S_z)
    splus = sp.csr_matrix(ops.S_plus)
    h_i = p.omega_c * (sp.kron(ia, num) + 0.5 * sp.kron(sz, if_))
    h_ii = 0.5 * p.delta() * sp.kron(sz, if_) + 0.5 * p.Omega * (
        sp.kron(splus, a) + sp.kron(splus.T, a.T)
    )
    return sp.csr_matrix(h_i), sp.csr_matrix(h_ii)


def build_collective_hamiltonians(p: ModelParams):
    """``(H_I, H_II)`` on the collective-spin x field space.

    ``H_I = omega_c (a^dagger a + S_z / 2)`` and
    ``H_II = delta S_z / 2 + (Omega / 2)(a S_+ + a^dagger S_-)``; they commute.
    """
    h_i, h_ii = collective_hamiltonians_sparse(p)
    return h_i.toarray().astype(complex), h_ii.toarray().astype(complex)


def hamiltonian_sparse(p: ModelParams, basis: Basis = "full") -> sp.csr_matrix:
    if basis == "full":
        return full_hamiltonian_sparse(p)
    h_i, h_ii = collective_hamiltonians_sparse(p)
    return sp.csr_matrix(h_i + h_ii)


def total_excitation(p: ModelParams, basis: Basis = "full") -> np.ndarray:
    """Diagonal of ``a^dagger a + (number of excited atoms)``."""
    exc = excitation_counts(p.s, basis)
    return np.add.outer(exc, np.arange(p.field_dim)).ravel()


def symmetric_isometry(s: int) -> np.ndarray:
    """``2^s x (s+1)`` map from the collective basis to normalized Dicke states."""
    exc = excitation_counts(s, "full")
    w = np.zeros((2 ** s, s + 1))
    for k in range(s + 1):
        sel = exc == k
        w[sel, k] = 1 / math.sqrt(sel.sum())
    return w


def ghz_state(s: int, basis: Basis = "full") -> np.ndarray:
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    dim = 2 ** s if basis == "full" else s + 1
    _check_cap(dim, DIM_CAP)
    psi = np.zeros(dim, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def codeword_indices(s: int, basis: Basis) -> tuple[int, int]:
    return (0, 2 ** s - 1) if basis == "full" else (0, s)


def field_state(p: ModelParams) -> np.ndarray:
    d = p.field_dim
    fi = p.field_init
    psi = np.zeros(d, dtype=complex)
    if isinstance(fi, Fock):
        psi[fi.n] = 1.0
        return psi
    alpha = complex(fi.alpha)
    if alpha == 0:
        psi[0] = 1.0
        return psi
    m = np.arange(d)
    log_amp = -abs(alpha) ** 2 / 2 + m * math.log(abs(alpha)) - 0.5 * np.array(
        [math.lgamma(k + 1) for k in m]
    )
    psi = np.exp(log_amp) * np.exp(1j * m * np.angle(alpha))
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > TOL.coherent_tail:
        raise ValueError(
            f"coherent state |alpha|={abs(alpha):.4g} loses {1 - norm**2:.2e} beyond n_max={p.n_max}"
        )
    return psi / norm


def initial_density(p: ModelParams, basis: Basis = "full") -> np.ndarray:
    psi = np.kron(ghz_state(p.s, basis), field_state(p))
    return np.outer(psi, psi.conj())
