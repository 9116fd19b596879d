"""Dense complex-matrix primitives.

Index convention (fixed across the package): in every joint atom-field
operator the atomic factor is the slow index and the field factor the fast
one, i.e. joint basis state ``(atom=a, photons=m)`` sits at ``a * field_dim + m``.
Matrices are plain ``numpy.ndarray`` objects and are treated as immutable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import DIM_CAP, TOL
from .errors import DimensionError, EigensolverError, InvariantViolation


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray   # ascending, real
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class HilbertDims:
    atom_dim: int
    field_dim: int

    def __post_init__(self):
        if self.atom_dim < 1 or self.field_dim < 1:
            raise DimensionError(f"dimensions must be >= 1, got {self}")

    @property
    def total(self) -> int:
        return self.atom_dim * self.field_dim


def tensor_product(a, b, max_dim: int = DIM_CAP) -> np.ndarray:
    """Kronecker product with ``a`` as the slow factor."""
    a = np.asarray(a)
    b = np.asarray(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1] if a.ndim == 2 else 1
    if max(rows, cols) > max_dim:
        raise DimensionError(
            f"tensor product of {a.shape} and {b.shape} exceeds the dimension cap {max_dim}"
        )
    return np.kron(a, b)


def _fix_phases(v: np.ndarray) -> np.ndarray:
    # Make the largest-modulus entry of each column real positive, so repeated
    # calls on identical input return identical vectors.
    idx = np.argmax(np.abs(v) > np.abs(v).max(axis=0) * (1 - 1e-8), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    ph = ph / np.where(np.abs(ph) > 0, np.abs(ph), 1.0)
    return v * ph.conj()


def hermitian_eig(h) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized as ``(H + H^dagger) / 2`` before factoring.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    hs = (h + h.conj().T) / 2
    try:
        w, v = np.linalg.eigh(hs)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(
            f"eigh failed on {h.shape} matrix: max|H|={np.abs(h).max():.3e}, "
            f"finite={np.isfinite(h).all()}"
        ) from exc
    return EigenDecomposition(w, _fix_phases(v))


class Propagator:
    """Factor a Hermitian generator once, evolve for many times.

    ``U(t) = V diag(exp(-i lambda t)) V^dagger`` with hbar = 1.
    """

    def __init__(self, h):
        self.eig = hermitian_eig(h)
        self.dim = self.eig.eigenvalues.shape[0]

    def unitary(self, t: float) -> np.ndarray:
        v = self.eig.eigenvectors
        return (v * np.exp(-1j * self.eig.eigenvalues * t)) @ v.conj().T

    def evolve(self, rho, t: float) -> np.ndarray:
        rho = np.asarray(rho)
        if rho.shape != (self.dim, self.dim):
            raise DimensionError(f"state shape {rho.shape} does not match generator dim {self.dim}")
        u = self.unitary(t)
        return u @ rho @ u.conj().T


def evolve(rho, h, t: float) -> np.ndarray:
    """Return ``U rho U^dagger`` for ``U = exp(-i H t)``."""
    h = np.asarray(h)
    rho = np.asarray(rho)
    if rho.shape != h.shape:
        raise DimensionError(f"rho {rho.shape} and H {h.shape} differ in shape")
    return Propagator(h).evolve(rho, t)


def partial_trace_field(rho, dims: HilbertDims) -> np.ndarray:
    """Trace out the (fast-index) field factor."""
    rho = np.asarray(rho)
    if rho.shape != (dims.total, dims.total):
        raise DimensionError(f"rho {rho.shape} does not match {dims}")
    r = rho.reshape(dims.atom_dim, dims.field_dim, dims.atom_dim, dims.field_dim)
    return np.einsum("ambm->ab", r)


def density_violations(rho, tol=TOL) -> list[str]:
    """Describe every density-matrix invariant that ``rho`` breaks."""
    rho = np.asarray(rho)
    problems = []
    tr = np.trace(rho)
    if abs(tr - 1) > tol.structural:
        problems.append(f"trace {tr:.12g} != 1")
    herm = np.abs(rho - rho.conj().T).max() if rho.size else 0.0
    if herm > tol.structural:
        problems.append(f"non-Hermitian by {herm:.3e}")
    lmin = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lmin < -tol.spectral:
        problems.append(f"negative eigenvalue {lmin:.3e}")
    return problems


def check_density(rho, what: str = "state", tol=TOL) -> np.ndarray:
    problems = density_violations(rho, tol)
    if problems:
        raise InvariantViolation(f"{what}: " + "; ".join(problems))
    return rho


def unitarity_defect(u) -> float:
    u = np.asarray(u)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def check_unitary(u, what: str = "propagator", tol=TOL) -> np.ndarray:
    d = unitarity_defect(u)
    if d > tol.spectral:
        raise InvariantViolation(f"{what} not unitary: |U^dagger U - I|_max = {d:.3e}")
    return u


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (x + x.conj().T) / 2


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
