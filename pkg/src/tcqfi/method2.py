"""Dressed single-atom evolution with a c-number field and a compiled correction.

Each atom sees ``H = n omega_c + omega_a sigma_z / 2 + (Omega / 2)(a sigma_+ + a^* sigma_-)``
with ``|a|^2 = n`` (Fock ``n`` or coherent mean photon number).  One interval of
evolution followed by majority-vote correction maps the code space
``{|0...0>, |1...1>}`` to itself; in Bloch form ``r -> V r`` with
``rho = (1/2) sum_beta r_beta sigma_beta`` and ``sigma = (1, X, Y, Z)``.
``eta`` intervals are the matrix power ``V^eta``.

The transfer matrix acts on column vectors, so trace preservation shows up as a
first row equal to ``(1, 0, 0, 0)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import TOL
from .errors import ApproximationBreakdown
from .model import Coherent, Fock, ModelParams, codeword_indices, collective_operators
from .operators import check_unitary, hermitian_eig
from .qec import apply_channel, collective_correction
from .qfi import default_step, stencil_qfi

log = logging.getLogger(__name__)

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
GHZ_BLOCH = np.array([1.0, 1.0, 0.0, 0.0])


def mean_photons(p: ModelParams) -> float:
    fi = p.field_init
    if isinstance(fi, (Fock, Coherent)):
        return fi.mean_photons
    raise TypeError(f"unsupported field {fi!r}")


@dataclass(frozen=True)
class DressedBasis:
    E_plus: float
    E_minus: float
    c0: complex
    c1: complex
    b: complex
    Delta2: float

    def __post_init__(self):
        norm = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(norm - 1) > TOL.norm:
            raise ApproximationBreakdown(f"dressed amplitudes not normalized: {norm!r}")


def dressed_basis(p: ModelParams, n_eff: float | None = None, phase: float = 0.0) -> DressedBasis:
    """Eigenpairs of the single-atom c-number Hamiltonian.

    ``|Psi_+> = c0 |0> + c1 |1>`` with ``c0 = b / sqrt(|b|^2 + 1)``, ``c1 = c0 / b`` and
    ``b = (Delta2 - omega_a) / (Omega a)``; ``a = sqrt(n_eff) exp(i phase)``.  For
    real ``a`` this is the same as dividing by ``Omega a^*``; for complex ``a``
    only the form used here gives an eigenvector.
    The ratio is evaluated in whichever of two algebraically equal forms avoids
    cancellation, which also gives the limits at ``Omega sqrt(n) = 0``:
    ``(c0, c1) -> (0, 1)`` for ``omega_a > 0`` and ``(1, 0)`` for ``omega_a < 0``.
    """
    n = mean_photons(p) if n_eff is None else float(n_eff)
    if n < 0:
        raise ValueError(f"photon number must be >= 0, got {n}")
    a = math.sqrt(n) * np.exp(1j * phase)
    om = p.Omega * p.coupling_scale
    wa = p.omega_a
    g = om * abs(a)
    d2 = math.hypot(g, wa)
    if d2 == 0:
        c0 = c1 = 1 / math.sqrt(2)
        b = 1.0 + 0j
    elif wa >= 0:
        # b = (Delta2 - omega_a) / (Omega a) = Omega a^* / (Delta2 + omega_a)
        b = om * np.conj(a) / (d2 + wa)
        c1 = 1 / math.sqrt(abs(b) ** 2 + 1)
        c0 = b * c1
    else:
        inv = om * a / (d2 - wa)  # 1 / b
        unit = np.conj(inv) / abs(inv) if abs(inv) > 0 else 1.0
        c0 = unit / math.sqrt(1 + abs(inv) ** 2)
        c1 = c0 * inv
        b = 1 / inv if abs(inv) > 0 else complex("inf")
    return DressedBasis(n * p.omega_c + d2 / 2, n * p.omega_c - d2 / 2,
                        complex(c0), complex(c1), complex(b), d2)


@dataclass(frozen=True)
class XCoefficients:
    x1: complex
    x2: complex
    x3: complex
    x4: complex

    @property
    def matrix(self) -> np.ndarray:
        """Single-atom propagator, columns are the images of ``|0>`` and ``|1>``."""
        return np.array([[self.x1, self.x3], [self.x2, self.x4]])


def x_coefficients(eps: float, db: DressedBasis) -> XCoefficients:
    ep = np.exp(-1j * db.E_plus * eps)
    em = np.exp(-1j * db.E_minus * eps)
    c0, c1 = db.c0, db.c1
    xc = XCoefficients(
        abs(c0) ** 2 * ep + abs(c1) ** 2 * em,
        np.conj(c0) * c1 * ep - c1 * np.conj(c0) * em,
        np.conj(c1) * c0 * ep - c0 * np.conj(c1) * em,
        abs(c1) ** 2 * ep + abs(c0) ** 2 * em,
    )
    check_unitary(xc.matrix, "single-atom c-number propagator", TOL)
    return xc


def code_amplitudes(k: int, s: int, xc: XCoefficients) -> np.ndarray:
    """``A(k)``: code-space map for flip patterns with ``k`` atoms in ``|0>``."""
    if not 0 <= k <= s:
        raise ValueError(f"k must lie in [0, {s}], got {k}")

    def z0(j):
        return xc.x1 ** j * xc.x2 ** (s - j)

    def z1(j):
        return xc.x3 ** j * xc.x4 ** (s - j)

    return np.array([[z0(k), z1(k)], [z0(s - k), z1(s - k)]])


def _bloch(x: np.ndarray) -> np.ndarray:
    return np.array([np.trace(x @ sb) for sb in PAULI])


@dataclass(frozen=True)
class TransferMatrix:
    matrix: np.ndarray

    def trace_row_defect(self) -> float:
        return float(np.abs(self.matrix[0] - np.array([1, 0, 0, 0])).max())

    def off_block(self) -> float:
        """Largest entry coupling the identity component to the Bloch block."""
        m = self.matrix
        return float(max(np.abs(m[0, 1:]).max(), np.abs(m[1:, 0]).max()))

    def power(self, eta: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, eta)


def transfer_matrix(k: int, eps: float, s: int, xc: XCoefficients) -> TransferMatrix:
    """Contribution of the weight class ``k`` to the compiled channel."""
    if not (s + 1) // 2 <= k <= s:
        raise ValueError(f"k must lie in [{(s + 1) // 2}, {s}] for s={s}, got {k}")
    a = code_amplitudes(k, s, xc)
    ah = a.conj().T
    cols = [_bloch(a @ sa @ ah) for sa in PAULI]
    m = 0.5 * math.comb(s, k) * np.stack(cols, axis=1)
    return TransferMatrix(m)


def total_transfer(eps: float, s: int, p: ModelParams, n_eff: float | None = None,
                   phase: float = 0.0) -> TransferMatrix:
    if s % 2 == 0 or s < 1:
        raise ValueError(f"majority vote needs odd s, got s={s}")
    xc = x_coefficients(eps, dressed_basis(p, n_eff, phase))
    m = sum(transfer_matrix(k, eps, s, xc).matrix for k in range((s + 1) // 2, s + 1))
    imag = np.abs(m.imag).max()
    if imag > TOL.structural:
        raise ApproximationBreakdown(f"transfer matrix has imaginary part {imag:.2e}")
    return TransferMatrix(m.real)


def bloch_to_density(r) -> np.ndarray:
    r = np.asarray(r)
    return 0.5 * sum(r[i] * PAULI[i] for i in range(4))


def corrected_bloch(eta: int, eps: float, s: int, p: ModelParams, n_eff: float | None = None,
                    phase: float = 0.0, check: bool = True) -> np.ndarray:
    """Code-space state after ``eta`` evolve-and-correct intervals, from the GHZ state."""
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    v = total_transfer(eps, s, p, n_eff, phase)
    r = v.power(eta) @ GHZ_BLOCH
    trace = r[0]
    if abs(trace - 1) > TOL.structural:
        log.debug("code-space trace %.12g before renormalization (eta=%d, eps=%g)", trace.real, eta, eps)
    norm = float(np.linalg.norm(r[1:]))
    if check and norm > 1 + 1e-6:
        raise ApproximationBreakdown(f"Bloch length {norm:.9f} > 1 after {eta} intervals")
    rho = bloch_to_density(r / trace)
    return rho


def collective_hamiltonian(s: int, p: ModelParams, n_eff: float | None = None,
                           phase: float = 0.0) -> np.ndarray:
    """``omega_a S_z / 2 + (Omega / 2)(a S_+ + a^* S_-)`` on the symmetric sector."""
    n = mean_photons(p) if n_eff is None else float(n_eff)
    a = math.sqrt(n) * np.exp(1j * phase)
    ops = collective_operators(s, p.coupling_scale)
    return 0.5 * p.omega_a * ops.S_z + 0.5 * p.Omega * (a * ops.S_plus + np.conj(a) * ops.S_minus)


def _collective_unitary(t: float, s: int, p: ModelParams, n_eff, phase) -> np.ndarray:
    e = hermitian_eig(collective_hamiltonian(s, p, n_eff, phase))
    return (e.eigenvectors * np.exp(-1j * e.eigenvalues * t)) @ e.eigenvectors.conj().T


def embed_code_state(rho_code: np.ndarray, s: int) -> np.ndarray:
    rho = np.zeros((s + 1, s + 1), dtype=complex)
    i0, i1 = codeword_indices(s, "collective")
    rho[np.ix_([i0, i1], [i0, i1])] = rho_code
    return rho


def transfer_by_embedding(eps: float, s: int, p: ModelParams, n_eff: float | None = None,
                          phase: float = 0.0) -> np.ndarray:
    """Independent construction of ``V``: embed, evolve collectively, correct, read back."""
    u = _collective_unitary(eps, s, p, n_eff, phase)
    ch = collective_correction(s)
    code = list(codeword_indices(s, "collective"))
    cols = []
    for sa in PAULI:
        rho = apply_channel(u @ embed_code_state(0.5 * sa, s) @ u.conj().T, ch)
        cols.append(_bloch(rho[np.ix_(code, code)]).real)
    return np.stack(cols, axis=1)


def corrected_density(t: float, eps: float, s: int, p: ModelParams, n_eff: float | None = None,
                      phase: float = 0.0) -> np.ndarray:
    """Collective-sector state at any ``t = eta * eps + tau``.

    The code-space state after ``eta`` corrections is embedded in the
    symmetric sector and evolved for the remaining ``tau``.
    """
    eta = int(math.floor(t / eps + 1e-9))
    tau = t - eta * eps
    rho = embed_code_state(corrected_bloch(eta, eps, s, p, n_eff, phase), s)
    if tau > 1e-9 * eps:
        u = _collective_unitary(tau, s, p, n_eff, phase)
        rho = u @ rho @ u.conj().T
    return rho


def _delta_stencil(fn, p: ModelParams, h: float | None):
    d0 = p.delta()
    h = default_step(d0) if h is None else h
    return [fn(p.with_delta(d0 + k * h)) for k in (-1, 0, 1)], h


def qfi_corrected(t: float, eps: float, s: int, p: ModelParams, n_eff: float | None = None,
                  phase: float = 0.0, h: float | None = None) -> float:
    """QFI with respect to the detuning (``omega_a`` moves, ``omega_c`` fixed)."""
    eta = int(math.floor(t / eps + 1e-9))
    if abs(t - eta * eps) <= 1e-9 * max(eps, t):
        rs, h = _delta_stencil(lambda q: corrected_bloch(eta, eps, s, q, n_eff, phase), p, h)
    else:
        rs, h = _delta_stencil(lambda q: corrected_density(t, eps, s, q, n_eff, phase), p, h)
    return stencil_qfi(*rs, h, TOL.support_cutoff)


def qfi_vs_atoms(s_list: Sequence[int], eps: float, t: float, p: ModelParams,
                 n_eff: float | None = None) -> list[tuple[int, float]]:
    q = t / eps
    eta = round(q)
    if abs(q - eta) > 1e-9 * max(1.0, q):
        raise ValueError(f"t={t} is not an integer multiple of eps={eps}")
    out = []
    for s in s_list:
        if s % 2 == 0:
            raise ValueError(f"odd atom numbers only, got {s}")
        out.append((s, qfi_corrected(eta * eps, eps, s, p, n_eff)))
    return out
