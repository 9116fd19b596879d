"""Large-photon-number closed forms for a Fock-state cavity.

The field is replaced by a c-number so the collective atomic block evolves
under ``H_II = delta S_z / 2 + (Omega / 2) sqrt(n_eff) (S_+ + S_-)``.  Each
atom then flips with probability

    chi(t) = ((n+1) Omega^2 / Delta^2) sin^2(Delta t / 2),
    Delta  = sqrt(delta^2 + (n+1) Omega^2),

and the reduced collective state keeps only its diagonal and the two corner
coherences between ``|0>`` and ``|s>``.  Under periodic correction the cavity
is assumed to stay in ``|n>``, so the corner picks up one scalar factor per
interval.

``n_eff`` defaults to ``n + 1``: with that choice ``|u_00|^2 = (1 - chi)^s``
exactly, so diagonal and corner come from the same single-atom rotation and the
assembled state is positive.  ``n_eff = n`` (as in a naive ``a -> sqrt(n)``
replacement) is accepted for comparison.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import ApproximationBreakdown
from .model import Fock, ModelParams, collective_operators
from .operators import check_unitary, hermitian_eig
from .qfi import default_step, stencil_qfi

log = logging.getLogger(__name__)


def _fock_n(p: ModelParams) -> int:
    if not isinstance(p.field_init, Fock):
        raise TypeError("the closed forms assume a Fock-state cavity")
    return p.field_init.n


@dataclass(frozen=True)
class RabiParams:
    Delta: float
    delta: float
    Omega: float
    n: int

    def chi(self, t: float, printed: bool = False) -> float:
        x = math.sin(self.Delta * t / 2)
        amp = (self.n + 1) * self.Omega ** 2 / self.Delta ** 2 if self.Delta else 0.0
        return amp * (x if printed else x * x)


def rabi_params(p: ModelParams) -> RabiParams:
    n = _fock_n(p)
    omega = p.Omega * p.coupling_scale
    return RabiParams(math.sqrt(p.delta() ** 2 + (n + 1) * omega ** 2), p.delta(), omega, n)


def chi(t: float, p: ModelParams, printed: bool = False) -> float:
    """Single-atom flip probability after time ``t``.

    ``printed=True`` returns the first-power ``sin`` variant, kept only for
    diagnostics: it is not bounded by 1 and goes negative.
    """
    return rabi_params(p).chi(t, printed)


@dataclass(frozen=True)
class CollectivePropagator:
    matrix: np.ndarray
    photon_number: float

    def __post_init__(self):
        check_unitary(self.matrix, "c-number collective propagator")

    @property
    def u_first(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def u_last(self) -> complex:
        return complex(self.matrix[-1, -1])


def collective_propagator(t: float, p: ModelParams, n_eff: float | None = None) -> CollectivePropagator:
    n = _fock_n(p)
    n_eff = n + 1 if n_eff is None else n_eff
    ops = collective_operators(p.s, p.coupling_scale)
    h = 0.5 * p.delta() * ops.S_z + 0.5 * p.Omega * math.sqrt(n_eff) * (ops.S_plus + ops.S_minus)
    e = hermitian_eig(h)
    u = (e.eigenvectors * np.exp(-1j * e.eigenvalues * t)) @ e.eigenvectors.conj().T
    return CollectivePropagator(u, float(n_eff))


def s_atom_diagonal(s: int, tau: float, p: ModelParams) -> np.ndarray:
    """Collective populations after ``tau`` of evolution from the GHZ state.

    Level ``i`` (``i`` excited atoms) gets ``C(s, i)/2 [chi^i (1-chi)^(s-i) + chi^(s-i) (1-chi)^i]``.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    c = chi(tau, p)
    return _binomial_diagonal(s, c)


def _binomial_diagonal(s: int, c: float) -> np.ndarray:
    i = np.arange(s + 1)
    comb = np.array([math.comb(s, k) for k in i], dtype=float)
    return 0.5 * comb * (c ** i * (1 - c) ** (s - i) + c ** (s - i) * (1 - c) ** i)


def _assemble(diag: np.ndarray, corner: complex) -> np.ndarray:
    rho = np.diag(diag).astype(complex)
    rho[0, -1] = corner
    rho[-1, 0] = np.conj(corner)
    return rho


def uncorrected_density(t: float, p: ModelParams, n_eff: float | None = None) -> np.ndarray:
    """Collective reduced state at ``t`` without correction, any ``s``."""
    u = collective_propagator(t, p, n_eff)
    corner = 0.5 * np.exp(1j * p.s * p.omega_c * t) * u.u_first * np.conj(u.u_last)
    return _assemble(s_atom_diagonal(p.s, t, p), corner)


def uncorrected_entries(eps: float, p: ModelParams, n_eff: float | None = None) -> np.ndarray:
    """The 4x4 reduced state of three atoms after ``eps`` without correction."""
    if p.s != 3:
        raise ValueError(f"uncorrected_entries is the three-atom form, got s={p.s}")
    return uncorrected_density(eps, p, n_eff)


def corrected_corner(eta: int, eps: float, tau: float, p: ModelParams,
                     n_eff: float | None = None) -> complex:
    """Corner coherence ``rho_{0,s}`` at ``t = eta * eps + tau``."""
    if p.s % 2 == 0:
        raise ValueError(f"corrections need odd s, got s={p.s}")
    if eta < 0 or tau < 0:
        raise ValueError("eta and tau must be non-negative")
    ue = collective_propagator(eps, p, n_eff)
    ut = collective_propagator(tau, p, n_eff)
    t = eta * eps + tau
    return complex(0.5 * np.exp(1j * p.s * p.omega_c * t)
                   * ut.u_first * ue.u_first ** eta * np.conj(ut.u_last * ue.u_last ** eta))


def corrected_density(eta: int, eps: float, tau: float, p: ModelParams,
                      n_eff: float | None = None, clip_tol: float = 1e-6) -> np.ndarray:
    """Collective reduced state ``tau`` after the ``eta``-th correction.

    Populations have only had ``tau`` to spread since the last correction, so
    the diagonal is the binomial form at ``chi(tau)``.
    """
    diag = s_atom_diagonal(p.s, tau, p)
    corner = corrected_corner(eta, eps, tau, p, n_eff)
    bound = math.sqrt(diag[0] * diag[-1])
    excess = abs(corner) - bound
    if excess > clip_tol:
        raise ApproximationBreakdown(
            f"corner {abs(corner):.6g} exceeds the positivity bound {bound:.6g} by {excess:.2e}"
        )
    if excess > 0:
        if excess > TOL.structural:  # rounding-level excess is clipped silently
            warnings.warn(f"corner clipped to the positivity bound (excess {excess:.2e})")
        corner *= bound / abs(corner)
    return _assemble(diag, corner)


def error_rate_law(eps: float, p: ModelParams) -> float:
    """Leading-order rate ``(s/4)(n+1) Omega^2 eps`` of at least one flip per interval."""
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    n = _fock_n(p)
    return p.s / 4 * (n + 1) * (p.Omega * p.coupling_scale) ** 2 * eps


def error_rate(eps: float, p: ModelParams) -> float:
    """``(1 - P_code) / eps`` from the binomial populations."""
    d = s_atom_diagonal(p.s, eps, p)
    return float((1 - d[0] - d[-1]) / eps)


def p14_printed(eps: float, p: ModelParams) -> complex:
    """The closed-form three-atom corner amplitude in its printed form.

    Diagnostics only: at ``eps -> 0`` it does not reduce to 1/2, so nothing
    downstream depends on it.  ``chi(3 eps)`` is read literally.
    """
    r = rabi_params(p)
    dl, D, n1 = r.delta, r.Delta, (r.n + 1) * r.Omega ** 2
    c1, c3 = r.chi(eps, printed=True), r.chi(3 * eps, printed=True)
    half = D * eps / 2
    bracket = (1j * dl * (3 * c1 + (4 * dl ** 2 / n1 + 3) * c3)
               + 3 * c1 * D / math.tan(half)
               + (D ** 2 + 3 * dl ** 2) / D * math.cos(3 * half))
    return complex(bracket ** 2 / (16 * D ** 4))


def _stencil(fn, p: ModelParams, h: float | None):
    d0 = p.delta()
    h = default_step(d0) if h is None else h
    return [fn(p.with_delta(d0 + k * h)) for k in (-1, 0, 1)], h


def qfi_uncorrected(t: float, p: ModelParams, h: float | None = None,
                    n_eff: float | None = None) -> float:
    rs, h = _stencil(lambda q: uncorrected_density(t, q, n_eff), p, h)
    return stencil_qfi(*rs, h, TOL.support_cutoff)


def qfi_corrected(t: float, eps: float, p: ModelParams, h: float | None = None,
                  n_eff: float | None = None) -> float:
    eta = int(math.floor(t / eps + 1e-9))
    tau = max(t - eta * eps, 0.0)
    if tau < 1e-9 * eps:
        tau = 0.0
    rs, h = _stencil(lambda q: corrected_density(eta, eps, tau, q, n_eff), p, h)
    return stencil_qfi(*rs, h, TOL.support_cutoff)
