"""Quantum Fisher information of a one-parameter density-matrix family.

``qfi_spectral`` evaluates the eigen-decomposition form

    F = sum_i (d lambda_i)^2 / lambda_i
        + 4 sum_i lambda_i (<dv_i|dv_i> - |<v_i|dv_i>|^2)
        - 8 sum_{i != j} lambda_i lambda_j / (lambda_i + lambda_j) |<v_i|dv_j>|^2

with derivatives taken by central differences.  ``sld_oracle`` solves the
symmetric-logarithmic-derivative equation directly and serves as an
independent check.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import polar

from .constants import FD_REL_STEP, TOL
from .errors import EigenCrossingError
from .operators import hermitian_eig

log = logging.getLogger(__name__)

# A stencil eigenvector must put at least this much weight on its cluster.
MATCH_WEIGHT = 0.9


@dataclass(frozen=True)
class QfiResult:
    parameter_value: float
    value: float
    fd_step: float
    support_cutoff: float


def default_step(tau0: float) -> float:
    return FD_REL_STEP * max(1.0, abs(tau0))


def _clip(value: float, what: str = "QFI") -> float:
    if value < -TOL.qfi_negative:
        raise ArithmeticError(f"{what} evaluated to {value:.3e} < 0")
    return max(value, 0.0)


def _clusters(w: np.ndarray, support: np.ndarray, gap: float) -> list[np.ndarray]:
    idx = np.flatnonzero(support)
    groups: list[list[int]] = []
    for i in idx:
        if groups and w[i] - w[groups[-1][-1]] <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def _match(v0c: np.ndarray, eig, what: str, h: float) -> np.ndarray:
    """Columns of the stencil eigenbasis spanning the same space as ``v0c``."""
    weights = np.sum(np.abs(v0c.conj().T @ eig.eigenvectors) ** 2, axis=0)
    m = v0c.shape[1]
    pick = np.sort(np.argsort(weights)[::-1][:m])
    if weights[pick].min() < MATCH_WEIGHT:
        raise EigenCrossingError(
            f"eigenvectors at tau0{what}h overlap ambiguously with the tau0 basis "
            f"(weight {weights[pick].min():.3f} < {MATCH_WEIGHT}); an eigenvalue crossing "
            f"sits inside the stencil, try a smaller step than h={h:.3e}"
        )
    return pick


def _align(w: np.ndarray, v0: np.ndarray) -> np.ndarray:
    """Rotate the columns of ``w`` within their span to be closest to ``v0``."""
    if w.shape[1] == 1:
        ov = (v0.conj().T @ w)[0, 0]
        return w * (np.conj(ov) / abs(ov))
    u, _ = polar(w.conj().T @ v0)
    return w @ u


def qfi_from_stencil(r_minus, r0, r_plus, h: float, cutoff: float = TOL.support_cutoff) -> float:
    """Eigen-decomposition QFI from states at ``tau0 - h``, ``tau0``, ``tau0 + h``."""
    r_minus, r0, r_plus = (np.asarray(r, dtype=complex) for r in (r_minus, r0, r_plus))
    e0, ep, em = hermitian_eig(r0), hermitian_eig(r_plus), hermitian_eig(r_minus)
    w = e0.eigenvalues
    drho = (r_plus - r_minus) / (2 * h)
    lam, dlam, vecs, dvecs = [], [], [], []
    for c in _clusters(w, w > cutoff, TOL.degeneracy):
        v0c = e0.eigenvectors[:, c]
        if len(c) > 1:
            # Degenerate cluster: use the basis that diagonalizes the projected
            # derivative, whose eigenvalues are the eigenvalue derivatives.
            proj = v0c.conj().T @ drho @ v0c
            dl, rot = np.linalg.eigh((proj + proj.conj().T) / 2)
            v0c = v0c @ rot
        pick_p, pick_m = _match(v0c, ep, "+", h), _match(v0c, em, "-", h)
        if len(c) == 1:
            dl = (ep.eigenvalues[pick_p] - em.eigenvalues[pick_m]) / (2 * h)
        wp = _align(ep.eigenvectors[:, pick_p], v0c)
        wm = _align(em.eigenvectors[:, pick_m], v0c)
        lam.append(w[c])
        dlam.append(dl)
        vecs.append(v0c)
        dvecs.append((wp - wm) / (2 * h))
    if not lam:
        return 0.0
    lam = np.concatenate(lam)
    dlam = np.concatenate(dlam)
    v = np.hstack(vecs)
    dv = np.hstack(dvecs)
    term1 = np.sum(dlam ** 2 / lam)
    norms = np.sum(np.abs(dv) ** 2, axis=0)
    g = v.conj().T @ dv  # g[i, j] = <v_i | dv_j>
    term2 = 4 * np.sum(lam * (norms - np.abs(np.diag(g)) ** 2))
    pair = np.outer(lam, lam) / np.add.outer(lam, lam)
    off = np.abs(g) ** 2
    np.fill_diagonal(off, 0.0)
    term3 = 8 * np.sum(pair * off)
    return _clip(float(term1 + term2 - term3))


def qfi_spectral(rho_at: Callable[[float], np.ndarray], tau0: float, h: float | None = None,
                 cutoff: float = TOL.support_cutoff) -> QfiResult:
    if h is None:
        h = default_step(tau0)
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    if cutoff < 0:
        raise ValueError(f"support cutoff must be >= 0, got {cutoff}")
    value = qfi_from_stencil(rho_at(tau0 - h), rho_at(tau0), rho_at(tau0 + h), h, cutoff)
    return QfiResult(float(tau0), value, float(h), float(cutoff))


def sld_oracle(rho, drho, cutoff: float = TOL.support_cutoff) -> float:
    """``Tr(rho L^2)`` with ``rho L + L rho = 2 drho``, solved in the eigenbasis of ``rho``."""
    e = hermitian_eig(rho)
    w = e.eigenvalues
    d = e.eigenvectors.conj().T @ np.asarray(drho) @ e.eigenvectors
    s = np.add.outer(w, w)
    keep = s > cutoff
    return _clip(float(np.sum(2 * np.abs(d[keep]) ** 2 / s[keep])), "SLD QFI")


def sld_from_stencil(r_minus, r0, r_plus, h: float, cutoff: float = TOL.support_cutoff) -> float:
    return sld_oracle(r0, (np.asarray(r_plus) - np.asarray(r_minus)) / (2 * h), cutoff)


def stencil_qfi(r_minus, r0, r_plus, h: float, cutoff: float = TOL.support_cutoff) -> float:
    """Spectral QFI, falling back to the SLD form when the stencil straddles a crossing."""
    try:
        return qfi_from_stencil(r_minus, r0, r_plus, h, cutoff)
    except EigenCrossingError as exc:
        log.warning("%s; using the SLD form for this point", exc)
        return sld_from_stencil(r_minus, r0, r_plus, h, cutoff)


def pure_state_qfi(psi, dpsi) -> float:
    psi = np.asarray(psi)
    dpsi = np.asarray(dpsi)
    val = 4 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2)
    return _clip(float(val))
