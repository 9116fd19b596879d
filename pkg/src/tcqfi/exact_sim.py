"""Exact atom-field trajectories with periodic majority-vote correction.

The joint state evolves under the full Hamiltonian; every ``interval`` the
correction channel (field identity) is applied; the field is traced out at the
requested times and the QFI with respect to the detuning is evaluated by
running three trajectories at ``delta - h``, ``delta``, ``delta + h``.  Detuning
moves ``omega_a`` with ``omega_c`` fixed.

Frames
------
``frame="cavity"`` (default) applies the ideal correction in the frame that
co-rotates with the cavity, i.e. the lab-frame Kraus operators are
``D(t) K D(t)^dagger`` with ``D(t) = exp(-i omega_c t n_exc)``.  Because
``omega_c (a^dagger a + n_exc)`` commutes with the Hamiltonian this is the same
as evolving under the Hamiltonian minus that term and applying plain ``K``,
which is what the code does.  ``frame="lab"`` applies plain ``K`` to the lab
state; the fast ``omega_c`` phases between the atomic levels then scramble the
coherences at every correction.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sp

from ._excitation import ExcitationBlocks
from .constants import TOL
from .errors import InvariantViolation, TruncationError
from .model import (Basis, ModelParams, codeword_indices, excitation_counts, field_state,
                    ghz_state, hamiltonian_sparse, total_excitation)
from .operators import density_violations
from .qec import correction_for_basis
from .qfi import default_step, stencil_qfi

log = logging.getLogger(__name__)

Frame = Literal["cavity", "lab"]


@dataclass(frozen=True)
class QecSchedule:
    interval: float
    frame: Frame = "cavity"

    def __post_init__(self):
        if not self.interval > 0:
            raise ValueError(f"correction interval must be positive, got {self.interval}")
        if self.frame not in ("cavity", "lab"):
            raise ValueError(f"unknown frame {self.frame!r}")

    def split(self, t: float) -> tuple[int, float]:
        """``(eta, tau)`` with ``t = eta * interval + tau`` and ``0 <= tau < interval``.

        Times within a relative ``1e-9`` of a multiple count as exact multiples.
        """
        if t < 0:
            raise ValueError(f"time must be >= 0, got {t}")
        q = t / self.interval
        eta = int(math.floor(q + 1e-9))
        tau = t - eta * self.interval
        if tau < 1e-9 * self.interval:
            tau = 0.0
        return eta, tau


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    qfi: np.ndarray
    code_population: np.ndarray
    corner_coherence: np.ndarray
    max_leakage: float = 0.0

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.qfi) == len(self.code_population) == len(self.corner_coherence) == n):
            raise ValueError("trajectory columns differ in length")


@dataclass
class _Run:
    """One trajectory at fixed parameters."""

    p: ModelParams
    basis: Basis
    frame: Frame

    def __post_init__(self):
        p = self.p
        h = hamiltonian_sparse(p, self.basis)
        if self.frame == "cavity":
            h = h - p.omega_c * sp.diags(total_excitation(p, self.basis).astype(float))
        self.exc = excitation_counts(p.s, self.basis)
        self.engine = ExcitationBlocks(h, self.exc, p.field_dim)
        self.psi0 = np.kron(ghz_state(p.s, self.basis), field_state(p))

    def lab_phase(self, t: float) -> np.ndarray:
        """Entrywise factor taking the reduced state back to the lab frame."""
        if self.frame == "lab":
            return np.ones((len(self.exc), len(self.exc)))
        ph = np.exp(-1j * self.p.omega_c * t * self.exc)
        return np.outer(ph, ph.conj())


def _check_state(rho_s, t, what="reduced atomic state"):
    problems = density_violations(rho_s)
    if problems:
        raise InvariantViolation(f"{what} at t={t:.6g}: " + "; ".join(problems))


def reduced_states(p: ModelParams, sched: QecSchedule | None, t_grid: Sequence[float],
                   basis: Basis = "collective", check: bool = True):
    """Lab-frame reduced atomic states along ``t_grid`` and the largest leakage seen."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0):
        raise ValueError("time grid must be ascending")
    run = _Run(p, basis, sched.frame if sched else "cavity")
    eng = run.engine
    out = []
    max_leak = 0.0
    if sched is None:
        v0 = eng.vector(run.psi0)
        for t in t_grid:
            v = eng.evolve_vector(v0, eng.unitary(t))
            leak = eng.vector_leakage(v)
            max_leak = max(max_leak, leak)
            if leak > TOL.leakage:
                raise TruncationError(f"population {leak:.3e} beyond n_max={p.n_max} at t={t:.6g}")
            rho_s = eng.reduced_from_vector(v) * run.lab_phase(t)
            if check:
                _check_state(rho_s, t)
            out.append(rho_s)
        return out, max_leak

    nz = correction_for_basis(p.s, basis).nonzeros()
    st = eng.pure_state(run.psi0)
    u_eps = eng.unitary(sched.interval)
    done = 0
    for t in t_grid:
        eta, tau = sched.split(t)
        while done < eta:
            st = eng.apply_kraus(eng.evolve(st, u_eps), nz)
            done += 1
            leak = eng.leakage(st)
            max_leak = max(max_leak, leak)
            if leak > TOL.leakage:
                raise TruncationError(
                    f"population {leak:.3e} beyond n_max={p.n_max} at t={done * sched.interval:.6g}; "
                    "corrections add excitations without removing photons, raise n_max"
                )
            tr = eng.trace(st)
            if check and abs(tr - 1) > TOL.structural:
                raise InvariantViolation(f"joint trace {tr:.12g} after correction {done}")
        here = eng.evolve(st, eng.unitary(tau)) if tau > 0 else st
        rho_s = eng.reduced_atomic(here) * run.lab_phase(t)
        if check:
            _check_state(rho_s, t)
        out.append(rho_s)
    return out, max_leak


def _job(args):
    return reduced_states(*args)


def simulate(p: ModelParams, sched: QecSchedule | None, t_grid: Sequence[float],
             basis: Basis = "collective", h: float | None = None,
             cutoff: float = TOL.support_cutoff, workers: int = 1, check: bool = True) -> Trajectory:
    """Exact QFI trajectory with respect to the detuning."""
    t_grid = np.asarray(t_grid, dtype=float)
    delta = p.delta()
    h = default_step(delta) if h is None else h
    params = [p.with_delta(delta - h), p, p.with_delta(delta + h)]
    jobs = [(q, sched, t_grid, basis, check) for q in params]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, 3)) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    (rm, _), (r0, leak), (rp, _) = results
    i0, i1 = codeword_indices(p.s, basis)
    qfi = np.array([stencil_qfi(a, b, c, h, cutoff) for a, b, c in zip(rm, r0, rp)])
    pop = np.array([(r[i0, i0] + r[i1, i1]).real for r in r0])
    corner = np.array([r[i0, i1] for r in r0])
    return Trajectory(t_grid, qfi, pop, corner, leak)


def error_rate_empirical(p: ModelParams, eps: float, basis: Basis = "collective") -> float:
    """``(1 - P_code(eps)) / eps`` after one uncorrected interval from the GHZ state."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    (rho_s,), _ = reduced_states(p, None, [eps], basis)
    i0, i1 = codeword_indices(p.s, basis)
    return float((1 - (rho_s[i0, i0] + rho_s[i1, i1]).real) / eps)
