"""Cross-module invariant suite.

Every check returns a :class:`CheckResult`; ``run_suite`` collects them.  The
suite covers density matrices produced by each pipeline, completeness of every
Kraus set and unitarity of every propagator the package builds.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import method1, method2
from ._excitation import ExcitationBlocks
from .constants import TOL
from .exact_sim import QecSchedule, reduced_states
from .model import (Coherent, Fock, ModelParams, build_collective_hamiltonians,
                    build_full_hamiltonian, excitation_counts, hamiltonian_sparse, initial_density)
from .operators import Propagator, density_violations, partial_trace_field, unitarity_defect
from .qec import (apply_channel, collective_correction, majority_correction,
                  three_qubit_correction)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _density(name: str, rho) -> CheckResult:
    problems = density_violations(rho)
    return CheckResult(name, not problems, "; ".join(problems))


def _unitary(name: str, u) -> CheckResult:
    d = unitarity_defect(u)
    return CheckResult(name, d <= TOL.spectral, f"defect {d:.2e}")


def fock_params(n: int = 99, **kw) -> ModelParams:
    """Reference Fock-field point: three atoms, detuning 2, coupling 2."""
    return ModelParams(3, 2.5, 4.5, 2.0, Fock(n), **kw)


def coherent_params(s: int = 3, **kw) -> ModelParams:
    """Reference coherent-field point: alpha = 10, detuning -2, coupling 2."""
    return ModelParams(s, 2.5, 0.5, 2.0, Coherent(10.0), **kw)


def check_kraus_sets() -> Iterable[CheckResult]:
    sets = [("three-qubit", three_qubit_correction())]
    sets += [(f"majority s={s}", majority_correction(s)) for s in (3, 5, 7)]
    sets += [(f"collective s={s}", collective_correction(s)) for s in (1, 3, 5, 7, 9, 11)]
    for name, ch in sets:
        d = ch.completeness_defect()
        yield CheckResult(f"kraus completeness {name}", d <= TOL.structural, f"defect {d:.2e}")


def check_propagators() -> Iterable[CheckResult]:
    p = fock_params(n=20)
    for t in (0.1, 1.0, 7.3):
        yield _unitary(f"full propagator t={t}", Propagator(build_full_hamiltonian(p)).unitary(t))
        h_i, h_ii = build_collective_hamiltonians(p)
        yield _unitary(f"collective propagator t={t}", Propagator(h_i + h_ii).unitary(t))
    for basis in ("collective", "full"):
        eng = ExcitationBlocks(hamiltonian_sparse(p, basis), excitation_counts(p.s, basis), p.field_dim)
        for t in (0.01, 2.0):
            u = eng.unitary(t)
            d = max(unitarity_defect(b) for b in u)
            yield CheckResult(f"block propagators {basis} t={t}", d <= TOL.spectral, f"defect {d:.2e}")
    q = fock_params()
    for t in (0.003, 0.05, 0.5):
        yield _unitary(f"method1 c-number propagator t={t}", method1.collective_propagator(t, q).matrix)
    r = coherent_params()
    for eps in (0.005, 0.02, 0.3):
        xc = method2.x_coefficients(eps, method2.dressed_basis(r))
        yield _unitary(f"method2 single-atom propagator eps={eps}", xc.matrix)


def check_channel_outputs() -> Iterable[CheckResult]:
    rng = np.random.default_rng(7)
    for name, ch in (("three-qubit", three_qubit_correction()), ("collective s=5", collective_correction(5))):
        g = rng.normal(size=(ch.atom_dim, ch.atom_dim)) + 1j * rng.normal(size=(ch.atom_dim, ch.atom_dim))
        rho = g @ g.conj().T
        rho /= np.trace(rho)
        yield _density(f"channel output {name}", apply_channel(rho, ch))


def check_exact_states() -> Iterable[CheckResult]:
    p = fock_params(n_max=140)
    grid = np.linspace(0.0, 1.0, 11)
    for label, sched in (("uncorrected", None), ("eps=0.01", QecSchedule(0.01))):
        states, leak = reduced_states(p, sched, grid, "collective", check=False)
        bad = [f"t={t:.3g}: {'; '.join(v)}" for t, r in zip(grid, states) if (v := density_violations(r))]
        yield CheckResult(f"exact states {label}", not bad, "; ".join(bad[:3]))
        yield CheckResult(f"exact leakage {label}", leak <= TOL.leakage, f"max leakage {leak:.2e}")
    for label, q, basis in (("coherent", coherent_params(), "collective"),
                            ("full basis", fock_params(n=20, n_max=60), "full")):
        grid = np.linspace(0.0, 0.5, 6)
        states, leak = reduced_states(q, QecSchedule(0.01), grid, basis, check=False)
        bad = [f"t={t:.3g}: {'; '.join(v)}" for t, r in zip(grid, states) if (v := density_violations(r))]
        yield CheckResult(f"exact states {label}", not bad, "; ".join(bad[:3]))
    small = fock_params(n=6)
    rho = initial_density(small, "full")
    yield _density("initial joint state", rho)
    yield _density("initial reduced state", partial_trace_field(rho, small.dims("full")))


def check_method_states() -> Iterable[CheckResult]:
    p = fock_params()
    for t in (0.0, 0.01, 0.1, 0.4):
        yield _density(f"method1 uncorrected t={t}", method1.uncorrected_density(t, p))
    for eta, tau in ((0, 0.0), (10, 0.0), (100, 0.004), (500, 0.009)):
        yield _density(f"method1 corrected eta={eta} tau={tau}", method1.corrected_density(eta, 0.01, tau, p))
    r = coherent_params()
    for eps in (0.005, 0.01, 0.02):
        v = method2.total_transfer(eps, 3, r)
        d = v.trace_row_defect()
        yield CheckResult(f"method2 trace row eps={eps}", d <= TOL.structural, f"defect {d:.2e}")
        for t in (1.0, 10.0):
            yield _density(f"method2 code state eps={eps} t={t}",
                           method2.corrected_bloch(int(round(t / eps)), eps, 3, r))
    for s in (5, 7, 9):
        yield _density(f"method2 code state s={s}", method2.corrected_bloch(2000, 0.005, s, coherent_params(s)))
    yield _density("method2 partial period", method2.corrected_density(1.0025, 0.005, 3, r))


SUITE: tuple[Callable[[], Iterable[CheckResult]], ...] = (
    check_kraus_sets,
    check_propagators,
    check_channel_outputs,
    check_exact_states,
    check_method_states,
)


def run_suite(progress: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    results = []
    for group in SUITE:
        try:
            for res in group():
                results.append(res)
                if progress:
                    progress(res)
        except Exception as exc:  # a crash inside a group is itself a violation
            res = CheckResult(group.__name__, False, f"{type(exc).__name__}: {exc}")
            results.append(res)
            if progress:
                progress(res)
    return results


def summarize(results: list[CheckResult]) -> str:
    failed = [r for r in results if not r.passed]
    return f"{len(results) - len(failed)}/{len(results)} checks passed" + (
        "" if not failed else "; failing: " + ", ".join(r.name for r in failed))


__all__ = ["CheckResult", "run_suite", "summarize", "fock_params", "coherent_params"]
