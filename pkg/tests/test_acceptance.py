"""Acceptance criteria, one PASS/FAIL line each.

Run inside the test suite (``pytest tests/test_acceptance.py``) or standalone
(``python tests/test_acceptance.py``).  Tolerances are the stated ones; a
criterion that the physics does not meet prints FAIL with the measured value.
"""
import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import LONG_GRID, coherent_exact_run  # noqa: E402
from tcqfi import method1, method2  # noqa: E402
from tcqfi.cli import fit_power_law  # noqa: E402
from tcqfi.exact_sim import error_rate_empirical, simulate  # noqa: E402
from tcqfi.operators import Propagator, random_density, random_hermitian  # noqa: E402
from tcqfi.qec import apply_channel, majority_correction, three_qubit_correction  # noqa: E402
from tcqfi.qfi import qfi_spectral, sld_from_stencil  # noqa: E402
from tcqfi.validation import fock_params, coherent_params, run_suite, summarize  # noqa: E402


def criterion_1():
    t = 0.01
    f = simulate(fock_params(), None, [t]).qfi[0]
    ratio = f / t ** 2
    return abs(ratio / 9 - 1) <= 0.01, f"QFI/t^2 at t={t}: {ratio:.5f} (target 9 within 1%)"


def criterion_2():
    p = fock_params()
    eps = np.linspace(1e-3, 1e-2, 10)
    rate = np.array([error_rate_empirical(p, e) for e in eps])
    fit = stats.linregress(eps, rate)
    target = p.s / 4 * (p.field_init.n + 1) * p.Omega ** 2
    r2 = fit.rvalue ** 2
    ok = abs(fit.slope / target - 1) <= 0.05 and r2 > 0.999
    return ok, f"slope {fit.slope:.2f} vs {target:.0f} ({100 * abs(fit.slope / target - 1):.2f}%), r^2 {r2:.6f}"


def criterion_3():
    p = coherent_params()
    eps_list = (0.02, 0.01, 0.005)
    q = [method2.qfi_corrected(10.0, e, 3, p) for e in eps_list]
    ordered = q[0] < q[1] < q[2]
    floor = q[2] >= 0.6 * 900
    exact = [coherent_exact_run(e).qfi[-1] for e in eps_list]
    detail = ("method II QFI(t=10) for eps=0.02,0.01,0.005: " + ", ".join(f"{v:.4g}" for v in q)
              + f"; eps=0.005 at {q[2] / 900:.1%} of 9t^2"
              + "; exact simulation (information): " + ", ".join(f"{v:.4g}" for v in exact))
    return ordered and floor, detail


def criterion_4():
    pairs = method2.qfi_vs_atoms([3, 5, 7, 9], 0.005, 10.0, coherent_params())
    k, r2 = fit_power_law(pairs)
    return abs(k - 2) <= 0.15 and r2 > 0.99, f"exponent {k:.4f}, r^2 {r2:.5f}"


def criterion_5a():
    p = fock_params()
    t = np.linspace(0.0, 0.2, 401)[1:]
    exact = simulate(p, None, t).qfi
    stop = int(np.flatnonzero(np.diff(exact) < 0)[0]) + 1  # first local maximum
    approx = np.array([method1.qfi_uncorrected(ti, p) for ti in t[:stop]])
    dev = np.max(np.abs(approx - exact[:stop]) / exact[:stop])
    return dev < 0.05, f"method I vs exact (uncorrected), t <= {t[stop - 1]:.4f}: max rel dev {dev:.2%}"


def criterion_5b():
    p = coherent_params()
    tr = coherent_exact_run(0.005)
    t = LONG_GRID[1:]
    approx = np.array([method2.qfi_corrected(ti, 0.005, 3, p) for ti in t])
    exact = tr.qfi[1:]
    rel = np.abs(approx - exact) / exact
    worst = int(np.argmax(rel))
    return rel.max() <= 0.10, (f"method II vs exact (eps=0.005), t in (0, 10]: max rel dev {rel.max():.2%} "
                               f"at t={t[worst]:g} (method II {approx[worst]:.4g}, exact {exact[worst]:.4g})")


def _brute_diagonal(s, c):
    out = np.zeros(s + 1)
    for start in (0, 1):
        for flips in itertools.product((0, 1), repeat=s):
            prob = np.prod([c if f else 1 - c for f in flips])
            out[sum(start ^ f for f in flips)] += 0.5 * prob
    return out


def criterion_6():
    rng = np.random.default_rng(6)
    worst_qfi = 0.0
    for _ in range(100):
        prop = Propagator(random_hermitian(4, rng))
        rho0 = random_density(4, rng)
        fam = lambda tau: prop.unitary(tau) @ rho0 @ prop.unitary(tau).conj().T
        h = 1e-5
        f = qfi_spectral(fam, 0.3, h).value
        g = sld_from_stencil(fam(0.3 - h), fam(0.3), fam(0.3 + h), h)
        worst_qfi = max(worst_qfi, abs(f - g) / max(g, 1e-300))
    worst_diag = max(np.abs(method1._binomial_diagonal(s, c) - _brute_diagonal(s, c)).max()
                     for s in range(1, 7) for c in rng.uniform(0, 1, 5))
    a, b = majority_correction(3), three_qubit_correction()
    worst_qec = 0.0
    for i in range(8):
        for j in range(8):
            e = np.zeros((8, 8))
            e[i, j] = 1
            worst_qec = max(worst_qec, np.abs(apply_channel(e, a) - apply_channel(e, b)).max())
    off = max(method2.total_transfer(eps, 3, coherent_params()).off_block()
              for eps in (0.001, 0.005, 0.01, 0.02, 0.1))
    ok = worst_qfi < 1e-6 and worst_diag <= 1e-12 and worst_qec <= 1e-12 and off < 1e-10
    return ok, (f"spectral vs SLD rel {worst_qfi:.1e}; diagonal vs enumeration {worst_diag:.1e}; "
                f"majority vs three-qubit {worst_qec:.1e}; V off-block {off:.1e}")


def criterion_7():
    results = run_suite()
    return all(r.passed for r in results), summarize(results)


CRITERIA = [("1", criterion_1), ("2", criterion_2), ("3", criterion_3), ("4", criterion_4),
            ("5a", criterion_5a), ("5b", criterion_5b), ("6", criterion_6), ("7", criterion_7)]


def _line(name, ok, detail, seconds):
    return f"CRITERION {name}: {'PASS' if ok else 'FAIL'} ({seconds:.1f}s) {detail}"


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, fn, capsys):
    start = time.perf_counter()
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(name, ok, detail, time.perf_counter() - start))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for name, fn in CRITERIA:
        start = time.perf_counter()
        ok, detail = fn()
        failed += not ok
        print(_line(name, ok, detail, time.perf_counter() - start), flush=True)
    sys.exit(1 if failed else 0)
