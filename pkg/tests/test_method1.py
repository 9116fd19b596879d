import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tcqfi import method1
from tcqfi.constants import TOL
from tcqfi.errors import ApproximationBreakdown
from tcqfi.exact_sim import QecSchedule, error_rate_empirical, reduced_states, simulate
from tcqfi.model import Coherent, Fock, ModelParams
from tcqfi.operators import density_violations, unitarity_defect
from tcqfi.validation import fock_params

P = fock_params()


def test_chi_at_zero():
    assert method1.chi(0.0, P) == 0


def test_chi_resonant():
    p = ModelParams(3, 2.0, 2.0, 2.0, Fock(99))
    g = math.sqrt(100) * 2.0
    for t in (0.03, 0.11, 0.4):
        assert method1.chi(t, p) == pytest.approx(math.sin(g * t / 2) ** 2)
    assert method1.chi(math.pi / g, p) == pytest.approx(1.0)


def test_chi_small_time_expansion():
    t = 1e-4
    assert method1.chi(t, P) == pytest.approx(100 * 4 * t ** 2 / 4, rel=1e-5)
    # P(>= 1 flip) = 1 - chi^3 - (1 - chi)^3 ~ 3 chi gives the linear rate law
    c = method1.chi(t, P)
    assert (1 - c ** 3 - (1 - c) ** 3) / t == pytest.approx(method1.error_rate_law(t, P), rel=1e-3)


@given(st.floats(0, 50), st.floats(-5, 5))
@settings(max_examples=50, deadline=None)
def test_chi_bounded(t, delta):
    p = P.with_delta(delta)
    r = method1.rabi_params(p)
    assert r.Delta >= abs(delta)
    assert 0 <= method1.chi(t, p) <= 1


def test_printed_chi_variant_leaves_unit_interval():
    vals = [method1.chi(t, P, printed=True) for t in np.linspace(0, 1, 50)]
    assert min(vals) < 0


def test_fock_only():
    with pytest.raises(TypeError):
        method1.chi(0.1, ModelParams(3, 2.5, 4.5, 2.0, Coherent(10.0)))


@pytest.mark.parametrize("t", [0.003, 0.05, 1.0, 17.0])
def test_propagator_unitary_and_detuning_partner(t):
    u = method1.collective_propagator(t, P)
    assert unitarity_defect(u.matrix) < TOL.spectral
    v = method1.collective_propagator(t, P.with_delta(-P.delta()))
    # level flip k -> s-k maps delta to -delta; the real generator adds the conjugation
    assert abs(u.u_last - v.u_first) < TOL.spectral
    assert abs(u.u_last - np.conj(u.u_first)) < TOL.spectral


def test_default_effective_photon_number_matches_chi():
    for t in (0.01, 0.07, 0.3):
        u = method1.collective_propagator(t, P)
        assert abs(u.u_first) ** 2 == pytest.approx((1 - method1.chi(t, P)) ** 3, rel=1e-10)


def test_uncorrected_entries_at_zero():
    rho = method1.uncorrected_entries(0.0, P)
    expect = np.zeros((4, 4))
    expect[np.ix_([0, 3], [0, 3])] = 0.5
    np.testing.assert_allclose(rho, expect, atol=1e-15)


@pytest.mark.parametrize("eps", [0.0, 0.004, 0.07, 0.2, 3.0])
def test_uncorrected_entries_are_states(eps):
    rho = method1.uncorrected_entries(eps, P)
    assert abs(np.trace(rho) - 1) < TOL.structural
    assert not density_violations(rho)


def test_uncorrected_entries_three_atoms_only():
    with pytest.raises(ValueError):
        method1.uncorrected_entries(0.1, fock_params().__class__(5, 2.5, 4.5, 2.0, Fock(99)))


def _diag_deviation(n):
    p = fock_params(n=n)
    t = np.linspace(0.0, 0.2, 41)
    states, _ = reduced_states(p, None, t)
    return max(np.abs(np.diag(r).real - method1.s_atom_diagonal(3, ti, p)).max()
               for r, ti in zip(states, t))


def test_diagonal_matches_exact_populations():
    # Stated bound for n = 99; see the decisions ledger for the measured value.
    assert _diag_deviation(99) <= 2e-3


def test_diagonal_deviation_shrinks_with_photon_number():
    assert _diag_deviation(399) < 0.5 * _diag_deviation(99)


def test_corner_initial_value():
    assert method1.corrected_corner(0, 0.01, 0.0, P) == pytest.approx(0.5)


def test_corner_magnitude_non_increasing():
    mags = [abs(method1.corrected_corner(eta, 0.01, 0.0, P)) for eta in range(0, 400, 10)]
    assert np.all(np.diff(mags) <= 1e-15)


def test_corner_matches_exact_after_100_corrections():
    p = fock_params(n_max=140)
    (rho,), _ = reduced_states(p, QecSchedule(0.01), [1.0])
    assert abs(rho[0, 3] - method1.corrected_corner(100, 0.01, 0.0, p)) < 5e-3


def test_corner_rejects_even_atoms():
    with pytest.raises(ValueError):
        method1.corrected_corner(1, 0.01, 0.0, ModelParams(4, 2.5, 4.5, 2.0, Fock(99)))


def test_corrected_density_without_corrections_is_uncorrected():
    eps = 0.013
    np.testing.assert_allclose(method1.corrected_density(0, eps, eps, P),
                               method1.uncorrected_entries(eps, P), atol=1e-14)


@pytest.mark.parametrize("eta,tau", [(0, 0.0), (10, 0.0), (100, 0.004), (500, 0.009)])
def test_corrected_density_is_state(eta, tau):
    assert not density_violations(method1.corrected_density(eta, 0.01, tau, P))


def test_corrected_density_refuses_large_violation(monkeypatch):
    monkeypatch.setattr(method1, "corrected_corner", lambda *a, **k: 0.6)
    with pytest.raises(ApproximationBreakdown):
        method1.corrected_density(3, 0.01, 0.0, P)


def test_corrected_qfi_tracks_heisenberg_at_small_interval():
    for t in (0.1, 0.5, 1.0):
        assert method1.qfi_corrected(t, 1e-4, P) / (9 * t ** 2) >= 0.9


def test_long_time_corner_decays_and_qfi_stalls():
    eps = 0.01
    assert abs(method1.corrected_corner(5000, eps, 0.0, P)) < 1e-6
    assert method1.qfi_corrected(50.0, eps, P) < 1e-3 * 9 * 50.0 ** 2


def _brute_diagonal(s, c):
    out = np.zeros(s + 1)
    for start in (0, 1):
        for flips in itertools.product((0, 1), repeat=s):
            prob = np.prod([c if f else 1 - c for f in flips])
            excited = sum((start ^ f) for f in flips)
            out[excited] += 0.5 * prob
    return out


@pytest.mark.parametrize("s", range(1, 7))
def test_diagonal_brute_force(s, rng):
    for c in rng.uniform(0, 1, 5):
        np.testing.assert_allclose(method1._binomial_diagonal(s, c), _brute_diagonal(s, c), atol=1e-12)


def test_diagonal_at_zero_time():
    d = method1.s_atom_diagonal(5, 0.0, P)
    np.testing.assert_allclose(d, [0.5, 0, 0, 0, 0, 0.5])


def test_diagonal_three_atoms_matches_entries():
    np.testing.assert_allclose(method1.s_atom_diagonal(3, 0.03, P),
                               np.diag(method1.uncorrected_entries(0.03, P)).real, atol=1e-15)


@pytest.mark.parametrize("s", range(1, 13))
def test_diagonal_sums_to_one(s):
    assert abs(method1.s_atom_diagonal(s, 0.37, P).sum() - 1) < 1e-12


def test_error_rate_examples():
    assert method1.error_rate_law(0.01, P) == pytest.approx(3.0)
    assert method1.error_rate_law(0.0, P) == 0
    with pytest.raises(ValueError):
        method1.error_rate_law(-1.0, P)


@pytest.mark.parametrize("eps", [1e-3, 4e-3, 1e-2])
def test_error_rate_matches_exact(eps):
    assert method1.error_rate_law(eps, P) == pytest.approx(error_rate_empirical(P, eps), rel=0.05)
    assert method1.error_rate(eps, P) == pytest.approx(error_rate_empirical(P, eps), rel=0.05)


def test_printed_corner_form_is_diagnostic_only():
    # does not reduce to 1/2 as eps -> 0
    assert abs(method1.p14_printed(1e-6, P) - 0.5) > 1e-2


def test_uncorrected_qfi_matches_exact_before_collapse():
    t = np.linspace(0.002, 0.05, 25)
    exact = simulate(P, None, t).qfi
    approx = np.array([method1.qfi_uncorrected(ti, P) for ti in t])
    assert np.max(np.abs(approx - exact) / exact) < 0.05
