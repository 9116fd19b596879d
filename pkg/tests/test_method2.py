import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from tcqfi import method1, method2
from tcqfi.constants import TOL
from tcqfi.model import Coherent, Fock, ModelParams
from tcqfi.operators import density_violations, unitarity_defect
from tcqfi.validation import coherent_params

P = coherent_params()
SX = np.array([[0, 1], [1, 0]], dtype=complex)


def _single_atom_h(p, n, phase=0.0):
    a = math.sqrt(n) * np.exp(1j * phase)
    sp_ = np.array([[0, 0], [1, 0]], dtype=complex)
    return (n * p.omega_c * np.eye(2) + 0.5 * p.omega_a * np.diag([-1.0, 1.0])
            + 0.5 * p.Omega * (a * sp_ + np.conj(a) * sp_.T))


@pytest.mark.parametrize("wa", [0.5, -0.7, 0.0, 3.0])
def test_dressed_basis_reconstruction(wa):
    p = ModelParams(3, 2.5, wa, 2.0, Coherent(10.0))
    db = method2.dressed_basis(p)
    assert abs(abs(db.c0) ** 2 + abs(db.c1) ** 2 - 1) < 1e-12
    assert db.Delta2 == pytest.approx(math.sqrt(100 * 4 + wa ** 2))
    assert db.E_plus == pytest.approx(100 * 2.5 + db.Delta2 / 2)
    assert db.E_minus == pytest.approx(100 * 2.5 - db.Delta2 / 2)
    h = _single_atom_h(p, 100)
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [db.E_minus, db.E_plus], atol=1e-12)
    v = np.array([db.c0, db.c1])
    np.testing.assert_allclose(h @ v, db.E_plus * v, atol=1e-10)


def test_dressed_basis_resonant():
    db = method2.dressed_basis(ModelParams(3, 2.5, 0.0, 2.0, Fock(100)))
    assert db.b == pytest.approx(1.0)
    assert db.c0 == pytest.approx(1 / math.sqrt(2)) and db.c1 == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("wa,bare", [(0.5, (0, 1)), (-0.5, (1, 0))])
def test_dressed_basis_decoupled_limit(wa, bare):
    p = ModelParams(3, 2.5, wa, 0.0, Fock(100))
    db = method2.dressed_basis(p)
    assert db.E_plus == pytest.approx(100 * 2.5 + abs(wa) / 2)
    assert db.E_minus == pytest.approx(100 * 2.5 - abs(wa) / 2)
    np.testing.assert_allclose([abs(db.c0), abs(db.c1)], bare, atol=1e-15)


def test_x_coefficients_identity_at_zero():
    xc = method2.x_coefficients(0.0, method2.dressed_basis(P))
    np.testing.assert_allclose(xc.matrix, np.eye(2), atol=1e-15)


@given(st.floats(0, 20))
@settings(max_examples=40, deadline=None)
def test_x_coefficients_unitary_and_expm(eps):
    xc = method2.x_coefficients(eps, method2.dressed_basis(P))
    assert unitarity_defect(xc.matrix) < TOL.structural
    assert abs(abs(xc.x1) ** 2 + abs(xc.x2) ** 2 - 1) < TOL.structural
    u = expm(-1j * _single_atom_h(P, 100) * eps)
    assert abs(abs(xc.x2) - abs(u[1, 0])) < 1e-9
    assert np.abs(xc.matrix - u).max() < 1e-8


@pytest.mark.parametrize("wa", [0.5, -0.5])
def test_x_coefficients_complex_amplitude(wa):
    p = ModelParams(3, 2.5, wa, 2.0, Coherent(10.0))
    for phase in (0.7, 2.0, -1.1):
        db = method2.dressed_basis(p, phase=phase)
        h = _single_atom_h(p, 100, phase)
        v = np.array([db.c0, db.c1])
        np.testing.assert_allclose(h @ v, db.E_plus * v, atol=1e-10)
        xc = method2.x_coefficients(0.01, db)
        assert np.abs(xc.matrix - expm(-1j * h * 0.01)).max() < 1e-9
        np.testing.assert_allclose(method2.total_transfer(0.01, 3, p, phase=phase).matrix,
                                   method2.transfer_by_embedding(0.01, 3, p, phase=phase), atol=1e-12)


def test_code_amplitudes_three_atoms_hand_expansion():
    xc = method2.x_coefficients(0.013, method2.dressed_basis(P))
    x1, x2, x3, x4 = xc.x1, xc.x2, xc.x3, xc.x4
    hand = np.array([[x1 ** 2 * x2, x3 ** 2 * x4], [x1 * x2 ** 2, x3 * x4 ** 2]])
    np.testing.assert_allclose(method2.code_amplitudes(2, 3, xc), hand, rtol=1e-14)
    hand3 = np.array([[x1 ** 3, x3 ** 3], [x2 ** 3, x4 ** 3]])
    np.testing.assert_allclose(method2.code_amplitudes(3, 3, xc), hand3, rtol=1e-14)


def test_transfer_matrix_identity_at_zero():
    xc = method2.x_coefficients(0.0, method2.dressed_basis(P))
    total = sum(method2.transfer_matrix(k, 0.0, 3, xc).matrix for k in (2, 3))
    np.testing.assert_allclose(total, np.eye(4), atol=1e-15)
    np.testing.assert_allclose(method2.total_transfer(0.0, 3, P).matrix, np.eye(4), atol=1e-15)


def test_transfer_matrix_k_range():
    xc = method2.x_coefficients(0.01, method2.dressed_basis(P))
    for k in (1, 4):
        with pytest.raises(ValueError):
            method2.transfer_matrix(k, 0.01, 3, xc)


@pytest.mark.parametrize("s,k", [(3, 2), (3, 3), (5, 4)])
def test_transfer_matrix_conjugation_oracle(s, k):
    xc = method2.x_coefficients(0.02, method2.dressed_basis(P))
    a = method2.code_amplitudes(k, s, xc)
    r0 = method2.GHZ_BLOCH
    img = a @ sum(r0[i] * method2.PAULI[i] for i in range(4)) @ a.conj().T
    expect = 0.5 * math.comb(s, k) * np.array([np.trace(img @ sb) for sb in method2.PAULI])
    np.testing.assert_allclose(method2.transfer_matrix(k, 0.02, s, xc).matrix @ r0, expect, atol=1e-14)


def test_transfer_matches_embedded_collective_construction():
    for s in (3, 5):
        q = coherent_params(s)
        for eps in (0.005, 0.02, 0.3):
            np.testing.assert_allclose(method2.total_transfer(eps, s, q).matrix,
                                       method2.transfer_by_embedding(eps, s, q), atol=1e-12)


@pytest.mark.parametrize("eps", [0.001, 0.005, 0.01, 0.02, 0.1, 0.5])
def test_total_transfer_structure(eps):
    v = method2.total_transfer(eps, 3, P)
    assert v.trace_row_defect() < TOL.structural
    assert v.off_block() < 1e-10
    rho = np.max(np.abs(np.linalg.eigvals(v.matrix[1:, 1:])))
    assert rho <= 1 + 1e-9


def test_total_transfer_rejects_even():
    with pytest.raises(ValueError):
        method2.total_transfer(0.01, 4, P)


def test_corrected_bloch_initial():
    np.testing.assert_allclose(method2.corrected_bloch(0, 0.01, 3, P), 0.5 * np.ones((2, 2)), atol=1e-15)
    with pytest.raises(ValueError):
        method2.corrected_bloch(-1, 0.01, 3, P)


def test_corrected_bloch_geometric_decay():
    eps = 0.01
    v = method2.total_transfer(eps, 3, P).matrix
    lam, vec = np.linalg.eig(v[1:, 1:])
    coef = np.linalg.solve(vec, method2.GHZ_BLOCH[1:])
    # eigen-expansion against the iterated matrix power
    for eta in (10, 1000, 4000):
        x = 2 * method2.corrected_bloch(eta, eps, 3, P)[0, 1].real
        assert x == pytest.approx((vec @ (coef * lam ** eta))[0].real, abs=1e-9)
    # the leading pair rotates, so compare envelopes over one rotation period
    lead = np.max(np.abs(lam))
    period = int(2 * np.pi / np.max(np.abs(np.angle(lam)))) + 1
    r = method2.GHZ_BLOCH.copy()
    x = []
    for _ in range(31000):
        r = v @ r
        x.append(r[1])
    x = np.abs(np.array(x))
    env = lambda start: x[start:start + period].max()
    assert env(30000 - period) / env(20000 - period) == pytest.approx(lead ** 10000, rel=2e-2)


@pytest.mark.parametrize("eps", [0.005, 0.01, 0.02])
def test_corrected_states_valid(eps):
    for eta in (1, 100, 2000):
        assert not density_violations(method2.corrected_bloch(eta, eps, 3, P))
    assert not density_violations(method2.corrected_density(1.0 + 0.37 * eps, eps, 3, P))


def test_coherent_ordering():
    t = np.linspace(1.0, 10.0, 10)
    q = {eps: np.array([method2.qfi_corrected(ti, eps, 3, P) for ti in t]) for eps in (0.005, 0.01, 0.02)}
    assert np.all(q[0.005] > q[0.01]) and np.all(q[0.01] > q[0.02])


def test_qfi_vs_atoms_scaling():
    from tcqfi.cli import fit_power_law
    pairs = method2.qfi_vs_atoms([3, 5, 7, 9], 0.005, 10.0, P)
    k, r2 = fit_power_law(pairs)
    assert k == pytest.approx(2.0, abs=0.15) and r2 > 0.99
    (_, q1), = method2.qfi_vs_atoms([1], 0.005, 10.0, P)
    q3 = pairs[0][1]
    assert q1 < q3 * (1 / 3) ** k


def test_doubling_interval_reduces_qfi_for_every_s():
    fine = method2.qfi_vs_atoms([3, 5, 7, 9], 0.005, 10.0, P)
    coarse = method2.qfi_vs_atoms([3, 5, 7, 9], 0.01, 10.0, P)
    for (_, a), (_, b) in zip(fine, coarse):
        assert a > b


def test_qfi_vs_atoms_input_checks():
    with pytest.raises(ValueError):
        method2.qfi_vs_atoms([3], 0.003, 10.0, P)
    with pytest.raises(ValueError):
        method2.qfi_vs_atoms([4], 0.005, 10.0, P)


def test_phase_pi_of_amplitude_leaves_qfi_unchanged():
    a = method2.qfi_corrected(10.0, 0.005, 3, P)
    b = method2.qfi_corrected(10.0, 0.005, 3, P, phase=math.pi)
    assert b == pytest.approx(a, rel=1e-9)


def test_random_phase_of_amplitude_leaves_qfi_unchanged(rng):
    # Stated design property; see the decisions ledger for why it cannot hold.
    a = method2.qfi_corrected(10.0, 0.005, 3, P)
    for phase in rng.uniform(0, 2 * math.pi, 3):
        assert method2.qfi_corrected(10.0, 0.005, 3, P, phase=phase) == pytest.approx(a, rel=1e-9)


def test_corner_agrees_with_method1():
    # Stated shared-validity bound; see the decisions ledger for the measured gap.
    p = ModelParams(3, 2.5, 4.5, 2.0, Fock(100))
    worst = 0.0
    for eps in (0.005, 0.01, 0.05):
        for total in (1.0, 5.0, 10.0):
            eta = int(round(total / eps))
            m1 = abs(method1.corrected_corner(eta, eps, 0.0, p))
            m2 = abs(method2.corrected_bloch(eta, eps, 3, p)[0, 1])
            worst = max(worst, abs(m1 - m2))
    assert worst < 5e-3
