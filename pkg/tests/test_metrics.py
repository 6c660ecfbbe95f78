import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfpkit.core import canonical_transfer, computational_submatrix
from qfpkit.metrics import (
    HADAMARD,
    MetricError,
    fidelity,
    gate_metrics,
    gauge_fix,
    large_B_limit_check,
    phi11,
    saturation_channels,
    splitter_ratios,
    success,
)

THETA = 0.8283


def random_unitary(rng, n=2):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_self_fidelity():
    assert fidelity(HADAMARD, HADAMARD) == pytest.approx(1.0, abs=1e-15)


def test_global_phase_invariance():
    rng = np.random.default_rng(5)
    for _ in range(20):
        U = random_unitary(rng)
        phi, psi = rng.uniform(0, 2 * math.pi, 2)
        assert fidelity(np.exp(1j * phi) * U, np.exp(1j * psi) * U) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(phi=st.floats(0, 2 * math.pi), psi=st.floats(0, 2 * math.pi),
       seed=st.integers(0, 2**32 - 1))
def test_fidelity_phase_invariance_arbitrary_W(phi, psi, seed):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    U = random_unitary(rng)
    base = fidelity(W, U)
    assert 0.0 <= base <= 1.0 + 1e-15
    assert fidelity(np.exp(1j * phi) * W, np.exp(1j * psi) * U) == pytest.approx(base, abs=1e-13)


def test_cyclic_trace_property():
    rng = np.random.default_rng(8)
    for _ in range(20):
        W = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        U = random_unitary(rng)
        assert fidelity(W, U) == pytest.approx(fidelity(U.conj().T @ W, np.eye(2)), abs=1e-13)


def test_unmodulated_hadamard_config_scores_half():
    # theta = 0 with the pi step leaves W = diag(1, -1), not the identity
    W = computational_submatrix(canonical_transfer(6, math.pi, 0.0))
    assert fidelity(W, HADAMARD) == pytest.approx(0.5, abs=1e-15)
    assert fidelity(np.eye(2), HADAMARD) == pytest.approx(0.0, abs=1e-15)


def test_zero_matrix_rejected():
    with pytest.raises(MetricError):
        fidelity(np.zeros((2, 2)), HADAMARD)


def test_non_unitary_target_rejected():
    with pytest.raises(MetricError):
        fidelity(np.eye(2), np.ones((2, 2)))


def test_hadamard_operating_point(hadamard_transfer):
    m = gate_metrics(hadamard_transfer)
    assert m.fidelity == pytest.approx(0.999999, abs=1e-6)
    assert m.modified_success == pytest.approx(0.9747, abs=5e-4)
    # B=6: P and P_tilde differ at the 1e-4 level
    assert 1e-5 < m.modified_success - m.success < 5e-4


def test_four_channel_gap():
    p, pt, eta = success(canonical_transfer(4, math.pi, THETA))
    assert pt == pytest.approx(0.9696, abs=5e-4)
    assert pt - p == pytest.approx(7e-3, abs=1e-3)


def test_identity_success():
    p, pt, eta = success(canonical_transfer(6, 0.0, 0.0))
    assert (p, pt, eta) == (1.0, 1.0, 1.0)


def test_eta_identity_exact(hadamard_transfer):
    p, pt, eta = success(hadamard_transfer)
    assert abs(eta * pt - p) < 1e-14


@settings(max_examples=200, deadline=None)
@given(theta=st.floats(0.0, 1.2), alpha=st.floats(0.0, 2 * math.pi),
       B=st.sampled_from([2, 4, 6, 8, 12]))
def test_success_ordering(theta, alpha, B):
    v = canonical_transfer(B, alpha, theta)
    p, pt, eta = success(v)
    assert p <= pt + 1e-15
    assert pt <= 1.0 + 1e-12
    assert eta <= 1.0 + 1e-12
    assert abs(eta * pt - p) < 1e-14


def test_thousand_random_configs_P_le_P_tilde():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        v = canonical_transfer(int(rng.choice([2, 4, 6, 8])), rng.uniform(0, 2 * math.pi),
                               rng.uniform(0, 1.2))
        p, pt, _ = success(v)
        assert p <= pt + 1e-15


def test_eta_unity_for_wide_all_pass():
    _, _, eta = success(canonical_transfer(40, 0.0, THETA))
    assert eta == pytest.approx(1.0, abs=1e-15)


def test_hadamard_ratios_balanced(hadamard_transfer):
    r = splitter_ratios(computational_submatrix(hadamard_transfer))
    for value in (r.R_01, r.R_10, r.T_00, r.T_11):
        assert value == pytest.approx(0.9747 / 2, abs=1e-3)
    assert abs(r.R_01 - r.R_10) < 1e-12
    assert abs(r.T_00 - r.T_11) < 1e-12
    assert r.R_01 + r.T_11 <= 1 + 1e-12


def test_ratios_without_modulation():
    r = splitter_ratios(computational_submatrix(canonical_transfer(6, math.pi, 0.0)))
    assert (r.T_00, r.T_11, r.R_01, r.R_10) == (1.0, 1.0, 0.0, 0.0)


def test_ratios_all_pass_large_B():
    r = splitter_ratios(computational_submatrix(canonical_transfer(40, 0.0, THETA)))
    assert abs(r.T_00 - 1) < 1e-10 and abs(r.T_11 - 1) < 1e-10
    assert r.R_01 < 1e-10 and r.R_10 < 1e-10


def test_ratios_dimension_check():
    with pytest.raises(MetricError):
        splitter_ratios(np.eye(3))


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(0.0, 1.2), alpha=st.floats(0.0, 2 * math.pi), B=st.sampled_from([2, 4, 6, 8]))
def test_canonical_ratio_symmetry(theta, alpha, B):
    r = splitter_ratios(computational_submatrix(canonical_transfer(B, alpha, theta)))
    assert abs(r.R_01 - r.R_10) < 1e-12
    assert abs(r.T_00 - r.T_11) < 1e-12


def test_large_B_limit_sequence():
    rows = large_B_limit_check(math.pi, THETA, list(range(2, 42, 2)))
    gaps = [abs(r.gap) for r in rows]
    assert all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))
    threshold = saturation_channels(THETA)
    assert all(abs(r.gap) < 1e-10 for r in rows if r.B >= threshold)
    assert rows[1].B == 4 and rows[1].gap == pytest.approx(7e-3, abs=1e-3)


def test_large_B_limit_without_modulation():
    assert all(r.gap == 0.0 for r in large_B_limit_check(math.pi, 0.0, [2, 4, 8]))


def test_large_B_limit_input_checks():
    with pytest.raises(MetricError):
        large_B_limit_check(math.pi, THETA, [3, 4])
    with pytest.raises(MetricError):
        large_B_limit_check(math.pi, THETA, [6, 4])


def test_gauge_fix_and_invariant_phase():
    rng = np.random.default_rng(3)
    W = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    G = gauge_fix(W)
    assert np.allclose(G[0].imag, 0) and np.allclose(G[:, 0].imag, 0)
    assert np.all(G[0].real >= 0) and np.all(G[:, 0].real >= 0)
    assert np.allclose(np.abs(G), np.abs(W))
    assert np.angle(G[1, 1]) % (2 * math.pi) == pytest.approx(phi11(W), abs=1e-12)


def test_gauge_fix_leaves_hadamard_block(hadamard_transfer):
    W = computational_submatrix(hadamard_transfer)
    assert np.allclose(gauge_fix(W), W, atol=1e-15)
    assert phi11(W) == pytest.approx(math.pi, abs=1e-12)
