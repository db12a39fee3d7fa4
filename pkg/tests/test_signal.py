import json

import numpy as np
import pytest
from scipy import stats

from cellfree.geometry import NetworkRealization
from cellfree.signal import (
    SignalBatch,
    StructuralError,
    ap_received,
    complex_normal,
    dbm_to_normalized_power,
    generate_pilots,
    sample_activity,
    sample_channels,
    synthesize_received,
)


def test_pilot_norm_mean():
    rng = np.random.default_rng(0)
    P = generate_pilots(100, 10_000, rng)
    assert np.mean(np.sum(np.abs(P) ** 2, axis=0)) == pytest.approx(1.0, abs=0.01)
    # per real dimension variance 1/(2 tau)
    assert np.var(P.real) == pytest.approx(1 / 200, rel=0.02)


def test_single_symbol_pilot_is_exponential():
    rng = np.random.default_rng(1)
    e = np.abs(generate_pilots(1, 20_000, rng)[0]) ** 2
    assert stats.kstest(e, "expon").pvalue > 0.01


def test_pilot_cross_correlation():
    rng = np.random.default_rng(2)
    tau = 50
    P = generate_pilots(tau, 2 * 20_000, rng)
    c = np.sum(P[:, ::2].conj() * P[:, 1::2], axis=0)
    assert abs(c.mean()) < 4 * np.sqrt(1 / tau / 20_000)
    assert np.mean(np.abs(c) ** 2) == pytest.approx(1 / tau, rel=0.05)


def test_activity_limits_and_rate():
    rng = np.random.default_rng(3)
    assert not sample_activity(0.0, 100, rng).any()
    assert sample_activity(1.0, 100, rng).all()
    assert abs(sample_activity(0.05, 10_000, rng).mean() - 0.05) <= 0.007
    with pytest.raises(ValueError):
        sample_activity(1.5, 3, rng)


def test_channel_covariance():
    rng = np.random.default_rng(4)
    G = np.stack([sample_channels([0.3], 2, rng)[0] for _ in range(20_000)])
    C = G.T @ G.conj() / len(G)
    assert np.allclose(C, 0.3 * np.eye(2), atol=0.015)


def test_noise_free_zero_signal():
    rng = np.random.default_rng(5)
    P = generate_pilots(10, 4, rng)
    Y = ap_received(P, np.zeros((4, 3), dtype=complex), 1e3, noise_enabled=False)
    assert np.all(Y == 0)


def test_noise_free_rank_one():
    rng = np.random.default_rng(6)
    tau, N, E, beta = 16, 4, 50.0, 0.2
    P = generate_pilots(tau, 3, rng)
    h = complex_normal(rng, N)
    X = np.zeros((3, N), dtype=complex)
    X[1] = np.sqrt(beta) * h
    Y = ap_received(P, X, E, noise_enabled=False)
    ref = np.sqrt(E * beta) * np.outer(P[:, 1], h)
    assert np.linalg.norm(Y - ref) / np.linalg.norm(ref) < 1e-12
    assert np.linalg.matrix_rank(Y) == 1


def test_noise_variance():
    rng = np.random.default_rng(7)
    P = generate_pilots(4, 2, rng)
    Y = ap_received(np.broadcast_to(P, (10_000, 4, 2)), np.zeros((10_000, 2, 1)), 1.0, rng)
    assert np.var(Y) == pytest.approx(1.0, abs=0.05)


def test_received_covariance_matches_model():
    rng = np.random.default_rng(8)
    tau, K, E, eps = 4, 6, 3.0, 0.4
    P = generate_pilots(tau, K, rng)
    betas = rng.uniform(0.2, 1.0, K)
    T = 20_000
    act = rng.uniform(size=(T, K)) < eps
    G = complex_normal(rng, (T, K, 1)) * np.sqrt(betas)[:, None]
    Y = ap_received(P, act[..., None] * G, E, rng)[..., 0]
    C = Y.T @ Y.conj() / T
    Z = eps * E * (P * betas) @ P.conj().T + np.eye(tau)
    assert np.linalg.norm(C - Z) / np.linalg.norm(Z) < 0.05


def test_shape_mismatch():
    with pytest.raises(StructuralError):
        ap_received(np.zeros((4, 3)), np.zeros((2, 1)), 1.0, noise_enabled=False)


def test_synthesize_per_ap():
    rng = np.random.default_rng(9)
    net = NetworkRealization([[0, 0], [3, 0]], [[0.5, 0], [2.5, 0], [1.5, 0]], 1, 1, 2.0, 1.0)
    P = generate_pilots(8, 3, rng)
    alpha = np.array([1, 0, 1], dtype=np.int8)
    batch = synthesize_received(net, P, alpha, 2, 10.0, rng, noise_enabled=False)
    for m in range(2):
        D = batch.served[m]
        assert np.allclose(batch.received[m], np.sqrt(10.0) * P[:, D] @ batch.signal(m))
        assert np.all(batch.signal(m)[alpha[D] == 0] == 0)
    assert isinstance(json.loads(batch.to_json()), dict)
    with pytest.raises(StructuralError):
        synthesize_received(net, P[:, :2], alpha, 2, 10.0, rng)
    assert isinstance(batch, SignalBatch)


def test_normalized_power():
    # 23 dBm over -169 dBm/Hz across 20 MHz (floor -95.99 dBm)
    expected = 23 + 169 - 10 * np.log10(20e6)
    assert 10 * np.log10(dbm_to_normalized_power(23, 20e6, -169)) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(119.0, abs=0.011)
