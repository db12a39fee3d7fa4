import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellfree.analysis import converged_theta, error_probability
from cellfree.detection import (
    DetectionStats,
    FusionWeights,
    UncoveredDevice,
    empirical_error_rates,
    fuse_decide,
    simplex_grid,
    weights_equal,
    weights_optimal,
    weights_smallcell,
    write_detection_csv,
)
from cellfree.experiments import ExperimentConfig
from cellfree.geometry import Disk, PathLossModel, path_loss_beta, sample_ppp
from cellfree.special import DomainError


# fusion rule

def test_single_ap_above_threshold():
    assert fuse_decide({4: 2.0}, {4: 1.0}, weights_equal([4])) == 1
    assert fuse_decide({4: 0.5}, {4: 1.0}, weights_equal([4])) == 0


def test_tie_is_active():
    w = weights_equal([0, 1])
    assert fuse_decide({0: 3.0, 1: 1.0}, {0: 2.0, 1: 2.0}, w) == 1


def test_degenerate_weights_reduce_to_single_ap_rule():
    rng = np.random.default_rng(0)
    mu, nu = rng.exponential(size=(2, 500)), rng.exponential(size=(2, 500))
    w = FusionWeights((0, 1), np.array([1.0, 0.0]))
    assert np.array_equal(fuse_decide(mu, nu, w), (mu[0] >= nu[0]).astype(np.int8))


def test_missing_statistics_is_structural_error():
    w = weights_equal([0, 1, 2])
    with pytest.raises(KeyError):
        fuse_decide({0: 1.0, 1: 1.0}, {0: 1.0, 1: 1.0, 2: 1.0}, w)
    with pytest.raises(KeyError):
        fuse_decide(np.ones((2, 5)), np.ones((2, 5)), w)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.floats(1e-6, 1e6), st.integers(0, 2**31))
def test_decisions_invariant_under_common_rescaling(M, c, seed):
    rng = np.random.default_rng(seed)
    mu, nu = rng.exponential(size=(M, 64)), rng.exponential(size=(M, 64))
    w = FusionWeights(tuple(range(M)), rng.dirichlet(np.ones(M)))
    a = fuse_decide(mu, nu, w)
    b = fuse_decide(c * mu, c * nu, w)
    # only sums sitting within rounding of the threshold may flip
    gap = np.abs(w.weights @ (mu - nu))
    assert np.all((a == b) | (gap < 1e-12 * (w.weights @ (mu + nu))))


def test_smallcell_fusion_is_strongest_ap_detector():
    rng = np.random.default_rng(1)
    betas = np.array([0.2, 0.7, 0.1])
    mu, nu = rng.exponential(size=(3, 1000)), rng.exponential(size=(3, 1000))
    fused = fuse_decide(mu, nu, weights_smallcell([7, 8, 9], betas))
    assert np.array_equal(fused, (mu[1] >= nu[1]).astype(np.int8))


# weights

def test_equal_weights():
    assert np.allclose(weights_equal([3, 5, 9]).weights, 1 / 3)
    assert weights_equal([2]).weights.tolist() == [1.0]
    with pytest.raises(UncoveredDevice):
        weights_equal([])


@settings(max_examples=50)
@given(st.integers(1, 40))
def test_equal_weights_sum_to_one(n):
    assert abs(weights_equal(range(n)).weights.sum() - 1) <= 1e-12


def test_smallcell_weights():
    assert weights_smallcell([0, 1], [0.1, 0.9]).weights.tolist() == [0.0, 1.0]
    assert weights_smallcell([5], [0.3]).weights.tolist() == [1.0]
    assert weights_smallcell([0, 1, 2], [0.4, 0.4, 0.1]).weights.tolist() == [1.0, 0.0, 0.0]
    with pytest.raises(UncoveredDevice):
        weights_smallcell([], [])


def test_weights_validation():
    with pytest.raises(DomainError):
        FusionWeights((0, 1), np.array([0.7, 0.2]))
    with pytest.raises(DomainError):
        FusionWeights((0, 1), np.array([1.2, -0.2]))
    assert FusionWeights((3, 4), np.array([0.25, 0.75])).as_dict() == {3: 0.25, 4: 0.75}


def test_simplex_grid():
    g = simplex_grid(3, 4)
    assert len(g) == math.comb(6, 2)
    assert np.allclose(g.sum(axis=1), 1) and np.all(g >= 0)
    assert len({tuple(r) for r in np.round(g * 4).astype(int)}) == len(g)


def test_optimal_single_ap():
    assert weights_optimal([6], [0.3], [0.1], 2, 0.05, grid_resolution=7).weights.tolist() == [1.0]


def test_optimal_rejects_coarse_grid():
    with pytest.raises(DomainError):
        weights_optimal([0, 1], [1, 1], [1, 1], 2, 0.05, grid_resolution=1)


def test_optimal_symmetric_pair():
    w = weights_optimal([0, 1], [1.0, 1.0], [0.4, 0.4], 2, 0.05, grid_resolution=20).weights
    pw = error_probability([1.0, 1.0], [0.4, 0.4], w, 2, 0.05)
    pr = error_probability([1.0, 1.0], [0.4, 0.4], w[::-1], 2, 0.05)
    assert pw == pytest.approx(pr, rel=1e-12)
    assert w[0] <= 0.5


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 5), min_size=2, max_size=4), st.integers(0, 2**31))
def test_optimal_dominates_baselines(betas, seed):
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.05, 2, len(betas))
    aps = list(range(len(betas)))
    opt = weights_optimal(aps, betas, thetas, 2, 0.05, grid_resolution=20)
    p = lambda w: float(error_probability(betas, thetas, w.weights, 2, 0.05))  # noqa: E731
    assert p(opt) <= p(weights_equal(aps)) + 1e-15
    assert p(opt) <= p(weights_smallcell(aps, betas)) + 1e-15


# empirical rates

def test_rates_perfect_and_always_active():
    alpha = np.array([1, 0, 0, 1, 0, 0])
    s = empirical_error_rates(alpha, alpha, 0.05)
    assert (s.p_miss, s.p_false, s.p_error) == (0, 0, 0)
    s = empirical_error_rates(alpha, np.ones_like(alpha), 0.05)
    assert s.p_miss == 0 and s.p_false == 1 and s.p_error == pytest.approx(0.95)


def test_rates_random_coin():
    rng = np.random.default_rng(2)
    n = 20_000
    alpha = rng.uniform(size=n) < 0.3
    s = empirical_error_rates(alpha, rng.uniform(size=n) < 0.5, 0.3)
    assert abs(s.p_error - 0.5) < 3 * s.stderr
    assert s.p_error == pytest.approx(0.3 * s.p_miss + 0.7 * s.p_false, abs=1e-15)


def test_rates_empty_class_is_undefined():
    s = empirical_error_rates([0, 0, 0], [0, 1, 0], 0.1)
    assert math.isnan(s.p_miss) and math.isnan(s.p_error)
    assert s.p_false == pytest.approx(1 / 3)


def test_detection_csv(tmp_path):
    path = tmp_path / "det.csv"
    write_detection_csv(path, [(0, 3, "equal", 0.1, 0.01, 0.0145, 1000)])
    assert path.read_text().splitlines()[0] == "device,n_coop_aps,strategy,p_miss,p_false,p_error,trials"
    assert isinstance(DetectionStats(0, 0, 0, 1, 1, 0, 0.1).stderr, float)


# antenna trend on a fixed geometry

def test_error_vanishes_with_antennas():
    cfg = ExperimentConfig()
    model = PathLossModel()
    rng = np.random.default_rng(3)
    aps = sample_ppp(cfg.lambda_a, Disk(6.0), rng)
    devs = Disk(4.0).uniform(rng, 400)
    d = np.linalg.norm(devs[:, None, :] - aps[None, :, :], axis=2)
    covered = [np.flatnonzero(row <= cfg.r1_km) for row in d]
    keep = [i for i, c in enumerate(covered) if len(c)]
    assert len(keep) > 100
    curves = []
    for N in (1, 2, 4, 8, 16):
        th = converged_theta(cfg.E, cfg.epsilon, cfg.tau, N, cfg.lambda_d, cfg.r0_km, model)
        curves.append([float(error_probability(path_loss_beta(model, d[i, covered[i]]),
                                               np.full(len(covered[i]), th),
                                               np.full(len(covered[i]), 1 / len(covered[i])),
                                               N, cfg.epsilon)) for i in keep])
    curves = np.array(curves)
    pooled = curves.mean(axis=1)
    assert np.all(np.diff(pooled) <= 0)
    assert np.median(curves[-1]) < 1e-3
    # individual devices decrease too once N >= 2
    assert np.all(np.diff(curves[1:], axis=0) <= 1e-15)
