import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cellfree.geometry import (
    Disk,
    NetworkRealization,
    PathLossModel,
    Rectangle,
    build_network,
    neighbor_sets,
    path_loss_beta,
    path_loss_db,
    radius_for_beta,
    sample_ppp,
)
from cellfree.special import DomainError

MODEL = PathLossModel()


def test_constant_term():
    # Hata constant for 1900 MHz, 7 m AP, 1.65 m device
    assert MODEL.L0_db == pytest.approx(145.29, abs=0.01)


def test_flat_segment_and_continuity():
    flat = path_loss_db(MODEL, MODEL.d0_km)
    for r in (1e-4, 0.003, 0.0099):
        assert path_loss_db(MODEL, r) == flat
    d1 = MODEL.d1_km
    far = -MODEL.L0_db - 35 * math.log10(d1)
    mid = -MODEL.L0_db - 15 * math.log10(d1) - 20 * math.log10(d1)
    assert far == pytest.approx(mid, abs=1e-12)
    assert path_loss_db(MODEL, d1 * (1 + 1e-12)) == pytest.approx(path_loss_db(MODEL, d1), abs=1e-9)
    assert path_loss_db(MODEL, MODEL.d0_km * (1 + 1e-12)) == pytest.approx(flat, abs=1e-9)


def test_gain_nonincreasing_in_distance():
    r = np.geomspace(1e-4, 10, 5000)
    b = path_loss_beta(MODEL, r)
    assert np.all(np.diff(b) <= 0)
    assert np.all((b > 0) & (b <= 1))


@pytest.mark.parametrize("r", [0.0, -1.0, np.nan])
def test_bad_distance(r):
    with pytest.raises(DomainError):
        path_loss_beta(MODEL, r)


@settings(max_examples=100, deadline=None)
@given(st.floats(MODEL.d0_km * 1.0001, 50.0))
def test_radius_inverts_gain(r):
    assert radius_for_beta(MODEL, path_loss_beta(MODEL, r)) == pytest.approx(r, rel=1e-9)


def test_radius_above_flat_is_zero():
    assert radius_for_beta(MODEL, 10 ** (MODEL.flat_db / 10) * 2) == 0.0


def test_breakpoints_validated():
    with pytest.raises(DomainError):
        PathLossModel(d0_m=60, d1_m=50)


def test_empty_ppp():
    assert sample_ppp(0, Rectangle.centered(1), np.random.default_rng(0)).shape == (0, 2)
    with pytest.raises(DomainError):
        sample_ppp(-1, Rectangle.centered(1), np.random.default_rng(0))


def test_ppp_mean_count():
    rng = np.random.default_rng(1)
    sq = Rectangle(0, 1, 0, 1)
    counts = np.array([len(sample_ppp(637, sq, rng)) for _ in range(10_000)])
    assert abs(counts.mean() - 637) <= 3 * math.sqrt(637) / 100


def test_ppp_disk_count_is_poisson():
    rng = np.random.default_rng(2)
    lam = 2 * math.pi
    counts = np.array([len(sample_ppp(2, Disk(1.0), rng)) for _ in range(20_000)])
    edges = np.arange(0, 14)
    obs = np.array([np.sum(counts == k) for k in edges[:-1]] + [np.sum(counts >= 13)])
    p = stats.poisson.pmf(edges[:-1], lam)
    exp = np.append(p, 1 - p.sum()) * len(counts)
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_ppp_points_uniform_in_disk():
    rng = np.random.default_rng(3)
    pts = Disk(2.0).uniform(rng, 50_000)
    r2 = np.sum(pts**2, axis=1) / 4.0
    assert stats.kstest(r2, "uniform").pvalue > 0.01


def brute_force_sets(aps, devs, r0, r1):
    A, At, D = [], [], [[] for _ in aps]
    for k, p in enumerate(devs):
        a, at = [], []
        for m, q in enumerate(aps):
            d = math.hypot(p[0] - q[0], p[1] - q[1])
            if d <= r0:
                a.append(m)
                D[m].append(k)
            if d <= r1:
                at.append(m)
        A.append(a)
        At.append(at)
    return A, At, D


def test_neighbor_sets_match_brute_force():
    rng = np.random.default_rng(4)
    aps = Rectangle.centered(3).uniform(rng, 50)
    devs = Rectangle.centered(3).uniform(rng, 300)
    net = NetworkRealization(aps, devs, 1.4, 8.3, 2.0, 1.0)
    A, At, D = neighbor_sets(net)
    bA, bAt, bD = brute_force_sets(aps, devs, 2.0, 1.0)
    assert [list(a) for a in A] == bA
    assert [list(a) for a in At] == bAt
    assert [list(d) for d in D] == bD
    for k in range(net.num_devices):
        assert set(At[k]) <= set(A[k])
        for m in A[k]:
            assert k in D[m]
    assert np.all((net.beta == 0) == (net.distances > 2.0))


def test_equal_radii_give_equal_sets():
    rng = np.random.default_rng(5)
    net = build_network(2, 20, 1.5, 1.5, 4.0, rng)
    A, At, _ = neighbor_sets(net)
    assert all(np.array_equal(a, b) for a, b in zip(A, At))


def test_boundary_inclusive():
    net = NetworkRealization([[0, 0]], [[2.0, 0.0]], 1, 1, 2.0, 2.0)
    assert list(net.coverage_aps(0)) == [0]
    assert list(net.served_devices(0)) == [0]
    assert net.beta[0, 0] > 0


def test_r1_above_r0_rejected():
    with pytest.raises(DomainError):
        NetworkRealization([[0, 0]], [[1, 0]], 1, 1, 1.0, 2.0)


def test_mean_cooperating_count():
    # one device per independent layout, so samples are i.i.d.
    rng = np.random.default_rng(6)
    counts = []
    for _ in range(3000):
        aps = sample_ppp(2.0, Rectangle.centered(3.0), rng)
        dev = Rectangle.centered(1.0).uniform(rng, 1)
        net = NetworkRealization(aps, dev, 2.0, 0.0, 2.0, 1.0)
        counts.append(len(net.cooperating_aps(0)))
    counts = np.array(counts)
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - 2.0 * math.pi) <= 3 * se


def test_inner_window_devices_are_interior():
    net = build_network(1, 5, 2.0, 1.0, 5.0, np.random.default_rng(7), device_window="inner")
    assert len(net.interior_devices()) == net.num_devices


def test_json_roundtrip():
    net = build_network(1, 5, 2.0, 1.0, 4.0, np.random.default_rng(8), seed=8)
    back = NetworkRealization.from_json(net.to_json())
    assert np.array_equal(back.ap_positions, net.ap_positions)
    assert np.array_equal(back.beta, net.beta)
    assert back.seed == 8 and back.window == net.window
