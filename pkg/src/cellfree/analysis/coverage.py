"""Coverage probability: closed forms for collocated and small-cell baselines,
Monte Carlo for cell-free fusion, and the converged effective noise level
for a device population spread uniformly around each AP.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.spatial import cKDTree

from ..amp import state_evolution
from ..geometry import Disk, PathLossModel, Rectangle, path_loss_beta, radius_for_beta, sample_ppp
from ..special import DomainError
from .detection_error import error_probability

__all__ = [
    "CoverageEstimate",
    "device_gain_law",
    "converged_theta",
    "single_ap_error",
    "critical_beta",
    "coverage_collocated",
    "coverage_smallcell",
    "collocated_array_size",
    "coverage_cellfree_mc",
    "coverage_collocated_mc",
    "cooperative_error_samples",
]


class BoundaryCoverage(UserWarning):
    """Coverage clamped to 0 or 1 because the root lies outside the bracket."""


@dataclass(frozen=True)
class CoverageEstimate:
    value: float
    stderr: float
    realizations: int
    devices: int


def device_gain_law(model, r0_km, n_per_segment=48):
    """Quadrature nodes/weights for the gain of a device uniform in a disk.

    The radius has density ``2r/R0^2`` on ``[0, R0]``. Each path-loss
    segment gets its own Gauss-Legendre rule (in ``log r`` beyond ``d0``).
    Returns ``(betas, weights)`` with weights summing to one.
    """
    x, w = np.polynomial.legendre.leggauss(n_per_segment)
    rs, ws = [], []
    d0 = min(model.d0_km, r0_km)
    rs.append(0.5 * d0 * (x + 1))
    ws.append(0.5 * d0 * w * 2 * rs[-1] / r0_km**2)
    for lo, hi in ((model.d0_km, model.d1_km), (model.d1_km, r0_km)):
        lo, hi = min(lo, r0_km), min(hi, r0_km)
        if hi <= lo:
            continue
        u = 0.5 * (math.log(hi) - math.log(lo)) * (x + 1) + math.log(lo)
        r = np.exp(u)
        rs.append(r)
        ws.append(0.5 * (math.log(hi) - math.log(lo)) * w * r * 2 * r / r0_km**2)
    r = np.concatenate(rs)
    wt = np.concatenate(ws)
    return path_loss_beta(model, np.maximum(r, 1e-9)), wt / wt.sum()


def converged_theta(E, epsilon, tau, N, lambda_d, r0_km, model=None, form="decoupled",
                    iterations=60, tol=1e-8, n_nodes=96):
    """Fixed point of state evolution for a PPP device population.

    Devices within ``R0`` of an AP number ``lambda_d * pi * R0^2`` on
    average and have i.i.d. gains drawn from :func:`device_gain_law`.
    """
    model = model or PathLossModel()
    betas, weights = device_gain_law(model, r0_km)
    pop = lambda_d * math.pi * r0_km**2
    thetas = state_evolution(E, epsilon, betas, tau, N, iterations=iterations, tol=tol,
                             method="quadrature", form=form, weights=weights,
                             population=pop, n_nodes=n_nodes)
    return thetas[-1]


def single_ap_error(beta, theta, epsilon, shape):
    """Closed-form error of a device heard by one array with ``shape`` antennas."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    th = np.broadcast_to(theta, beta.shape)
    return error_probability(beta[:, None], th[:, None], np.ones((len(beta), 1)), shape, epsilon)


def critical_beta(shape, theta, epsilon, P0, beta_lo, beta_hi, xtol=1e-9):
    """Smallest gain whose error probability is at most ``P0``.

    The error is decreasing in the gain. Returns ``beta_lo`` if even that
    gain meets the target and ``inf`` if ``beta_hi`` does not.
    """
    def f(logb):
        return float(single_ap_error(math.exp(logb), theta, epsilon, shape)[0]) - P0

    a, b = math.log(beta_lo), math.log(beta_hi)
    fa, fb = f(a), f(b)
    if fa <= 0:
        return beta_lo
    if fb > 0:
        return math.inf
    return math.exp(bisect(f, a, b, xtol=xtol))


def _beta_ceiling(model):
    return 10 ** (model.flat_db / 10)


def collocated_array_size(lambda_a, r0_km):
    """APs a collocated array replaces: expected count in the coverage disk."""
    return max(1, int(round(lambda_a * math.pi * r0_km**2)))


def coverage_collocated(N, M, theta, epsilon, P0, model=None, r0_km=2.0):
    """Fraction of the coverage disk where a ``N*M``-antenna array meets ``P0``."""
    model = model or PathLossModel()
    if P0 >= 1:
        return 1.0
    if P0 <= 0:
        return 0.0
    lo = float(path_loss_beta(model, r0_km))
    b = critical_beta(N * M, theta, epsilon, P0, lo, _beta_ceiling(model))
    if b == lo:
        warnings.warn("whole disk covered", BoundaryCoverage, stacklevel=2)
        return 1.0
    if math.isinf(b):
        warnings.warn("no gain in range meets the target", BoundaryCoverage, stacklevel=2)
        return 0.0
    r = radius_for_beta(model, b)
    return float(min(1.0, r**2 / r0_km**2))


def coverage_smallcell(N, theta, epsilon, P0, lambda_a, model=None, r_max_km=100.0):
    """Probability that the nearest AP alone meets ``P0``."""
    model = model or PathLossModel()
    if lambda_a <= 0 or P0 <= 0:
        return 0.0
    if P0 >= 1:
        return 1.0
    lo = float(path_loss_beta(model, r_max_km))
    b = critical_beta(N, theta, epsilon, P0, lo, _beta_ceiling(model))
    if math.isinf(b):
        return 0.0
    r = r_max_km if b == lo else radius_for_beta(model, b)
    return float(1.0 - math.exp(-lambda_a * math.pi * r**2))


def _weights_for(strategy, betas, theta, N, epsilon, grid_resolution):
    from ..detection import weights_equal, weights_optimal, weights_smallcell

    aps = range(len(betas))
    if strategy == "equal":
        return weights_equal(aps).weights
    if strategy == "smallcell":
        return weights_smallcell(aps, betas).weights
    if strategy == "optimal":
        th = np.full(len(betas), theta)
        return weights_optimal(aps, betas, th, N, epsilon, grid_resolution).weights
    raise DomainError(f"unknown weight strategy {strategy!r}")


def cooperative_error_samples(N, theta, epsilon, lambda_a, r1_km, realizations, rng,
                              model=None, weight_strategy="equal", devices_per_realization=1,
                              half_width_km=None, grid_resolution=10, search_km=None):
    """Closed-form error of typical devices over independent AP layouts.

    Each realization draws APs on a square, places
    ``devices_per_realization`` devices uniformly in its central part and
    fuses over the APs within ``r1_km`` of each device (for
    ``"smallcell"``: the nearest AP within ``search_km``). Devices with no
    AP in range are uncovered and get error ``epsilon``.

    Returns an array ``(realizations, devices_per_realization)``.
    """
    model = model or PathLossModel()
    reach = r1_km if weight_strategy != "smallcell" else (search_km or r1_km)
    h = half_width_km if half_width_km is not None else reach
    window = Rectangle.centered(h + reach)
    inner = Rectangle.centered(h)
    out = np.empty((realizations, devices_per_realization))
    for i in range(realizations):
        aps = sample_ppp(lambda_a, window, rng)
        devs = inner.uniform(rng, devices_per_realization)
        out[i] = epsilon
        if len(aps) == 0:
            continue
        tree = cKDTree(aps)
        if weight_strategy == "smallcell":
            d, _ = tree.query(devs, distance_upper_bound=reach)
            ok = np.isfinite(d)
            if ok.any():
                out[i, ok] = single_ap_error(path_loss_beta(model, np.maximum(d[ok], 1e-9)),
                                             theta, epsilon, N)
            continue
        nbrs = tree.query_ball_point(devs, reach)
        if weight_strategy == "equal":
            _equal_batch(out[i], devs, aps, nbrs, N, theta, epsilon, model)
            continue
        for j, idx in enumerate(nbrs):
            if not idx:
                continue
            d = np.hypot(*(aps[idx] - devs[j]).T)
            b = path_loss_beta(model, np.maximum(d, 1e-9))
            w = _weights_for(weight_strategy, b, theta, N, epsilon, grid_resolution)
            out[i, j] = error_probability(b, np.full(len(b), theta), w, N, epsilon)
    return out


def _equal_batch(row, devs, aps, nbrs, N, theta, epsilon, model):
    """Equal-weight fusion for many devices at once, padded to a rectangle."""
    counts = np.array([len(x) for x in nbrs])
    if counts.max() == 0:
        return
    B = np.zeros((len(devs), counts.max()))
    W = np.zeros_like(B)
    for j, idx in enumerate(nbrs):
        if idx:
            d = np.hypot(*(aps[idx] - devs[j]).T)
            B[j, :len(idx)] = path_loss_beta(model, np.maximum(d, 1e-9))
            W[j, :len(idx)] = 1.0 / len(idx)
    ok = counts > 0
    row[ok] = error_probability(B[ok], np.full(B[ok].shape, theta), W[ok], N, epsilon)


def _estimate(samples, P0):
    hit = (samples <= P0).astype(float)
    per = hit.mean(axis=1)
    R, D = samples.shape
    if R > 1:
        se = per.std(ddof=1) / math.sqrt(R)
    else:
        p = per.mean()
        se = math.sqrt(p * (1 - p) / D)
    return CoverageEstimate(float(per.mean()), float(se), R, D)


def coverage_cellfree_mc(N, theta, epsilon, P0, lambda_a, r1_km, realizations, rng,
                         model=None, weight_strategy="equal", devices_per_realization=1,
                         **kw):
    """Fraction of typical devices whose fused closed-form error is at most ``P0``.

    The standard error is taken across realizations, which accounts for
    devices in one layout sharing APs.
    """
    if realizations < 1:
        raise DomainError("at least one realization is required")
    s = cooperative_error_samples(N, theta, epsilon, lambda_a, r1_km, realizations, rng,
                                  model, weight_strategy, devices_per_realization, **kw)
    return _estimate(s, P0)


def coverage_collocated_mc(N, M, theta, epsilon, P0, realizations, rng, model=None,
                           r0_km=2.0, devices_per_realization=1):
    """Direct Monte Carlo of collocated coverage with devices uniform in the disk."""
    model = model or PathLossModel()
    disk = Disk(r0_km)
    s = np.empty((realizations, devices_per_realization))
    for i in range(realizations):
        p = disk.uniform(rng, devices_per_realization)
        b = path_loss_beta(model, np.maximum(np.hypot(p[:, 0], p[:, 1]), 1e-9))
        s[i] = single_ap_error(b, theta, epsilon, N * M)
    return _estimate(s, P0)
