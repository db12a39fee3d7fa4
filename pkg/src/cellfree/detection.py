"""CPU-side fusion of per-AP activity statistics and empirical error rates."""

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .analysis.detection_error import error_probability
from .special import DomainError

__all__ = [
    "UncoveredDevice",
    "FusionWeights",
    "DetectionStats",
    "fuse_decide",
    "weights_equal",
    "weights_smallcell",
    "weights_optimal",
    "simplex_grid",
    "empirical_error_rates",
    "write_detection_csv",
]


class UncoveredDevice(LookupError):
    """No AP lies within the cooperation radius of the device."""


@dataclass(frozen=True)
class FusionWeights:
    """Convex weights over the cooperating APs ``aps`` (same order)."""

    aps: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.aps):
            raise DomainError("one weight per cooperating AP is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("fusion weights must be non-negative and sum to one")
        object.__setattr__(self, "weights", w)

    def as_dict(self):
        return dict(zip(self.aps, self.weights.tolist()))


def _check_cover(aps):
    aps = tuple(int(a) for a in aps)
    if not aps:
        raise UncoveredDevice("device has no cooperating AP")
    return aps


def weights_equal(cooperating_aps):
    aps = _check_cover(cooperating_aps)
    n = len(aps)
    return FusionWeights(aps, np.full(n, 1.0 / n))


def weights_smallcell(cooperating_aps, betas):
    """All weight on the strongest AP; ties go to the first listed AP."""
    aps = _check_cover(cooperating_aps)
    w = np.zeros(len(aps))
    w[int(np.argmax(np.asarray(betas)))] = 1.0
    return FusionWeights(aps, w)


def simplex_grid(n, resolution):
    """All points of the simplex with coordinates in multiples of 1/resolution.

    Rows are ordered lexicographically in the first coordinate ascending.
    """
    if resolution < 2:
        raise DomainError("grid resolution must be at least 2")
    if n == 1:
        return np.ones((1, 1))
    pts = []
    for bars in itertools.combinations(range(resolution + n - 1), n - 1):
        edges = (-1,) + bars + (resolution + n - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    return np.array(pts, dtype=float) / resolution


def weights_optimal(cooperating_aps, betas, thetas, N, epsilon, grid_resolution=20,
                    max_points=200_000):
    """Grid search of the closed-form error probability over the simplex.

    The equal-weight point and every vertex are always candidates, so the
    result never does worse than either baseline on the closed-form objective.
    Among equal minima the first candidate in grid order wins.
    """
    aps = _check_cover(cooperating_aps)
    n = len(aps)
    if grid_resolution < 2:
        raise DomainError("grid resolution must be at least 2")
    if n == 1:
        return FusionWeights(aps, np.ones(1))
    count = math.comb(grid_resolution + n - 1, n - 1)
    if count > max_points:
        raise DomainError(f"simplex grid with {count} points exceeds max_points={max_points}")
    cand = np.vstack([simplex_grid(n, grid_resolution), np.full((1, n), 1.0 / n), np.eye(n)])
    p = error_probability(np.asarray(betas)[None, :], np.asarray(thetas)[None, :], cand, N, epsilon)
    best = int(np.argmin(p))
    w = cand[best]
    return FusionWeights(aps, w / w.sum())


def fuse_decide(mu_per_ap, nu_per_ap, weights):
    """Weighted rule: active iff sum(zeta*mu) >= sum(zeta*nu).

    ``mu_per_ap``/``nu_per_ap`` map AP index to statistic (or are arrays in
    the order of ``weights.aps``); trailing batch dimensions are allowed.
    """
    if isinstance(mu_per_ap, dict):
        missing = [m for m in weights.aps if m not in mu_per_ap or m not in nu_per_ap]
        if missing:
            raise KeyError(f"no statistics for cooperating APs {missing}")
        mu = np.array([mu_per_ap[m] for m in weights.aps])
        nu = np.array([nu_per_ap[m] for m in weights.aps])
    else:
        mu, nu = np.asarray(mu_per_ap), np.asarray(nu_per_ap)
        if mu.shape[0] != len(weights.aps) or nu.shape[0] != len(weights.aps):
            raise KeyError("statistics do not cover the weight support")
    w = weights.weights.reshape((-1,) + (1,) * (mu.ndim - 1))
    out = np.sum(w * mu, axis=0) >= np.sum(w * nu, axis=0)
    return out.astype(np.int8) if out.ndim else int(out)


@dataclass
class DetectionStats:
    p_miss: float
    p_false: float
    p_error: float
    trials: int
    n_active: int
    n_inactive: int
    epsilon: float
    scope: str = "pooled"

    @property
    def stderr(self):
        """Binomial standard error of ``p_error`` from the two conditional classes."""
        eps = self.epsilon
        vm = self.p_miss * (1 - self.p_miss) / max(self.n_active, 1)
        vf = self.p_false * (1 - self.p_false) / max(self.n_inactive, 1)
        return math.sqrt(eps**2 * vm + (1 - eps) ** 2 * vf)


def empirical_error_rates(alpha, alpha_hat, epsilon, scope="pooled"):
    """Conditional miss / false-alarm rates and their epsilon-mixture.

    Rates for an empty conditional class come back as NaN, and then so does
    the combined error.
    """
    alpha = np.asarray(alpha).astype(bool).ravel()
    alpha_hat = np.asarray(alpha_hat).astype(bool).ravel()
    n1 = int(alpha.sum())
    n0 = int((~alpha).sum())
    pm = float(np.sum(alpha & ~alpha_hat) / n1) if n1 else float("nan")
    pf = float(np.sum(~alpha & alpha_hat) / n0) if n0 else float("nan")
    p = epsilon * pm + (1 - epsilon) * pf
    return DetectionStats(pm, pf, p, len(alpha), n1, n0, epsilon, scope)


def write_detection_csv(path, rows):
    """rows: iterables of (device, n_coop, strategy, p_miss, p_false, p_error, trials)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["device", "n_coop_aps", "strategy", "p_miss", "p_false", "p_error", "trials"])
        w.writerows(rows)
