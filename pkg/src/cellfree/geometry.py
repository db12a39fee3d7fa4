"""PPP deployments, the three-slope path-loss law and neighbor sets."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .special import DomainError

__all__ = [
    "PathLossModel",
    "Rectangle",
    "Disk",
    "NetworkRealization",
    "sample_ppp",
    "path_loss_db",
    "path_loss_beta",
    "radius_for_beta",
    "build_network",
    "neighbor_sets",
]


@dataclass(frozen=True)
class PathLossModel:
    """Three-slope path loss (COST-231 Hata constant, 35 dB/decade far field).

    Positions elsewhere in the package are in km; the two breakpoints are
    given in metres and converted here.
    """

    carrier_freq_mhz: float = 1900.0
    ap_height_m: float = 7.0
    device_height_m: float = 1.65
    d0_m: float = 10.0
    d1_m: float = 50.0

    def __post_init__(self):
        if not 0 < self.d0_m < self.d1_m:
            raise DomainError("path-loss breakpoints must satisfy 0 < d0 < d1")

    @property
    def L0_db(self):
        lf = math.log10(self.carrier_freq_mhz)
        return (
            46.3
            + 33.9 * lf
            - 13.82 * math.log10(self.ap_height_m)
            - (1.1 * lf - 0.7) * self.device_height_m
            + (1.56 * lf - 0.8)
        )

    @property
    def d0_km(self):
        return self.d0_m / 1000.0

    @property
    def d1_km(self):
        return self.d1_m / 1000.0

    @property
    def flat_db(self):
        """Gain (dB) of the flat segment ``r <= d0``."""
        return -self.L0_db - 15 * math.log10(self.d1_km) - 20 * math.log10(self.d0_km)


def path_loss_db(model, r_km):
    r = np.asarray(r_km, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("distance must be positive and finite")
    far = -model.L0_db - 35 * np.log10(r)
    mid = -model.L0_db - 15 * math.log10(model.d1_km) - 20 * np.log10(r)
    out = np.where(r > model.d1_km, far, np.where(r <= model.d0_km, model.flat_db, mid))
    return out if out.ndim else float(out)


def path_loss_beta(model, r_km):
    """Linear large-scale gain ``10**(beta_dB/10)`` at distance ``r_km``."""
    return 10.0 ** (np.asarray(path_loss_db(model, r_km)) / 10.0)


def radius_for_beta(model, beta):
    """Largest distance (km) whose gain is at least ``beta``.

    Inverse of :func:`path_loss_beta` on each branch; gains above the flat
    segment map to zero distance.
    """
    b_db = 10 * np.log10(np.asarray(beta, dtype=float))
    mid_db_at_d1 = -model.L0_db - 35 * math.log10(model.d1_km)
    r_far = 10 ** ((-model.L0_db - b_db) / 35)
    r_mid = 10 ** ((-model.L0_db - 15 * math.log10(model.d1_km) - b_db) / 20)
    r = np.where(b_db <= mid_db_at_d1, r_far, r_mid)
    r = np.where(b_db > model.flat_db, 0.0, r)
    return r if r.ndim else float(r)


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def uniform(self, rng, n):
        x = rng.uniform(self.x0, self.x1, n)
        y = rng.uniform(self.y0, self.y1, n)
        return np.column_stack([x, y])

    @classmethod
    def centered(cls, half_width):
        return cls(-half_width, half_width, -half_width, half_width)


@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple = (0.0, 0.0)

    @property
    def area(self):
        return math.pi * self.radius**2

    def uniform(self, rng, n):
        r = self.radius * np.sqrt(rng.uniform(size=n))
        phi = rng.uniform(0, 2 * math.pi, n)
        return np.column_stack([self.center[0] + r * np.cos(phi), self.center[1] + r * np.sin(phi)])


def sample_ppp(density, region, rng):
    """Homogeneous PPP of intensity ``density`` (points/km^2) in ``region``.

    Returns an ``(n, 2)`` array of positions in km.
    """
    if not density >= 0:
        raise DomainError("PPP density must be non-negative")
    n = rng.poisson(density * region.area)
    if n == 0:
        return np.zeros((0, 2))
    return region.uniform(rng, n)


@dataclass
class NetworkRealization:
    """AP and device layout with distances and path-loss gains.

    ``beta[m, k]`` is zero whenever device ``k`` lies outside the coverage
    radius ``r0_km`` of AP ``m``.
    """

    ap_positions: np.ndarray
    device_positions: np.ndarray
    lambda_a: float
    lambda_d: float
    r0_km: float
    r1_km: float
    model: PathLossModel = field(default_factory=PathLossModel)
    window: Rectangle | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.r1_km > self.r0_km:
            raise DomainError("cooperation radius R1 must not exceed coverage radius R0")
        self.ap_positions = np.asarray(self.ap_positions, dtype=float).reshape(-1, 2)
        self.device_positions = np.asarray(self.device_positions, dtype=float).reshape(-1, 2)
        diff = self.ap_positions[:, None, :] - self.device_positions[None, :, :]
        self.distances = np.hypot(diff[..., 0], diff[..., 1])
        gains = path_loss_beta(self.model, np.maximum(self.distances, 1e-6))
        self.beta = np.where(self.distances <= self.r0_km, gains, 0.0)

    @property
    def num_aps(self):
        return len(self.ap_positions)

    @property
    def num_devices(self):
        return len(self.device_positions)

    def coverage_aps(self, k):
        """A_k: APs within R0 of device k."""
        return np.flatnonzero(self.distances[:, k] <= self.r0_km)

    def cooperating_aps(self, k):
        """Ã_k: APs within R1 of device k."""
        return np.flatnonzero(self.distances[:, k] <= self.r1_km)

    def served_devices(self, m):
        """D_m: devices within R0 of AP m."""
        return np.flatnonzero(self.distances[m] <= self.r0_km)

    def interior_devices(self):
        """Devices whose whole R0-disk lies inside the simulation window."""
        if self.window is None:
            return np.arange(self.num_devices)
        w, p = self.window, self.device_positions
        margin = np.minimum.reduce(
            [p[:, 0] - w.x0, w.x1 - p[:, 0], p[:, 1] - w.y0, w.y1 - p[:, 1]]
        )
        return np.flatnonzero(margin >= self.r0_km)

    def to_json(self):
        payload = {
            "ap_positions": self.ap_positions.tolist(),
            "device_positions": self.device_positions.tolist(),
            "lambda_a": self.lambda_a,
            "lambda_d": self.lambda_d,
            "r0_km": self.r0_km,
            "r1_km": self.r1_km,
            "seed": self.seed,
            "model": self.model.__dict__,
            "window": None if self.window is None else self.window.__dict__,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            ap_positions=np.array(d["ap_positions"]),
            device_positions=np.array(d["device_positions"]),
            lambda_a=d["lambda_a"],
            lambda_d=d["lambda_d"],
            r0_km=d["r0_km"],
            r1_km=d["r1_km"],
            model=PathLossModel(**d["model"]),
            window=None if d["window"] is None else Rectangle(**d["window"]),
            seed=d["seed"],
        )


def build_network(lambda_a, lambda_d, r0_km, r1_km, half_width_km, rng,
                  model=None, device_window="full", seed=None):
    """Sample a stochastic cell-free layout on a square window.

    ``device_window="inner"`` restricts devices to the sub-square at distance
    R0 from the border so that each has an unclipped coverage disk.
    """
    window = Rectangle.centered(half_width_km)
    aps = sample_ppp(lambda_a, window, rng)
    if device_window == "inner":
        inner = half_width_km - r0_km
        if inner <= 0:
            raise DomainError("window too small for an inner device region")
        dev_region = Rectangle.centered(inner)
    elif device_window == "full":
        dev_region = window
    else:
        raise DomainError(f"unknown device window {device_window!r}")
    devices = sample_ppp(lambda_d, dev_region, rng)
    return NetworkRealization(
        aps, devices, lambda_a, lambda_d, r0_km, r1_km,
        model=model or PathLossModel(), window=window, seed=seed,
    )


def neighbor_sets(net):
    """Return ``(A, A_tilde, D)``: lists of index arrays per device / per AP."""
    A = [net.coverage_aps(k) for k in range(net.num_devices)]
    A_tilde = [net.cooperating_aps(k) for k in range(net.num_devices)]
    D = [net.served_devices(m) for m in range(net.num_aps)]
    return A, A_tilde, D
