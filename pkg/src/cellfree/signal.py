"""Pilots, activities, Rayleigh channels and received pilot matrices."""

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StructuralError",
    "complex_normal",
    "generate_pilots",
    "sample_activity",
    "sample_channels",
    "ap_received",
    "synthesize_received",
    "SignalBatch",
    "dbm_to_normalized_power",
]


class StructuralError(ValueError):
    """Array shapes that do not fit together."""


def complex_normal(rng, shape, var=1.0):
    """CN(0, var) samples: real and imaginary parts each with variance var/2."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_pilots(tau, K, rng):
    """``(tau, K)`` matrix whose columns are i.i.d. CN(0, I/tau) pilots."""
    return complex_normal(rng, (tau, K), 1.0 / tau)


def sample_activity(epsilon, K, rng):
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("activity probability must lie in [0, 1]")
    return (rng.uniform(size=K) < epsilon).astype(np.int8)


def sample_channels(betas, N, rng):
    """Rows ``g_k ~ CN(0, beta_k I_N)``; shape ``(len(betas), N)``."""
    betas = np.asarray(betas, dtype=float)
    return complex_normal(rng, (len(betas), N)) * np.sqrt(betas)[:, None]


def ap_received(pilots, X, E, rng=None, noise_enabled=True):
    """``Y = sqrt(E) Psi X + W`` for one AP; ``W`` has CN(0,1) entries.

    ``pilots`` is ``(..., tau, K)`` and ``X`` is ``(..., K, N)``; leading
    dimensions broadcast, so a batch of trials can be synthesized at once.
    """
    if pilots.shape[-1] != X.shape[-2]:
        raise StructuralError(
            f"pilot count {pilots.shape[-1]} does not match signal rows {X.shape[-2]}"
        )
    Y = np.sqrt(E) * (pilots @ X)
    if noise_enabled:
        Y = Y + complex_normal(rng, Y.shape)
    return Y


@dataclass
class SignalBatch:
    """One slot of the random-access system over a network realization.

    ``channels[m]`` and ``received[m]`` are indexed by AP; rows of
    ``channels[m]`` follow ``served[m]`` (the set D_m).
    """

    activities: np.ndarray
    pilots: np.ndarray
    served: dict
    channels: dict
    received: dict
    E: float

    def signal(self, m):
        """X_m = diag(alpha) G_m."""
        return self.activities[self.served[m], None] * self.channels[m]

    def to_json(self):
        enc = lambda z: [np.real(z).tolist(), np.imag(z).tolist()]  # noqa: E731
        return json.dumps({
            "E": self.E,
            "activities": self.activities.tolist(),
            "pilots": enc(self.pilots),
            "served": {str(m): v.tolist() for m, v in self.served.items()},
            "channels": {str(m): enc(v) for m, v in self.channels.items()},
            "received": {str(m): enc(v) for m, v in self.received.items()},
        })


def synthesize_received(net, pilots, activities, N, E, rng, noise_enabled=True, aps=None):
    """Draw channels and form Y_m for every AP in ``aps`` (default: all).

    ``pilots`` is ``(tau, K_total)`` over all devices of ``net``.
    """
    if pilots.shape[1] != net.num_devices or len(activities) != net.num_devices:
        raise StructuralError("pilots/activities must cover every device of the network")
    aps = range(net.num_aps) if aps is None else aps
    served, channels, received = {}, {}, {}
    for m in aps:
        D = net.served_devices(m)
        G = sample_channels(net.beta[m, D], N, rng)
        X = activities[D, None] * G
        served[m] = D
        channels[m] = G
        received[m] = ap_received(pilots[:, D], X, E, rng, noise_enabled)
    return SignalBatch(np.asarray(activities), pilots, served, channels, received, E)


def dbm_to_normalized_power(tx_power_dbm, bandwidth_hz, noise_psd_dbm_hz):
    """Transmit power over the thermal noise floor, as a linear ratio."""
    noise_dbm = noise_psd_dbm_hz + 10 * np.log10(bandwidth_hz)
    return 10 ** ((tx_power_dbm - noise_dbm) / 10)
