"""Stage-II LMMSE channel re-estimation given detected activities."""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .signal import StructuralError
from .special import DomainError

__all__ = [
    "ActivityPartition",
    "build_covariance",
    "covariance_split",
    "lmmse_estimate",
    "empirical_channel_mse",
    "write_mse_csv",
]


@dataclass(frozen=True)
class ActivityPartition:
    """Detected, missed, falsely detected and truly active device indices."""

    detected: frozenset
    missed: frozenset
    false: frozenset
    true_active: frozenset

    def __post_init__(self):
        if self.missed & self.detected:
            raise DomainError("a missed device cannot also be detected")
        if not self.false <= self.detected:
            raise DomainError("falsely detected devices must be a subset of the detected set")
        if (self.detected | self.missed) - self.false != self.true_active:
            raise DomainError("partition is inconsistent with the true activity set")

    @classmethod
    def from_decisions(cls, alpha, alpha_hat, devices=None):
        """Build from true and detected activity vectors (optionally restricted)."""
        alpha = np.asarray(alpha).astype(bool)
        alpha_hat = np.asarray(alpha_hat).astype(bool)
        idx = np.arange(len(alpha)) if devices is None else np.asarray(devices)
        a, ah = alpha[idx], alpha_hat[idx]
        det = frozenset(idx[ah].tolist())
        return cls(
            detected=det,
            missed=frozenset(idx[a & ~ah].tolist()),
            false=frozenset(idx[~a & ah].tolist()),
            true_active=frozenset(idx[a].tolist()),
        )


def build_covariance(pilots, betas, index_set, E):
    """``I + E * sum_{i in set} beta_i psi_i psi_i^H`` (tau x tau, Hermitian).

    ``betas`` is indexed like the pilot columns.
    """
    pilots = np.asarray(pilots)
    tau = pilots.shape[0]
    idx = np.asarray(sorted(index_set), dtype=int)
    Z = np.eye(tau, dtype=complex)
    if idx.size:
        P = pilots[:, idx]
        Z += (P * (E * np.asarray(betas, dtype=float)[idx])) @ P.conj().T
    return Z


def covariance_split(pilots, betas, partition, E):
    """``(Z, Z_hat, Z_tilde)`` with ``Z = Z_hat + Z_tilde``.

    ``Z`` uses the true active set, ``Z_hat`` the detected set and
    ``Z_tilde`` adds missed devices and removes false ones.
    """
    Z = build_covariance(pilots, betas, partition.true_active, E)
    Z_hat = build_covariance(pilots, betas, partition.detected, E)
    Z_tilde = (build_covariance(pilots, betas, partition.missed, E)
               - build_covariance(pilots, betas, partition.false, E))
    return Z, Z_hat, Z_tilde


def lmmse_estimate(Y, pilots, betas, detected, E):
    """Per-antenna LMMSE estimates ``sqrt(E) beta_k psi_k^H Z_hat^-1 y``.

    Parameters
    ----------
    Y : (tau, N) received pilots at one AP.
    pilots : (tau, K) pilots of the devices served by the AP.
    betas : (K,) gains of those devices.
    detected : iterable of column indices declared active.

    Returns
    -------
    (K, N) array; rows of devices not detected are zero.
    """
    Y = np.asarray(Y)
    pilots = np.asarray(pilots)
    if Y.shape[0] != pilots.shape[0]:
        raise StructuralError("received pilots and pilot matrix disagree on tau")
    betas = np.asarray(betas, dtype=float)
    K, N = pilots.shape[1], Y.shape[1]
    G_hat = np.zeros((K, N), dtype=complex)
    idx = np.asarray(sorted(detected), dtype=int)
    if idx.size == 0:
        return G_hat
    factor = cho_factor(build_covariance(pilots, betas, idx, E), lower=True)
    A = np.sqrt(E) * betas[idx, None] * pilots[:, idx].conj().T
    # one antenna column at a time so results do not depend on how many
    # columns are passed together (BLAS blocking changes rounding)
    for n in range(N):
        G_hat[idx, n] = A @ cho_solve(factor, Y[:, n])
    return G_hat


def empirical_channel_mse(G_true, G_hat):
    """Per-device ``e = mean |g - g_hat|^2`` and ``gamma = mean |g_hat|^2``.

    Inputs are ``(trials, K, N)`` (or ``(K, N)``); averages run over trials
    and antennas.
    """
    G_true = np.asarray(G_true)
    G_hat = np.asarray(G_hat)
    if G_true.shape != G_hat.shape:
        raise StructuralError("true and estimated channels differ in shape")
    if G_true.ndim == 2:
        G_true, G_hat = G_true[None], G_hat[None]
    e = np.mean(np.abs(G_true - G_hat) ** 2, axis=(0, 2))
    gamma = np.mean(np.abs(G_hat) ** 2, axis=(0, 2))
    return e, gamma


def write_mse_csv(path, rows):
    """rows: (m, k, beta, e, gamma, scenario)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ap", "device", "beta", "mse_empirical", "gamma_empirical", "scenario"])
        w.writerows(rows)
