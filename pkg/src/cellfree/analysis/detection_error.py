"""Closed-form activity-detection error via a two-moment Gamma approximation.

The fused statistic ``sum_m zeta_m mu_m`` is a weighted sum of independent
Gamma(N, .) variables, one per cooperating AP. It is replaced by a single
Gamma whose mean and variance match the sum exactly.
"""

from dataclasses import dataclass

import numpy as np

from ..special import DomainError, reg_lower_gamma, reg_upper_gamma

__all__ = ["WsApprox", "ws_params", "detection_error_closed_form", "error_probability"]


@dataclass(frozen=True)
class WsApprox:
    """Gamma shape/scale for the fused statistic given active / inactive.

    Fields may be arrays when several devices are evaluated at once.
    """

    s_active: np.ndarray
    omega_active: np.ndarray
    s_inactive: np.ndarray
    omega_inactive: np.ndarray
    nu_threshold: np.ndarray
    N: int


def _sum(x):
    return np.sum(x, axis=-1)


def ws_params(betas, thetas, weights, N, omega_form="moment"):
    """Moment-matched Gamma parameters of the fused statistic.

    Parameters
    ----------
    betas, thetas, weights : array_like, (..., M)
        Gains, effective AMP noise levels and fusion weights of the
        cooperating APs. Entries with zero weight do not contribute.
    N : int
        Antennas per AP.
    omega_form : {"moment", "literal"}
        ``"literal"`` puts ``sum(vartheta**2)`` (the active-case scale
        numerator) into the inactive scale, which does not match moments.
    """
    b = np.asarray(betas, dtype=float)
    th = np.asarray(thetas, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(th <= 0):
        raise DomainError("effective noise levels must be positive")
    if np.any(w < 0):
        raise DomainError("fusion weights must be non-negative")
    v1 = w * b / (N * th)
    v0 = w * b / (N * (th + b))
    s1 = N * _sum(v1) ** 2 / _sum(v1**2)
    om1 = _sum(v1**2) / _sum(v1)
    s0 = N * _sum(v0) ** 2 / _sum(v0**2)
    if omega_form == "moment":
        om0 = _sum(v0**2) / _sum(v0)
    elif omega_form == "literal":
        om0 = _sum(v1**2) / _sum(v0)
    else:
        raise DomainError(f"unknown omega form {omega_form!r}")
    nu = _sum(w * np.log1p(b / th))
    return WsApprox(s1, om1, s0, om0, nu, N)


def detection_error_closed_form(ws, epsilon):
    """Return ``(p_miss, p_false, p_error)``.

    Miss: the active-case Gamma falls below the threshold. False alarm: the
    inactive-case Gamma reaches it.
    """
    pm = reg_lower_gamma(ws.s_active, ws.nu_threshold / ws.omega_active)
    pf = reg_upper_gamma(ws.s_inactive, ws.nu_threshold / ws.omega_inactive)
    return pm, pf, epsilon * pm + (1 - epsilon) * pf


def error_probability(betas, thetas, weights, N, epsilon, omega_form="moment"):
    """Shorthand for the combined closed-form error of each row of inputs."""
    ws = ws_params(betas, thetas, weights, N, omega_form)
    return detection_error_closed_form(ws, epsilon)[2]
