"""Deterministic equivalents of normalized traces of ``Z = I + sum E beta psi psi^H``
and the large-system MSE of LMMSE re-estimation under imperfect detection.
"""

from dataclasses import dataclass

import numpy as np

from ..special import ConvergenceError, DomainError

__all__ = ["DeterministicEquivalents", "deterministic_equivalents", "asymptotic_mse"]


@dataclass(frozen=True)
class DeterministicEquivalents:
    """``Q ~ tr(Z^-1)/tau`` and ``Q_bar ~ tr(Z^-2)/tau``."""

    Q: float
    Q_bar: float
    varsigma: np.ndarray
    varsigma_hat: np.ndarray
    residual: float
    iterations: int


def _fixed_point(a, tau, tol, max_iter):
    """Solve ``vs_i = a_i Q``, ``Q = 1 / (1 + sum a_i / (tau (1 + vs_i)))``."""
    vs = np.ones_like(a)
    damp = 1.0
    prev_res = np.inf
    for it in range(1, max_iter + 1):
        Q = 1.0 / (np.sum(a / (tau * (1.0 + vs))) + 1.0)
        target = a * Q
        res = float(np.max(np.abs(target - vs) / np.maximum(1.0, np.abs(vs))))
        if res < tol:
            return target, Q, res, it
        if res > prev_res:
            damp = 0.5
        vs = vs + damp * (target - vs)
        prev_res = res
    raise ConvergenceError(f"deterministic-equivalent fixed point did not converge in {max_iter} iterations")


def deterministic_equivalents(betas, E, tau, tol=1e-12, max_iter=10_000, coupling="corrected"):
    """Fixed point ``(vs, Q)`` then the linear system for ``vs_hat`` and ``Q_bar``.

    ``coupling="corrected"`` uses ``J_ij = a_i a_j Q^2 / (tau (1 + vs_j)^2)``,
    which makes ``vs_hat = a Q_bar`` consistent; ``"literal"`` squares
    ``(1 + vs_i)`` instead.
    """
    a = E * np.asarray(betas, dtype=float).ravel()
    if a.size == 0:
        return DeterministicEquivalents(1.0, 1.0, a, a, 0.0, 0)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise DomainError("gains must be finite and non-negative")
    vs, Q, res, it = _fixed_point(a, tau, tol, max_iter)
    d = (1.0 + vs) ** 2
    if coupling == "corrected":
        J = np.outer(a, a / d) * Q**2 / tau
    elif coupling == "literal":
        J = np.outer(a / d, a) * Q**2 / tau
    else:
        raise DomainError(f"unknown coupling {coupling!r}")
    r = a * Q**2
    vs_hat = np.linalg.solve(np.eye(len(a)) - J, r)
    Q_bar = (1.0 + np.sum(a * vs_hat / d) / tau) * Q**2
    return DeterministicEquivalents(float(Q), float(Q_bar), vs, vs_hat, res, it)


def asymptotic_mse(beta_k, detected_others, missed, false, E, tau, form="literal",
                   coupling="corrected"):
    """Large-system channel-estimation error of device ``k`` at one AP.

    Parameters
    ----------
    beta_k : float
        Gain of the device of interest (must itself be detected).
    detected_others : array_like
        Gains of correctly detected devices other than ``k``.
    missed, false : array_like
        Gains of missed devices and of falsely detected devices.
    form : {"literal", "mse"}
        ``"literal"`` returns ``beta - E|g_hat|^2`` with the missed term
        subtracted and the false term added. ``"mse"`` flips both signs and
        gives ``E|g - g_hat|^2``, which differs once detection is imperfect.
    """
    if not beta_k > 0:
        raise DomainError("device of interest must be detected with positive gain")
    others = np.asarray(detected_others, dtype=float).ravel()
    missed = np.asarray(missed, dtype=float).ravel()
    false = np.asarray(false, dtype=float).ravel()
    hat_minus_k = np.concatenate([others, false])
    de = deterministic_equivalents(hat_minus_k, E, tau, coupling=coupling)
    gain = 1.0 + E * beta_k * de.Q
    base = beta_k / gain
    t_missed = np.sum(E**2 * beta_k**2 * missed * de.Q_bar / (tau * gain**2))
    t_false = 0.0
    for j in range(len(false)):
        rest = np.concatenate([others, np.delete(false, j)])
        dj = deterministic_equivalents(rest, E, tau, coupling=coupling)
        t_false += (E**2 * beta_k**2 * false[j] * dj.Q_bar
                    / (tau * gain**2 * (1.0 + E * false[j] * dj.Q) ** 2))
    if form == "literal":
        return float(base - t_missed + t_false)
    if form == "mse":
        return float(base + t_missed - t_false)
    raise DomainError(f"unknown form {form!r}")
