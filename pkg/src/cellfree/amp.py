"""Per-AP vector AMP with the Bernoulli-Gaussian MMSE denoiser and its
scalar state evolution.

Array conventions: an AP observes ``Y`` of shape ``(..., tau, N)`` through
pilots ``(..., tau, K)``; the signal ``X`` is ``(..., K, N)`` with one row
per served device. Leading dimensions are batch (independent trials).
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, roots_genlaguerre, gammaln
from scipy.stats import gamma as gamma_dist

__all__ = [
    "DenoiserStats",
    "AmpState",
    "AmpResult",
    "AmpDivergenceError",
    "denoise",
    "denoiser_jacobian",
    "state_evolution_init",
    "state_evolution_step",
    "state_evolution",
    "amp_run",
    "write_trace_csv",
]


class AmpDivergenceError(RuntimeError):
    """Residual energy blew up; ``state`` holds the last AmpState."""

    def __init__(self, msg, state):
        super().__init__(msg)
        self.state = state


@dataclass
class DenoiserStats:
    mu: np.ndarray
    nu: np.ndarray
    xi: np.ndarray
    phi: np.ndarray
    dxi: np.ndarray  # d xi / d ||x_hat||^2


@dataclass
class AmpState:
    iterate: np.ndarray
    residual: np.ndarray
    theta: float
    t: int


@dataclass
class AmpResult:
    x_hat: np.ndarray
    x: np.ndarray
    theta: np.ndarray
    stats: DenoiserStats
    thetas: list
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)


def _log_prior_odds(epsilon):
    if epsilon <= 0.0:
        return -np.inf
    if epsilon >= 1.0:
        return np.inf
    return np.log(epsilon) - np.log1p(-epsilon)


def _posterior_weight(u, beta, theta, epsilon, N):
    """phi, mu, nu and d(phi)/du as functions of ``u = ||x_hat||^2``."""
    c = 1.0 / theta - 1.0 / (beta + theta)
    mu = c * u / N
    nu = np.log1p(beta / theta)
    z = N * (mu - nu) + _log_prior_odds(epsilon)
    phi = expit(z)
    dphi = phi * (1.0 - phi) * c
    return phi, mu, nu, dphi


def denoise(x_hat, beta, theta, epsilon):
    """MMSE shrinkage ``eta(x_hat) = xi * x_hat``.

    ``x_hat`` has the antenna axis last; ``beta`` and ``theta`` broadcast
    against ``x_hat[..., 0]``.
    """
    x_hat = np.asarray(x_hat)
    N = x_hat.shape[-1]
    u = np.sum(np.abs(x_hat) ** 2, axis=-1)
    beta = np.asarray(beta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    phi, mu, nu, dphi = _posterior_weight(u, beta, theta, epsilon, N)
    b = beta / (beta + theta)
    xi = phi * b
    stats = DenoiserStats(mu=mu, nu=np.broadcast_to(nu, mu.shape), xi=xi, phi=phi, dxi=b * dphi)
    return xi[..., None] * x_hat, stats


def denoiser_jacobian(x_hat, beta, theta, epsilon):
    """Wirtinger Jacobian ``d eta_i / d x_hat_j = xi delta_ij + xi' x_i conj(x_j)``.

    Returns an ``(..., N, N)`` array for each input vector.
    """
    x_hat = np.asarray(x_hat)
    _, st = denoise(x_hat, beta, theta, epsilon)
    N = x_hat.shape[-1]
    outer = x_hat[..., :, None] * np.conj(x_hat)[..., None, :]
    return st.xi[..., None, None] * np.eye(N) + st.dxi[..., None, None] * outer


def state_evolution_init(E, epsilon, betas, tau, weights=None, population=None):
    """theta_0 = 1/E + (eps/tau) * sum of device gains.

    With ``weights`` (a probability vector over ``betas``) and
    ``population`` the sum is replaced by ``population * E_w[beta]``; this is
    the large-network form where gains follow a law rather than a list.
    """
    betas = np.asarray(betas, dtype=float)
    return 1.0 / E + epsilon * _device_sum(betas, weights, population) / tau


def _device_sum(values, weights, population):
    if weights is None:
        return float(np.sum(values))
    return float(population * np.sum(np.asarray(weights) * values))


def _mc_device_terms(theta, epsilon, betas, N, mc_samples, rng, form):
    G = (rng.standard_normal((mc_samples, N)) + 1j * rng.standard_normal((mc_samples, N))) / np.sqrt(2)
    V = (rng.standard_normal((mc_samples, N)) + 1j * rng.standard_normal((mc_samples, N))) / np.sqrt(2)
    act = (rng.uniform(size=mc_samples) < epsilon).astype(float)
    g2 = np.sum(np.abs(G) ** 2, axis=1)
    v2 = np.sum(np.abs(V) ** 2, axis=1)
    gv = np.real(np.sum(np.conj(G) * V, axis=1))
    out = np.empty(len(betas))
    # chunk over devices to bound memory at (chunk, mc_samples)
    for lo in range(0, len(betas), 256):
        b = betas[lo:lo + 256, None]
        x2 = act * b * g2
        cross = act * np.sqrt(b * theta) * gv
        u = x2 + theta * v2 + 2 * cross
        phi, *_ = _posterior_weight(u, b, theta, epsilon, N)
        xi = phi * b / (b + theta)
        val = (xi - 1) ** 2 * x2 + xi**2 * theta * v2
        if form == "mse":
            val = val + 2 * xi * (xi - 1) * cross
        out[lo:lo + 256] = val.mean(axis=1)
    return out


def _gamma_nodes(N, n):
    """Nodes/weights for E[f(g)], g ~ Gamma(N, 1)."""
    if N <= 60:
        x, w = roots_genlaguerre(n, N - 1)
        return x, w / np.exp(gammaln(N))
    p = (np.arange(n) + 0.5) / n
    return gamma_dist.ppf(p, N), np.full(n, 1.0 / n)


def _quad_device_terms(theta, epsilon, betas, N, n_nodes, form):
    g, w = _gamma_nodes(N, n_nodes)
    b = betas[:, None]
    shrink = b / (b + theta)
    keep = theta / (b + theta)
    resid = N * b * theta / (b + theta)
    # active: u ~ (beta + theta) Gamma(N, 1)
    u1 = (b + theta) * g
    phi1, *_ = _posterior_weight(u1, b, theta, epsilon, N)
    xi1 = phi1 * shrink
    if form == "mse":
        f1 = (xi1 - shrink) ** 2 * u1 + resid
    else:
        f1 = (xi1 - 1) ** 2 * (shrink**2 * u1 + resid) + xi1**2 * (keep**2 * u1 + resid)
    # inactive: u ~ theta Gamma(N, 1), x = 0
    u0 = theta * g
    phi0, *_ = _posterior_weight(u0, b, theta, epsilon, N)
    xi0 = phi0 * shrink
    f0 = xi0**2 * u0
    return epsilon * (f1 @ w) + (1 - epsilon) * (f0 @ w)


def state_evolution_step(theta, E, epsilon, betas, tau, N, mc_samples=1000, rng=None,
                         form="decoupled", method="mc", weights=None, population=None,
                         n_nodes=96):
    """One state-evolution update theta_t -> theta_{t+1}.

    ``form="decoupled"`` averages the signal and noise terms separately,
    ``(xi-1)^2 ||X||^2 + xi^2 theta ||V||^2``; ``form="mse"`` keeps the cross term, i.e. the exact denoiser MSE
    ``E||eta(X + sqrt(theta) V) - X||^2``. ``method`` selects Monte Carlo
    over (X, V) or Gauss-Laguerre quadrature over ``||x_hat||^2``.
    """
    betas = np.asarray(betas, dtype=float)
    if form not in ("decoupled", "mse"):
        raise ValueError(f"unknown state-evolution form {form!r}")
    if method == "mc":
        rng = np.random.default_rng() if rng is None else rng
        terms = _mc_device_terms(theta, epsilon, betas, N, mc_samples, rng, form)
    elif method == "quadrature":
        terms = _quad_device_terms(theta, epsilon, betas, N, n_nodes, form)
    else:
        raise ValueError(f"unknown method {method!r}")
    return 1.0 / E + _device_sum(terms, weights, population) / (N * tau)


def state_evolution(E, epsilon, betas, tau, N, iterations=10, tol=1e-4, **step_kw):
    """Run the recursion from theta_0; stop early on relative change < tol.

    Returns the list ``[theta_0, ..., theta_T]``.
    """
    weights = step_kw.get("weights")
    population = step_kw.get("population")
    thetas = [state_evolution_init(E, epsilon, betas, tau, weights, population)]
    for _ in range(iterations):
        nxt = state_evolution_step(thetas[-1], E, epsilon, betas, tau, N, **step_kw)
        thetas.append(nxt)
        if tol is not None and abs(nxt - thetas[-2]) / thetas[-2] < tol:
            break
    return thetas


def amp_run(Y, pilots, betas, E, epsilon, iterations=10, theta_schedule=None,
            online=None, tol=1e-4, keep_history=False):
    """Vector AMP at one AP.

    By default the effective noise level is estimated from the residual,
    ``||R_t||_F^2 / (tau N)``, per trial. Passing ``theta_schedule`` (from
    :func:`state_evolution`) uses the predicted levels instead; that mode is
    fragile when the realized number of active devices differs from its
    mean, because an underestimated level makes the denoiser overconfident.

    Returns the final pseudo-observations ``x_hat`` (signal plus
    approximately Gaussian noise), the last denoised iterate and the
    per-device detection statistics.
    """
    Y = np.asarray(Y) / np.sqrt(E)
    pilots = np.asarray(pilots)
    tau, N = Y.shape[-2], Y.shape[-1]
    K = pilots.shape[-1]
    betas = np.asarray(betas, dtype=float)
    if online is None:
        online = theta_schedule is None
    if theta_schedule is None and not online:
        raise ValueError("either a theta schedule or online=True is required")
    if theta_schedule is not None and not online:
        iterations = min(iterations, len(theta_schedule) - 1)
    batch = np.broadcast_shapes(Y.shape[:-2], pilots.shape[:-2])
    X = np.zeros(batch + (K, N), dtype=complex)
    R = np.broadcast_to(Y, batch + (tau, N)).copy()
    theta0 = None
    thetas, history, trace = [], [], []
    eye = np.eye(N)

    def current_theta(t):
        if online:
            return np.sum(np.abs(R) ** 2, axis=(-2, -1))[..., None] / (tau * N)
        return theta_schedule[t]

    # each trial stops on its own convergence test; finished trials keep
    # their outputs while the rest iterate, so results do not depend on
    # which other trials share the batch
    done = np.zeros(batch, dtype=bool)
    out = None
    t = 0
    while True:
        # Psi^H R computed as (R^H Psi)^H reads the pilots contiguously
        x_hat = np.conj(np.swapaxes(np.conj(np.swapaxes(R, -1, -2)) @ pilots, -1, -2)) + X
        theta = current_theta(t)
        resid_energy = np.sum(np.abs(R) ** 2, axis=(-2, -1)) / (tau * N)
        if theta0 is None:
            theta0 = resid_energy
        trace.append((t, float(np.mean(theta)), float(np.sqrt(np.mean(resid_energy * tau * N)))))
        if np.any(~done & (resid_energy > 1e6 * theta0)):
            raise AmpDivergenceError(
                f"AMP residual diverged at iteration {t}", AmpState(X, R, float(np.mean(theta)), t)
            )
        thetas.append(theta)
        if keep_history:
            history.append(x_hat)
        eta, st = denoise(x_hat, betas, theta, epsilon)
        if online and t > 0:
            th_now = np.broadcast_to(theta, batch + (1,))[..., 0]
            th_prev = np.broadcast_to(thetas[-2], batch + (1,))[..., 0]
            newly = ~done & (np.abs(th_now - th_prev) / th_prev < tol)
        else:
            newly = np.zeros(batch, dtype=bool)
        last = t == iterations
        take = ~done if last else newly
        cur = _Outputs(x_hat, eta, np.broadcast_to(theta, batch + (1,)), st)
        out = cur if out is None else out.merge(cur, take)
        done = done | newly
        if last or np.all(done):
            break
        onsager = st.xi.sum(axis=-1)[..., None, None] * eye + (
            np.conj(np.swapaxes(x_hat, -1, -2)) @ (st.dxi[..., None] * x_hat)
        )
        R = Y - pilots @ eta + (R @ onsager) / tau
        X = eta
        t += 1
    theta_out = out.theta if np.ndim(theta) else theta
    return AmpResult(x_hat=out.x_hat, x=out.eta, theta=theta_out, stats=out.stats, thetas=thetas,
                     history=history, trace=trace)


@dataclass
class _Outputs:
    x_hat: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    stats: DenoiserStats

    def merge(self, new, take):
        """Entries of ``new`` where ``take`` (per trial), ``self`` elsewhere."""
        def pick(a, b):
            b = np.asarray(b)
            m = take.reshape(take.shape + (1,) * (b.ndim - take.ndim))
            return np.where(m, b, np.broadcast_to(a, b.shape))

        st = DenoiserStats(*(pick(getattr(self.stats, f), getattr(new.stats, f))
                             for f in ("mu", "nu", "xi", "phi", "dxi")))
        return _Outputs(pick(self.x_hat, new.x_hat), pick(self.eta, new.eta),
                        pick(self.theta, new.theta), st)


def write_trace_csv(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "theta", "residual_norm"])
        for row in trace:
            w.writerow(row)
