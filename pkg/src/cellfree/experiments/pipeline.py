"""End-to-end Monte Carlo of Stage I for one device of interest.

Every trial draws fresh pilots, activities, channels and noise from its own
seeded stream, runs AMP at each cooperating AP and keeps the per-AP
statistics of the device of interest so that any fusion weights can be
applied afterwards to the same trials.
"""

from dataclasses import dataclass

import numpy as np

from ..amp import amp_run, state_evolution
from ..detection import UncoveredDevice
from ..geometry import Disk, NetworkRealization, PathLossModel, Rectangle, sample_ppp
from ..signal import complex_normal, generate_pilots, sample_activity

__all__ = ["trial_rng", "local_network", "FusedTrials", "run_fused_trials", "se_thetas"]


def trial_rng(seed, *index):
    """Independent stream for trial ``index`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, index)]))


def local_network(lambda_a, lambda_d, r0_km, r1_km, seed, model=None):
    """Network around a device of interest placed at the origin (index 0).

    APs cover the disk of radius ``r1_km`` (the only ones that cooperate
    for the device) and other devices the disk of radius ``r0_km + r1_km``
    (everyone any of those APs serves).
    """
    rng = trial_rng(seed, 0)
    aps = sample_ppp(lambda_a, Disk(r1_km), rng)
    others = sample_ppp(lambda_d, Disk(r0_km + r1_km), rng)
    devices = np.vstack([np.zeros((1, 2)), others])
    w = r0_km + r1_km
    return NetworkRealization(aps, devices, lambda_a, lambda_d, r0_km, r1_km,
                              model=model or PathLossModel(), window=Rectangle.centered(w),
                              seed=seed)


def se_thetas(net, aps, E, epsilon, tau, N, iterations=60, tol=1e-6, form="decoupled"):
    """Converged state-evolution noise level of each AP for its own devices."""
    out = []
    for m in aps:
        betas = net.beta[m, net.served_devices(m)]
        th = state_evolution(E, epsilon, betas, tau, N, iterations=iterations, tol=tol,
                             method="quadrature", form=form)
        out.append(th[-1])
    return np.array(out)


@dataclass
class FusedTrials:
    """Per-trial statistics of the device of interest at its cooperating APs."""

    aps: np.ndarray
    betas: np.ndarray
    alpha: np.ndarray  # (trials,)
    mu: np.ndarray  # (aps, trials)
    nu: np.ndarray  # (aps, trials)
    theta_hat: np.ndarray  # (aps, trials)


def run_fused_trials(net, target, N, trials, E, epsilon, tau, seed, iterations=10,
                     stratified=True, batch=50, first_trial=0):
    """Simulate ``trials`` slots and collect AMP statistics of ``target``.

    With ``stratified`` the device of interest alternates active / inactive
    across trials (even trials active), so both conditional error rates are
    estimated from half the trials each. All other devices are active with
    probability ``epsilon``.
    """
    aps = net.cooperating_aps(target)
    if len(aps) == 0:
        raise UncoveredDevice(f"device {target} has no AP within the cooperation radius")
    served = [net.served_devices(m) for m in aps]
    union = np.unique(np.concatenate(served))
    local = {int(k): i for i, k in enumerate(union)}
    cols = [np.array([local[int(k)] for k in D]) for D in served]
    tpos = [int(np.flatnonzero(D == target)[0]) for D in served]
    U = len(union)
    sqrtE = np.sqrt(E)

    alpha = np.empty(trials, dtype=np.int8)
    mu = np.empty((len(aps), trials))
    nu = np.empty((len(aps), trials))
    th = np.empty((len(aps), trials))
    for lo in range(0, trials, batch):
        hi = min(trials, lo + batch)
        B = hi - lo
        pil = np.empty((B, tau, U), dtype=complex)
        act = np.empty((B, U), dtype=np.int8)
        Ys = [np.empty((B, tau, N), dtype=complex) for _ in aps]
        for b in range(B):
            i = first_trial + lo + b
            rng = trial_rng(seed, 1, i)
            pil[b] = generate_pilots(tau, U, rng)
            act[b] = sample_activity(epsilon, U, rng)
            if stratified:
                act[b, local[int(target)]] = 1 - (i % 2)
            for j, m in enumerate(aps):
                g = complex_normal(rng, (len(cols[j]), N)) * np.sqrt(net.beta[m, served[j]])[:, None]
                X = act[b, cols[j], None] * g
                Ys[j][b] = sqrtE * (pil[b][:, cols[j]] @ X) + complex_normal(rng, (tau, N))
        alpha[lo:hi] = act[:, local[int(target)]]
        for j, m in enumerate(aps):
            res = amp_run(Ys[j], pil[:, :, cols[j]], net.beta[m, served[j]], E, epsilon,
                          iterations=iterations)
            mu[j, lo:hi] = res.stats.mu[:, tpos[j]]
            nu[j, lo:hi] = res.stats.nu[:, tpos[j]]
            th[j, lo:hi] = res.theta[:, 0]
    return FusedTrials(aps, net.beta[aps, target], alpha, mu, nu, th)
