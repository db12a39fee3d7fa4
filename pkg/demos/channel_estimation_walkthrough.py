"""Stage II at one AP: LMMSE re-estimation of a device's channel when the
detected set is exact, misses a device, or contains a false alarm.

    python3 demos/channel_estimation_walkthrough.py
"""

import numpy as np

from cellfree.analysis import asymptotic_mse
from cellfree.experiments import ExperimentConfig
from cellfree.experiments.figures import mse_scenario_trials, scenario_sets, select_target_geometry
from cellfree.experiments.pipeline import trial_rng

cfg = ExperimentConfig()
net, _ = select_target_geometry(cfg)
m = net.cooperating_aps(0)[0]
D = net.served_devices(m)
b = net.beta[m, D]
t = int(np.flatnonzero(D == 0)[0])
active = [int(k) for k in np.flatnonzero(trial_rng(0, 3, m).uniform(size=len(D)) < cfg.epsilon)]
print(f"AP {m}: {len(D)} devices in range, {len(set(active) | {t})} active this slot")

for kind in ("perfect", "missed", "false"):
    act, det, missed, false = scenario_sets(b, active, t, kind)
    others = [b[k] for k in det if k != t and k not in false]
    ebar = asymptotic_mse(b[t], others, b[missed], b[false], cfg.E, cfg.tau, form="mse")
    mc = mse_scenario_trials(b, det, act, t, 8, cfg.E, cfg.tau, 300, seed=5)
    print(f"{kind:>8}: large-system MSE/beta {ebar / b[t]:.4f}, simulated {mc.mean() / b[t]:.4f}")
