"""Stage I end to end for one device: AMP at each cooperating AP, fusion at
the CPU, and the Gamma-approximation error probability next to the
empirical rate.

    python3 demos/detection_walkthrough.py
"""

from cellfree.analysis import error_probability
from cellfree.detection import empirical_error_rates, fuse_decide, weights_equal, weights_smallcell
from cellfree.experiments import ExperimentConfig
from cellfree.experiments.figures import select_target_geometry
from cellfree.experiments.pipeline import run_fused_trials, se_thetas

cfg = ExperimentConfig()
net, seed = select_target_geometry(cfg)
aps = net.cooperating_aps(0)
print(f"layout seed {seed}: device 0 at the origin, cooperating APs {aps.tolist()}")
print("devices served per AP:", [len(net.served_devices(m)) for m in aps])

trials = 400
for N in (1, 2, 4):
    # effective AMP noise level each AP converges to, from state evolution
    th = se_thetas(net, aps, cfg.E, cfg.epsilon, cfg.tau, N)
    # half the trials with the device active, half inactive
    ft = run_fused_trials(net, 0, N, trials, cfg.E, cfg.epsilon, cfg.tau, seed=1)
    for name, w in (("equal", weights_equal(aps)), ("small-cell", weights_smallcell(aps, ft.betas))):
        emp = empirical_error_rates(ft.alpha, fuse_decide(ft.mu, ft.nu, w), cfg.epsilon)
        cf = error_probability(ft.betas, th, w.weights, N, cfg.epsilon)
        print(f"N={N} {name:>10}: closed form {cf:.4f}  simulated {emp.p_error:.4f} "
              f"(+/- {emp.stderr:.4f})")
