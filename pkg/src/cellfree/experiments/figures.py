"""Sweeps that regenerate each figure as a CSV table.

Every table has a header row and one row per x-axis point. Closed-form
columns are prefixed ``cf_``; Monte Carlo columns ``mc_`` with a matching
``_stderr`` column. A JSON sidecar (``<out>.meta.json``) records the
configuration and the trial counts used.
"""

import csv
import json
import math
import os

import numpy as np

from ..analysis import (
    asymptotic_mse,
    collocated_array_size,
    converged_theta,
    cooperative_error_samples,
    coverage_cellfree_mc,
    coverage_collocated,
    coverage_collocated_mc,
    coverage_smallcell,
    error_probability,
)
from ..detection import empirical_error_rates, fuse_decide, weights_equal, weights_smallcell
from ..lmmse import empirical_channel_mse, lmmse_estimate
from ..signal import complex_normal, generate_pilots
from .pipeline import local_network, run_fused_trials, se_thetas, trial_rng

__all__ = ["FIGURES", "run_figure", "select_target_geometry", "write_table"]


def write_table(path, header, rows, meta=None):
    """UTF-8 CSV with a header row; floats use ``repr`` so output is exact."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    if meta is not None:
        with open(path + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")


def _meta(cfg, figure, **extra):
    out = {"figure": figure, "config": cfg.to_dict(),
           "desk_scale": {"trials": cfg.trials, "realizations": cfg.realizations,
                          "sim_lambda_d": cfg.sim_lambda_d,
                          "note": "reduced trial counts and device density relative to full scale"}}
    out.update(extra)
    return out


def select_target_geometry(cfg, lo=0.05, hi=0.2, max_scan=200):
    """First seed (from ``cfg.seed``) whose device of interest is neither
    trivially easy nor hopeless: single-antenna closed-form error in ``[lo, hi]``.

    Falls back to the scanned seed with the largest error below ``hi``.
    """
    best = None
    for s in range(cfg.seed, cfg.seed + max_scan):
        net = local_network(cfg.lambda_a, cfg.sim_lambda_d, cfg.r0_km, cfg.r1_km, s, cfg.path_loss)
        aps = net.cooperating_aps(0)
        if len(aps) == 0:
            continue
        th = se_thetas(net, aps, cfg.E, cfg.epsilon, cfg.tau, 1, form=cfg.se_form)
        p = error_probability(net.beta[aps, 0], th, weights_equal(aps).weights, 1, cfg.epsilon,
                              cfg.omega_form)
        if lo <= p <= hi:
            return net, s
        if p < hi and (best is None or p > best[0]):
            best = (p, net, s)
    if best is None:
        raise RuntimeError("no usable geometry found")
    return best[1], best[2]


def _detection_rows(cfg, net, xs, key):
    rows = []
    aps = net.cooperating_aps(0)
    for x in xs:
        N = x if key == "N" else cfg.n_antennas
        tau = x if key == "tau" else cfg.tau
        E = tau * cfg.rho
        th = se_thetas(net, aps, E, cfg.epsilon, tau, N, form=cfg.se_form)
        ft = run_fused_trials(net, 0, N, cfg.trials, E, cfg.epsilon, tau, cfg.seed + 7919 * int(x),
                              iterations=cfg.amp_iterations)
        row = [x]
        for w in (weights_equal(aps), weights_smallcell(aps, ft.betas)):
            st = empirical_error_rates(ft.alpha, fuse_decide(ft.mu, ft.nu, w), cfg.epsilon)
            cf = error_probability(ft.betas, th, w.weights, N, cfg.epsilon, cfg.omega_form)
            row += [float(cf), st.p_error, st.stderr]
        row.append(cfg.trials)
        rows.append(row)
    return rows


_DET_HEADER = ["cf_equal", "mc_equal", "mc_equal_stderr",
               "cf_smallcell", "mc_smallcell", "mc_smallcell_stderr", "trials"]


def fig2(cfg, out, antennas=(1, 2, 4, 8)):
    net, s = select_target_geometry(cfg)
    rows = _detection_rows(cfg, net, antennas, "N")
    write_table(out, ["n_antennas"] + _DET_HEADER, rows, _meta(cfg, "fig2", geometry_seed=s))
    return rows


def fig3(cfg, out, taus=(40, 60, 80, 100, 140)):
    net, s = select_target_geometry(cfg)
    rows = _detection_rows(cfg, net, taus, "tau")
    write_table(out, ["tau"] + _DET_HEADER, rows, _meta(cfg, "fig3", geometry_seed=s))
    return rows


def mse_scenario_trials(betas, detected, active, target, N, E, tau, trials, seed):
    """Monte Carlo of the LMMSE error of ``target`` over pilot/channel/noise draws.

    Returns per-trial mean ``|g - g_hat|^2`` over antennas.
    """
    K = len(betas)
    act = np.zeros(K)
    act[list(active)] = 1.0
    err = np.empty(trials)
    for i in range(trials):
        rng = trial_rng(seed, 2, i)
        P = generate_pilots(tau, K, rng)
        G = complex_normal(rng, (K, N)) * np.sqrt(betas)[:, None]
        Y = np.sqrt(E) * (P @ (act[:, None] * G)) + complex_normal(rng, (tau, N))
        Gh = lmmse_estimate(Y, P, betas, detected, E)
        err[i] = empirical_channel_mse(G[[target]], Gh[[target]])[0][0]
    return err


def scenario_sets(betas, active, target, kind):
    """Detected set for ``kind`` in {perfect, missed, false}.

    ``missed`` drops the strongest other active device; ``false`` adds the
    strongest inactive one.
    """
    active = sorted(set(active) | {target})
    detected = list(active)
    missed, false = [], []
    if kind == "missed":
        cand = [k for k in active if k != target]
        if cand:
            j = max(cand, key=lambda k: betas[k])
            detected.remove(j)
            missed = [j]
    elif kind == "false":
        cand = [k for k in range(len(betas)) if k not in active]
        if cand:
            j = max(cand, key=lambda k: betas[k])
            detected.append(j)
            false = [j]
    elif kind != "perfect":
        raise ValueError(f"unknown scenario {kind!r}")
    return active, sorted(detected), missed, false


def fig4(cfg, out, scenarios=("perfect", "missed", "false"), antennas=8):
    net, s = select_target_geometry(cfg)
    aps = net.cooperating_aps(0)
    aps = aps[np.argsort(-net.beta[aps, 0], kind="stable")]
    rows = []
    for m in aps:
        D = net.served_devices(m)
        b = net.beta[m, D]
        t = int(np.flatnonzero(D == 0)[0])
        rng = trial_rng(cfg.seed, 3, int(m))
        act = [int(k) for k in np.flatnonzero(rng.uniform(size=len(D)) < cfg.epsilon)]
        for kind in scenarios:
            active, det, missed, false = scenario_sets(b, act, t, kind)
            others = [b[k] for k in det if k != t and k not in false]
            cf = asymptotic_mse(b[t], others, b[missed], b[false], cfg.E, cfg.tau, form="mse")
            cf_lit = asymptotic_mse(b[t], others, b[missed], b[false], cfg.E, cfg.tau, form="literal")
            err = mse_scenario_trials(b, det, active, t, antennas, cfg.E, cfg.tau, cfg.trials,
                                      cfg.seed + 104729 * int(m))
            rows.append([int(m), float(b[t]), kind, cf, cf_lit, float(err.mean()),
                         float(err.std(ddof=1) / math.sqrt(len(err))), cfg.trials])
    write_table(out, ["ap", "beta", "scenario", "cf_mse", "cf_literal", "mc_mse", "mc_mse_stderr",
                      "trials"], rows, _meta(cfg, "fig4", geometry_seed=s, antennas=antennas))
    return rows


def _samples(cfg, N, lambda_a, r1_km, strategy, rng):
    th = converged_theta(cfg.E, cfg.epsilon, cfg.tau, N, cfg.lambda_d, cfg.r0_km,
                         cfg.path_loss, form=cfg.se_form)
    return cooperative_error_samples(N, th, cfg.epsilon, lambda_a, r1_km, cfg.realizations, rng,
                                     cfg.path_loss, weight_strategy=strategy,
                                     devices_per_realization=cfg.devices_per_realization,
                                     grid_resolution=cfg.grid_resolution)


def fig5(cfg, out, radii=(0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)):
    rows = []
    for r1 in radii:
        row = [r1]
        for k, strat in enumerate(("equal", "smallcell")):
            rng = trial_rng(cfg.seed, 5, int(round(r1 * 1000)), k)
            s = _samples(cfg, cfg.n_antennas, cfg.lambda_a, r1, strat, rng)
            per = s.mean(axis=1)
            row += [float(per.mean()), float(per.std(ddof=1) / math.sqrt(len(per)))]
        rows.append(row)
    write_table(out, ["r1_km", "cf_mean_equal", "cf_mean_equal_stderr",
                      "cf_mean_smallcell", "cf_mean_smallcell_stderr"], rows, _meta(cfg, "fig5"))
    return rows


def fig6(cfg, out, densities=(2.0, 5.0), total=10.0,
         levels=(0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)):
    cols, header = [], ["quantile"]
    for lam in densities:
        N = int(round(total / lam))
        for k, strat in enumerate(("equal", "smallcell")):
            rng = trial_rng(cfg.seed, 6, int(lam * 1000), k)
            s = _samples(cfg, N, lam, cfg.r1_km, strat, rng).ravel()
            cols.append(np.quantile(s, levels))
            header.append(f"cf_{strat}_lambda{lam:g}_N{N}")
    rows = [[q] + [float(c[i]) for c in cols] for i, q in enumerate(levels)]
    write_table(out, header, rows, _meta(cfg, "fig6", total_antenna_density=total))
    return rows


def coverage_point(cfg, N, rng_key=0):
    """Collocated, small-cell and cell-free coverage at ``N`` antennas per AP."""
    model = cfg.path_loss
    M = collocated_array_size(cfg.lambda_a, cfg.r0_km)
    th = converged_theta(cfg.E, cfg.epsilon, cfg.tau, N, cfg.lambda_d, cfg.r0_km, model,
                         form=cfg.se_form)
    th_c = converged_theta(cfg.E, cfg.epsilon, cfg.tau, N * M, cfg.lambda_d, cfg.r0_km, model,
                           form=cfg.se_form)
    dpr = cfg.devices_per_realization
    cc = coverage_collocated(N, M, th_c, cfg.epsilon, cfg.p0, model, cfg.r0_km)
    ccm = coverage_collocated_mc(N, M, th_c, cfg.epsilon, cfg.p0, cfg.realizations,
                                 trial_rng(cfg.seed, 7, N, rng_key, 0), model, cfg.r0_km, dpr)
    sc = coverage_smallcell(N, th, cfg.epsilon, cfg.p0, cfg.lambda_a, model)
    scm = coverage_cellfree_mc(N, th, cfg.epsilon, cfg.p0, cfg.lambda_a, cfg.r1_km,
                               cfg.realizations, trial_rng(cfg.seed, 7, N, rng_key, 1), model,
                               "smallcell", dpr, search_km=cfg.r0_km)
    cf = coverage_cellfree_mc(N, th, cfg.epsilon, cfg.p0, cfg.lambda_a, cfg.r1_km,
                              cfg.realizations, trial_rng(cfg.seed, 7, N, rng_key, 2), model,
                              cfg.weight_strategy, dpr, grid_resolution=cfg.grid_resolution)
    return [N, M, cc, ccm.value, ccm.stderr, sc, scm.value, scm.stderr, cf.value, cf.stderr]


_COV_HEADER = ["n_antennas", "collocated_aps", "cf_collocated", "mc_collocated",
               "mc_collocated_stderr", "cf_smallcell", "mc_smallcell", "mc_smallcell_stderr",
               "mc_cellfree", "mc_cellfree_stderr"]


def fig7(cfg, out, antennas=tuple(range(1, 9))):
    rows = [coverage_point(cfg, N) for N in antennas]
    write_table(out, _COV_HEADER, rows, _meta(cfg, "fig7"))
    return rows


def coverage(cfg, out):
    rows = [coverage_point(cfg, cfg.n_antennas)]
    write_table(out, _COV_HEADER, rows, _meta(cfg, "coverage"))
    return rows


FIGURES = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7,
           "coverage": coverage}


def run_figure(figure_id, cfg, output_path):
    """Run one sweep, write its CSV and return the rows."""
    try:
        fn = FIGURES[figure_id]
    except KeyError:
        raise ValueError(f"unknown figure {figure_id!r}; choose from {sorted(FIGURES)}") from None
    return fn(cfg, output_path)
