"""Batch experiment commands: sample-fbm, solve, lan, gamma, mle-fou.

Every command reads one ``[command]`` section from an INI config, runs a
seeded Monte Carlo and writes CSV reports plus a resolved-config sidecar
into the output directory.  Replicas are partitioned into fixed-size
batches with one RNG stream per batch index and results are reduced in
batch order, so the emitted files are byte-identical for any
``--threads`` value.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest, norm

from .config import load_config, write_sidecar
from .errors import BracketError, ConfigError, DegenerateVarianceError, FraclanError
from .fbm import (
    CouplingMode,
    build_fbm_from_w,
    fbm_covariance,
    make_coupled_driver,
    recover_w_from_fbm,
    sample_fbm_exact,
    sample_fgn_batch,
)
from .fraccalc import marchaud_derivative_values
from .gamma import (
    GammaMethod,
    gamma_ergodic,
    gamma_fou_reference,
    gamma_stationary_quad,
)
from .grids import Hurst, TimeGrid
from .rng import replica_stream
from .sde import SdeConfig, drift_by_name, euler_solve, euler_solve_batch

__all__ = ["KsReport", "ks_test", "main"]

BATCH_SIZE = 100


def _g17(x) -> str:
    return "%.17g" % float(x)


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_g17(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
            fh.write("\n")


def _write_path_csv(path, times: np.ndarray, values: np.ndarray) -> None:
    values = np.atleast_2d(values.T).T  # (n_points, d)
    header = "t," + ",".join(f"component_{c}" for c in range(values.shape[1]))
    rows = (
        [times[k]] + [values[k, c] for c in range(values.shape[1])]
        for k in range(len(times))
    )
    _write_csv(path, header, rows)


def _write_histogram(path, samples: np.ndarray, bins: int = 30) -> None:
    counts, edges = np.histogram(samples, bins=bins)
    _write_csv(
        path,
        "bin_left,bin_right,count",
        ([edges[i], edges[i + 1], int(counts[i])] for i in range(bins)),
    )


def _run_batches(worker, n_batches: int, threads: int) -> list:
    """Map worker over batch indices; reduction order fixed by index."""
    if threads <= 1:
        return [worker(b) for b in range(n_batches)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(worker, range(n_batches)))


def _batch_bounds(m: int) -> list[tuple[int, int, int]]:
    return [
        (b, lo, min(lo + BATCH_SIZE, m))
        for b, lo in enumerate(range(0, m, BATCH_SIZE))
    ]


# ---------------------------------------------------------------------------
# distributional test
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KsReport:
    statistic: float
    p_value: float
    n: int
    ref_mean: float
    ref_var: float


def ks_test(samples: np.ndarray, ref_mean: float, ref_var: float) -> KsReport:
    """One-sample Kolmogorov-Smirnov test against N(ref_mean, ref_var)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 20:
        raise ValueError(f"KS test needs n >= 20 samples, got {samples.size}")
    if ref_var <= 0:
        raise DegenerateVarianceError(
            f"reference variance must be positive, got {ref_var}"
        )
    res = kstest(samples, cdf=norm(loc=ref_mean, scale=np.sqrt(ref_var)).cdf)
    return KsReport(float(res.statistic), float(res.pvalue), samples.size, ref_mean, ref_var)


# ---------------------------------------------------------------------------
# shared batched machinery
# ---------------------------------------------------------------------------


def _coupled_batch(grid: TimeGrid, h: Hurst, rng, m: int, t_minus_factor: float):
    """m coupled (W, B) replicas, shapes (m, n+1); moving-average coupling."""
    n_left = int(round(t_minus_factor * grid.horizon / grid.step))
    dw = rng.standard_normal((m, n_left + grid.n_steps)) * np.sqrt(grid.step)
    w_full = np.concatenate(
        [np.zeros((m, 1)), np.cumsum(dw, axis=1)], axis=1
    )
    b, _ = build_fbm_from_w(w_full, h, grid)
    w = w_full[:, n_left:] - w_full[:, [n_left]]
    return w, b


def _lan_batch(drift, theta, u, h, grid, tau, t_minus_factor, m, rng, y0):
    """Per-replica LAN quantities for one batch: columns of the results CSV."""
    dt = grid.step
    w, b = _coupled_batch(grid, h, rng, m, t_minus_factor)
    cfg = SdeConfig(y0=y0, sigma=[[1.0]], theta=theta, grid=grid)
    y = euler_solve_batch(cfg, drift, np.diff(b, axis=1))[:, :, 0]

    rt = np.sqrt(tau)
    theta_tau = np.asarray(theta, dtype=float) + np.asarray(u, dtype=float) / rt

    def dfrac(x):
        return marchaud_derivative_values(x, dt, h.alpha, f_left=x[:, 0])

    yy = y[:, :, None]
    big_g = dfrac((drift.bhat(yy, np.asarray(theta, float)) @ np.asarray(u, float))[..., 0])
    dg = dfrac((drift.b(yy, theta_tau) - drift.b(yy, np.asarray(theta, float)))[..., 0])
    s_rem = dg - big_g / rt
    g0 = dfrac(drift.b(yy, np.asarray(theta, float))[..., 0])

    dw = np.diff(w, axis=1)

    def ito(f):
        return np.sum(f[:, :-1] * dw, axis=1)

    def left(f2):
        return np.sum(f2[:, :-1], axis=1) * dt

    i1 = -ito(big_g) / rt - left(big_g * big_g) / (2.0 * tau)
    i2 = ito(s_rem)
    i3 = left(s_rem * s_rem)
    i4 = left(big_g * s_rem) / rt
    total = i1 - i2 - 0.5 * i3 - i4
    l_theta = ito(g0) + 0.5 * left(g0 * g0)
    j = np.trapezoid(big_g * big_g, dx=dt, axis=1)
    return i1, i2, i3, i4, total, l_theta, j


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sample_fbm(values: dict, out_dir: str, threads: int) -> None:
    h = Hurst(values["h"])
    grid = TimeGrid(horizon=values["tau"], n_steps=values["n_steps"])
    m = values["m_replicas"]
    seed = values["seed"]

    paths = np.empty((m, grid.n_points))
    for i in range(m):
        paths[i] = sample_fbm_exact(grid, h, replica_stream(seed, i))
    for i in range(min(m, 16)):
        _write_path_csv(os.path.join(out_dir, f"fbm_{i:04d}.csv"), grid.times, paths[i])

    # empirical vs exact covariance on an 8 x 8 grid of (s, t) pairs
    idx = np.linspace(1, grid.n_steps, 8).astype(int)
    sub = paths[:, idx]
    emp = sub.T @ sub / m
    rows = []
    for a, ia in enumerate(idx):
        for bb, ib in enumerate(idx):
            s, t = grid.times[ia], grid.times[ib]
            exact = fbm_covariance(s, t, h)
            se = np.std(sub[:, a] * sub[:, bb], ddof=1) / np.sqrt(m) if m > 1 else np.inf
            rows.append([s, t, emp[a, bb], exact, se])
    _write_csv(os.path.join(out_dir, "covariance_report.csv"), "s,t,empirical,exact,se", rows)


def cmd_solve(values: dict, out_dir: str, threads: int) -> None:
    h = Hurst(values["h"])
    dt = values["delta"]
    n = int(round(values["tau"] / dt))
    grid = TimeGrid(horizon=n * dt, n_steps=n)
    d = len(values["y0"])
    if d != 1:
        raise ConfigError("solve currently supports scalar models (len(y0) == 1)")
    drift = drift_by_name(values["drift"], d)
    cfg = SdeConfig(values["y0"], values["sigma"], values["theta"], grid)
    mode = CouplingMode(values["coupling"])
    for i in range(values["m_replicas"]):
        driver = make_coupled_driver(
            grid, h, replica_stream(values["seed"], i), mode, values["t_minus_factor"]
        )
        path = euler_solve(cfg, drift, driver)
        _write_path_csv(os.path.join(out_dir, f"solution_{i:04d}.csv"), grid.times, path.y)


def cmd_lan(values: dict, out_dir: str, threads: int) -> None:
    h = Hurst(values["h"])
    if len(values["y0"]) != 1:
        raise ConfigError("lan currently supports scalar models (len(y0) == 1)")
    drift = drift_by_name(values["drift"], 1)
    theta = np.asarray(values["theta"], dtype=float)
    u = np.asarray(values["u"], dtype=float)
    dt = values["delta"]
    m = values["m_replicas"]
    seed = values["seed"]
    summary = []

    for t_idx, tau in enumerate(values["tau_list"]):
        n = int(round(tau / dt))
        grid = TimeGrid(horizon=n * dt, n_steps=n)

        def worker(b, _tau=tau, _grid=grid, _tidx=t_idx):
            _, lo, hi = _batch_bounds(m)[b]
            rng = replica_stream(seed, _tidx * 1_000_000 + b)
            return _lan_batch(
                drift, theta, u, h, _grid, _tau,
                values["t_minus_factor"], hi - lo, rng, values["y0"],
            )

        results = _run_batches(worker, len(_batch_bounds(m)), threads)
        cols = [np.concatenate([r[k] for r in results]) for k in range(7)]
        i1, i2, i3, i4, total, l_theta, j = cols

        tag = ("%g" % tau).replace(".", "p")
        _write_csv(
            os.path.join(out_dir, f"lan_tau{tag}.csv"),
            "replica,tau,I1,I2,I3,I4,total,L_theta,J_tau",
            ([r, tau, i1[r], i2[r], i3[r], i4[r], total[r], l_theta[r], j[r]] for r in range(m)),
        )
        _write_histogram(os.path.join(out_dir, f"llr_hist_tau{tag}.csv"), total)

        gamma_hat = float(j.mean()) / tau
        mean = float(total.mean())
        var = float(total.var(ddof=1))
        se_mean = float(total.std(ddof=1)) / np.sqrt(m)
        degenerate = not np.all(np.isfinite(total)) or var == 0.0 or gamma_hat <= 0.0
        if degenerate:
            stat, pval = np.nan, np.nan
        else:
            rep = ks_test(total, -0.5 * gamma_hat, gamma_hat)
            stat, pval = rep.statistic, rep.p_value
        summary.append(
            [tau, m, gamma_hat, mean, var, se_mean, mean + 0.5 * var, stat, pval, int(degenerate)]
        )

    _write_csv(
        os.path.join(out_dir, "lan_summary.csv"),
        "tau,m,gamma_hat,mean,var,se_mean,mean_plus_half_var,ks_stat,ks_p,degenerate",
        summary,
    )


def cmd_gamma(values: dict, out_dir: str, threads: int) -> None:
    h = Hurst(values["h"])
    drift = drift_by_name(values["drift"], 1)
    theta = np.asarray(values["theta"], dtype=float)
    m_quad = values["m_quad"] or values["m_replicas"]

    estimates = [
        gamma_ergodic(
            drift, theta, h, values["tau"], values["delta"], values["m_replicas"],
            replica_stream(values["seed"], 0), sigma=values["sigma"],
        ),
        gamma_stationary_quad(
            drift, theta, h, values["r_max"], values["n_r"], m_quad,
            replica_stream(values["seed"], 1), sigma=values["sigma"],
        ),
    ]
    rows = []
    settings = {}
    for est in estimates:
        settings[est.method.value] = est.settings
        for i in range(est.q):
            for jj in range(est.q):
                rows.append([est.method.value, i, jj, est.matrix[i, jj], est.standard_errors[i, jj]])
    if drift.name == "fou":
        ref = gamma_fou_reference(float(theta[0]), h)
        rows.append([GammaMethod.FOU_REFERENCE.value, 0, 0, ref, 0.0])
        settings[GammaMethod.FOU_REFERENCE.value] = {"theta": float(theta[0]), "h": h.value}
    _write_csv(os.path.join(out_dir, "gamma_report.csv"), "method,i,j,gamma_ij,se_ij", rows)
    with open(os.path.join(out_dir, "gamma_settings.json"), "w") as fh:
        json.dump(settings, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # pairwise agreement on the leading entry
    lead = {r[0]: (r[3], r[4]) for r in rows if r[1] == 0 and r[2] == 0}
    comp = []
    names = sorted(lead)
    for a in range(len(names)):
        for bb in range(a + 1, len(names)):
            va, sa = lead[names[a]]
            vb, sb = lead[names[bb]]
            rel = abs(va - vb) / max(abs(va), abs(vb))
            comp.append([f"{names[a]}|{names[bb]}", va, vb, rel, np.hypot(sa, sb)])
    _write_csv(
        os.path.join(out_dir, "gamma_comparison.csv"),
        "pair,value_a,value_b,rel_diff,combined_se", comp,
    )


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def mle_fou_replica(a_stat: float, q_stat: float, theta_true: float, grid_points: int) -> float:
    """Maximize l(theta) = int <g_theta, dW_hat> - (1/2) int |g_theta|^2 dt
    over theta in [theta_true/10, 10 theta_true].

    With g_theta = -theta Z this is theta * A - theta^2 Q / 2 for the
    replica's sufficient statistics A = -ito(Z, W_hat) and Q = int Z^2 dt,
    where Z = D^{H-1/2}(Y - y0) / sigma and W_hat is the driftless Wiener
    reconstruction of the observed path.  A coarse geometric grid scan
    checks unimodality/interior max before the golden-section refinement.
    """
    def contrast(th):
        return th * a_stat - 0.5 * th * th * q_stat

    grid = np.geomspace(theta_true / 10.0, 10.0 * theta_true, grid_points)
    vals = contrast(grid)
    k = int(np.argmax(vals))
    if k == 0 or k == grid_points - 1:
        raise BracketError(
            f"no interior maximum in [{grid[0]:.3g}, {grid[-1]:.3g}] "
            f"(edge value {grid[k]:.3g}); data inconsistent with the model?"
        )
    return _golden_max(contrast, grid[k - 1], grid[k + 1], 1e-10 * theta_true)


def cmd_mle_fou(values: dict, out_dir: str, threads: int) -> None:
    if values["sigma"] <= 0:
        raise ConfigError("mle-fou requires sigma > 0 (zero-noise configs are degenerate)")
    h = Hurst(values["h"])
    theta_true = values["theta"]
    dt = values["delta"]
    n = int(round(values["tau"] / dt))
    grid = TimeGrid(horizon=n * dt, n_steps=n)
    tau = grid.horizon
    m = values["m_replicas"]
    seed = values["seed"]
    drift = drift_by_name("fou", 1)
    sigma = values["sigma"]

    def worker(b):
        _, lo, hi = _batch_bounds(m)[b]
        rng = replica_stream(seed, b)
        db = sample_fgn_batch(grid, h, rng, hi - lo) * sigma
        cfg = SdeConfig([0.0], [[1.0]], [theta_true], grid)
        y = euler_solve_batch(cfg, drift, db)[:, :, 0]
        z = marchaud_derivative_values(y, dt, h.alpha, f_left=y[:, 0]) / sigma
        w_hat = recover_w_from_fbm(y / sigma, h, grid)
        a_stat = -np.sum(z[:, :-1] * np.diff(w_hat, axis=1), axis=1)
        q_stat = np.trapezoid(z * z, dx=dt, axis=1)
        return a_stat, q_stat

    results = _run_batches(worker, len(_batch_bounds(m)), threads)
    a_all = np.concatenate([r[0] for r in results])
    q_all = np.concatenate([r[1] for r in results])
    theta_hat = np.array(
        [mle_fou_replica(a_all[i], q_all[i], theta_true, values["grid_points"]) for i in range(m)]
    )
    standardized = np.sqrt(tau) * (theta_hat - theta_true)

    _write_csv(
        os.path.join(out_dir, "mle_fou.csv"),
        "replica,theta_hat,standardized",
        ([i, theta_hat[i], standardized[i]] for i in range(m)),
    )
    _write_histogram(os.path.join(out_dir, "mle_hist.csv"), standardized)
    _write_csv(
        os.path.join(out_dir, "mle_summary.csv"),
        "m,mean_theta_hat,se_mean,var_standardized",
        [[m, theta_hat.mean(), theta_hat.std(ddof=1) / np.sqrt(m), standardized.var(ddof=1)]],
    )


_COMMANDS = {
    "sample-fbm": cmd_sample_fbm,
    "solve": cmd_solve,
    "lan": cmd_lan,
    "gamma": cmd_gamma,
    "mle-fou": cmd_mle_fou,
}

_PLOT_STUB = """\
# Generic plotting stub: feed any of the emitted histogram CSVs.
# usage: python plot.py llr_hist_tau100.csv
import csv, sys
with open(sys.argv[1]) as fh:
    rows = list(csv.DictReader(fh))
peak = max(float(r["count"]) for r in rows) or 1.0
for r in rows:
    print(f'{float(r["bin_left"]):+9.3f} ' + "#" * int(60 * float(r["count"]) / peak))
"""


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fraclan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out-dir", default=".")
    args = parser.parse_args(argv)

    try:
        values = load_config(args.config, args.command)
        if args.seed is not None:
            values["seed"] = args.seed
        if args.threads is not None:
            values["threads"] = args.threads
        os.makedirs(args.out_dir, exist_ok=True)
        write_sidecar(
            os.path.join(args.out_dir, "config_used.ini"), args.command, values
        )
        with open(os.path.join(args.out_dir, "plot.py"), "w") as fh:
            fh.write(_PLOT_STUB)
        _COMMANDS[args.command](values, args.out_dir, values["threads"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FraclanError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
