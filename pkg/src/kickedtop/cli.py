"""Batch command-line front end.

Subcommands map one-to-one onto the simulation campaigns: `poincare`,
`lyapunov-map`, `bifurcation`, `hausdorff`, `evolve` and `scaling`.
Every run writes CSV with a fixed header, floats at 17 significant
digits, and a JSON manifest alongside recording the fully resolved
parameters. Exit codes: 0 ok, 2 usage/domain error, 3 numerical
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, analysis, meanfield, qtraj
from .core import ModelParams

THREADS_ENV = "KICKEDTOP_THREADS"

# built-in defaults: the reference parameter values of the study
DEFAULTS = {
    "h": 0.5,
    "K": 0.0,
    "gamma": 0.0,
    "tau": 1.0,
    "N": 20,
    "dt_mf": 0.01,
    "dt_q": 0.01,
    "seed": 0,
    "n_traj": 1024,
    "n_periods": 1000,
    "n_init": 300,
    "d0": 1e-10,
    "bin_width": 0.01,
    "keep": 250,
    "k0_ee": 500,
    "k0_sre": 50,
}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: str, header: list[str], rows, force: bool) -> None:
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_manifest(out_path: str, subcommand: str, resolved: dict,
                   outputs: list[str]) -> str:
    body = {"subcommand": subcommand, "params": resolved}
    content_hash = hashlib.sha256(
        json.dumps(body, sort_keys=True).encode()).hexdigest()
    manifest = {
        "tool": "kickedtop",
        "version": __version__,
        "subcommand": subcommand,
        "params": resolved,
        "content_hash": content_hash,
        "seed": resolved.get("seed"),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": outputs,
    }
    path = out_path + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _resolve(args: argparse.Namespace, config: dict, keys: list[str]) -> dict:
    """Effective parameters: CLI flag > config file entry > built-in default."""
    out = {}
    for key in keys:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            out[key] = cli_val
        elif key in config:
            out[key] = config[key]
        elif key in DEFAULTS:
            out[key] = DEFAULTS[key]
    return out


def _model_params(r: dict, **extra) -> ModelParams:
    kw = dict(
        h=r.get("h", DEFAULTS["h"]),
        K=r.get("K", DEFAULTS["K"]),
        gamma=r.get("gamma", DEFAULTS["gamma"]),
        tau=r.get("tau", DEFAULTS["tau"]),
        dt_mf=r.get("dt_mf", DEFAULTS["dt_mf"]),
        dt_q=r.get("dt_q", DEFAULTS["dt_q"]),
        seed=r.get("seed", DEFAULTS["seed"]),
    )
    kw.update(extra)
    return ModelParams(**kw)


# ---------------------------------------------------------------- poincare

def cmd_poincare(args, config) -> int:
    r = _resolve(args, config, ["h", "K", "gamma", "tau", "dt_mf", "seed",
                                "n_init", "n_periods"])
    r["threads"] = args.threads
    params = _model_params(r)
    n_init, n_periods = int(r["n_init"]), int(r["n_periods"])
    if n_init < 1 or n_periods < 1:
        raise ValueError("n-init and n-periods must be positive")
    rng = np.random.default_rng(params.seed)
    Q0 = rng.uniform(-1.0, 1.0, n_init)
    P0 = rng.uniform(-np.pi / 2, np.pi / 2, n_init)
    rad = np.sqrt(1.0 - Q0**2)
    m0 = np.stack([rad * np.cos(2 * P0), rad * np.sin(2 * P0), Q0], axis=1)
    pts = meanfield.stroboscopic_points(m0, params, n_periods)
    Q, P = meanfield._qp_arrays(pts)     # (n_periods, n_init)
    rows = []
    for i in range(n_init):
        for n in range(n_periods):
            rows.append((i, n + 1, Q[n, i], P[n, i]))
    write_csv(args.out, ["init_id", "n", "Q", "P"], rows, args.force)
    write_manifest(args.out, "poincare", r, [args.out])
    return EXIT_OK


# ------------------------------------------------------------ lyapunov-map

def cmd_lyapunov_map(args, config) -> int:
    r = _resolve(args, config, ["h", "tau", "dt_mf", "seed", "d0"])
    K_lo, K_hi = args.K_range if args.K_range else (0.0, 10.0)
    g_lo, g_hi = args.gamma_range if args.gamma_range else (0.0, 1.0)
    nK, nG = args.grid if args.grid else (400, 400)
    if nK < 1 or nG < 1:
        raise ValueError("grid must be at least 1x1")
    n_periods = args.n_periods if args.n_periods is not None else 1000
    r.update({"K_range": [K_lo, K_hi], "gamma_range": [g_lo, g_hi],
              "grid": [nK, nG], "n_periods": n_periods, "threads": args.threads})
    params = _model_params(r)
    K_vals = np.linspace(K_lo, K_hi, nK)
    g_vals = np.linspace(g_lo, g_hi, nG)
    KK, GG = np.meshgrid(K_vals, g_vals, indexing="ij")
    flatK, flatG = KK.ravel(), GG.ravel()
    lam = _parallel_lyapunov(flatK, flatG, params, n_periods, float(r["d0"]),
                             args.threads)
    rows = [(flatK[i], flatG[i], lam[i]) for i in range(flatK.size)]
    write_csv(args.out, ["K", "gamma", "lambda"], rows, args.force)
    write_manifest(args.out, "lyapunov-map", r, [args.out])
    return EXIT_OK


def _lyap_chunk(job):
    K, gamma, params, n_periods, d0 = job
    return meanfield.lyapunov_batch(K, gamma, params, n_periods=n_periods, d0=d0)


def _parallel_lyapunov(K, gamma, params, n_periods, d0, threads) -> np.ndarray:
    if threads <= 1 or K.size < 2 * threads:
        return meanfield.lyapunov_batch(K, gamma, params, n_periods=n_periods, d0=d0)
    import multiprocessing as mp

    bounds = np.linspace(0, K.size, threads + 1).astype(int)
    jobs = [(K[lo:hi], gamma[lo:hi], params, n_periods, d0)
            for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with mp.get_context("fork").Pool(len(jobs)) as pool:
        parts = pool.map(_lyap_chunk, jobs)
    return np.concatenate(parts)


# ------------------------------------------------------------- bifurcation

def cmd_bifurcation(args, config) -> int:
    r = _resolve(args, config, ["h", "gamma", "tau", "dt_mf", "seed", "keep"])
    if not args.K_range:
        raise ValueError("--K-range is required")
    K_lo, K_hi = args.K_range
    nK = args.n_K if args.n_K is not None else 200
    if nK < 1:
        raise ValueError("empty K range")
    n_periods = args.n_periods if args.n_periods is not None else 10_000
    keep = int(r["keep"])
    r.update({"K_range": [K_lo, K_hi], "n_K": nK, "n_periods": n_periods,
              "threads": args.threads})
    params = _model_params(r)
    K_values = np.linspace(K_lo, K_hi, nK)
    scan = meanfield.bifurcation_scan(K_values, params, n_periods=n_periods,
                                      keep=keep)
    rows = []
    for i, K in enumerate(scan.K_values):
        for v in scan.values[i]:
            rows.append((K, v))
    write_csv(args.out, ["K", "value"], rows, args.force)
    write_manifest(args.out, "bifurcation", r, [args.out])
    return EXIT_OK


# --------------------------------------------------------------- hausdorff

def cmd_hausdorff(args, config) -> int:
    r = _resolve(args, config, ["h", "K", "tau", "dt_mf", "seed"])
    if args.gamma_range:
        g_lo, g_hi = args.gamma_range
        nG = args.n_gamma if args.n_gamma is not None else 10
        gammas = np.linspace(g_lo, g_hi, nG)
    elif args.gamma is not None:
        gammas = np.array([args.gamma])
    else:
        raise ValueError("provide --gamma or --gamma-range")
    n_init = args.n_init if args.n_init is not None else 500
    n_periods = args.n_periods if args.n_periods is not None else 1000
    epsilons = ([2.0**-k for k in args.eps_powers] if args.eps_powers
                else list(meanfield.DEFAULT_EPSILONS))
    if len(epsilons) < 3:
        raise ValueError("need at least 3 box sizes (--eps-powers)")
    r.update({"gammas": [float(g) for g in gammas], "n_init": n_init,
              "n_periods": n_periods, "epsilons": epsilons,
              "threads": args.threads})
    rows = []
    for g in gammas:
        params = _model_params(r, gamma=float(g))
        res = meanfield.hausdorff_dimension(params, n_init=n_init,
                                            epsilons=epsilons,
                                            n_periods=n_periods)
        rows.append((g, res.d_H, res.stderr))
    write_csv(args.out, ["gamma", "d_H", "stderr"], rows, args.force)
    write_manifest(args.out, "hausdorff", r, [args.out])
    return EXIT_OK


# ------------------------------------------------------------------ evolve

def cmd_evolve(args, config) -> int:
    r = _resolve(args, config, ["h", "K", "gamma", "tau", "dt_q", "seed",
                                "N", "n_traj", "n_periods"])
    probes = tuple(args.probes.split(",")) if args.probes else ("mz",)
    record_from = args.record_from if args.record_from is not None else 0
    r.update({"probes": list(probes), "record_from": record_from,
              "threads": args.threads})
    params = _model_params(r, N=int(r["N"]), n_traj=int(r["n_traj"]),
                           n_periods=int(r["n_periods"]))
    ens = qtraj.run_ensemble(params, probes=probes, record_from=record_from,
                             keep_raw=args.dump_mz is not None,
                             n_workers=args.threads)
    rows = []
    for p in probes:
        for i, n in enumerate(ens.periods):
            rows.append((int(n), p, ens.mean[p][i], ens.stderr[p][i]))
    write_csv(args.out, ["n", "probe", "mean", "stderr"], rows, args.force)
    outputs = [args.out]
    if args.dump_mz is not None:
        if "mz" not in probes:
            raise ValueError("--dump-mz requires the mz probe")
        raw = ens.raw["mz"]
        dump_rows = []
        for j in range(raw.shape[1]):
            for i, n in enumerate(ens.periods):
                dump_rows.append((j, int(n), raw[i, j]))
        write_csv(args.dump_mz, ["trajectory_id", "n", "mz"], dump_rows, args.force)
        outputs.append(args.dump_mz)
    write_manifest(args.out, "evolve", r, outputs)
    return EXIT_OK


# ----------------------------------------------------------------- scaling

def cmd_scaling(args, config) -> int:
    r = _resolve(args, config, ["h", "K", "gamma", "tau", "dt_q", "seed",
                                "n_traj", "n_periods"])
    if not args.sweep:
        raise ValueError("--sweep is required (comma-separated sizes)")
    sizes = [int(s) for s in args.sweep.split(",")]
    if any(n < 1 for n in sizes) or len(sizes) < 1:
        raise ValueError("sweep sizes must be positive")
    probe = args.probe or "sre"
    if probe not in qtraj.PROBES:
        raise ValueError(f"unknown probe {probe!r}")
    fit_kind = args.fit or "power"
    if fit_kind not in ("power", "log"):
        raise ValueError("--fit must be 'power' or 'log'")
    if args.k0 is not None:
        k0 = args.k0
    else:
        k0 = DEFAULTS["k0_sre"] if probe == "sre" else DEFAULTS["k0_ee"]
    n_periods = int(r["n_periods"])
    if k0 >= n_periods:
        raise ValueError("k0 must be smaller than n-periods")
    r.update({"sweep": sizes, "probe": probe, "fit": fit_kind, "k0": k0,
              "threads": args.threads})
    means: dict[int, float] = {}
    errs: dict[int, float] = {}
    for N in sizes:
        params = _model_params(r, N=N, n_traj=int(r["n_traj"]),
                               n_periods=n_periods)
        ens = qtraj.run_ensemble(params, probes=(probe,), keep_raw=False,
                                 n_workers=args.threads)
        # k0 indexes the stroboscopic series, periods start at 1
        means[N], errs[N] = analysis.steady_average(ens.mean[probe], k0)
    deltas = analysis.delta_magic(means) if probe == "sre" else {}
    rows = []
    for N in sizes:
        rows.append((N, means[N], errs[N],
                     deltas.get(N, "") if probe == "sre" else ""))
    write_csv(args.out, ["N", "mean", "stderr", "delta_half"], rows, args.force)

    points = [(N, means[N]) for N in sizes]
    fit = (analysis.fit_power_law(points) if fit_kind == "power"
           else analysis.fit_log_linear(points))
    sidecar = {
        "probe": probe,
        "fit": {"model": fit.model, "exponent": fit.exponent,
                "prefactor": fit.prefactor, "stderr": fit.stderr,
                "window": list(fit.window)},
    }
    if len(deltas) >= 3:
        dfit = analysis.fit_power_law(sorted(deltas.items()))
        sidecar["delta_fit"] = {"model": dfit.model, "exponent": dfit.exponent,
                                "prefactor": dfit.prefactor,
                                "stderr": dfit.stderr,
                                "window": list(dfit.window)}
    sidecar_path = args.out + ".fits.json"
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(args.out, "scaling", r, [args.out, sidecar_path])
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--h", type=float, default=None, help="transverse field")
    sp.add_argument("--tau", type=float, default=None, help="driving period")
    sp.add_argument("--seed", type=int, default=None, help="base RNG seed")
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.add_argument("--force", action="store_true",
                    help="overwrite existing outputs")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kickedtop",
        description="Dissipative quantum kicked top simulations")
    ap.add_argument("--config", default=None, help="JSON config file")
    ap.add_argument("--threads", type=int,
                    default=int(os.environ.get(THREADS_ENV, "1")),
                    help=f"worker processes (default ${THREADS_ENV} or 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("poincare", help="stroboscopic sections from random "
                        "initial conditions")
    _add_common(sp)
    sp.add_argument("--K", type=float, default=None)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--dt-mf", dest="dt_mf", type=float, default=None)
    sp.add_argument("--n-init", dest="n_init", type=int, default=None)
    sp.add_argument("--n-periods", dest="n_periods", type=int, default=None)
    sp.set_defaults(func=cmd_poincare)

    sp = sub.add_parser("lyapunov-map", help="largest Lyapunov exponent on a "
                        "(K, gamma) grid")
    _add_common(sp)
    sp.add_argument("--K-range", dest="K_range", type=float, nargs=2, default=None)
    sp.add_argument("--gamma-range", dest="gamma_range", type=float, nargs=2,
                    default=None)
    sp.add_argument("--grid", type=int, nargs=2, default=None,
                    metavar=("NK", "NGAMMA"))
    sp.add_argument("--n-periods", dest="n_periods", type=int, default=None)
    sp.add_argument("--d0", type=float, default=None)
    sp.add_argument("--dt-mf", dest="dt_mf", type=float, default=None)
    sp.set_defaults(func=cmd_lyapunov_map)

    sp = sub.add_parser("bifurcation", help="post-transient stroboscopic "
                        "values against kick strength")
    _add_common(sp)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--K-range", dest="K_range", type=float, nargs=2, default=None)
    sp.add_argument("--n-K", dest="n_K", type=int, default=None)
    sp.add_argument("--n-periods", dest="n_periods", type=int, default=None)
    sp.add_argument("--keep", type=int, default=None)
    sp.add_argument("--dt-mf", dest="dt_mf", type=float, default=None)
    sp.set_defaults(func=cmd_bifurcation)

    sp = sub.add_parser("hausdorff", help="box-counting dimension of the "
                        "attractor against gamma")
    _add_common(sp)
    sp.add_argument("--K", type=float, default=None)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--gamma-range", dest="gamma_range", type=float, nargs=2,
                    default=None)
    sp.add_argument("--n-gamma", dest="n_gamma", type=int, default=None)
    sp.add_argument("--n-init", dest="n_init", type=int, default=None)
    sp.add_argument("--n-periods", dest="n_periods", type=int, default=None)
    sp.add_argument("--eps-powers", dest="eps_powers", type=int, nargs="+",
                    default=None, help="box sizes as powers k of 2^-k")
    sp.add_argument("--dt-mf", dest="dt_mf", type=float, default=None)
    sp.set_defaults(func=cmd_hausdorff)

    sp = sub.add_parser("evolve", help="quantum-jump ensemble observables")
    _add_common(sp)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--K", type=float, default=None)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--dt-q", dest="dt_q", type=float, default=None)
    sp.add_argument("--n-traj", dest="n_traj", type=int, default=None)
    sp.add_argument("--n-periods", dest="n_periods", type=int, default=None)
    sp.add_argument("--probes", default=None, help="comma list of mz,ee,sre")
    sp.add_argument("--record-from", dest="record_from", type=int, default=None,
                    help="record observables only from this period onward")
    sp.add_argument("--dump-mz", dest="dump_mz", default=None,
                    help="also dump per-trajectory mz rows to this CSV")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("scaling", help="steady-state averages over a size "
                        "sweep plus a scaling-law fit")
    _add_common(sp)
    sp.add_argument("--K", type=float, default=None)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--dt-q", dest="dt_q", type=float, default=None)
    sp.add_argument("--n-traj", dest="n_traj", type=int, default=None)
    sp.add_argument("--n-periods", dest="n_periods", type=int, default=None)
    sp.add_argument("--sweep", default=None, help="comma list of sizes N")
    sp.add_argument("--probe", default=None, choices=sorted(qtraj.PROBES))
    sp.add_argument("--fit", default=None, choices=["power", "log"])
    sp.add_argument("--k0", type=int, default=None)
    sp.set_defaults(func=cmd_scaling)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_IO
        except json.JSONDecodeError as exc:
            print(f"error: bad config: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args, config)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
