"""Command-line front end.

Every subcommand writes one plot-ready data file (CSV or JSON) plus a JSON
sidecar ``<out>.meta.json`` holding the resolved configuration and derived
quantities.  Settings are resolved as: built-in defaults, then ``--preset``,
then ``--config`` file, then explicit flags.

Exit codes: 0 success, 2 invalid input, 3 a computation did not converge.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .betafit import beta_cdf, beta_pdf, fit_beta
from .dynamics import (
    DELTA_BOUND,
    entropy_series,
    equilibration_report,
    quench_ensemble,
    strength_function,
    survival_probability,
)
from .eigen import EigenConvergenceError, eigh_tridiagonal, eigvalsh_tridiagonal, rescale_energies
from .model import ModelParams, build_hamiltonian, critical_field
from .scan import DEFAULT_LAMBDAS, PRESETS, Window, extract_critical, lambda_scan
from .semiclassic import density_of_states, quantum_dos_histogram
from .stats import cdf, empirical_distribution, moments, standardize

log = logging.getLogger("esqpt")

EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

DEFAULTS = {
    "common": {"n": 1000, "alpha": 0.4, "format": "csv", "n0": 0},
    "spectrum": {"n": 50, "lam": 0.0},
    "entropy": {"lam": 1.0, "tau_min": 0.0, "tau_max": 400.0, "step": 0.05},
    "strength": {"lam": 1.0, "k": [0, 1, 2, 3, 4], "bins": 200},
    "dos": {"n": 5000, "lam": 0.0, "bins": 200, "resolution": 2048, "normalization": "block"},
    "distribution": {
        "lam": 1.0,
        "tau0": 1e3,
        "dtau": 1e3,
        "step": 0.05,
        "bins": 100,
        "pin_s0": None,
        "pin_sm": None,
        "standardize": False,
    },
    "scan": {"n": 500, "lambdas": None, "tau0": 1e3, "dtau": 1e3, "step": 0.05, "bins": 100},
}


class NotConverged(RuntimeError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def write_table(path: Path, columns: dict, fmt: str, config: dict, derived: dict) -> None:
    """Write the data file and its sidecar."""
    names = list(columns)
    if fmt == "csv":
        rows = zip(*(np.asarray(columns[n]) for n in names))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    else:
        payload = {"config": config, "derived": derived, "data": columns}
        path.write_text(json.dumps(_jsonable(payload), indent=1, sort_keys=True) + "\n")
    sidecar = sidecar_path(path)
    sidecar.write_text(
        json.dumps(_jsonable({"config": config, "derived": derived}), indent=1, sort_keys=True) + "\n"
    )


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def read_table(path) -> dict:
    """Read a CSV written by this module back into float columns."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        names = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    return {n: data[:, i] for i, n in enumerate(names)}


def _lambda_c(alpha: float):
    try:
        return critical_field(alpha)
    except ValueError:
        return None


def _model(cfg, lam_key="lam") -> ModelParams:
    return ModelParams(cfg["n"], cfg["alpha"], cfg.get(lam_key, 0.0))


# ----------------------------------------------------------------- commands


def cmd_spectrum(cfg):
    params = _model(cfg)
    dec = eigh_tridiagonal(build_hamiltonian(params))
    eps = rescale_energies(dec)
    cols = {"index": np.arange(dec.dim), "E": dec.energies, "epsilon": eps}
    derived = {
        "dim": dec.dim,
        "E0": dec.energies[0],
        "Emax": dec.energies[-1],
        "epsilon_zero": (0.0 - dec.energies[0]) / (dec.energies[-1] - dec.energies[0]),
        "lambda_c": _lambda_c(params.alpha),
    }
    summary = f"{dec.dim} levels, E0={dec.energies[0]:.6f}, Emax={dec.energies[-1]:.6f}"
    return cols, derived, summary


def _ensemble(cfg):
    params = _model(cfg)
    dec_i = eigh_tridiagonal(build_hamiltonian(params.with_lambda(0.0)))
    dec_f = eigh_tridiagonal(build_hamiltonian(params))
    return params, quench_ensemble(dec_i, dec_f, cfg["n0"])


def _grid(start, stop, step):
    if step <= 0 or stop < start or start < 0:
        raise ValueError(f"invalid time grid [{start}, {stop}] step {step}")
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def cmd_entropy(cfg):
    params, ens = _ensemble(cfg)
    taus = _grid(cfg["tau_min"], cfg["tau_max"], cfg["step"])
    series = entropy_series(ens, taus)
    surv = survival_probability(ens, taus)
    report = equilibration_report(ens, series)
    cols = {"tau": taus, "S_d": series.values, "survival": surv}
    derived = {
        "lambda_c": _lambda_c(params.alpha),
        "dim": ens.dim,
        "ln_dim": np.log(ens.dim),
        "samples": taus.size,
        "S_d_mean": float(np.mean(series.values)),
        "S_d_max": float(np.max(series.values)),
        "S_d_min": float(np.min(series.values)),
        "time_avg_entropy": report.time_avg_entropy,
        "diag_ensemble_entropy": report.diag_ensemble_entropy,
        "delta": report.delta,
        "delta_bound": DELTA_BOUND,
        "delta_within_bound": report.within_bound,
    }
    summary = (
        f"S_d over [{taus[0]:g}, {taus[-1]:g}]: mean {derived['S_d_mean']:.6f}, "
        f"max {derived['S_d_max']:.6f} (ln dim = {derived['ln_dim']:.6f}); Delta = {report.delta:.4f}"
    )
    return cols, derived, summary


def cmd_strength(cfg):
    params, ens = _ensemble(cfg)
    cols = {}
    derived = {"lambda_c": _lambda_c(params.alpha), "k": list(cfg["k"])}
    for k in cfg["k"]:
        sf = strength_function(ens, int(k), cfg["bins"])
        if not cols:
            cols["epsilon"] = sf.bin_centers
        cols[f"Omega_{k}"] = sf.weights
        derived[f"stick_sum_{k}"] = float(np.sum(sf.stick_weights))
    e = ens.final_energies
    eps_zero = (0.0 - e[0]) / (e[-1] - e[0])
    derived["epsilon_zero"] = eps_zero
    summary = f"strength functions for k={list(cfg['k'])}, {cfg['bins']} bins; epsilon_zero={eps_zero:.6f}"
    return cols, derived, summary


def cmd_dos(cfg):
    params = _model(cfg)
    energies = eigvalsh_tridiagonal(build_hamiltonian(params))
    q = quantum_dos_histogram(energies, cfg["bins"])
    sc = density_of_states(params, q.edges, cfg["resolution"], cfg["normalization"])
    cols = {
        "E_left": q.edges[:-1],
        "E_right": q.edges[1:],
        "E": q.energies,
        "nu_quantum": q.nu,
        "nu_semiclassical": sc.nu,
    }
    derived = {
        "dim": energies.size,
        "quantum_mass": q.total(),
        "semiclassical_mass": sc.total(),
        "argmax_E_quantum": float(q.energies[np.argmax(q.nu)]),
        "argmax_E_semiclassical": float(sc.energies[np.argmax(sc.nu)]),
    }
    summary = (
        f"DOS peak at E={derived['argmax_E_quantum']:.3f} (quantum), "
        f"{derived['argmax_E_semiclassical']:.3f} (semiclassical)"
    )
    return cols, derived, summary


def cmd_distribution(cfg):
    params, ens = _ensemble(cfg)
    window = Window(cfg["tau0"], cfg["dtau"], cfg["step"])
    series = entropy_series(ens, window.taus())
    samples = series.values
    if cfg["standardize"]:
        samples = standardize(samples)
    dist = empirical_distribution(samples, cfg["bins"])
    if dist.degenerate:
        raise ValueError("entropy series is constant; distribution is degenerate")
    pin_s0 = cfg["pin_s0"]
    pin_sm = cfg["pin_sm"]
    s0 = dist.sample_min if pin_s0 == "min" else pin_s0
    sm = dist.sample_max if pin_sm == "max" else pin_sm
    fit = fit_beta(dist, s0=s0, sm=sm)
    if not fit.converged:
        raise NotConverged(f"beta fit did not converge after {fit.iterations} iterations")
    centers = 0.5 * (dist.edges[1:] + dist.edges[:-1])
    F = cdf(dist)
    p = fit.params
    inside = np.clip(centers, p.s0, p.sm)
    m = moments(dist)
    cols = {
        "S_left": dist.edges[:-1],
        "S_right": dist.edges[1:],
        "S": centers,
        "density": dist.density,
        "F": F(dist.edges[1:]),
        "beta_pdf": beta_pdf(inside, p),
        "beta_cdf": beta_cdf(np.clip(dist.edges[1:], p.s0, p.sm), p),
    }
    derived = {
        "lambda_c": _lambda_c(params.alpha),
        "samples": dist.sample_count,
        "sample_min": dist.sample_min,
        "sample_max": dist.sample_max,
        "mean": dist.mean,
        "variance": dist.variance,
        "mu2": m.mu2,
        "mu3": m.mu3,
        "mu4": m.mu4,
        "fit": {"a": p.a, "b": p.b, "s0": p.s0, "sm": p.sm},
        "fit_mean": p.mean(),
        "fit_variance": p.variance(),
        "rmse": fit.rmse,
        "fit_iterations": fit.iterations,
        "fit_converged": fit.converged,
    }
    summary = (
        f"{dist.sample_count} samples, mean {dist.mean:.6f}, var {dist.variance:.3e}; "
        f"beta fit (a,b,S0,Sm)=({p.a:.3f},{p.b:.3f},{p.s0:.4f},{p.sm:.4f}), R={fit.rmse:.3e}"
    )
    return cols, derived, summary


def _parse_lambdas(text):
    if text is None:
        return DEFAULT_LAMBDAS
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=float)
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(round((stop - start) / step)) + 1
        return np.round(start + step * np.arange(n), 10)
    return np.array([float(v) for v in text.split(",")])


def cmd_scan(cfg):
    window = Window(cfg["tau0"], cfg["dtau"], cfg["step"])
    lambdas = _parse_lambdas(cfg["lambdas"])
    scan = lambda_scan(cfg["alpha"], cfg["n"], lambdas, window, cfg["bins"])
    cols = {
        "lambda": scan.lambdas,
        "mean": scan.mean,
        "mu2": scan.mu2,
        "mu3": scan.mu3,
        "mu4": scan.mu4,
        "rmse": scan.rmse,
        "a": scan.fit_params[:, 0],
        "b": scan.fit_params[:, 1],
        "s0": scan.fit_params[:, 2],
        "sm": scan.fit_params[:, 3],
        "converged": scan.converged,
        "degenerate": scan.degenerate,
    }
    derived = {"lambda_c": _lambda_c(scan.alpha), "failures": scan.failures}
    try:
        est = extract_critical(scan)
        derived["critical"] = {
            "lambda_analytic": est.lambda_analytic,
            "lambda_hat_mu2": est.lambda_hat_mu2,
            "lambda_hat_mu3": est.lambda_hat_mu3,
            "lambda_hat_mu4": est.lambda_hat_mu4,
            "lambda_hat_rmse": est.lambda_hat_rmse,
            "unreliable": list(est.unreliable),
        }
        summary = "critical estimates: " + ", ".join(
            f"{k}={v:.4f}" for k, v in est.estimates().items()
        ) + f" (analytic {est.lambda_analytic:.4f})"
    except ValueError as exc:
        derived["critical"] = {"lambda_analytic": _lambda_c(scan.alpha), "error": str(exc)}
        summary = f"no critical estimate: {exc}"
    if not scan.ok:
        # partial results are still written before exiting non-zero
        raise NotConverged("scan incomplete", (cols, derived, summary))
    return cols, derived, summary


COMMANDS = {
    "spectrum": cmd_spectrum,
    "entropy": cmd_entropy,
    "strength": cmd_strength,
    "dos": cmd_dos,
    "distribution": cmd_distribution,
    "scan": cmd_scan,
}


# ------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=S, help="number of spins (even)")
    common.add_argument("--alpha", type=float, default=S, help="transverse field strength")
    common.add_argument("--n0", type=int, default=S, help="initial eigenstate index")
    common.add_argument("--out", default=S, help="output data file")
    common.add_argument("--format", choices=("csv", "json"), default=S)
    common.add_argument("--config", default=S, help="JSON file of settings (flags override)")
    common.add_argument("--preset", choices=sorted(PRESETS), default=S)
    common.add_argument("-v", "--verbose", action="store_true", default=S)

    parser = argparse.ArgumentParser(prog="esqpt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="even-parity eigenvalues")
    p.add_argument("--lambda", dest="lam", type=float, default=S)

    p = sub.add_parser("entropy", parents=[common], help="S_d(tau) time series")
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--tau-min", dest="tau_min", type=float, default=S)
    p.add_argument("--tau-max", dest="tau_max", type=float, default=S)
    p.add_argument("--step", type=float, default=S)

    p = sub.add_parser("strength", parents=[common], help="strength functions Omega_k")
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--k", type=int, nargs="+", default=S)
    p.add_argument("--bins", type=int, default=S)

    p = sub.add_parser("dos", parents=[common], help="quantum vs semiclassical density of states")
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--bins", type=int, default=S)
    p.add_argument("--resolution", type=int, default=S)
    p.add_argument("--normalization", choices=("block", "raw"), default=S)

    p = sub.add_parser("distribution", parents=[common], help="P(S_d), F(S_d) and beta fit")
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--tau0", type=float, default=S)
    p.add_argument("--dtau", type=float, default=S)
    p.add_argument("--step", type=float, default=S)
    p.add_argument("--bins", type=int, default=S)
    p.add_argument(
        "--pin-s0", dest="pin_s0", nargs="?", const="min", type=_pin_value("min"), default=S,
        help="pin the lower support bound (to the sample minimum, or to VALUE)",
    )
    p.add_argument(
        "--pin-sm", dest="pin_sm", nargs="?", const="max", type=_pin_value("max"), default=S,
        help="pin the upper support bound (to the sample maximum, or to VALUE)",
    )
    p.add_argument("--standardize", action="store_true", default=S)

    p = sub.add_parser("scan", parents=[common], help="moment and RMSE curves over lambda")
    p.add_argument("--lambdas", default=S, help="start:stop:step or comma list")
    p.add_argument("--tau0", type=float, default=S)
    p.add_argument("--dtau", type=float, default=S)
    p.add_argument("--step", type=float, default=S)
    p.add_argument("--bins", type=int, default=S)
    return parser


def _pin_value(keyword):
    def convert(text):
        return keyword if text == keyword else float(text)

    return convert


def resolve_config(args: argparse.Namespace) -> dict:
    given = vars(args).copy()
    command = given.pop("command")
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[command])
    preset = given.get("preset")
    if preset is not None:
        p = PRESETS[preset]
        cfg["n"] = p["N"]
        if "tau0" in cfg:
            cfg["tau0"] = p["window"].tau0
            cfg["dtau"] = p["window"].dtau
            cfg["step"] = p["window"].step
    if "config" in given:
        file_cfg = json.loads(Path(given["config"]).read_text())
        unknown = set(file_cfg) - set(cfg) - {"out", "preset"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    cfg.update({k: v for k, v in given.items() if k not in ("config",)})
    cfg["command"] = command
    cfg.setdefault("out", f"{command}.{cfg['format']}")
    cfg.pop("verbose", None)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        out = Path(cfg["out"])
        try:
            cols, derived, summary = COMMANDS[cfg["command"]](cfg)
        except NotConverged as exc:
            if len(exc.args) > 1:
                cols, derived, summary = exc.args[1]
                write_table(out, cols, cfg["format"], cfg, derived)
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_NOT_CONVERGED
        write_table(out, cols, cfg["format"], cfg, derived)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EigenConvergenceError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"{cfg['command']}: {summary}")
    print(f"wrote {out} and {sidecar_path(out)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
