"""Command-line front end.

One binary, one subcommand per experiment.  Every option resolves in the
order flag > environment variable (prefix ``HCVSIM_``) > config file
(``key = value`` lines) > documented default, and every artifact embeds
the tool version plus the fully resolved configuration, so a run can be
reproduced from its own output.

Exit codes: 0 success, 1 usage error (bad flags, invalid parameter
ranges), 2 numerical failure (solver breakdown, non-finite results).
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.stats import norm

from . import __version__, fluctuations, meanfield, odesys, sensitivity, stationary
from .model import ModelParams, State, scale
from .odesys import PsiState
from .ssa import (
    JumpType,
    count_jumps,
    set_threads,
    simulate,
    simulate_batch,
    state_at,
    trajectory_csv_text,
)

ENV_PREFIX = "HCVSIM_"

# half-width multiplier of a central 95% normal interval
_Z95 = float(norm.ppf(0.975))


class UsageError(Exception):
    """Bad invocation: unknown flag, malformed value, violated invariant."""


class NumericalError(Exception):
    """The computation ran but produced no usable number."""


class _Parser(argparse.ArgumentParser):
    # route argparse failures through our exit-code policy instead of its
    # built-in SystemExit(2)
    def error(self, message):
        raise UsageError(message)


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'A,B', got {text!r}")
    return float(parts[0]), float(parts[1])


def _grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected 'START:STOP:COUNT', got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError(f"grid needs at least one point, got {count}")
    if hi < lo:
        raise ValueError(f"grid start {lo} exceeds stop {hi}")
    return lo, hi, count


def _choice(*allowed: str) -> Callable[[str], str]:
    def conv(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}, got {text!r}")
        return text

    return conv


@dataclass(frozen=True)
class Opt:
    """One resolvable option: flag name, converter, default, help text."""

    name: str
    conv: Callable[[str], object]
    default: object
    help: str

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")

    @property
    def env_key(self) -> str:
        return ENV_PREFIX + self.dest.upper()


_MODEL_OPTS = (
    Opt("r", float, 1.0, "arrival rate of already-infected members"),
    Opt("lambda", float, 5.0, "arrival rate of the mixed stream"),
    Opt("p-i", float, 0.8, "infected share of the mixed arrival stream"),
    Opt("alpha", float, 1.0, "contact rate per susceptible"),
    Opt("p", float, 0.5, "transmission probability per contact"),
    Opt("mu1", float, 0.1, "exit rate of infected members"),
    Opt("mu2", float, 0.2, "exit rate of susceptible members"),
)

_OPT_X0 = Opt("x0", _pair, (0.5, 0.5),
              "initial densities 'A,B'; chain commands start at "
              "(round(N*A), round(N*B))")
_OPT_N = Opt("N", int, 100, "system size scaling arrival rates and the initial state")
_OPT_SEED = Opt("seed", int, 0, "batch seed; path i draws from stream (seed, i)")
_OPT_THREADS = Opt("threads", int, None,
                   "worker cap for batch simulation (default: all cores); "
                   "never affects results")
_OPT_OUT = Opt("out", str, None, "output file (default: stdout)")
_OPT_TOL = Opt("tol", float, odesys.DEFAULT_TOL, "ODE local error tolerance")


def _fmt_opt(default: str) -> Opt:
    return Opt("format", _choice("csv", "text"), default,
               f"'csv' or 'text' (JSON document); default {default}")


def _t_opt(default: float | None, what: str) -> Opt:
    return Opt("T", float, default, what)


def _paths_opt(default: int) -> Opt:
    return Opt("paths", int, default, f"number of simulated paths (default {default})")


# per-subcommand option tables; order is the --help order
_SUBCOMMANDS: dict[str, tuple[Opt, ...]] = {
    "simulate": (
        *_MODEL_OPTS, _OPT_X0, _OPT_N, _t_opt(50.0, "time horizon (default 50)"),
        _OPT_SEED, Opt("path", int, 0, "path index within the seed's batch"),
        _OPT_THREADS, _OPT_OUT, _fmt_opt("csv"),
    ),
    "ode": (
        *_MODEL_OPTS, _OPT_X0, _t_opt(50.0, "time horizon (default 50)"),
        _OPT_TOL, Opt("grid", int, 201, "number of output sample times"),
        _OPT_OUT, _fmt_opt("csv"),
    ),
    "equilibrium": (*_MODEL_OPTS, _OPT_OUT, _fmt_opt("text")),
    "lln": (
        *_MODEL_OPTS, _OPT_X0, _OPT_N, _t_opt(10.0, "time horizon (default 10)"),
        _paths_opt(500), _OPT_SEED, _OPT_TOL, _OPT_THREADS, _OPT_OUT,
        _fmt_opt("text"),
    ),
    "clt": (
        *_MODEL_OPTS, _OPT_X0,
        Opt("N", int, 1000, "system size (default 1000)"),
        _t_opt(5.0, "observation time (default 5)"), _paths_opt(10000),
        _OPT_SEED, _OPT_TOL, _OPT_THREADS, _OPT_OUT, _fmt_opt("text"),
    ),
    "stationary": (
        *_MODEL_OPTS,
        Opt("x0", _pair, None, "initial densities 'A,B' scaled by N "
            "(default: deterministic equilibrium)"),
        _OPT_N,
        Opt("samples", int, 2000, "number of stationary samples"),
        Opt("burn-in", float, None, "burn-in time (default 10/min(mu1,mu2))"),
        Opt("spacing", float, None, "time between samples (default 1/min(mu1,mu2))"),
        _OPT_SEED, _OPT_THREADS, _OPT_OUT, _fmt_opt("text"),
    ),
    "oracle": (
        *_MODEL_OPTS,
        Opt("K", int, 30, "truncation level: states with n1+n2 <= K"),
        _OPT_OUT, _fmt_opt("text"),
    ),
    "greek": (
        *_MODEL_OPTS, _OPT_X0, _OPT_N, _t_opt(50.0, "time horizon (default 50)"),
        _paths_opt(10000), _OPT_SEED,
        Opt("functional", _choice(*sensitivity.SHIPPED_FUNCTIONALS),
            "terminal_prevalence", "path functional to differentiate"),
        Opt("form", _choice(*sensitivity.FORMS), "covariance",
            "estimator form: 'product' or 'covariance'"),
        Opt("step", float, 1e-5, "step of the deterministic baseline derivative"),
        Opt("sweep", _grid, None,
            "run over a transmission-probability grid 'START:STOP:COUNT'"),
        _OPT_THREADS, _OPT_OUT, _fmt_opt("text"),
    ),
    "prevalence-sweep": (
        *_MODEL_OPTS, _OPT_X0, _OPT_N,
        _t_opt(None, "time horizon (default 20/min(mu1,mu2))"),
        _paths_opt(10000),
        Opt("p-grid", _grid, (0.05, 1.0, 20),
            "transmission-probability grid 'START:STOP:COUNT'"),
        _OPT_SEED, _OPT_THREADS, _OPT_OUT, _fmt_opt("csv"),
    ),
}

_EPILOG = (
    "defaults follow the worked reference configuration (r=1, lambda=5, "
    "p-i=0.8, alpha=1, mu1=0.1, mu2=0.2); every option may also come from "
    "an environment variable (HCVSIM_<NAME>, e.g. HCVSIM_SEED) or a "
    "--config file of 'key = value' lines, with flags taking precedence"
)


def _build_parser() -> _Parser:
    parser = _Parser(prog="hcvsim", description=__doc__.splitlines()[0],
                     epilog=_EPILOG)
    parser.add_argument("--version", action="version",
                        version=f"hcvsim {__version__}")
    subs = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name, opts in _SUBCOMMANDS.items():
        sub = subs.add_parser(name, epilog=_EPILOG)
        sub.add_argument("--config", default=None,
                         help="file of 'key = value' option lines")
        for opt in opts:
            # defaults stay None here so resolution can tell "explicitly
            # set" from "fell through to env/config/default"
            sub.add_argument(f"--{opt.name}", dest=opt.dest, type=opt.conv,
                             default=None, help=opt.help, metavar=opt.dest.upper())
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = body.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(opts: tuple[Opt, ...], ns: argparse.Namespace,
             file_cfg: dict[str, str]) -> dict[str, object]:
    unknown = set(file_cfg) - {o.dest for o in opts}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved: dict[str, object] = {}
    for opt in opts:
        value = getattr(ns, opt.dest)
        if value is None:
            raw = os.environ.get(opt.env_key)
            if raw is None:
                raw = file_cfg.get(opt.dest)
            if raw is None:
                value = opt.default
            else:
                try:
                    value = opt.conv(raw)
                except ValueError as exc:
                    raise UsageError(f"{opt.dest}: {exc}") from exc
        resolved[opt.dest] = value
    return resolved


def _model(o: dict[str, object]) -> ModelParams:
    return ModelParams(r=o["r"], lam=o["lambda"], p_i=o["p_i"], alpha=o["alpha"],
                       p=o["p"], mu1=o["mu1"], mu2=o["mu2"])


def _scaled_start(o: dict[str, object]) -> tuple[ModelParams, State]:
    n = o["N"]
    if n < 1:
        raise ValueError(f"N must be a positive integer, got {n}")
    psi = PsiState(*o["x0"])
    return scale(_model(o), n), meanfield.scaled_initial(psi, n)


def _echo_config(name: str, opts: tuple[Opt, ...],
                 o: dict[str, object]) -> dict[str, object]:
    cfg: dict[str, object] = {"subcommand": name}
    for opt in opts:
        # threads and the destination path are plumbing, not run semantics;
        # leaving them out keeps one run's bytes identical wherever written
        if opt.name in ("threads", "out"):
            continue
        value = o[opt.dest]
        if isinstance(value, tuple):
            value = list(value)
        cfg[opt.dest] = value
    return cfg


def _require_finite(label: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise NumericalError(f"{label} is not finite")


def _csv_rows(header: str, rows: list[tuple]) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        # repr of a builtin float is the shortest round-trip decimal
        buf.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating))
                           else str(v) for v in row) + "\n")
    return buf.getvalue()


# --- subcommand runners; each returns (json payload, csv body) ------------


def _run_simulate(o):
    params, x0 = _scaled_start(o)
    traj = simulate(params, x0, o["T"], seed=o["seed"], path_index=o["path"])
    terminal = state_at(traj, o["T"])
    counts = {jt.name.lower(): count_jumps(traj, jt) for jt in JumpType}
    payload = {
        "terminal": {"n1": terminal.n1, "n2": terminal.n2},
        "n_events": traj.n_events,
        "counts": counts,
    }
    return payload, trajectory_csv_text(traj)


def _run_ode(o):
    params = _model(o)
    path = odesys.integrate(params, PsiState(*o["x0"]), o["T"], tol=o["tol"])
    ts = np.linspace(0.0, o["T"], o["grid"])
    eq = odesys.equilibrium(params)
    psi1, psi2 = path.at(o["T"])
    _require_finite("terminal state", psi1, psi2)
    dist = math.hypot(psi1 - eq.xi1, psi2 - eq.xi2)
    payload = {
        "terminal": {"psi1": psi1, "psi2": psi2},
        "equilibrium": {"xi1": eq.xi1, "xi2": eq.xi2, "branch": eq.branch},
        "distance_to_equilibrium": dist,
    }
    buf = io.StringIO()
    path.to_csv(ts, buf)
    return payload, buf.getvalue()


def _run_equilibrium(o):
    params = _model(o)
    eq = odesys.equilibrium(params)
    prev = odesys.prevalence(eq)
    _require_finite("equilibrium", eq.xi1, eq.xi2, prev)
    payload = {"xi1": eq.xi1, "xi2": eq.xi2, "prevalence": prev,
               "branch": eq.branch}
    csv = _csv_rows("xi1,xi2,prevalence,branch",
                    [(eq.xi1, eq.xi2, prev, eq.branch)])
    return payload, csv


def _run_lln(o):
    report = meanfield.lln_experiment(_model(o), PsiState(*o["x0"]), o["N"],
                                      o["T"], o["paths"], o["seed"],
                                      tol=o["tol"])
    payload = json.loads(report.to_json())
    _require_finite("deviation", payload["sup_err_sq_mean"], payload["bound"])
    csv = _csv_rows(
        "n,t,n_paths,seed,sup_err_sq_mean,bound,q50,q90,q99,bound_exceeded",
        [(report.n, report.t, report.n_paths, report.seed,
          report.sup_sq_mean, report.bound, report.quantile(0.5),
          report.quantile(0.9), report.quantile(0.99),
          report.bound_exceeded)])
    return payload, csv


def _run_clt(o):
    report = fluctuations.clt_experiment(_model(o), PsiState(*o["x0"]),
                                         o["N"], o["T"], o["paths"],
                                         o["seed"], tol=o["tol"])
    emp, theo = report.empirical, report.theoretical
    _require_finite("covariance", emp.g11, emp.g12, emp.g22,
                    theo.g11, theo.g12, theo.g22)
    rel = report.relative_errors()
    payload = {
        "n": report.n, "t": report.t, "n_paths": report.n_paths,
        "seed": report.seed,
        "mean_w": list(report.mean_w),
        "empirical": {"g11": emp.g11, "g12": emp.g12, "g22": emp.g22},
        "theoretical": {"g11": theo.g11, "g12": theo.g12, "g22": theo.g22},
        "relative_errors": {"g11": rel[0], "g12": rel[1], "g22": rel[2]},
    }
    return payload, report.w_csv_text()


def _run_stationary(o):
    params = _model(o)
    n = o["N"]
    x0 = None
    if o["x0"] is not None:
        x0 = meanfield.scaled_initial(PsiState(*o["x0"]), n)
    est = stationary.estimate_stationary(params, n, n_samples=o["samples"],
                                         burn_in=o["burn_in"],
                                         spacing=o["spacing"], seed=o["seed"],
                                         x0=x0)
    res_mean, res_se = stationary.moment_identity_residual(
        est.samples, scale(params, n))
    _require_finite("stationary estimate", est.prevalence, est.prevalence_se)
    payload = {
        "n": n, "n_samples": est.n_samples, "burn_in": est.burn_in,
        "spacing": est.spacing, "seed": est.seed,
        "x0": {"n1": est.x0.n1, "n2": est.x0.n2},
        "prevalence": est.prevalence, "prevalence_se": est.prevalence_se,
        "mean_density": list(est.mean_y),
        "mean_density_se": list(est.mean_y_se),
        "moment_identity": {"mean": res_mean, "se": res_se},
    }
    csv = _csv_rows("n1,n2", [tuple(row) for row in est.samples])
    return payload, csv


def _run_oracle(o):
    params = _model(o)
    sol = stationary.truncated_solve(params, o["K"])
    _require_finite("stationary solve", sol.residual)
    if not np.all(np.isfinite(sol.probs)):
        raise NumericalError("stationary solve produced non-finite mass")
    mean = sol.mean()
    payload = {
        "k": sol.k, "n_states": len(sol.probs),
        "mean": list(mean), "prevalence": sol.prevalence(),
        "residual": sol.residual, "tail_mass_bound": sol.tail_mass_bound,
    }
    return payload, sol.csv_text()


def _greek_point(params: ModelParams, o, seed: int):
    scaled = scale(params, o["N"])
    x0 = meanfield.scaled_initial(PsiState(*o["x0"]), o["N"])
    est = sensitivity.greek(scaled, x0, o["T"], o["paths"], seed,
                            functional=o["functional"], form=o["form"])
    det = sensitivity.deterministic_greek(params, step=o["step"])
    _require_finite("greek estimate", est.estimate, est.se, det)
    return est, det


def _run_greek(o):
    params = _model(o)
    if o["sweep"] is None:
        est, det = _greek_point(params, o, o["seed"])
        lo, hi = est.ci()
        payload = json.loads(est.to_json())
        payload["deterministic_baseline"] = det
        csv = _csv_rows(
            "functional,form,t,n_paths,seed,estimate,se,ci_low,ci_high,"
            "deterministic_baseline",
            [(est.functional, est.form, est.t, est.n_paths, est.seed,
              est.estimate, est.se, lo, hi, det)])
        return payload, csv
    lo_p, hi_p, count = o["sweep"]
    rows = []
    for i, pv in enumerate(np.linspace(lo_p, hi_p, count)):
        # each sweep point gets its own seed so points are independent
        est, det = _greek_point(replace(params, p=float(pv)), o, o["seed"] + i)
        lo, hi = est.ci()
        rows.append((float(pv), est.estimate, est.se, lo, hi, det))
    payload = {"points": [
        {"p": r[0], "estimate": r[1], "se": r[2], "ci_low": r[3],
         "ci_high": r[4], "deterministic_greek": r[5]} for r in rows]}
    return payload, _csv_rows(
        "p,estimate,se,ci_low,ci_high,deterministic_greek", rows)


def _run_prevalence_sweep(o):
    params = _model(o)
    horizon = o["T"]
    if horizon is None:
        horizon = 20.0 / min(params.mu1, params.mu2)
    lo_p, hi_p, count = o["p_grid"]
    rows = []
    for i, pv in enumerate(np.linspace(lo_p, hi_p, count)):
        point = replace(params, p=float(pv))
        det = odesys.prevalence(odesys.equilibrium(point))
        scaled, x0 = _scaled_start({**o, "p": float(pv)})
        batch = simulate_batch(scaled, x0, horizon, o["paths"],
                               seed=o["seed"] + i)
        vals = batch.window_mean_prevalence()
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
        _require_finite("prevalence estimate", mean, se, det)
        rows.append((float(pv), det, mean, mean - _Z95 * se, mean + _Z95 * se))
    payload = {"points": [
        {"p": r[0], "deterministic_prevalence": r[1],
         "simulated_prevalence": r[2], "ci_low": r[3], "ci_high": r[4]}
        for r in rows]}
    return payload, _csv_rows(
        "p,deterministic_prevalence,simulated_prevalence,ci_low,ci_high", rows)


_RUNNERS = {
    "simulate": _run_simulate,
    "ode": _run_ode,
    "equilibrium": _run_equilibrium,
    "lln": _run_lln,
    "clt": _run_clt,
    "stationary": _run_stationary,
    "oracle": _run_oracle,
    "greek": _run_greek,
    "prevalence-sweep": _run_prevalence_sweep,
}


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.subcommand is None:
            raise UsageError("a subcommand is required")
        opts = _SUBCOMMANDS[ns.subcommand]
        file_cfg = _read_config_file(ns.config) if ns.config else {}
        o = _resolve(opts, ns, file_cfg)
        if o.get("threads") is not None:
            set_threads(o["threads"])
        payload, csv_body = _RUNNERS[ns.subcommand](o)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    # LinAlgError subclasses ValueError, so the numerical family must be
    # tried first
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError,
            RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    cfg = _echo_config(ns.subcommand, opts, o)
    if o["format"] == "csv":
        text = (f"# hcvsim {__version__}\n"
                f"# config: {json.dumps(cfg, sort_keys=True)}\n" + csv_body)
    else:
        doc = {"version": __version__, "config": cfg, "result": payload}
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    _emit(text, o["out"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
