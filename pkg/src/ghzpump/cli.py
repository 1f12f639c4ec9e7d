"""Command-line runner: ``ghzpump {simulate,sweep,optimize,ratemodel,params}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Every
CSV row and JSON summary carries the config hash and package version.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .compartment import (b_factor, build_4compartment, effective_rate, kappa_factor,
                          rate_bundle_from_schedule, stationary_error, weak_rates)
from .config import ConfigError, RunConfig, load, with_overrides
from .core import Basis, SystemParams, fidelity, ghz_state
from .dynamics import (IntegrationError, IntegratorConfig, evolve, initial_state, steady_state,
                       time_to_fidelity, trotter_evolve)
from .effective import build_effective_model
from .liouvillian import DriveSchedule, build_full_model
from .optimize import (dynamical_optimum, numeric_time_minimizer,
                       stationary_error_for, strong_drive_params, weak_drive_params,
                       weak_time_bound)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericalFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# parameter and model resolution


def stationary_target(cfg: RunConfig) -> float:
    d = cfg.drive
    return stationary_error_for(d.error) if d.dynamical else d.error


def resolve_drive(cfg: RunConfig, N: int) -> tuple[DriveSchedule, SystemParams, dict]:
    """Schedule and system parameters for N qubits from the drive section."""
    s, d = cfg.system, cfg.drive
    if d.source == "explicit":
        ox = None if not d.omega_x else (d.omega_x[0] if len(d.omega_x) == 1 else list(d.omega_x))
        sched = DriveSchedule.paired(N, list(d.omega_z), ox)
        params = SystemParams.symmetric(N, s.gamma_e, s.gamma_f, s.kappa_b, s.kappa_c, s.g)
        return sched, params, {"gamma": s.gamma_e}
    E = stationary_target(cfg)
    if d.source == "analytic-strong":
        p = strong_drive_params(N, E, s.g)
        return p.schedule(), p.system_params(), {"gamma": p.gamma, "gamma_f": p.gamma_f,
                                                 "omega": p.omega, "error": E}
    p = weak_drive_params(N, E, d.alpha, s.g, d.eta)
    if s.gamma_e is not None:        # fixed linewidth, analytic amplitude pattern
        p = replace(p, gamma=s.gamma_e, gamma_f=s.gamma_f)
    if d.source == "optimize":
        res = numeric_time_minimizer(N, cfg.target.fidelity, p, cfg.model.power_broadening,
                                     cfg.optimizer.max_evals, cfg.optimizer.restarts,
                                     cfg.optimizer.jitter, cfg.seed)
        v = res.params
        return v.schedule(), v.system_params(), {"gamma": v.gamma, "gamma_f": v.gamma_f,
                                                 "a_f": list(v.a_f), "a_x": v.a_x,
                                                 "optimized_time": res.time}
    return p.schedule(), p.system_params(), {"gamma": p.gamma, "omega": p.omega, "error": E}


def build_models(cfg: RunConfig, sched: DriveSchedule, params: SystemParams):
    m = cfg.model
    if m.kind == "effective":
        return [build_effective_model(b, sched, params, m.power_broadening, m.broadening_factor)
                for b in (Basis.Z, Basis.X)]
    if m.kind in ("full-k1", "full-k2"):
        return build_full_model(sched, params, max_excitations=int(m.kind[-1]))
    bundle = rate_bundle_from_schedule(sched, params, m.power_broadening)
    return build_4compartment(params.n_qubits, bundle)


def integrator(cfg: RunConfig) -> IntegratorConfig:
    i = cfg.integrator
    method = "auto" if i.method == "trotter" else i.method
    return IntegratorConfig(t_max=i.t_max, method=method, rtol=i.rtol, atol=i.atol,
                            initial_step=i.initial_step, sample_stride=i.sample_stride,
                            trotter_slice=i.trotter_slice)


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[list], cfg: RunConfig) -> None:
    h = cfg.config_hash()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header + ["config_hash", "version"])
        for row in rows:
            w.writerow([_fmt(v) for v in row] + [h, __version__])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, payload: dict, cfg: RunConfig) -> None:
    doc = {"config_hash": cfg.config_hash(), "version": __version__, "config": asdict(cfg)}
    doc.update(payload)
    path.write_text(json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n")


def _paths(cfg: RunConfig, out: Path, stem: str) -> tuple[Path, Path]:
    base = f"{cfg.output.prefix}_{stem}"
    return out / f"{base}.csv", out / f"{base}.json"


# --------------------------------------------------------------------------
# commands


def _crossing(times, values, target):
    idx = np.nonzero(np.asarray(values) >= target)[0]
    if idx.size == 0:
        return None
    k = int(idx[0])
    if k == 0:
        return float(times[0])
    t0, t1, f0, f1 = times[k - 1], times[k], values[k - 1], values[k]
    return float(t0 + (target - f0) * (t1 - t0) / (f1 - f0))


def run_simulate(cfg: RunConfig, out: Path) -> int:
    N = cfg.system.n_qubits
    sched, params, info = resolve_drive(cfg, N)
    model = build_models(cfg, sched, params)
    icfg = integrator(cfg)
    csv_path, json_path = _paths(cfg, out, "simulate")
    if cfg.model.kind == "compartment":
        times = icfg.sample_times()
        traj = model.trajectory(model_start(model), times)
        header = ["t"] + [f"P[{lab}]" for lab in model.labels]
        write_csv(csv_path, header, [[t] + list(p) for t, p in zip(times, traj)], cfg)
        summary = {"n_qubits": N, "final_fidelity": float(traj[-1][-1]),
                   "time_to_target": _crossing(times, traj[:, -1], cfg.target.fidelity),
                   "failed": False, "drive": info}
        write_json(json_path, summary, cfg)
        return EXIT_OK
    try:
        if cfg.integrator.method == "trotter":
            if cfg.model.kind != "effective":
                raise ConfigError("integrator.method: 'trotter' needs model.kind = 'effective'")
            trace = trotter_evolve(model[0], model[1], initial_state(N), icfg)
        else:
            trace = evolve(model, initial_state(N), icfg)
    except IntegrationError as exc:
        raise NumericalFailure(str(exc)) from exc
    header = (["t", "F_GHZ", "P_GHZ-"] + [f"P_n1={n}" for n in range(N + 1)]
              + ["trace_deviation", "min_eigenvalue"])
    rows = [[t, f, m] + list(sec) + [tr, lam] for t, f, m, sec, tr, lam in
            zip(trace.times, trace.fidelity, trace.ghz_minus, trace.sectors,
                trace.trace_deviation, trace.min_eigenvalue)]
    write_csv(csv_path, header, rows, cfg)
    summary = {"n_qubits": N, "final_fidelity": trace.final_fidelity,
               "time_to_target": _crossing(trace.times, trace.fidelity, cfg.target.fidelity),
               "monotone_tail": trace.monotone_tail(), "failed": trace.failed,
               "message": trace.message, "drive": info,
               "max_trace_deviation": float(np.max(np.abs(trace.trace_deviation))),
               "min_eigenvalue": float(np.min(trace.min_eigenvalue))}
    write_json(json_path, summary, cfg)
    if trace.failed:
        raise NumericalFailure(trace.message)
    return EXIT_OK


def model_start(model) -> np.ndarray:
    p0 = np.zeros(model.size)
    p0[0] = 1.0
    return p0


def compartment_time(model, target: float, t_max: float) -> float | None:
    """First time P_GHZ reaches ``target`` from the worst compartment."""
    p0 = model_start(model)
    f = lambda t: model.evolve(p0, t)[-1] - target
    if f(t_max) < 0:
        return None
    return float(brentq(f, 0.0, t_max, xtol=1e-10, rtol=1e-10))


def _sweep_row(cfg: RunConfig, N: int) -> dict:
    row = {"N": N, "status": "ok", "tau_prep": None, "E_steady": None, "bound": None,
           "ratio": None, "gamma": None, "message": ""}
    try:
        sched, params, info = resolve_drive(cfg, N)
        row["gamma"] = info.get("gamma")
        model = build_models(cfg, sched, params)
        E = stationary_target(cfg)
        row["bound"] = weak_time_bound(N, E, cfg.drive.alpha, cfg.system.g)
        if cfg.model.kind == "compartment":
            row["E_steady"] = stationary_error(model).exact
            t = compartment_time(model, cfg.target.fidelity, cfg.integrator.t_max)
            row["tau_prep"] = math.inf if t is None else t
            if t is None:
                row["status"] = "not-reached"
        else:
            t = time_to_fidelity(model, initial_state(N), cfg.target.fidelity, integrator(cfg))
            row["tau_prep"] = math.inf if t is None else t
            if t is None:
                row["status"] = "not-reached"
            if cfg.model.kind == "effective":
                ss = steady_state(model)
                if ss.rho is not None:
                    row["E_steady"] = 1.0 - fidelity(ss.rho, ghz_state(N))
        if row["tau_prep"] is not None and math.isfinite(row["tau_prep"]):
            row["ratio"] = row["tau_prep"] / row["bound"]
    except (IntegrationError, ValueError, np.linalg.LinAlgError) as exc:
        row["status"] = "failed"
        row["message"] = f"{type(exc).__name__}: {exc}"
    return row


def _optimize_row(cfg: RunConfig, N: int) -> dict:
    row = {"N": N, "status": "ok", "seed_time": None, "time": None, "bound": None,
           "ratio": None, "evaluations": None, "params": ""}
    try:
        E = stationary_target(cfg)
        seed = weak_drive_params(N, E, cfg.drive.alpha, cfg.system.g, cfg.drive.eta)
        res = numeric_time_minimizer(N, cfg.target.fidelity, seed, cfg.model.power_broadening,
                                     cfg.optimizer.max_evals, cfg.optimizer.restarts,
                                     cfg.optimizer.jitter, cfg.seed)
        bound = weak_time_bound(N, E, cfg.drive.alpha, cfg.system.g)
        v = res.params
        row.update(seed_time=res.seed_time, time=res.time, bound=bound,
                   ratio=res.time / bound if res.reached else None, evaluations=res.evaluations,
                   params=json.dumps({"a_f": list(v.a_f), "a_x": v.a_x, "gamma": v.gamma,
                                      "gamma_f": v.gamma_f, "alpha": v.alpha}, sort_keys=True))
        if not res.reached:
            row["status"] = "not-reached"
    except (IntegrationError, ValueError, np.linalg.LinAlgError) as exc:
        row["status"] = "failed"
        row["params"] = f"{type(exc).__name__}: {exc}"
    return row


def _map(fn, cfg: RunConfig, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(cfg, n) for n in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, [cfg] * len(items), items))


def run_table(cfg: RunConfig, out: Path, threads: int, fn, stem: str, header: list[str]) -> int:
    rows = _map(fn, cfg, list(cfg.n_values), threads)
    csv_path, json_path = _paths(cfg, out, stem)
    write_csv(csv_path, header, [[r[k] for k in header] for r in rows], cfg)
    write_json(json_path, {"rows": rows}, cfg)
    return EXIT_OK


def run_ratemodel(cfg: RunConfig, out: Path) -> int:
    ratio = cfg.ratemodel.gamma_minus_ratio
    header = ["N", "b", "kappa", "E_exact", "E_approx", "Gamma_plus"]
    rows = []
    for N in cfg.ratemodel.n_list:
        bundle = weak_rates(N, ratio)
        err = stationary_error(build_4compartment(N, bundle))
        rows.append([N, b_factor(N), kappa_factor(N), err.exact, err.approx,
                     effective_rate(build_4compartment(N, bundle))])
    csv_path, json_path = _paths(cfg, out, "ratemodel")
    write_csv(csv_path, header, rows, cfg)
    write_json(json_path, {"rows": [dict(zip(header, r)) for r in rows],
                           "rate_unit": "Gamma_Z^+"}, cfg)
    return EXIT_OK


def run_params(cfg: RunConfig, out: Path) -> int:
    E = stationary_target(cfg)
    d, g = cfg.drive, cfg.system.g
    entries = []
    for N in cfg.n_values:
        w = weak_drive_params(N, E, d.alpha, g, d.eta)
        s = strong_drive_params(N, E, g)
        entry = {"N": N, "stationary_error": E,
                 "weak": {"a_f": list(w.a_f), "a_x": w.a_x, "gamma": w.gamma, "omega": w.omega,
                          "time_bound": weak_time_bound(N, E, d.alpha, g)},
                 "strong": {"gamma": s.gamma, "gamma_f": s.gamma_f, "omega": s.omega,
                            "omega_f": list(s.omega_f), "gamma_z_plus": s.gamma_z_plus,
                            "gamma_plus": s.gamma_plus, "tau_ghz": s.tau_ghz}}
        if d.dynamical:
            sol = dynamical_optimum(N, d.error, d.alpha, g=g)
            entry["dynamical"] = {"c": sol.c, "tau": sol.tau, "gamma": sol.gamma,
                                  "t_ghz": sol.t_ghz, "w": sol.w}
        entries.append(entry)
    _, json_path = _paths(cfg, out, "params")
    write_json(json_path, {"params": entries}, cfg)
    print(json.dumps(_json_safe(entries), indent=2, sort_keys=True))
    return EXIT_OK


SWEEP_HEADER = ["N", "status", "tau_prep", "E_steady", "bound", "ratio", "gamma", "message"]
OPT_HEADER = ["N", "status", "seed_time", "time", "bound", "ratio", "evaluations", "params"]


def execute(cfg: RunConfig, out: Path, threads: int = 1) -> int:
    out.mkdir(parents=True, exist_ok=True)
    if cfg.command == "simulate":
        return run_simulate(cfg, out)
    if cfg.command == "sweep":
        return run_table(cfg, out, threads, _sweep_row, "sweep", SWEEP_HEADER)
    if cfg.command == "optimize":
        return run_table(cfg, out, threads, _optimize_row, "optimize", OPT_HEADER)
    if cfg.command == "ratemodel":
        return run_ratemodel(cfg, out)
    return run_params(cfg, out)


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("GHZPUMP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"GHZPUMP_THREADS: expected an integer, got {env!r}") from None
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ghzpump", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["simulate", "sweep", "optimize", "ratemodel", "params"])
    parser.add_argument("--config", type=Path, help="TOML run configuration")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    parser.add_argument("--threads", type=int, help="worker processes (env GHZPUMP_THREADS)")
    args = parser.parse_args(argv)
    try:
        cfg = load(args.config) if args.config else RunConfig()
        cfg = with_overrides(cfg, args.command, args.seed)
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads: must be >= 1")
        return execute(cfg, args.out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, IntegrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
