"""Command-line entry point.

Every subcommand writes ``<out>/<subcommand>-<hash>.csv`` and a matching
``.json`` summary, where the hash covers the resolved configuration and seed.
Exit codes: 0 success, 2 configuration error, 3 numerical or output failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import fluxqubit, io, lindblad, rates
from .params import (GAMMA_SI, CouplingParams, DecoherenceParams, DriveParams,
                     ModelSpec, ResonatorParams, bose_einstein)
from .trajectories import trajectory_evolve

SUBCOMMANDS = ("qubit", "spectrum", "rates", "cool", "steady", "sweep", "twomode",
               "converge")
ENGINE_NAMES = {"analytic": "analytic", "me": "master_equation", "traj": "trajectories"}
DEFAULT_SEED = 1234
UNIT_MODES = ("gamma", "si")

# key -> (type, default). ``None`` defaults are derived at resolve time.
SCHEMA = {
    # drive
    "delta": (float, -3.0),
    "delta_g": (float, None),
    "omega_g": (float, None),
    "omega_e": (float, None),
    "drive": (str, "strong"),
    "r": (float, ex.WEAK_R),
    "rabi_scale": (float, 1.0),
    "detuning_ratio": (float, 1.0),
    # resonator and coupling
    "nu": (float, ex.NU),
    "nu_hz": (float, None),
    "q": (float, ex.Q_FACTOR),
    "n_i": (float, None),
    "temperature": (float, None),
    "eta_ld": (float, 0.0566),
    "n_max": (int, None),
    # decoherence
    "gamma_g": (float, 0.5),
    "gamma_e": (float, 0.5),
    "big_gamma": (float, 0.0),
    "gamma_phi": (float, 0.0),
    # flux qubit
    "alpha": (float, 0.7),
    "e_j": (float, 200e9),
    "ej_over_ec": (float, 50.0),
    "f": (float, 0.5005),
    "f_min": (float, None),
    "f_max": (float, None),
    "f_points": (int, 1),
    "n_cut": (int, 10),
    # spectrum
    "probe_span": (float, 3.0),
    "probe_points": (int, 601),
    "omega_g_probe": (float, 0.05),
    # dynamics
    "t_final": (float, 2000.0),
    "n_points": (int, 21),
    "n_traj": (int, 500),
    # sweeps
    "axis": (str, "initial_occupation"),
    "grid": (str, None),
    "traj_n_i": (float, 3.0),
    "traj_n_max": (int, 12),
    "n_max_grid": (str, "15,20,25,30"),
    "units": (str, "gamma"),
    "rate_model": (str, "formula"),
}
CONFLICTS = (("nu", "nu_hz"), ("n_i", "temperature"))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    overrides: dict = field(default_factory=dict)
    config_path: str | None = None
    out: str = "."
    seed: int = DEFAULT_SEED
    engine: str | None = None
    units: str | None = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{**d, "overrides": dict(d.get("overrides") or {})})


def _coerce(key, raw):
    if key not in SCHEMA:
        raise ConfigError(f"unknown configuration key {key!r}")
    typ = SCHEMA[key][0]
    if raw is None:
        return None
    try:
        if typ is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(float(raw)) if isinstance(raw, str) else int(raw)
        if typ is float:
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError
            return val
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {raw!r} for key {key!r}") from None


def load_config_file(path):
    """Flat key/value mapping from a JSON object or an INI file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text()
    if p.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        flat = {}
        for k, v in data.items():
            if isinstance(v, dict):  # sections are for readability only
                flat.update(v)
            else:
                flat[k] = v
        return flat
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    flat = dict(cp.defaults())
    for section in cp.sections():
        flat.update({k: v for k, v in cp.items(section, raw=True)})
    return {k: v.strip().strip('"') for k, v in flat.items()}


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve(cfg):
    """Merge file values and overrides into a typed parameter dict."""
    merged = {}
    if cfg.config_path:
        merged.update(load_config_file(cfg.config_path))
    merged.update(cfg.overrides)
    values = {}
    for k, v in merged.items():
        values[k] = _coerce(k, v)
    for a, b in CONFLICTS:
        if values.get(a) is not None and values.get(b) is not None:
            raise ConfigError(f"conflicting units: both {a!r} and {b!r} given")
    if cfg.units and values.get("units") and values["units"] != cfg.units:
        raise ConfigError(f"conflicting units: --units {cfg.units} but config says "
                          f"{values['units']}")
    units = cfg.units or values.get("units") or "gamma"
    if units not in UNIT_MODES:
        raise ConfigError(f"bad value {units!r} for key 'units'")
    values["units"] = units
    p = {k: d for k, (_, d) in SCHEMA.items()}
    p.update({k: v for k, v in values.items() if v is not None})
    if p["nu_hz"] is not None:
        p["nu"] = 2 * math.pi * p["nu_hz"] / GAMMA_SI
    if p["temperature"] is not None:
        p["n_i"] = bose_einstein(p["nu"] * GAMMA_SI, p["temperature"])
    if p["n_i"] is None:
        p["n_i"] = 16.0
    if p["drive"] not in ("strong", "weak", "optimized"):
        raise ConfigError(f"bad value {p['drive']!r} for key 'drive'")
    return p


def _floats(text, key):
    try:
        vals = [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad value {text!r} for key {key!r}") from None
    if not vals:
        raise ConfigError(f"empty list for key {key!r}")
    return vals


def build_drives(p):
    nu, delta = p["nu"], p["delta"]
    if p["drive"] == "optimized":
        d = ex.strong_optimized_drive()
    elif p["drive"] == "weak":
        d = ex.weak_drive(delta, nu, p["r"])
    else:
        d = ex.strong_drive(delta, nu, p["rabi_scale"])
    if p["omega_g"] is not None:
        d = replace(d, omega_g=p["omega_g"])
    if p["omega_e"] is not None:
        d = replace(d, omega_e=p["omega_e"])
    if p["delta_g"] is not None:
        d = replace(d, delta_g=p["delta_g"])
    elif p["detuning_ratio"] != 1.0:
        d = replace(d, delta_g=p["detuning_ratio"] * d.delta_e)
    return d


def build_spec(p, n_i=None, n_max=None):
    dec = DecoherenceParams(p["gamma_g"], p["gamma_e"], p["big_gamma"], p["gamma_phi"])
    res = ResonatorParams(nu=p["nu"], q_factor=p["q"], n_i=p["n_i"] if n_i is None else n_i)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        coupling = CouplingParams.from_eta_ld(p["eta_ld"])
    return ModelSpec(build_drives(p), dec, (res,), (coupling,),
                     n_max if n_max is not None else p["n_max"])


def _engine(cfg, default):
    return ENGINE_NAMES[cfg.engine] if cfg.engine else default


def _si(p):
    return {"gamma_si_rad_per_s": GAMMA_SI, "nu_hz": p["nu"] * GAMMA_SI / (2 * math.pi),
            "time_unit_s": 1 / GAMMA_SI}


# --- subcommands: each returns (header, rows, summary) -------------------------

def cmd_qubit(cfg, p):
    params = fluxqubit.JunctionParams(alpha=p["alpha"], e_j=p["e_j"],
                                      ej_over_ec=p["ej_over_ec"], f=p["f"])
    h = fluxqubit.build_hamiltonian(params, p["n_cut"])
    levels = fluxqubit.solve_levels(h)
    if p["f_min"] is not None or p["f_max"] is not None:
        f_lo = p["f_min"] if p["f_min"] is not None else p["f"]
        f_hi = p["f_max"] if p["f_max"] is not None else p["f"]
        grid = np.linspace(f_lo, f_hi, max(p["f_points"], 1))
        sweep = fluxqubit.flux_sweep(params, grid, p["n_cut"])
    else:
        grid, sweep = [p["f"]], [levels]
    header = ("f", "omega_eg_ghz", "omega_ag_ghz", "omega_ae_ghz", "s_ag", "s_ae",
              "s_eg", "c_ag", "c_ae", "c_eg", "eta_g_ratio", "eta_e_ratio", "eta_3_ratio")
    rows = []
    for f, lv in zip(grid, sweep):
        ghz = [w / (2 * math.pi * 1e9) for w in (lv.omega_eg, lv.omega_ag, lv.omega_ae)]
        rows.append([float(f), *ghz, lv.s_ag, lv.s_ae, lv.s_eg, lv.c_ag, lv.c_ae,
                     lv.c_eg, *fluxqubit.eta_ratios(lv)])
    record = levels.as_dict()
    record["eta_ratios"] = list(fluxqubit.eta_ratios(levels))
    record["omega_ghz"] = rows[0][1:4] if len(grid) == 1 else [
        w / (2 * math.pi * 1e9) for w in (levels.omega_eg, levels.omega_ag, levels.omega_ae)]
    return header, rows, {"levels": record}


def cmd_spectrum(cfg, p):
    delta_e = p["delta"]
    omega_e = p["omega_e"] if p["omega_e"] is not None else 0.9
    half = max(p["probe_points"] // 2, 1)
    step = p["probe_span"] / half
    grid = delta_e + np.arange(-half, half + 1) * step  # carrier sits on the grid
    dec = DecoherenceParams(p["gamma_g"], p["gamma_e"], p["big_gamma"], p["gamma_phi"])
    spec = rates.absorption_spectrum(omega_e, delta_e, grid, dec, p["omega_g_probe"], p["nu"])
    i = int(np.argmin(spec.absorption))
    summary = {"carrier": spec.carrier, "red_sideband": spec.red_sideband,
               "blue_sideband": spec.blue_sideband,
               "absorption_red": spec.at(spec.red_sideband),
               "absorption_blue": spec.at(spec.blue_sideband),
               "min_delta_g": float(grid[i]), "max_absorption": float(spec.absorption.max())}
    return ("delta_g", "absorption"), list(zip(grid, spec.absorption)), summary


def _rate_record(rr):
    return {"a_plus": rr.a_plus, "a_minus": rr.a_minus, "w": rr.w,
            "delta_a_plus": rr.delta_a_plus, "n_ss": rr.n_ss,
            "n_ss_weak": rr.n_ss_weak, "n_ss_strong": rr.n_ss_strong,
            "total_rate": rr.total_rate, "cooling": rr.cooling,
            "within_validity": rr.within_validity}


def cmd_rates(cfg, p):
    spec = build_spec(p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", rates.ValidityWarning)
        rr = rates.rate_result(spec.drives, spec.couplings[0], spec.resonators[0],
                               spec.decoherence, model=p["rate_model"])
    rec = _rate_record(rr)
    print(f"A+ = {rr.a_plus:.6g}  A- = {rr.a_minus:.6g}  W = {rr.w:.6g}  "
          f"n_ss = {'heating' if rr.n_ss is None else format(rr.n_ss, '.6g')}  (units of gamma)")
    header = tuple(rec)
    return header, [[rec[k] for k in header]], {"rates": rec}


def cmd_cool(cfg, p):
    engine = _engine(cfg, "analytic")
    spec = build_spec(p)
    t = np.linspace(0.0, p["t_final"], max(p["n_points"], 2))
    if engine == "analytic":
        rr = rates.rate_result(spec.drives, spec.couplings[0], spec.resonators[0],
                               spec.decoherence, model=p["rate_model"])
        trace = rates.rate_evolve(p["n_i"], rr, spec.resonators[0], t)
    elif engine == "master_equation":
        ex.check_memory_gate(spec)
        rho0 = lindblad.thermal_state(p["n_i"], spec.n_max[0])
        trace = lindblad.evolve(lindblad.build_liouvillian(spec), rho0, t)
    else:
        trace = trajectory_evolve(spec, p["n_traj"], t, seed=cfg.seed)
    header = ["t", "mean_n", "pop_g", "pop_e", "pop_a"]
    cols = [trace.times, trace.mean_n[:, 0], trace.pop_g, trace.pop_e, trace.pop_a]
    if trace.stderr_n is not None:
        header.append("stderr_n")
        cols.append(trace.stderr_n[:, 0])
    rows = [list(r) for r in zip(*cols)]
    return tuple(header), rows, {"engine": engine, "final_mean_n": float(trace.mean_n[-1, 0]),
                                 "max_trace_error": float(np.max(trace.trace_error))}


def cmd_steady(cfg, p):
    engine = _engine(cfg, "master_equation")
    spec = build_spec(p)
    if engine == "analytic":
        rr = rates.rate_result(spec.drives, spec.couplings[0], spec.resonators[0],
                               spec.decoherence)
        rec = {"n_ss": rr.n_ss, "n_max": None}
    elif engine == "master_equation":
        if p["n_max"] is None:
            cs = lindblad.converged_steady_state(spec)
            rho, n_max = cs.rho, cs.n_max[0]
        else:
            rho = lindblad.steady_state(lindblad.build_liouvillian(spec))
            n_max = spec.n_max[0]
        obs = lindblad.observables(rho)
        rec = {"n_ss": obs["mean_n"][0], "n_max": n_max, "pop_g": obs["pop_g"],
               "pop_e": obs["pop_e"], "pop_a": obs["pop_a"]}
    else:
        raise ConfigError("steady supports --engine analytic or me")
    print(f"n_ss = {rec['n_ss']}")
    header = tuple(rec)
    return header, [[rec[k] for k in header]], {"engine": engine, "steady": rec}


def cmd_sweep(cfg, p):
    engines = (_engine(cfg, None),) if cfg.engine else ("analytic", "master_equation")
    if "trajectories" in engines:
        raise ConfigError("sweep supports --engine analytic or me")
    axis = p["axis"]
    dec = DecoherenceParams(p["gamma_g"], p["gamma_e"], p["big_gamma"], p["gamma_phi"])
    if axis == "initial_occupation":
        grid = _floats(p["grid"] or "0.1,1,4,16", "grid")
        base = replace(build_spec(p, n_i=grid[0]), decoherence=dec)
        sspec = ex.SweepSpec(axis, grid, base, engines, weak=p["drive"] == "weak")
        report = ex.sweep_initial_occupation(sspec)
    elif axis == "detuning":
        grid = _floats(p["grid"] or "-1,-2,-3,-4,-5,-6,-7,-8", "grid")
        base = build_spec(p)
        sspec = ex.SweepSpec(axis, grid, base, engines, rabi_scale=p["rabi_scale"],
                             detuning_ratio=p["detuning_ratio"], weak=p["drive"] == "weak")
        report = ex.sweep_detuning(sspec)
    else:
        raise ConfigError(f"bad value {axis!r} for key 'axis'")
    bands = [{"value": r["value"], "engine": r["engine"], "rel_dev": r["rel_dev"],
              "pass": r["rel_dev"] is not None and abs(r["rel_dev"]) <= 0.25}
             for r in report.records if r["engine"] == "master_equation" and r["valid"]]
    summary = dict(report.summary, bands=bands)
    return report.COLUMNS, report.rows(), summary


def cmd_twomode(cfg, p):
    engine = _engine(cfg, "trajectories")
    if engine == "master_equation":
        ex.check_memory_gate(ex.two_mode_spec(p["n_i"]))
    report = ex.two_mode_experiment(n_i=p["n_i"], reduced_n_i=p["traj_n_i"],
                                    reduced_n_max=p["traj_n_max"], n_traj=p["n_traj"],
                                    t_final=p["t_final"], n_samples=p["n_points"],
                                    seed=cfg.seed,
                                    run_trajectories=engine == "trajectories")
    summary = {k: v for k, v in report.summary.items() if k != "trace"}
    for band in summary.get("trajectories", ()):
        band["reduced_60pct"] = band["reduction"] >= 0.6
        band["within_3se"] = band["z"] is not None and abs(band["z"]) <= 3
    return report.COLUMNS, report.rows(), summary


def cmd_converge(cfg, p):
    grid = [int(x) for x in _floats(p["n_max_grid"], "n_max_grid")]
    spec = build_spec(p, n_max=min(grid))
    rep = ex.convergence_study(spec, grid)
    rows = [[n, v] for n, v in zip(rep.n_max, rep.n_ss)]
    return ("n_max", "n_ss"), rows, {"extrapolated": rep.extrapolated,
                                     "sufficient_n_max": rep.sufficient_n_max,
                                     "monotone": rep.monotone}


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def output_paths(cfg, params):
    key = io.config_hash({"params": params, "seed": cfg.seed, "engine": cfg.engine,
                          "subcommand": cfg.subcommand})
    stem = Path(cfg.out) / f"{cfg.subcommand}-{key}"
    return stem.with_suffix(".csv"), stem.with_suffix(".json"), stem.with_suffix(".timing.json")


def run(cfg):
    """Execute ``cfg``; returns the written (csv, json) paths."""
    params = resolve(cfg)
    start = time.perf_counter()
    header, rows, summary = COMMANDS[cfg.subcommand](cfg, params)
    elapsed = time.perf_counter() - start
    meta = {"config": cfg.to_dict(), "parameters": params, "seed": cfg.seed,
            "engine": cfg.engine, "units": params["units"], "summary": summary}
    if params["units"] == "si":
        meta["si"] = _si(params)
    # render both before writing so a non-finite value leaves no partial output
    csv_text = io.csv_text(header, rows)
    json_text = io.json_text(meta)
    csv_path, json_path, timing_path = output_paths(cfg, params)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(csv_text)
    json_path.write_text(json_text)
    io.write_json(timing_path, {"wall_time_s": elapsed})
    return csv_path, json_path


def read_summary(path):
    """RunConfig recorded in a JSON summary."""
    return RunConfig.from_dict(json.loads(Path(path).read_text())["config"])


def make_parser():
    ap = argparse.ArgumentParser(prog="eitcool", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON or INI parameter file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--engine", choices=tuple(ENGINE_NAMES))
    ap.add_argument("--units", choices=UNIT_MODES)
    return ap


NUMERICAL_ERRORS = (io.NonFiniteError, fluxqubit.ConvergenceError,
                    fluxqubit.SingularWorkingPointError,
                    lindblad.DegenerateSteadyStateError, lindblad.TruncationError,
                    lindblad.StiffnessError, ex.MemoryGateError, np.linalg.LinAlgError,
                    ArithmeticError)


def parse_and_dispatch(argv=None):
    ap = make_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = RunConfig(ns.subcommand, _parse_set(ns.set), ns.config, ns.out, ns.seed,
                        ns.engine, ns.units)
        csv_path, json_path = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:  # parameter validation inside the library
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(csv_path)
    print(json_path)
    return 0


def main():
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
