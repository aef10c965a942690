"""Scenario runner: analytic versus full-numeric cooling limits.

Reference working points (units of gamma): nu = 1/4, Q = 5e4, eta_LD = 0.0566,
Delta = -3. The weak-field ratio r = Omega_e/Omega_g is not pinned by the
source; ``WEAK_R`` is used throughout.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import lindblad, rates
from .params import (CouplingParams, DecoherenceParams, DriveParams, ModelSpec,
                     DEVICE_ETA_LD, ResonatorParams)
from .trajectories import trajectory_evolve

NU = 0.25
Q_FACTOR = 5e4
WEAK_R = 8.0
ME_MAX_N_I = 20.0
ME_MAX_SUPER_DIM = 400_000
ENGINES = ("analytic", "master_equation", "trajectories")
AXES = ("initial_occupation", "detuning", "rabi", "bias_flux")


class MemoryGateError(RuntimeError):
    pass


def device_coupling(eta_ld=DEVICE_ETA_LD):
    return CouplingParams.from_eta_ld(eta_ld)


def weak_drive(delta=-3.0, nu=NU, r=WEAK_R):
    """Omega_e = sqrt(nu (nu - Delta)), Omega_g = Omega_e / r."""
    return DriveParams.from_ratio(math.sqrt(nu * (nu - delta)), r, delta)


def strong_drive(delta=-3.0, nu=NU, scale=1.0, delta_g=None):
    """Omega_e = Omega_g = scale * sqrt(nu (nu - Delta_e) / 2)."""
    om = scale * math.sqrt(nu * (nu - delta) / 2)
    return DriveParams(om, om, delta if delta_g is None else delta_g, delta)


def strong_optimized_drive():
    """Decoherence-tuned strong field: Delta_g = -2.85, Delta_e = -3, Omega = 0.53."""
    return DriveParams(0.53, 0.53, -2.85, -3.0)


def two_mode_drive():
    return DriveParams(0.694, 0.694, -2.86, -3.0)


def single_mode_spec(drives, n_i, decoherence=None, nu=NU, eta_ld=DEVICE_ETA_LD,
                     n_max=None):
    return ModelSpec(drives, decoherence or DecoherenceParams(),
                     (ResonatorParams(nu=nu, q_factor=Q_FACTOR, n_i=n_i),),
                     (device_coupling(eta_ld),), n_max)


def _workers():
    try:
        return max(1, int(os.environ.get("EITCOOL_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = min(_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


@dataclass
class SweepSpec:
    axis: str
    grid: tuple
    base: ModelSpec
    engines: tuple = ("analytic", "master_equation")
    rabi_scale: float = 1.0
    detuning_ratio: float = 1.0
    weak: bool = False
    output: str | None = None

    def __post_init__(self):
        grid = tuple(float(x) for x in self.grid)
        if not grid:
            raise ValueError("empty sweep grid")
        diffs = np.diff(grid)
        if grid and len(grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        for e in self.engines:
            if e not in ENGINES:
                raise ValueError(f"unknown engine {e!r}")
            if e == "trajectories":
                raise ValueError("trajectory engine is time-resolved; "
                                 "use two_mode_experiment for it")
        if "master_equation" in self.engines and self.axis == "initial_occupation":
            if max(grid) > ME_MAX_N_I:
                raise ValueError(f"master-equation engine limited to N_i <= {ME_MAX_N_I}")
        self.grid = grid
        self.engines = tuple(self.engines)

    def point(self, x):
        """ModelSpec for grid value ``x``."""
        base = self.base
        if self.axis == "initial_occupation":
            res = tuple(replace(r, n_i=x) for r in base.resonators)
            return replace(base, resonators=res, n_max=None)
        if self.axis == "detuning":
            nu = base.resonators[0].nu
            if self.weak:
                d = weak_drive(x, nu, base.drives.r)
            else:
                d = strong_drive(x, nu, self.rabi_scale)
            d = replace(d, delta_g=self.detuning_ratio * x)
            return replace(base, drives=d)
        if self.axis == "rabi":
            d = base.drives
            return replace(base, drives=replace(d, omega_g=x * d.omega_g / d.omega_e,
                                                omega_e=x))
        raise ValueError("bias_flux sweeps belong to fluxqubit.flux_sweep")


@dataclass
class ComparisonReport:
    axis: str
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    COLUMNS = ("axis", "value", "engine", "n_ss", "reference", "rel_dev",
               "n_max", "valid", "status")

    def rows(self):
        return [[r.get(c) for c in self.COLUMNS] for r in self.records]

    def values(self, engine, key="n_ss"):
        return np.array([r[key] if r[key] is not None else np.nan
                         for r in self.records if r["engine"] == engine])

    def grid(self, engine):
        return np.array([r["value"] for r in self.records if r["engine"] == engine])


def _asymptotic(res, weak):
    if weak:
        return res.n_ss_weak, res.weak_valid
    return res.n_ss_strong, res.strong_valid


def _evaluate(args):
    axis, x, spec, engines, weak = args
    res = spec.resonators[0]
    rr = rates.rate_result(spec.drives, spec.couplings[0], res, spec.decoherence)
    ref, gate = _asymptotic(rr, weak)
    valid = bool(gate and rr.within_validity)
    out = []
    if "analytic" in engines:
        out.append(dict(axis=axis, value=x, engine="analytic", n_ss=rr.n_ss,
                        reference=ref, rel_dev=_rel(rr.n_ss, ref), n_max=None,
                        valid=valid, status="ok" if rr.cooling else "heating"))
    if "master_equation" in engines:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", lindblad.TruncationWarning)
                cs = lindblad.converged_steady_state(spec)
            n_num = cs.mean_n[0]
            status = "ok" if cs.converged else "unconverged"
            n_max = cs.n_max[0]
        except (lindblad.DegenerateSteadyStateError, lindblad.TruncationError) as exc:
            n_num, status, n_max = None, f"failed: {exc}", None
        out.append(dict(axis=axis, value=x, engine="master_equation", n_ss=n_num,
                        reference=ref, rel_dev=_rel(n_num, ref), n_max=n_max,
                        valid=valid, status=status))
    return out


def _rel(value, ref):
    if value is None or ref is None or ref == 0:
        return None
    return (value - ref) / ref


def run_sweep(spec):
    """Evaluate every engine at every grid point (points are independent)."""
    jobs = [(spec.axis, x, spec.point(x), spec.engines, spec.weak) for x in spec.grid]
    report = ComparisonReport(spec.axis)
    for recs in _pmap(_evaluate, jobs):
        report.records.extend(recs)
    devs = [abs(r["rel_dev"]) for r in report.records
            if r["engine"] == "master_equation" and r["rel_dev"] is not None]
    report.summary = {"points": len(spec.grid), "engines": list(spec.engines),
                      "max_abs_rel_dev": max(devs) if devs else None}
    return report


def sweep_initial_occupation(spec):
    if spec.axis != "initial_occupation":
        raise ValueError("axis must be initial_occupation")
    return run_sweep(spec)


def strictly_decreasing(values):
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0))


def sweep_detuning(spec):
    """n_ss versus Delta_e with Omega retuned at each point."""
    if spec.axis != "detuning":
        raise ValueError("axis must be detuning")
    report = run_sweep(spec)
    for engine in spec.engines:
        x = np.abs(report.grid(engine))
        y = report.values(engine)
        order = np.argsort(x)
        window = (x[order] >= 1.0) & (x[order] <= 8.0)
        report.summary[f"{engine}_decreasing_in_|delta|"] = strictly_decreasing(
            y[order][window])
        if np.any(np.isfinite(y)):
            i = int(np.nanargmin(y))
            report.summary[f"{engine}_min"] = {"value": float(y[i]),
                                               "delta_e": float(report.grid(engine)[i])}
    return report


def occupation_curve(n_i_grid=(0.1, 1.0, 4.0, 16.0), weak=False, decoherence=None,
                engines=("analytic", "master_equation")):
    """n_ss against N_i at Delta = -3, analytic and master equation."""
    drives = weak_drive() if weak else strong_drive()
    base = single_mode_spec(drives, n_i_grid[0], decoherence)
    return sweep_initial_occupation(SweepSpec("initial_occupation", n_i_grid, base,
                                              engines, weak=weak))


def detuning_curve(delta_grid=(-1, -2, -3, -4, -5, -6, -7, -8), rabi_scale=1.0,
                detuning_ratio=1.0, decoherence=None, n_i=16.0,
                engines=("analytic", "master_equation")):
    """n_ss against Delta_e with Omega_e = Omega_g, analytic and master equation."""
    base = single_mode_spec(strong_drive(delta_grid[0]), n_i, decoherence)
    return sweep_detuning(SweepSpec("detuning", delta_grid, base, engines,
                                    rabi_scale=rabi_scale, detuning_ratio=detuning_ratio))


def band_check(value, target, tol):
    return {"value": value, "target": target, "tol": tol,
            "pass": value is not None and abs(value - target) <= tol}


def reference_cooling_limits():
    """Decohered N_i = 16 limits for the weak and the tuned strong configuration."""
    dec = DecoherenceParams.measured()
    out = {}
    for name, drives, target in (("weak", weak_drive(), 0.65),
                                 ("strong_optimized", strong_optimized_drive(), 0.71)):
        cs = lindblad.converged_steady_state(single_mode_spec(drives, 16.0, dec))
        out[name] = band_check(cs.mean_n[0], target, 0.10)
    return out


def two_mode_spec(n_i=16.0, n_max=None, eta2=None, nus=(0.25, 0.5)):
    dec = DecoherenceParams.measured()
    res = tuple(ResonatorParams(nu=nu, q_factor=Q_FACTOR, n_i=n_i) for nu in nus)
    c2 = device_coupling() if eta2 is None else CouplingParams.from_eta_ld(eta2)
    return ModelSpec(two_mode_drive(), dec, res, (device_coupling(), c2), n_max)


def check_memory_gate(spec):
    dim = spec.hilbert_dim ** 2
    if dim > ME_MAX_SUPER_DIM:
        raise MemoryGateError(f"superoperator dimension {dim} exceeds {ME_MAX_SUPER_DIM};"
                              " use the trajectory engine")
    return dim


def two_mode_experiment(n_i=16.0, reduced_n_i=3.0, reduced_n_max=12, n_traj=500,
                        t_final=2000.0, n_samples=11, seed=0, run_trajectories=True):
    """Rate model at full parameters plus a reduced-scale trajectory check."""
    full = two_mode_spec(n_i)
    per_mode = rates.two_mode_rates(full.drives, full.couplings, full.resonators,
                                    full.decoherence)
    report = ComparisonReport("mode")
    for k, rr in enumerate(per_mode):
        report.records.append(dict(axis="mode", value=full.resonators[k].nu,
                                   engine="analytic", n_ss=rr.n_ss, reference=None,
                                   rel_dev=None, n_max=None, valid=rr.within_validity,
                                   status="ok" if rr.cooling else "heating"))
    report.summary["rate_model"] = [
        {"nu": r.nu, "total_rate": r.total_rate, "n_ss": r.n_ss, "cooling": r.cooling}
        for r in per_mode]
    # the closed-form rates assume Delta_g == Delta_e; the Lamb-Dicke ones do not
    ld = rates.two_mode_rates(full.drives, full.couplings, full.resonators,
                                    full.decoherence, model="lamb_dicke")
    report.summary["lamb_dicke_model"] = [
        {"nu": r.nu, "total_rate": r.total_rate, "n_ss": r.n_ss, "cooling": r.cooling}
        for r in ld]
    if not run_trajectories:
        return report
    small = two_mode_spec(reduced_n_i, reduced_n_max)
    t = np.linspace(0.0, t_final, n_samples)
    tr = trajectory_evolve(small, n_traj, t, seed=seed)
    band = []
    for k, res in enumerate(small.resonators):
        rr = rates.rate_result(small.drives, small.couplings[k], res, small.decoherence,
                               model="lamb_dicke")
        n0 = tr.mean_n[0, k]
        pred = rates.rate_evolve(n0, rr, res, t).mean_n[:, 0]
        final, se = tr.mean_n[-1, k], tr.stderr_n[-1, k]
        band.append({"nu": res.nu, "n_initial": n0, "n_final": final, "stderr": se,
                     "reduction": 1 - final / n0, "rate_model_final": pred[-1],
                     "z": (final - pred[-1]) / se if se > 0 else None})
        report.records.append(dict(axis="mode", value=res.nu, engine="trajectories",
                                   n_ss=final, reference=pred[-1],
                                   rel_dev=_rel(final, pred[-1]), n_max=reduced_n_max,
                                   valid=True, status="ok"))
    report.summary["trajectories"] = band
    report.summary["trace"] = tr
    return report


@dataclass
class ConvergenceReport:
    n_max: list
    n_ss: list
    extrapolated: float
    sufficient_n_max: int | None
    monotone: bool


def convergence_study(spec, n_max_grid):
    """Steady <n> versus cutoff with an Aitken (Richardson-type) limit."""
    grid = sorted(int(n) for n in n_max_grid)
    if len(grid) < 3:
        raise ValueError("need at least three cutoffs")
    vals = []
    for n in grid:
        rho = lindblad.steady_state(lindblad.build_liouvillian(replace(spec, n_max=n)))
        vals.append(lindblad.observables(rho)["mean_n"][0])
    a, b, c = vals[-3:]
    denom = (c - b) - (b - a)
    extrap = c - (c - b) ** 2 / denom if abs(denom) > 1e-15 else c
    diffs = np.diff(vals)
    monotone = bool(np.all(diffs >= -1e-12) or np.all(diffs <= 1e-12))
    if not monotone:
        warnings.warn("non-monotone truncation convergence", RuntimeWarning, stacklevel=2)
    ok = None
    scale = max(abs(extrap), 1e-300)
    for n, v in zip(grid, vals):
        if abs(v - extrap) / scale <= 0.01:
            ok = n
            break
    return ConvergenceReport(grid, vals, float(extrap), ok, monotone)
