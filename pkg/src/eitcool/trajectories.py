"""Quantum-jump unravelling of the cooling master equation.

All trajectories are propagated together with dense no-jump propagators
``exp(-i H_eff dt)``. A trajectory whose squared norm falls below its random
threshold is re-run through the step alone, bisecting with power-of-two
sub-step propagators to place the jump to ``dt / 2**levels``.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg as la

from .lindblad import CoolingTrace, hamiltonian, jump_operators
from .linop import A, E, G

MAX_STEP_JUMP_PROB = 0.1
MIN_TRAJECTORIES = 100


class _Propagators:
    def __init__(self, h_eff, levels):
        self.h_eff = h_eff
        self.levels = levels
        self._cache = {}

    def get(self, dt):
        key = round(dt, 12)
        if key not in self._cache:
            unit = dt / 2 ** self.levels
            # spans[i] advances by 2**i units
            self._cache[key] = [la.expm(-1j * self.h_eff * unit * 2 ** i)
                                for i in range(self.levels + 1)]
        return self._cache[key]


def _jump(psi, channels, rng):
    amps = [c @ psi for c in channels]
    weights = np.array([np.vdot(a, a).real for a in amps])
    k = rng.choice(len(amps), p=weights / weights.sum())
    return amps[k] / math.sqrt(weights[k]), k


def _advance_one(psi, r, spans, channels, rng, counts):
    """Advance a single trajectory through one full step, jumps included."""
    levels = len(spans) - 1
    remaining = 2 ** levels
    level = levels
    while remaining:
        while 2 ** level > remaining:
            level -= 1
        cand = spans[level] @ psi
        if np.vdot(cand, cand).real >= r:
            psi = cand
            remaining -= 2 ** level
        elif level:
            level -= 1
        else:
            psi, k = _jump(cand, channels, rng)
            counts[k] += 1
            r = rng.random()
            remaining -= 1
            level = levels
    return psi, r


def _initial_states(spec, rngs):
    dims = spec.dims
    dim = math.prod(dims)
    strides = [math.prod(dims[k + 1:]) for k in range(len(dims))]
    psi = np.zeros((dim, len(rngs)), dtype=complex)
    for m, rng in enumerate(rngs):
        idx = G * strides[0]
        for k, res in enumerate(spec.resonators, start=1):
            n = np.arange(dims[k])
            if res.n_i > 0:
                p = (res.n_i / (res.n_i + 1.0)) ** n
            else:
                p = (n == 0).astype(float)
            idx += int(rng.choice(dims[k], p=p / p.sum())) * strides[k]
        psi[idx, m] = 1.0
    return psi


def trajectory_evolve(spec, n_traj, t_grid, seed=0, dt=0.25, dt_max=4.0, levels=10):
    """Ensemble-averaged observables from ``n_traj`` quantum-jump trajectories.

    Initial Fock states are sampled from each mode's truncated thermal
    distribution; the qubit starts in ``|g>``. Results depend only on ``seed``.
    The step adapts so that the ensemble-mean jump probability per step stays
    below ``MAX_STEP_JUMP_PROB``; jump times are resolved independently of it.
    """
    if n_traj < MIN_TRAJECTORIES:
        raise ValueError(f"need at least {MIN_TRAJECTORIES} trajectories for error bars")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must start at 0 and increase strictly")
    dims = spec.dims
    h = hamiltonian(spec).toarray()
    channels = [(math.sqrt(rate) * op).tocsr() for rate, op in jump_operators(spec)]
    h_eff = h.copy()
    for c in channels:
        h_eff -= 0.5j * (c.conj().T @ c).toarray()
    props = _Propagators(h_eff, levels)

    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_traj)]
    psi = _initial_states(spec, rngs)
    thresholds = np.array([rng.random() for rng in rngs])
    counts = np.zeros(max(len(channels), 1), dtype=int)

    n_modes = len(dims) - 1
    samples = np.zeros((t_grid.size, n_modes, n_traj))
    pops = np.zeros((t_grid.size, 3))
    qubit_axes = tuple(range(1, len(dims)))

    def record(i):
        prob = np.abs(psi) ** 2
        prob = (prob / prob.sum(axis=0)).reshape(dims + (n_traj,))
        pops[i] = prob.sum(axis=qubit_axes).mean(axis=1)
        for k in range(1, len(dims)):
            axes = tuple(a for a in range(len(dims)) if a != k)
            samples[i, k - 1] = np.arange(dims[k]) @ prob.sum(axis=axes)

    record(0)
    refinements = 0
    for i in range(1, t_grid.size):
        span = t_grid[i] - t_grid[i - 1]
        t_done = 0.0
        while span - t_done > 1e-12 * span:
            step = min(dt, span - t_done)
            spans = props.get(step)
            norm0 = np.einsum("ij,ij->j", psi.conj(), psi).real
            new = spans[-1] @ psi
            norm1 = np.einsum("ij,ij->j", new.conj(), new).real
            loss = (1.0 - norm1 / norm0).mean() if channels else 0.0
            if loss > MAX_STEP_JUMP_PROB and step > 1e-3:
                dt = step / 2
                refinements += 1
                continue
            for m in np.flatnonzero(norm1 < thresholds):
                new[:, m], thresholds[m] = _advance_one(
                    psi[:, m], thresholds[m], spans, channels, rngs[m], counts)
            psi = new
            t_done += step
            if loss < 0.2 * MAX_STEP_JUMP_PROB and step == dt:
                dt = min(2 * dt, dt_max)
        record(i)

    mean_n = samples.mean(axis=2)
    stderr = samples.std(axis=2, ddof=1) / math.sqrt(n_traj)
    return CoolingTrace(t_grid, mean_n, pops[:, G], pops[:, E], pops[:, A],
                        np.zeros(t_grid.size), stderr_n=stderr,
                        meta={"n_traj": n_traj, "seed": seed, "jumps": counts.tolist(),
                              "refinements": refinements, "samples": samples})
