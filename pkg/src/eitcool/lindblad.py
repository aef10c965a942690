"""Qubit (x) resonator master equation: Liouvillian, dynamics, steady state.

Rotating-frame model, qubit levels g, e, a (ascending energy)::

    H  = -D_g |g><g| - D_e |e><e| + sum_k nu_k b_k^+ b_k
         + O_g B_g |a><g| + O_e B_e |a><e| + h.c.
    B_j = 1 + sum_k eta_j^(k) (b_k + b_k^+)

with decay a->g (gamma_g B_g), a->e (gamma_e B_e), e->g (Gamma B_3), pure
dephasing (Gamma_phi/2 on |e><e| - |g><g|) and a thermal bath per mode.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse import csgraph
from scipy.integrate import solve_ivp

from . import linop
from .linop import A, E, G

log = logging.getLogger(__name__)

DIRECT_LIMIT = 200_000
PIVOT_RTOL = 1e-12  # smallest/largest |U_ii| below this means a degenerate kernel


class DegenerateSteadyStateError(RuntimeError):
    pass


class TruncationError(RuntimeError):
    pass


class StiffnessError(RuntimeError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Liouvillian:
    matrix: sp.csr_matrix
    dims: tuple

    @property
    def hilbert_dim(self):
        return math.prod(self.dims)

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, v):
        return self.matrix @ v


@dataclass
class DensityMatrix:
    data: np.ndarray
    dims: tuple

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        self.dims = tuple(self.dims)
        if self.data.shape != (math.prod(self.dims),) * 2:
            raise ValueError("density matrix shape does not match dims")

    @property
    def trace(self):
        return complex(np.trace(self.data))

    def hermiticity_error(self):
        return float(np.abs(self.data - self.data.conj().T).max())

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])

    def vec(self):
        return linop.vec(self.data)


@dataclass
class CoolingTrace:
    times: np.ndarray
    mean_n: np.ndarray          # shape (len(times), n_modes)
    pop_g: np.ndarray
    pop_e: np.ndarray
    pop_a: np.ndarray
    trace_error: np.ndarray
    stderr_n: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_modes(self):
        return self.mean_n.shape[1]


def _mode_ops(dims):
    """Annihilation operator of each mode embedded in the full space."""
    ops = []
    for k, d in enumerate(dims[1:], start=1):
        b = linop.fock_operators(d - 1)[0]
        ops.append(linop.to_sparse(linop.embed(b, k, dims)))
    return ops


def _qubit(i, j, dims):
    return linop.to_sparse(linop.embed(linop.projector(i, j), 0, dims))


def _b_factor(etas, bs, dim):
    out = sp.identity(dim, dtype=complex, format="csr")
    for eta, b in zip(etas, bs):
        if eta:
            out = out + eta * (b + b.conj().T)
    return out.tocsr()


def hamiltonian(spec):
    dims = spec.dims
    dim = math.prod(dims)
    bs = _mode_ops(dims)
    d = spec.drives
    bg = _b_factor([c.eta_g for c in spec.couplings], bs, dim)
    be = _b_factor([c.eta_e for c in spec.couplings], bs, dim)
    h = -d.delta_g * _qubit(G, G, dims) - d.delta_e * _qubit(E, E, dims)
    for res, b in zip(spec.resonators, bs):
        h = h + res.nu * (b.conj().T @ b)
    hi = d.omega_g * (_qubit(A, G, dims) @ bg) + d.omega_e * (_qubit(A, E, dims) @ be)
    return (h + hi + hi.conj().T).tocsr()


def jump_operators(spec):
    """(rate, operator) pairs of every dissipator, zero rates dropped."""
    dims = spec.dims
    dim = math.prod(dims)
    bs = _mode_ops(dims)
    dec = spec.decoherence
    bg = _b_factor([c.eta_g for c in spec.couplings], bs, dim)
    be = _b_factor([c.eta_e for c in spec.couplings], bs, dim)
    b3 = _b_factor([c.eta_3 for c in spec.couplings], bs, dim)
    ops = [
        (dec.gamma_g, (_qubit(G, A, dims) @ bg).tocsr()),
        (dec.gamma_e, (_qubit(E, A, dims) @ be).tocsr()),
        (dec.big_gamma, (_qubit(G, E, dims) @ b3).tocsr()),
        (dec.gamma_phi / 2, (_qubit(E, E, dims) - _qubit(G, G, dims)).tocsr()),
    ]
    for res, b in zip(spec.resonators, bs):
        ops.append(((res.n_i + 1) * res.kappa, b))
        ops.append((res.n_i * res.kappa, b.conj().T.tocsr()))
    return [(rate, op) for rate, op in ops if rate > 0]


def build_liouvillian(spec):
    """Sparse generator of the full master equation for ``spec``."""
    for res, c in zip(spec.resonators, spec.couplings):
        if res is None or c is None:
            raise ValueError("incomplete resonator/coupling specification")
    lv = linop.commutator_super(hamiltonian(spec))
    for rate, op in jump_operators(spec):
        lv = lv + linop.lindblad_term(rate, op)
    return Liouvillian(lv.tocsr(), spec.dims)


def _thermal_populations(n_bar, n_max):
    n = np.arange(n_max + 1)
    if n_bar == 0:
        p = (n == 0).astype(float)
    else:
        p = (n_bar / (n_bar + 1.0)) ** n
    tail = 1.0 - p.sum() / (n_bar + 1.0) if n_bar else 0.0
    if tail > 1e-3:
        suggested = int(math.ceil(math.log(1e-3) / math.log(n_bar / (n_bar + 1.0))))
        warnings.warn(f"thermal tail {tail:.1e} truncated; use n_max >= {suggested}",
                      TruncationWarning, stacklevel=3)
    return p / p.sum()


def thermal_state(n_bar, n_max, qubit_level=G):
    """Truncated thermal state(s) tensored with the qubit level ``|qubit_level>``.

    ``n_bar`` and ``n_max`` may be sequences for several modes.
    """
    n_bars = np.atleast_1d(n_bar).astype(float)
    n_maxes = np.broadcast_to(np.atleast_1d(n_max), n_bars.shape)
    if np.any(n_bars < 0):
        raise ValueError("n_bar must be non-negative")
    q = np.zeros(3)
    q[qubit_level] = 1.0
    diag = q
    for nb, nm in zip(n_bars, n_maxes):
        diag = np.kron(diag, _thermal_populations(nb, int(nm)))
    dims = (3,) + tuple(int(nm) + 1 for nm in n_maxes)
    return DensityMatrix(np.diag(diag.astype(complex)), dims)


def _diag_observables(diag, dims):
    p = np.real(diag).reshape(dims)
    pops = p.sum(axis=tuple(range(1, len(dims))))
    means = []
    for k in range(1, len(dims)):
        axes = tuple(i for i in range(len(dims)) if i != k)
        pk = p.sum(axis=axes)
        means.append(float(np.arange(dims[k]) @ pk))
    return means, pops


def observables(rho):
    """Mean phonon number per mode and qubit populations."""
    means, pops = _diag_observables(np.diag(rho.data), rho.dims)
    return {"mean_n": means, "pop_g": float(pops[G]), "pop_e": float(pops[E]),
            "pop_a": float(pops[A])}


def evolve(lv, rho0, t_grid, rtol=1e-8, atol=1e-10, method="DOP853"):
    """Integrate d vec(rho)/dt = L vec(rho) and record observables on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must start at 0 and increase strictly")
    if tuple(rho0.dims) != tuple(lv.dims):
        raise ValueError("rho0 dims do not match the Liouvillian")
    dim = lv.hilbert_dim
    y0 = rho0.vec()
    diag_idx = np.arange(dim) * (dim + 1)
    if t_grid.size == 1:
        ys = y0[:, None]
    else:
        mat = lv.matrix
        sol = solve_ivp(lambda t, y: mat @ y, (0.0, t_grid[-1]), y0, method=method,
                        t_eval=t_grid, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise StiffnessError(f"integration failed ({sol.message}); "
                                 "consider steady_state for long-time limits")
        ys = sol.y
    n_t = t_grid.size
    mean_n = np.zeros((n_t, len(lv.dims) - 1))
    pops = np.zeros((n_t, 3))
    trace_err = np.zeros(n_t)
    for i in range(n_t):
        diag = ys[diag_idx, i]
        means, p = _diag_observables(diag, lv.dims)
        mean_n[i] = means
        pops[i] = p
        trace_err[i] = abs(diag.sum() - 1.0)
    return CoolingTrace(t_grid, mean_n, pops[:, G], pops[:, E], pops[:, A], trace_err,
                        meta={"final": ys[:, -1]})


def final_state(trace, dims):
    """Last state of ``evolve``, projected onto Hermitian matrices.

    Explicit steps on a stiff generator keep the anti-Hermitian error at the
    integration tolerance; the projection removes it without touching trace.
    """
    rho = linop.unvec(trace.meta["final"])
    return DensityMatrix(0.5 * (rho + rho.conj().T), dims)


def _trace_block(lv):
    """Indices of vec(rho) that can be nonzero in the steady state.

    Elements are grouped into strongly connected components of the coupling
    graph of L. A component is live if it holds populations and keeps its
    trace (no population leaks out), or if a live component feeds it. The
    rest decays on its own and vanishes, so the solve is restricted to live
    components. The residual check in ``steady_state`` guards the choice.
    """
    dim = lv.hilbert_dim
    mat = lv.matrix.tocsr(copy=True)
    mat.eliminate_zeros()
    pattern = sp.csr_matrix((np.ones(mat.nnz), mat.indices, mat.indptr), shape=mat.shape)
    _, labels = csgraph.connected_components(pattern, directed=True, connection="strong")
    diag = np.arange(dim) * (dim + 1)
    pops = np.unique(labels[diag])
    coo = mat.tocoo()
    inner = (labels[coo.row] == labels[coo.col]) & np.isin(coo.row, diag)
    leak = np.zeros(mat.shape[0], dtype=complex)
    np.add.at(leak, coo.col[inner], coo.data[inner])
    worst = np.zeros(labels.max() + 1)
    np.maximum.at(worst, labels, np.abs(leak))
    tol = PIVOT_RTOL * np.abs(coo.data).max()
    seeds = [c for c in pops if worst[c] <= tol] or list(pops)
    # component edge a -> b when an element of b depends on one of a
    cross = labels[coo.col] != labels[coo.row]
    n_comp = labels.max() + 1
    edges = sp.csr_matrix((np.ones(cross.sum()), (labels[coo.col][cross],
                                                   labels[coo.row][cross])),
                          shape=(n_comp + 1, n_comp + 1))
    edges = edges + sp.csr_matrix((np.ones(len(seeds)), (np.full(len(seeds), n_comp), seeds)),
                                  shape=edges.shape)
    live = csgraph.breadth_first_order(edges, n_comp, directed=True,
                                       return_predecessors=False)
    return np.flatnonzero(np.isin(labels, live[live < n_comp]))


def _bordered(lv, keep):
    dim = lv.hilbert_dim
    m = lv.matrix[keep][:, keep].tolil()
    row = np.zeros(keep.size, dtype=complex)
    row[np.isin(keep, np.arange(dim) * (dim + 1))] = 1.0
    m[0, :] = row
    rhs = np.zeros(keep.size, dtype=complex)
    rhs[0] = 1.0
    return m.tocsc(), rhs


def steady_state(lv, method="auto", seed=None, x0=None, tol=1e-12,
                 check_positivity=True):
    """Solve L rho = 0 with Tr rho = 1.

    ``method`` is ``"direct"`` (sparse LU), ``"iterative"`` (ILU-preconditioned
    GMRES) or ``"auto"`` (direct below ``DIRECT_LIMIT`` unknowns).
    """
    dim = lv.hilbert_dim
    keep = _trace_block(lv)
    n = keep.size
    if method == "auto":
        method = "direct" if n <= DIRECT_LIMIT else "iterative"
    m, rhs = _bordered(lv, keep)
    if method == "direct":
        try:
            lu = spla.splu(m, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise DegenerateSteadyStateError(str(exc)) from exc
        piv = np.abs(lu.U.diagonal())
        if piv.min() < PIVOT_RTOL * piv.max():
            raise DegenerateSteadyStateError(
                f"steady state not unique (pivot ratio {piv.min() / piv.max():.1e})")
        x = lu.solve(rhs)
    elif method == "iterative":
        if x0 is None:
            rng = np.random.default_rng(seed)
            x0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        try:
            ilu = spla.spilu(m, drop_tol=1e-8, fill_factor=20)
        except RuntimeError as exc:
            raise DegenerateSteadyStateError(str(exc)) from exc
        pre = spla.LinearOperator(m.shape, ilu.solve, dtype=complex)
        x, info = spla.gmres(m, rhs, x0=x0[keep] if x0.size == dim * dim else x0, M=pre, rtol=tol, atol=0.0,
                             restart=100, maxiter=200)
        if info != 0:
            raise DegenerateSteadyStateError(f"GMRES did not converge (info={info})")
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError("steady-state solve produced non-finite values")
    full = np.zeros(dim * dim, dtype=complex)
    full[keep] = x
    rho = linop.unvec(full, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    resid = np.linalg.norm(lv.matrix @ linop.vec(rho))
    if resid > 1e-10 * max(1.0, np.linalg.norm(x)):
        raise DegenerateSteadyStateError(f"steady-state residual {resid:.2e}")
    out = DensityMatrix(rho, lv.dims)
    if check_positivity and dim <= 2000:
        lam = out.min_eigenvalue()
        if lam < -1e-6:
            raise TruncationError(f"steady state has eigenvalue {lam:.2e}; increase n_max")
    return out


def liouvillian_spectrum(lv):
    """Dense eigenvalues of L (small test systems only)."""
    if lv.matrix.shape[0] > 4000:
        raise ValueError("dense spectrum only for small systems")
    return np.linalg.eigvals(lv.matrix.toarray())


@dataclass
class ConvergedSteadyState:
    rho: DensityMatrix
    mean_n: list
    n_max: tuple
    history: list
    converged: bool


def converged_steady_state(spec, n_start=15, rtol=1e-3, growth=1.25, n_cap=160,
                           tail_tol=1e-6):
    """Steady state with the Fock cutoff grown until <n> stops changing.

    Starting from ``n_start`` per mode, the cutoff grows by ``growth`` until
    successive <n> agree to ``rtol`` and the top-level population is below
    ``tail_tol``.
    """
    n_max = tuple(max(1, n_start) for _ in spec.resonators)
    history = []
    prev = None
    while True:
        s = replace(spec, n_max=n_max)
        rho = steady_state(build_liouvillian(s))
        means = observables(rho)["mean_n"]
        p = np.real(np.diag(rho.data)).reshape(s.dims)
        tails = [float(p.take(-1, axis=k).sum()) for k in range(1, len(s.dims))]
        history.append({"n_max": n_max, "mean_n": means, "tail": tails})
        if prev is not None:
            change = max(abs(a - b) / max(abs(a), 1e-12) for a, b in zip(means, prev))
            if change < rtol and max(tails) < tail_tol:
                return ConvergedSteadyState(rho, means, n_max, history, True)
        if max(n_max) >= n_cap:
            warnings.warn(f"Fock cutoff reached n_cap={n_cap} before convergence",
                          TruncationWarning, stacklevel=2)
            return ConvergedSteadyState(rho, means, n_max, history, False)
        prev = means
        n_max = tuple(min(n_cap, int(math.ceil(n * growth))) for n in n_max)
