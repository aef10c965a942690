"""Operator algebra on the qubit and truncated Fock spaces.

Operators are plain numpy arrays (dimension <= ``SPARSE_THRESHOLD``) or
``scipy.sparse`` CSR matrices. Superoperators are always sparse and act on
column-stacked density matrices, ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

SPARSE_THRESHOLD = 64

# qubit level indices, ascending energy
G, E, A = 0, 1, 2


def store(m):
    """Return ``m`` in the storage class chosen by its dimension."""
    if m.shape[0] > SPARSE_THRESHOLD:
        return sp.csr_matrix(m)
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def to_sparse(m):
    return sp.csr_matrix(m)


def to_dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def dag(m):
    return m.conj().T


def is_hermitian(m, tol=1e-12):
    diff = m - dag(m)
    if sp.issparse(diff):
        return diff.nnz == 0 or abs(diff).max() <= tol
    return np.abs(diff).max(initial=0.0) <= tol


def identity(dim):
    return store(sp.identity(dim, dtype=complex, format="csr"))


def fock_operators(n_max):
    """Annihilation, creation and number operators on ``|0>..|n_max>``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    b = sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1,
                 format="csr", dtype=complex)
    bd = b.T.tocsr()
    num = sp.diags(np.arange(n_max + 1, dtype=complex), 0, format="csr")
    return store(b), store(bd), store(num)


def projector(i, j, dim=3):
    """``|i><j|`` on a ``dim``-level system."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def tensor(*ops):
    """Kronecker product, leftmost factor most significant (qubit first)."""
    if not ops:
        raise ValueError("need at least one operand")
    out = to_sparse(ops[0])
    for op in ops[1:]:
        out = sp.kron(out, to_sparse(op), format="csr")
    return store(out)


def embed(op, position, dims):
    """Place ``op`` at factor ``position`` of a tensor space with ``dims``."""
    factors = [sp.identity(d, dtype=complex, format="csr") for d in dims]
    factors[position] = op
    return tensor(*factors)


def spre(a):
    """Superoperator of ``rho -> a rho``."""
    a = to_sparse(a)
    return sp.kron(sp.identity(a.shape[0], format="csr"), a, format="csr")


def spost(a):
    """Superoperator of ``rho -> rho a``."""
    a = to_sparse(a)
    return sp.kron(a.T, sp.identity(a.shape[0], format="csr"), format="csr")


def commutator_super(h):
    """Superoperator of ``rho -> -i [h, rho]``."""
    return (-1j * (spre(h) - spost(h))).tocsr()


def lindblad_term(rate, a):
    """Superoperator of ``(rate/2)(2 a rho a^+ - a^+ a rho - rho a^+ a)``."""
    if rate < 0:
        raise ValueError(f"negative dissipation rate {rate}")
    a = to_sparse(a)
    d = a.shape[0]
    if rate == 0:
        return sp.csr_matrix((d * d, d * d), dtype=complex)
    ada = (a.conj().T @ a).tocsr()
    eye = sp.identity(d, format="csr")
    out = (2 * sp.kron(a.conj(), a) - sp.kron(eye, ada) - sp.kron(ada.T, eye))
    return (0.5 * rate * out).tocsr()


def vec(rho):
    """Column-stack a matrix."""
    return np.asarray(to_dense(rho)).reshape(-1, order="F")


def unvec(v, dim=None):
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(dim, dim, order="F")


def apply_super(superop, rho):
    return unvec(superop @ vec(rho), rho.shape[0])


def trace_row(dim):
    """Row vector ``t`` with ``t @ vec(rho) == Tr rho``."""
    t = np.zeros(dim * dim, dtype=complex)
    t[np.arange(dim) * (dim + 1)] = 1.0
    return t
