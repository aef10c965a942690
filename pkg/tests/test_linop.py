import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from eitcool import linop
from eitcool.linop import A, E, G


def random_hermitian(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return m + m.conj().T


def test_fock_small():
    b, bd, num = linop.fock_operators(2)
    ket1 = np.array([0, 1, 0])
    assert np.allclose(b @ ket1, [1, 0, 0])
    assert num[2, 2] == 2
    assert b.shape == (3, 3)


def test_fock_rejects_zero():
    with pytest.raises(ValueError):
        linop.fock_operators(0)


def test_commutator_truncation_artifact():
    n = 40
    b, bd, _ = (linop.to_dense(m) for m in linop.fock_operators(n))
    comm = b @ bd - bd @ b
    expect = np.eye(n + 1)
    expect[n, n] = -n
    assert np.allclose(comm, expect, atol=1e-12)


def test_creation_ladder():
    n = 12
    _, bd, _ = linop.fock_operators(n)
    for k in range(n):
        ket = np.zeros(n + 1)
        ket[k] = 1
        out = bd @ ket
        assert np.isclose(out[k + 1], np.sqrt(k + 1))
        assert np.count_nonzero(out) == 1


def test_storage_threshold():
    small = linop.fock_operators(63)[0]
    big = linop.fock_operators(64)[0]
    assert isinstance(small, np.ndarray)
    assert sp.issparse(big)
    assert np.abs(linop.to_dense(linop.to_sparse(small)) - small).max() <= 1e-14


def test_tensor_identity_and_ordering():
    assert np.array_equal(linop.to_dense(linop.tensor(np.eye(3), np.eye(2))), np.eye(6))
    m = linop.to_dense(linop.tensor(linop.projector(A, G), np.eye(2)))
    rows, cols = np.nonzero(m)
    # qubit-major: |a,n><g,n| sits in block (2, 0)
    assert set(zip(rows, cols)) == {(4, 0), (5, 1)}


def test_tensor_trace_and_associativity():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((5, 5))
    c = rng.standard_normal((2, 2))
    ab = linop.to_dense(linop.tensor(a, b))
    assert np.isclose(np.trace(ab), np.trace(a) * np.trace(b))
    left = linop.to_sparse(linop.tensor(linop.tensor(a, b), c))
    right = linop.to_sparse(linop.tensor(a, linop.tensor(b, c)))
    pattern = lambda m: set(zip(*m.nonzero()))
    assert pattern(left) == pattern(right)
    assert abs(left - right).max() <= 1e-14 * abs(left).max()


def test_lindblad_term_matches_definition():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = random_hermitian(rng, 4)
    rate = 0.7
    got = linop.apply_super(linop.lindblad_term(rate, a), rho)
    ad = a.conj().T
    want = rate / 2 * (2 * a @ rho @ ad - ad @ a @ rho - rho @ ad @ a)
    assert np.allclose(got, want, atol=1e-13)


def test_lindblad_zero_and_negative_rate():
    assert linop.lindblad_term(0.0, np.eye(3)).nnz == 0
    with pytest.raises(ValueError):
        linop.lindblad_term(-1e-3, np.eye(3))


def test_two_level_decay():
    from scipy.linalg import expm

    gamma = 1.0
    lv = linop.lindblad_term(gamma, linop.projector(0, 1, 2)).toarray()
    rho0 = np.diag([0.0, 1.0]).astype(complex)
    rho = linop.unvec(expm(lv * 1.0) @ linop.vec(rho0))
    assert abs(rho[1, 1].real - np.exp(-1.0)) <= 1e-8


def test_thermal_pair_detailed_balance():
    n_max, n_bar, kappa = 30, 1.5, 0.1
    b = linop.fock_operators(n_max)[0]
    lv = (linop.lindblad_term((n_bar + 1) * kappa, b)
          + linop.lindblad_term(n_bar * kappa, linop.dag(b)))
    x = n_bar / (n_bar + 1)
    p = x ** np.arange(n_max + 1)
    rho = np.diag(p / p.sum()).astype(complex)
    assert np.abs(lv @ linop.vec(rho)).max() <= 1e-14


def test_commutator_super():
    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 5)
    rho = random_hermitian(rng, 5)
    got = linop.apply_super(linop.commutator_super(h), rho)
    assert np.allclose(got, -1j * (h @ rho - rho @ h))


def test_trace_row():
    rho = np.arange(9.0).reshape(3, 3)
    assert linop.trace_row(3) @ linop.vec(rho) == np.trace(rho)


def test_embed():
    b = linop.fock_operators(2)[0]
    full = linop.to_dense(linop.embed(b, 1, (3, 3)))
    assert np.allclose(full, np.kron(np.eye(3), linop.to_dense(b)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.floats(0.0, 3.0))
def test_lindblad_trace_and_hermiticity(seed, d, rate):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = random_hermitian(rng, d)
    lv = linop.commutator_super(h) + linop.lindblad_term(rate, a)
    rho = random_hermitian(rng, d)
    out = linop.apply_super(lv, rho)
    scale = np.abs(rho).max() * (1 + np.abs(a).max() ** 2 + np.abs(h).max())
    assert abs(np.trace(out)) <= 1e-12 * scale * d
    assert np.abs(out - out.conj().T).max() <= 1e-12 * scale * d
