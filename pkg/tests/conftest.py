"""Shared random-object generators for the test suite (all seeded)."""

import numpy as np
import pytest

from qcollide.qmat import DensityMatrix, QubitRegister


def random_density(rng, n_qubits, labels=None, rank=None):
    """Ginibre-random density matrix on n_qubits."""
    d = 2**n_qubits
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    mat = g @ g.conj().T
    mat /= np.trace(mat).real
    labels = labels or [f"q{i}" for i in range(n_qubits)]
    return DensityMatrix(QubitRegister(labels), mat, validate=False)


def random_pure(rng, n_qubits, labels=None):
    d = 2**n_qubits
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    labels = labels or [f"q{i}" for i in range(n_qubits)]
    return DensityMatrix(QubitRegister(labels), np.outer(v, v.conj()), validate=False)


def random_unitary(rng, d):
    """Haar-random d x d unitary via QR of a Ginibre matrix."""
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
