"""
Random states, observables and distributions shared by the test modules
"""
import os
import sys

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.linalg_core import DensityMatrix, HermitianOperator

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    matrix = g @ g.conj().T
    return DensityMatrix(matrix / np.trace(matrix).real)


def random_hermitian(rng, dim, scale=1.0):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator(scale * 0.5 * (z + z.conj().T))


def random_distribution(rng, size):
    p = rng.uniform(0.05, 1.0, size=size)
    return p / p.sum()


def random_unit_vector(rng, size=3):
    v = rng.normal(size=size)
    return v / np.linalg.norm(v)


def diagonal_in(unitary, values):
    """unitary diag(values) unitary^dagger"""
    return (unitary * np.asarray(values)) @ unitary.conj().T
