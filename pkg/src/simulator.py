"""
Ground-truth measurement data: exact means and distributions, seeded shot
samples and unitary evolution
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.entropy import ClassicalDistribution
from src.errors import DimMismatch, DomainError, IncompleteBasis
from src.linalg_core import DensityMatrix, HermitianOperator, as_square_matrix, commutator, eigh, expectation

logger = logging.getLogger(__name__)

BASIS_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ShotSample:
    counts: np.ndarray
    shots: int
    seed: int

    def frequencies(self):
        return self.counts / self.shots


def _check_dims(a, b):
    if a.dim != b.dim:
        raise DimMismatch(f"Dimension mismatch: {a.dim} vs {b.dim}", dims=[a.dim, b.dim])


def exact_mean(rho, obs):
    """Tr[rho A]"""
    obs = obs if isinstance(obs, HermitianOperator) else HermitianOperator(obs)
    _check_dims(rho, obs)
    return expectation(rho, obs)


def exact_distribution(rho, basis):
    """
    Outcome probabilities <phi_k|rho|phi_k> for the columns of ``basis``

    Raises:
        IncompleteBasis: the columns are not an orthonormal basis
    """
    basis = as_square_matrix(basis)
    if basis.shape[0] != rho.dim:
        raise DimMismatch(f"State has dimension {rho.dim}, basis {basis.shape[0]}", dims=[rho.dim, basis.shape[0]])
    deviation = float(np.abs(basis.conj().T @ basis - np.eye(rho.dim)).max())
    if deviation > BASIS_TOLERANCE:
        raise IncompleteBasis(
            f"Measurement vectors are not an orthonormal basis (max deviation {deviation:.3e})",
            deviation=deviation,
        )
    probabilities = np.real(np.einsum('ik,ij,jk->k', basis.conj(), rho.matrix, basis))
    return ClassicalDistribution(probabilities)


def sample_outcomes(p, shots, seed):
    """
    Multinomial draw of ``shots`` outcomes

    A counter-based Philox generator keyed by ``seed`` makes every call with the
    same (p, shots, seed) return the same counts.

    Returns:
        ShotSample
    """
    p = p if isinstance(p, ClassicalDistribution) else ClassicalDistribution(p)
    if isinstance(shots, bool) or int(shots) != shots or shots < 1:
        raise DomainError(f"Number of shots must be a positive integer, got {shots!r}", shots=shots)
    seed = int(seed)
    rng = np.random.Generator(np.random.Philox(seed))
    probabilities = p.probabilities / p.probabilities.sum()
    counts = rng.multinomial(int(shots), probabilities)
    counts.setflags(write=False)
    return ShotSample(counts=counts, shots=int(shots), seed=seed)


def evolve_unitary(tau, H, t):
    """rho_t = exp(-i H t) tau exp(i H t) through the spectrum of H"""
    H = H if isinstance(H, HermitianOperator) else HermitianOperator(H)
    _check_dims(tau, H)
    spectrum = eigh(H)
    unitary = spectrum.reconstruct(np.exp(-1j * spectrum.eigenvalues * t))
    evolved = unitary @ tau.matrix @ unitary.conj().T
    return DensityMatrix(evolved, label=tau.label)


def first_order_state(tau, H, t):
    """tau + i t [tau, H], the linearization of evolve_unitary in t"""
    H = H if isinstance(H, HermitianOperator) else HermitianOperator(H)
    _check_dims(tau, H)
    return HermitianOperator(tau.matrix + 1j * t * commutator(tau, H), label='first order')
