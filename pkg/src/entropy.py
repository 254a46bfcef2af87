"""
Classical and quantum entropy functionals

All logarithms are natural. Divergences whose support condition fails return
``DIVERGENT`` (positive infinity), which is a valid result and not an error.
"""

import math

import numpy as np
from scipy.special import entr, rel_entr

from src.errors import DimMismatch, InvalidDistribution
from src.linalg_core import SUPPORT_THRESHOLD, eigh, support_mask

DIVERGENT = math.inf

NORMALIZATION_TOLERANCE = 1e-10
# Round-off negatives down to this size are clipped to zero
NEGATIVE_PROBABILITY_TOLERANCE = 1e-12


class ClassicalDistribution:
    """Finite probability vector"""

    normalization_tolerance = NORMALIZATION_TOLERANCE

    def __init__(self, probabilities):
        p = np.array(probabilities, dtype=float).ravel()
        if p.size == 0:
            raise InvalidDistribution("Distribution must have at least one outcome")
        if not np.all(np.isfinite(p)):
            raise InvalidDistribution("Distribution has non-finite entries")
        if p.min() < -NEGATIVE_PROBABILITY_TOLERANCE:
            raise InvalidDistribution(
                f"Negative probability {p.min():.3e}", index=int(np.argmin(p))
            )
        p = np.clip(p, 0.0, None)
        self._check_mass(float(p.sum()))
        p.setflags(write=False)
        self._p = p

    def _check_mass(self, total):
        if abs(total - 1.0) > self.normalization_tolerance:
            raise InvalidDistribution(f"Probabilities sum to {total!r}, expected 1", total=total)

    @property
    def probabilities(self):
        return self._p

    def __len__(self):
        return self._p.size

    def __repr__(self):
        return f"{type(self).__name__}({self._p.tolist()})"

    @classmethod
    def uniform(cls, size):
        return cls(np.full(size, 1.0 / size))


def _probabilities(p):
    if isinstance(p, ClassicalDistribution):
        return p.probabilities
    return ClassicalDistribution(p).probabilities


def shannon_entropy(p):
    """H(p) = -sum_k p_k ln p_k with 0 ln 0 = 0"""
    return float(np.sum(entr(_probabilities(p))))


def kl_divergence(p, q):
    """
    Kullback-Leibler divergence K(p|q) = sum_k p_k ln(p_k / q_k)

    Returns:
        float: the divergence, or DIVERGENT when some p_k > 0 has q_k = 0
    """
    p, q = _probabilities(p), _probabilities(q)
    if p.size != q.size:
        raise DimMismatch(f"Distribution lengths differ: {p.size} vs {q.size}", dims=[p.size, q.size])
    terms = rel_entr(p, q)
    if np.any(np.isinf(terms)):
        return DIVERGENT
    return float(np.sum(terms))


def von_neumann_entropy(rho):
    """H(rho) = -Tr[rho ln rho] over the numerical support"""
    eigenvalues = rho.eigenvalues
    keep = support_mask(eigenvalues)
    return float(np.sum(entr(eigenvalues[keep])))


def quantum_kullback(rho, tau):
    """
    Quantum relative entropy K(rho|tau) = Tr[rho (ln rho - ln tau)]

    Both logarithms are evaluated on the numerical supports. If the support
    of rho is not contained in the support of tau the result is DIVERGENT.

    Args:
        rho (DensityMatrix): posterior
        tau (DensityMatrix): prior

    Returns:
        float
    """
    if rho.dim != tau.dim:
        raise DimMismatch(f"State dimensions differ: {rho.dim} vs {tau.dim}", dims=[rho.dim, tau.dim])

    rho_spec, tau_spec = eigh(rho), eigh(tau)
    rho_keep = support_mask(rho_spec.eigenvalues)
    tau_keep = support_mask(tau_spec.eigenvalues)
    r = rho_spec.eigenvalues[rho_keep]
    t = tau_spec.eigenvalues[tau_keep]

    # weights[i, j] = r_i |<u_i|v_j>|^2
    overlaps = np.abs(rho_spec.eigenvectors[:, rho_keep].conj().T @ tau_spec.eigenvectors) ** 2
    weights = r[:, None] * overlaps
    if np.any(weights[:, ~tau_keep] > SUPPORT_THRESHOLD):
        return DIVERGENT

    cross = np.sum(weights[:, tau_keep] * np.log(t)[None, :])
    return float(np.sum(r * np.log(r)) - cross)


def is_divergent(value):
    return math.isinf(value) and value > 0
