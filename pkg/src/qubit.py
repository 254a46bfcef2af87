"""
Closed-form qubit estimates in the Bloch representation

A qubit state is rho = (I + v . sigma) / 2. Measuring the spin along a unit
direction n gives the mean <n . sigma>; the estimates below are the closed
forms of the general estimators for that case.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.errors import DimMismatch, DomainError, InfeasibleMean, InvalidState, NoInformation, RankDeficient
from src.linalg_core import DensityMatrix, HermitianOperator, expectation

logger = logging.getLogger(__name__)

BLOCH_TOLERANCE = 1e-10
DIRECTION_TOLERANCE = 1e-10
# |tau x n| at or below this carries no first-order information
CROSS_PRODUCT_FLOOR = 1e-12

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def _three_vector(values, name):
    vector = np.array(values, dtype=float).ravel()
    if vector.size != 3:
        raise DimMismatch(f"{name} needs 3 components, got {vector.size}", size=int(vector.size))
    if not np.all(np.isfinite(vector)):
        raise DomainError(f"{name} has non-finite components")
    vector.setflags(write=False)
    return vector


class BlochVector:
    """Bloch vector of a qubit state, |v| <= 1"""

    def __init__(self, components):
        self.v = _three_vector(components, "Bloch vector")
        length = float(np.linalg.norm(self.v))
        if length > 1.0 + BLOCH_TOLERANCE:
            raise InvalidState(f"Bloch vector has length {length!r} > 1", length=length)

    @property
    def length(self):
        return float(np.linalg.norm(self.v))

    def __iter__(self):
        return iter(self.v.tolist())

    def __repr__(self):
        return f"BlochVector({self.v.tolist()})"


class SpinDirection:
    """Unit vector along which the spin is measured"""

    def __init__(self, components):
        self.n = _three_vector(components, "Spin direction")
        length = float(np.linalg.norm(self.n))
        if abs(length - 1.0) > DIRECTION_TOLERANCE:
            raise DomainError(f"Spin direction has length {length!r}, expected 1", length=length)

    @classmethod
    def normalized(cls, components):
        vector = np.array(components, dtype=float).ravel()
        norm = np.linalg.norm(vector)
        if norm == 0.0 or not np.isfinite(norm):
            raise DomainError("Cannot normalize a zero or non-finite direction")
        return cls(vector / norm)

    def __repr__(self):
        return f"SpinDirection({self.n.tolist()})"


@dataclass(frozen=True)
class QubitHamiltonianEstimate:
    """
    First-order Hamiltonian estimate from one spin direction

    ``h_eff`` is the product h t (the evolution time is not separable from a
    single measurement). The identity component of H is a global phase and is
    never estimated.
    """

    h_eff: np.ndarray
    direction: np.ndarray
    kappa: float

    identity_component = None

    def per_unit_time(self, t):
        if not t > 0:
            raise DomainError("Evolution time must be positive", t=t)
        return self.h_eff / t


def _bloch(value):
    return value if isinstance(value, BlochVector) else BlochVector(value)


def _direction(value):
    return value if isinstance(value, SpinDirection) else SpinDirection(value)


def spin_observable(n):
    """n . sigma"""
    n = _direction(n)
    return HermitianOperator(sum(c * s for c, s in zip(n.n, PAULIS)), label='spin')


def bloch_to_density(v):
    v = _bloch(v)
    return DensityMatrix(0.5 * (IDENTITY + sum(c * s for c, s in zip(v.v, PAULIS))))


def density_to_bloch(rho):
    if rho.dim != 2:
        raise DimMismatch(f"Bloch vectors describe qubits, got dimension {rho.dim}", dims=[rho.dim, 2])
    return BlochVector([expectation(rho, s) for s in PAULIS])


def _kappa(tau, n, mean):
    if not math.isfinite(mean) or abs(mean) >= 1.0:
        raise InfeasibleMean(f"Spin mean {mean!r} must lie strictly inside (-1, 1)", mean=mean)
    projection = float(np.dot(tau.v, n.n))
    kappa = (projection - mean) / (1.0 - mean * projection)
    if abs(kappa) >= 1.0:
        raise InfeasibleMean(
            f"Mean {mean!r} is unreachable from a prior with projection {projection!r}",
            mean=mean, projection=projection, kappa=kappa,
        )
    return projection, kappa


def qubit_lambda(tau, n, mean):
    """
    Multiplier lam = artanh[(tau.n - mean) / (1 - mean tau.n)]

    Same sign convention as the general estimator: the posterior is
    exp(-lam n.sigma / 2) tau exp(-lam n.sigma / 2) / Z.
    """
    _, kappa = _kappa(_bloch(tau), _direction(n), mean)
    return float(np.arctanh(kappa))


def qubit_posterior_from_lambda(tau, n, lam):
    """
    Posterior Bloch vector for a given multiplier

    Returns:
        tuple: (BlochVector, Z) with Z = cosh(lam) - (tau.n) sinh(lam)
    """
    tau, n = _bloch(tau), _direction(n)
    projection = float(np.dot(tau.v, n.n))
    partition = math.cosh(lam) - projection * math.sinh(lam)
    parallel = (projection * math.cosh(lam) - math.sinh(lam)) / partition
    perpendicular = (tau.v - projection * n.n) / partition
    return BlochVector(parallel * n.n + perpendicular), partition


def qubit_mke_mean(tau, n, mean):
    """
    Minimum Kullback entropy Bloch vector reproducing <n . sigma> = mean

    The component along n is set to the mean and every component of the prior
    orthogonal to n shrinks by sqrt[(1 - mean^2) / (1 - (tau.n)^2)].

    Args:
        tau (BlochVector): prior
        n (SpinDirection): measured direction
        mean (float): measured spin mean

    Returns:
        BlochVector
    """
    tau, n = _bloch(tau), _direction(n)
    projection, kappa = _kappa(tau, n, mean)
    if kappa == 0.0:
        return tau
    shrink = math.sqrt((1.0 - mean ** 2) / (1.0 - projection ** 2))
    return BlochVector(mean * n.n + shrink * (tau.v - projection * n.n))


def hamiltonian_from_bloch_shift(tau, w):
    """
    Minimum-norm h t with w = tau + 2 t (h x tau), i.e. h t = tau x w / (2 |tau|^2)
    """
    tau, w = _bloch(tau), _bloch(w)
    norm2 = float(np.dot(tau.v, tau.v))
    if norm2 <= CROSS_PRODUCT_FLOOR:
        raise NoInformation("A maximally mixed prior is invariant under every Hamiltonian")
    return np.cross(tau.v, w.v) / (2.0 * norm2)


def qubit_weak_hamiltonian_single(tau, n, mean):
    """
    Weak Hamiltonian from one spin mean measured after a short evolution

    The posterior Bloch vector is taken as the evolved state and the rotation
    from tau to it gives h t along tau x n.

    Returns:
        QubitHamiltonianEstimate
    """
    tau, n = _bloch(tau), _direction(n)
    cross = np.cross(tau.v, n.n)
    cross_norm = float(np.linalg.norm(cross))
    if cross_norm <= CROSS_PRODUCT_FLOOR:
        raise NoInformation(
            "Prior Bloch vector is parallel to the measured direction", cross_norm=cross_norm
        )

    projection, kappa = _kappa(tau, n, mean)
    coefficient = ((1.0 - math.sqrt(1.0 - kappa ** 2)) * projection - kappa) / (1.0 - projection * kappa)
    h_eff = coefficient * cross / (2.0 * float(np.dot(tau.v, tau.v)))
    logger.debug("Single-direction Hamiltonian estimate h t = %s (kappa=%.6g)", h_eff.tolist(), kappa)
    return QubitHamiltonianEstimate(h_eff=h_eff, direction=cross / cross_norm, kappa=kappa)


def qubit_weak_hamiltonian_multi(tau, data, t=None):
    """
    Least-squares weak Hamiltonian from several spin directions

    Solves mean_i - tau.n_i = 2 (h t) . (tau x n_i) in the minimum-norm sense,
    so the unobservable component along tau is zero.

    Args:
        tau (BlochVector): prior
        data (list): (SpinDirection, mean) pairs
        t (float, optional): evolution time; when given h is returned instead of h t

    Returns:
        np.ndarray: 3 components

    Raises:
        RankDeficient: the directions span fewer than two independent rows
    """
    tau = _bloch(tau)
    data = [(_direction(n), float(mean)) for n, mean in data]
    if not data:
        raise RankDeficient("No spin directions supplied", rank=0)

    rows = np.array([2.0 * np.cross(tau.v, n.n) for n, _ in data])
    rhs = np.array([mean - float(np.dot(tau.v, n.n)) for n, mean in data])
    rank = int(np.linalg.matrix_rank(rows, tol=CROSS_PRODUCT_FLOOR))
    if rank < 2:
        raise RankDeficient(
            f"Spin directions determine only {rank} component(s) of the Hamiltonian; 2 are needed",
            rank=rank, directions=len(data),
        )

    h_eff = np.linalg.lstsq(rows, rhs, rcond=None)[0]
    if t is not None:
        if not t > 0:
            raise DomainError("Evolution time must be positive", t=t)
        return h_eff / t
    return h_eff
