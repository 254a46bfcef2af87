"""
Dense Hermitian linear algebra shared by every estimator

Operators are small dense complex matrices (dimension up to a few hundred).
All values are immutable after construction: the wrapped numpy arrays are
flagged read-only and spectral decompositions are cached on first use.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from src.errors import DimMismatch, DomainError, InvalidState, NonHermitianInput

logger = logging.getLogger(__name__)

# Eigenvalues below this fraction of the largest one are treated as exactly zero
SUPPORT_THRESHOLD = 1e-12
HERMITIAN_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-10
NEGATIVE_EIGENVALUE_TOLERANCE = 1e-10
# Components smaller than this do not fix an eigenvector's phase
PHASE_COMPONENT_FLOOR = 1e-10


def _frozen(array):
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def as_square_matrix(values):
    """
    Convert nested sequences or an array to a finite square complex matrix

    Args:
        values: array-like of shape (d, d)

    Returns:
        np.ndarray: complex copy of the input
    """
    matrix = np.array(values, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimMismatch(f"Expected a square matrix, got shape {matrix.shape}", shape=list(matrix.shape))
    if matrix.shape[0] == 0:
        raise DimMismatch("Matrix must have positive dimension", shape=list(matrix.shape))
    if not np.all(np.isfinite(matrix)):
        raise DomainError("Matrix has non-finite entries")
    return matrix


def support_mask(eigenvalues, threshold=SUPPORT_THRESHOLD):
    """Boolean mask of eigenvalues inside the numerical support"""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    top = eigenvalues.max() if eigenvalues.size else 0.0
    if top <= 0.0:
        return np.zeros(eigenvalues.shape, dtype=bool)
    return eigenvalues > threshold * top


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order and the matching orthonormal eigenvector columns"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values=None):
        """Rebuild sum_k f_k |phi_k><phi_k| with f_k the eigenvalues (or ``values``)"""
        values = self.eigenvalues if values is None else np.asarray(values)
        vectors = self.eigenvectors
        return (vectors * values) @ vectors.conj().T


def _fix_phases(vectors):
    """Make the first non-negligible component of every column real and positive"""
    vectors = vectors.copy()
    for k in range(vectors.shape[1]):
        column = vectors[:, k]
        significant = np.nonzero(np.abs(column) > PHASE_COMPONENT_FLOOR)[0]
        if significant.size == 0:
            continue
        pivot = column[significant[0]]
        vectors[:, k] = column * (np.conj(pivot) / abs(pivot))
    return vectors


def _check_hermitian(matrix):
    deviation = np.abs(matrix - matrix.conj().T).max()
    scale = max(1.0, np.abs(matrix).max())
    if deviation > HERMITIAN_TOLERANCE * scale:
        raise NonHermitianInput(
            f"Matrix is not Hermitian (max |A - A^dagger| = {deviation:.3e})",
            deviation=float(deviation),
        )


def _decompose(matrix):
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    eigenvalues = np.array(eigenvalues, dtype=float)
    eigenvalues.setflags(write=False)
    return SpectralDecomposition(eigenvalues, _frozen(_fix_phases(eigenvectors)))


class HermitianOperator:
    """Hermitian matrix with a cached spectral decomposition"""

    def __init__(self, matrix, label=None):
        """
        Validate and store a Hermitian matrix

        Args:
            matrix: square array-like; checked for Hermitian symmetry to 1e-12
                and then symmetrized
            label (str, optional): name carried into reports
        """
        matrix = as_square_matrix(matrix)
        _check_hermitian(matrix)
        self._matrix = _frozen(0.5 * (matrix + matrix.conj().T))
        self.label = label

    @property
    def matrix(self):
        return self._matrix

    @property
    def dim(self):
        return self._matrix.shape[0]

    @cached_property
    def spectrum(self):
        return _decompose(self._matrix)

    def __repr__(self):
        label = f" {self.label!r}" if self.label else ""
        return f"<{type(self).__name__}{label} dim={self.dim}>"


# An observable is a Hermitian operator whose spectrum is used as measurement outcomes
Observable = HermitianOperator


class DensityMatrix(HermitianOperator):
    """Unit-trace positive-semidefinite Hermitian operator"""

    def __init__(self, matrix, label=None):
        super().__init__(matrix, label=label)
        trace = float(np.trace(self._matrix).real)
        if abs(trace - 1.0) > TRACE_TOLERANCE:
            raise InvalidState(f"Density matrix trace is {trace!r}, expected 1", trace=trace)

        eigenvalues = self.spectrum.eigenvalues
        lowest = float(eigenvalues[0])
        if lowest < -NEGATIVE_EIGENVALUE_TOLERANCE:
            raise InvalidState(
                f"Density matrix has negative eigenvalue {lowest:.3e}", eigenvalue=lowest
            )
        if lowest < -SUPPORT_THRESHOLD * max(float(eigenvalues[-1]), 1.0):
            logger.debug("Clipping eigenvalue %.3e of density matrix", lowest)
            clipped = np.clip(eigenvalues, 0.0, None)
            clipped = clipped / clipped.sum()
            self._matrix = _frozen(self.spectrum.reconstruct(clipped))
            self.__dict__.pop('spectrum', None)

    @classmethod
    def from_vector(cls, vector, label=None):
        """Pure state |psi><psi| from a (not necessarily normalized) vector"""
        vector = np.asarray(vector, dtype=complex).ravel()
        norm = np.linalg.norm(vector)
        if norm == 0.0 or not np.isfinite(norm):
            raise InvalidState("State vector must be nonzero and finite")
        vector = vector / norm
        return cls(np.outer(vector, vector.conj()), label=label)

    @classmethod
    def from_unnormalized(cls, matrix, label=None):
        """Divide a positive Hermitian matrix by its trace"""
        matrix = as_square_matrix(matrix)
        trace = np.trace(matrix).real
        if not trace > 0.0:
            raise InvalidState(f"Cannot normalize matrix with trace {trace!r}", trace=float(trace))
        return cls(matrix / trace, label=label)

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim) / dim, label='maximally mixed')

    @property
    def eigenvalues(self):
        return self.spectrum.eigenvalues

    def rank(self, threshold=SUPPORT_THRESHOLD):
        return int(support_mask(self.eigenvalues, threshold).sum())


def _as_array(value):
    if isinstance(value, HermitianOperator):
        return value.matrix
    return as_square_matrix(value)


def _require_same_dim(a, b):
    if a.shape != b.shape:
        raise DimMismatch(
            f"Dimension mismatch: {a.shape[0]} vs {b.shape[0]}",
            dims=[int(a.shape[0]), int(b.shape[0])],
        )


def eigh(op):
    """
    Spectral decomposition with a deterministic ordering and phase convention

    Eigenvalues are ascending; each eigenvector's first component above
    1e-10 in magnitude is made real and positive.

    Args:
        op (HermitianOperator or array-like): operator to decompose

    Returns:
        SpectralDecomposition
    """
    if isinstance(op, HermitianOperator):
        return op.spectrum
    matrix = as_square_matrix(op)
    _check_hermitian(matrix)
    return _decompose(0.5 * (matrix + matrix.conj().T))


def matrix_function(op, f, support_only=False, threshold=SUPPORT_THRESHOLD):
    """
    Apply a real scalar function to a Hermitian operator through its spectrum

    Args:
        op (HermitianOperator): operator
        f (callable): vectorized real map evaluated on the eigenvalues
        support_only (bool): drop eigenvalues at or below ``threshold`` times
            the largest eigenvalue (used for logarithms of density matrices)
        threshold (float): relative support threshold

    Returns:
        HermitianOperator: sum_k f(a_k) |phi_k><phi_k| over retained eigenvalues
    """
    spectrum = eigh(op)
    eigenvalues = spectrum.eigenvalues
    keep = support_mask(eigenvalues, threshold) if support_only else np.ones(eigenvalues.shape, dtype=bool)

    values = np.zeros(eigenvalues.shape, dtype=float)
    if keep.any():
        with np.errstate(all='ignore'):
            mapped = np.asarray(f(eigenvalues[keep]), dtype=float)
        if not np.all(np.isfinite(mapped)):
            bad = eigenvalues[keep][~np.isfinite(mapped)]
            raise DomainError(
                f"Function is undefined on eigenvalue(s) {bad.tolist()}",
                eigenvalues=bad.tolist(),
            )
        values[keep] = mapped
    return HermitianOperator(spectrum.reconstruct(values))


def frobenius_distance(a, b):
    """Frobenius norm of a - b"""
    a, b = _as_array(a), _as_array(b)
    _require_same_dim(a, b)
    return float(np.linalg.norm(a - b, 'fro'))


def commutator(a, b):
    a, b = _as_array(a), _as_array(b)
    _require_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b):
    a, b = _as_array(a), _as_array(b)
    _require_same_dim(a, b)
    return a @ b + b @ a


def expectation(rho, op):
    """Tr[rho A] for Hermitian rho and A (imaginary round-off discarded)"""
    rho_m, op_m = _as_array(rho), _as_array(op)
    _require_same_dim(rho_m, op_m)
    value = np.sum(rho_m * op_m.T)
    scale = max(1.0, np.abs(op_m).max())
    if abs(value.imag) > 1e-9 * scale:
        logger.warning("Expectation value has imaginary part %.3e", value.imag)
    return float(value.real)


def support_projector(rho, threshold=SUPPORT_THRESHOLD):
    """Orthogonal projector onto the numerical support of a density matrix"""
    spectrum = eigh(rho)
    keep = support_mask(spectrum.eigenvalues, threshold)
    vectors = spectrum.eigenvectors[:, keep]
    return vectors @ vectors.conj().T


def fidelity(rho, sigma):
    """
    Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2

    When either state is numerically pure this is Tr[rho sigma], which is
    evaluated directly to avoid square roots of round-off eigenvalues.
    """
    if not isinstance(rho, DensityMatrix) or not isinstance(sigma, DensityMatrix):
        raise InvalidState("fidelity expects DensityMatrix arguments")
    _require_same_dim(rho.matrix, sigma.matrix)
    if rho.rank() == 1 or sigma.rank() == 1:
        return expectation(rho, sigma)

    root = matrix_function(rho, np.sqrt, support_only=True)
    inner = eigh(root.matrix @ sigma.matrix @ root.matrix)
    values = np.clip(inner.eigenvalues, 0.0, None)
    return float(np.sum(np.sqrt(values)) ** 2)
