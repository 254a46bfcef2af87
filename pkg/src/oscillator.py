"""
Harmonic oscillator estimates in a truncated Fock space

States live on |0>, ..., |D-1>. Coherent priors, photon-number constraints,
reconstruction from a measured photon distribution, estimation of a weak
displacement and of a weak Hamiltonian from photon statistics.
"""

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import gammaln
from scipy.stats import poisson

from src.entropy import ClassicalDistribution
from src.errors import (CutoffTooSmall, DegeneratePrior, DimMismatch, DomainError, InfeasibleMean,
                        InsufficientData, InvalidMean, NoRoot, NoSupport)
from src.linalg_core import SUPPORT_THRESHOLD, DensityMatrix, HermitianOperator, eigh
from src.quantum_mke import MeanConstraint, mke_single_mean

logger = logging.getLogger(__name__)

COHERENT_TAIL_TOLERANCE = 1e-12
PHOTON_TAIL_TOLERANCE = 1e-10
# Eigenvalue gaps of the prior below this fraction of its largest eigenvalue are degenerate
GAP_THRESHOLD = 1e-10
TANGENT_TOLERANCE = 1e-12
ROOT_XTOL = 1e-14
MAX_CUTOFF = 10000


def _check_cutoff(cutoff):
    if isinstance(cutoff, bool) or int(cutoff) != cutoff or cutoff < 2:
        raise CutoffTooSmall(f"Fock cutoff must be an integer >= 2, got {cutoff!r}", cutoff=cutoff)
    return int(cutoff)


class PhotonDistribution(ClassicalDistribution):
    """
    Photon-number distribution p_0, ..., p_{D-1}

    Photons beyond the cutoff are never observed, so the probabilities may
    fall short of unit mass by at most ``tail_tolerance``.
    """

    def __init__(self, probabilities, tail_tolerance=PHOTON_TAIL_TOLERANCE):
        self.tail_tolerance = tail_tolerance
        super().__init__(probabilities)

    def _check_mass(self, total):
        slack = self.normalization_tolerance
        if not 1.0 - self.tail_tolerance - slack <= total <= 1.0 + slack:
            super()._check_mass(total)

    @property
    def cutoff(self):
        return len(self)

    @classmethod
    def poisson(cls, mean, cutoff, tail_tolerance=PHOTON_TAIL_TOLERANCE):
        """Photon statistics of a coherent state with |alpha|^2 = mean"""
        cutoff = _check_cutoff(cutoff)
        tail = float(poisson.sf(cutoff - 1, mean))
        if tail > tail_tolerance:
            raise CutoffTooSmall(
                f"Poisson tail beyond {cutoff} photons is {tail:.3e}", tail=tail, cutoff=cutoff
            )
        return cls(poisson.pmf(np.arange(cutoff), mean), tail_tolerance=tail_tolerance)

    @classmethod
    def from_sample(cls, sample):
        """Empirical distribution of a ShotSample"""
        return cls(sample.frequencies())


@dataclass(frozen=True)
class CoherentMeanEstimate:
    """
    Closed-form estimate for a coherent prior and a mean photon number

    ``partition`` is Z = e^N. ``normalized_partition`` is Tr[tau exp(-lam a^dagger a)]
    = e^(N - |alpha|^2) for the normalized coherent prior.
    """

    beta: complex
    lam: float
    partition: float
    normalized_partition: float


@dataclass(frozen=True)
class DisplacementEstimate:
    beta: float
    determinations: list
    spread: float
    method: str = 'mke'


def annihilation_operator(cutoff):
    cutoff = _check_cutoff(cutoff)
    return np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)


def number_operator(cutoff):
    cutoff = _check_cutoff(cutoff)
    return HermitianOperator(np.diag(np.arange(cutoff, dtype=float)), label='photon number')


def displacement_generator(g, cutoff):
    """
    H = g a + conj(g) a^dagger

    exp(-i H t) is the displacement by beta = -i t conj(g), so a real
    displacement beta after time t needs g = -i beta / t.
    """
    a = annihilation_operator(cutoff)
    return HermitianOperator(g * a + np.conj(g) * a.conj().T, label='displacement generator')


def coherent_amplitudes(alpha, cutoff):
    """Fock amplitudes alpha^n exp(-|alpha|^2 / 2) / sqrt(n!) for n < cutoff"""
    cutoff = _check_cutoff(cutoff)
    alpha = complex(alpha)
    if not cmath.isfinite(alpha):
        raise DomainError("Coherent amplitude must be finite", alpha=str(alpha))
    amplitudes = np.zeros(cutoff, dtype=complex)
    if alpha == 0:
        amplitudes[0] = 1.0
        return amplitudes
    n = np.arange(cutoff)
    radius, phase = abs(alpha), cmath.phase(alpha)
    log_magnitude = -0.5 * radius ** 2 + n * math.log(radius) - 0.5 * gammaln(n + 1)
    return np.exp(log_magnitude) * np.exp(1j * phase * n)


def coherent_density(alpha, cutoff, tail_tolerance=COHERENT_TAIL_TOLERANCE):
    """
    Truncated coherent state |alpha><alpha|, renormalized to unit trace

    Raises:
        CutoffTooSmall: the photon-number tail beyond the cutoff exceeds tail_tolerance
    """
    cutoff = _check_cutoff(cutoff)
    tail = float(poisson.sf(cutoff - 1, abs(complex(alpha)) ** 2))
    if tail > tail_tolerance:
        raise CutoffTooSmall(
            f"Coherent state alpha={alpha} loses {tail:.3e} of its mass beyond cutoff {cutoff}",
            tail=tail, cutoff=cutoff,
        )
    return DensityMatrix.from_vector(coherent_amplitudes(alpha, cutoff), label=f"coherent alpha={alpha}")


def thermal_density(nbar, cutoff):
    """Truncated thermal state with weights proportional to (nbar / (1 + nbar))^n"""
    cutoff = _check_cutoff(cutoff)
    if not nbar >= 0 or not math.isfinite(nbar):
        raise InvalidMean(f"Thermal photon number must be non-negative, got {nbar!r}", nbar=nbar)
    weights = np.zeros(cutoff)
    if nbar == 0:
        weights[0] = 1.0
    else:
        weights = (nbar / (1.0 + nbar)) ** np.arange(cutoff)
    return DensityMatrix(np.diag(weights / weights.sum()), label=f"thermal nbar={nbar}")


def minimal_cutoff(mean_photons, tail=COHERENT_TAIL_TOLERANCE):
    """Smallest cutoff D >= 2 whose Poisson tail beyond D - 1 photons is at most ``tail``"""
    if not mean_photons >= 0:
        raise InvalidMean(f"Mean photon number must be non-negative, got {mean_photons!r}")
    cutoff = 2
    while poisson.sf(cutoff - 1, mean_photons) > tail:
        cutoff += 1
        if cutoff > MAX_CUTOFF:
            raise CutoffTooSmall(f"No cutoff up to {MAX_CUTOFF} meets tail {tail:g}", tail=tail)
    return cutoff


def coherent_mke_mean(alpha, nbar):
    """
    Closed-form estimate for a coherent prior constrained to mean photon number N

    The posterior is again coherent with the prior's phase:
    beta = sqrt(N) exp(i arg alpha) = alpha exp(-lam / 2), lam = ln(|alpha|^2 / N).

    Returns:
        CoherentMeanEstimate
    """
    alpha = complex(alpha)
    if not math.isfinite(nbar) or nbar <= 0:
        raise InvalidMean(f"Mean photon number must be positive, got {nbar!r}", nbar=nbar)
    if alpha == 0:
        raise InfeasibleMean("The vacuum prior only admits zero photons", nbar=nbar)
    lam = math.log(abs(alpha) ** 2 / nbar)
    beta = math.sqrt(nbar) * cmath.exp(1j * cmath.phase(alpha))
    return CoherentMeanEstimate(
        beta=beta,
        lam=lam,
        partition=math.exp(nbar),
        normalized_partition=math.exp(nbar - abs(alpha) ** 2),
    )


def fock_mke_mean(alpha, nbar, cutoff, tol=1e-9, tail_tolerance=COHERENT_TAIL_TOLERANCE):
    """
    Numerical estimate for a truncated coherent prior and a mean photon number

    Delegates to the general single-mean estimator with A = diag(0, 1, ..., D-1).

    Returns:
        EstimationResult
    """
    if not math.isfinite(nbar) or nbar <= 0:
        raise InvalidMean(f"Mean photon number must be positive, got {nbar!r}", nbar=nbar)
    tau = coherent_density(alpha, cutoff, tail_tolerance=tail_tolerance)
    return mke_single_mean(tau, MeanConstraint(number_operator(cutoff), nbar), tol=tol)


def reconstruct_from_photon_distribution(phi, p):
    """
    Pure state sum_nm sqrt(p_n p_m) exp(i phi (n - m)) |n><m|

    This is the estimate for any coherent prior with phase phi; the prior
    amplitude drops out. A distribution short of unit mass (photons lost past
    the cutoff) is rescaled, so the diagonal is p / sum(p) rather than p.
    """
    p = p if isinstance(p, ClassicalDistribution) else PhotonDistribution(p)
    probabilities = p.probabilities
    vector = np.sqrt(probabilities) * np.exp(1j * phi * np.arange(probabilities.size))
    return DensityMatrix.from_unnormalized(np.outer(vector, vector.conj()), label=f"reconstructed phi={phi}")


def _photon_data(alpha, p, cutoff):
    if isinstance(alpha, complex) or not math.isfinite(alpha) or alpha <= 0:
        raise DomainError(f"Prior amplitude must be real and positive, got {alpha!r}", alpha=alpha)
    p = p if isinstance(p, ClassicalDistribution) else PhotonDistribution(p)
    probabilities = p.probabilities
    cutoff = probabilities.size if cutoff is None else _check_cutoff(cutoff)
    if probabilities.size != cutoff:
        raise DimMismatch(
            f"Photon distribution has {probabilities.size} entries for cutoff {cutoff}",
            dims=[probabilities.size, cutoff],
        )
    retained = np.nonzero(probabilities > SUPPORT_THRESHOLD)[0]
    return probabilities, cutoff, retained


def _pair_roots(n, m, p_n, p_m, x_max):
    """
    Positive roots of -x^2 + (n + m) ln x = ln sqrt(n! m! p_n p_m)

    Returns:
        list: zero, one or two roots; the left-hand side peaks at sqrt((n + m) / 2)
    """
    s = n + m
    c = 0.5 * (gammaln(n + 1) + gammaln(m + 1) + math.log(p_n) + math.log(p_m))
    if s == 0:
        return [math.sqrt(-c)] if c < 0 else []

    def f(x):
        return -x * x + s * math.log(x) - c

    peak = math.sqrt(s / 2.0)
    top = f(peak)
    if abs(top) <= TANGENT_TOLERANCE:
        return [peak]
    if top < 0:
        return []

    low = 0.5 * peak
    while f(low) >= 0:
        low *= 0.5
    roots = [bisect(f, low, peak, xtol=ROOT_XTOL, maxiter=400)]
    if x_max > peak and f(x_max) <= 0:
        roots.append(bisect(f, peak, x_max, xtol=ROOT_XTOL, maxiter=400))
    return roots


def _estimate_displacement(alpha, p, cutoff, pairs, method, strict):
    probabilities, cutoff, retained = _photon_data(alpha, p, cutoff)
    x_max = math.sqrt(2.0 * cutoff)

    candidates = []
    for n, m in pairs(retained):
        roots = _pair_roots(int(n), int(m), probabilities[n], probabilities[m], x_max)
        if not roots:
            if strict:
                raise NoRoot(
                    f"Photon probabilities p_{n}, p_{m} admit no displaced amplitude",
                    pair=[int(n), int(m)],
                )
            logger.warning("Skipping pair (%d, %d): no positive root", n, m)
            continue
        candidates.append((int(n), int(m), roots))

    if not candidates:
        raise InsufficientData("No photon-number pair yields a determination", retained=retained.tolist())

    # Pairs with a single root anchor the choice between two-root branches
    unambiguous = [roots[0] for _, _, roots in candidates if len(roots) == 1]
    anchor = float(np.median(unambiguous)) if unambiguous else alpha

    determinations = []
    for n, m, roots in candidates:
        x = min(roots, key=lambda root: abs(root - anchor))
        determinations.append((n, m, x - alpha))

    betas = np.array([beta for _, _, beta in determinations])
    logger.debug("%s displacement: %d determinations, anchor %.6g", method, betas.size, anchor)
    return DisplacementEstimate(
        beta=float(np.median(betas)),
        determinations=determinations,
        spread=float(betas.max() - betas.min()),
        method=method,
    )


def estimate_displacement_mke(alpha, p, cutoff=None, strict=True):
    """
    Weak real displacement beta of a coherent prior |alpha> from photon statistics

    Every ordered pair (n, m) of retained outcomes gives one determination of
    x = alpha + beta through the estimated off-diagonal element. The reported
    beta is the median over all determinations.

    Args:
        alpha (float): real positive prior amplitude
        p (PhotonDistribution): measured photon distribution
        cutoff (int, optional): Fock cutoff, defaults to len(p)
        strict (bool): raise NoRoot for a pair without a root instead of skipping it

    Returns:
        DisplacementEstimate
    """
    def all_pairs(retained):
        return ((n, m) for n in retained for m in retained)

    return _estimate_displacement(alpha, p, cutoff, all_pairs, 'mke', strict)


def estimate_displacement_direct(alpha, p, cutoff=None, strict=True):
    """Displacement from the diagonal equations only: one determination per retained outcome"""
    def diagonal_pairs(retained):
        return ((n, n) for n in retained)

    return _estimate_displacement(alpha, p, cutoff, diagonal_pairs, 'direct', strict)


def _degenerate_clusters(eigenvalues, gap):
    clusters, current = [], [0]
    for k in range(1, eigenvalues.size):
        if eigenvalues[k] - eigenvalues[k - 1] <= gap:
            current.append(k)
        else:
            clusters.append(current)
            current = [k]
    clusters.append(current)
    return [cluster for cluster in clusters if len(cluster) > 1]


def estimate_weak_hamiltonian_fock(tau, p, t, cutoff=None, strict=True):
    """
    First-order Hamiltonian from the photon distribution measured after time t

    The estimated state tau_mn sqrt(p_m p_n / (tau_mm tau_nn)) is matched to
    tau + i t [tau, H], giving the commutator equation tau H - H tau = C with
    C_mn = (i / t) tau_mn (1 - sqrt(p_m p_n / (tau_mm tau_nn))). In the
    eigenbasis of tau this is H_ab = C_ab / (t_a - t_b). Components inside
    degenerate eigenvalue clusters commute with tau and are set to zero.

    Args:
        tau (DensityMatrix): prior in the Fock basis
        p (PhotonDistribution): measured photon distribution
        t (float): evolution time
        cutoff (int, optional): defaults to the prior dimension
        strict (bool): raise DegeneratePrior when components were zeroed

    Returns:
        HermitianOperator

    Raises:
        DegeneratePrior: carries the minimum-norm estimate in ``estimate``
        NoSupport: an observed outcome has zero prior population
    """
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"Evolution time must be positive, got {t!r}", t=t)
    p = p if isinstance(p, ClassicalDistribution) else PhotonDistribution(p)
    probabilities = p.probabilities
    cutoff = tau.dim if cutoff is None else _check_cutoff(cutoff)
    if not tau.dim == probabilities.size == cutoff:
        raise DimMismatch(
            f"Prior dimension {tau.dim}, distribution length {probabilities.size}, cutoff {cutoff}",
            dims=[tau.dim, probabilities.size, cutoff],
        )

    prior = tau.matrix
    populations = np.clip(np.real(np.diag(prior)), 0.0, None)
    unsupported = np.nonzero((probabilities > SUPPORT_THRESHOLD) & (populations <= SUPPORT_THRESHOLD))[0]
    if unsupported.size:
        n = int(unsupported[0])
        raise NoSupport(
            f"Photon number {n} observed with probability {probabilities[n]:.3e} but absent from the prior",
            outcome=n, outcomes=unsupported.tolist(),
        )

    ratios = np.ones_like(probabilities)
    retained = (probabilities > SUPPORT_THRESHOLD) & (populations > SUPPORT_THRESHOLD)
    ratios[retained] = np.sqrt(probabilities[retained] / populations[retained])
    source = (1j / t) * prior * (1.0 - np.outer(ratios, ratios))

    spectrum = eigh(tau)
    values, vectors = spectrum.eigenvalues, spectrum.eigenvectors
    rotated = vectors.conj().T @ source @ vectors
    gaps = values[:, None] - values[None, :]
    gap = GAP_THRESHOLD * max(float(values[-1]), 0.0)
    resolvable = np.abs(gaps) > gap
    solution = np.zeros_like(rotated)
    solution[resolvable] = rotated[resolvable] / gaps[resolvable]

    matrix = vectors @ solution @ vectors.conj().T
    estimate = HermitianOperator(0.5 * (matrix + matrix.conj().T), label='estimated Hamiltonian')

    clusters = _degenerate_clusters(values, gap)
    if clusters:
        summary = [[float(values[k]) for k in cluster] for cluster in clusters]
        message = (f"Prior has {len(clusters)} degenerate eigenvalue cluster(s); "
                   f"Hamiltonian components inside them are unobservable and set to zero")
        if strict:
            raise DegeneratePrior(message, estimate=estimate, clusters=summary)
        logger.warning(message)
    return estimate
