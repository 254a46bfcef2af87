"""
Quantum minimum Kullback entropy estimators

Given a prior (bias) state tau and measured data, each estimator returns the
state of least quantum relative entropy K(rho|tau) compatible with the data:

- one mean value Tr[rho A] = <A>: one scalar multiplier, bracketed and bisected
- several mean values: a vector of multipliers, damped Newton iteration
- a full probability distribution in an orthonormal basis: closed form

Multipliers use the convention rho = exp(-A lam / 2) tau exp(-A lam / 2) / Z.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.classical_mke import ClassicalObservable, classical_mke_estimate
from src.entropy import ClassicalDistribution, quantum_kullback
from src.errors import (DegenerateObservable, DegenerateSupport, DimMismatch, DomainError,
                        IncompleteBasis, InfeasibleConstraints,
                        NonConvergence, UnsupportedOutcome)
from src.linalg_core import (SUPPORT_THRESHOLD, DensityMatrix, HermitianOperator, as_square_matrix,
                             eigh, expectation)

logger = logging.getLogger(__name__)

JACOBIAN_STEP = 1e-6
MIN_DAMPING = 2.0 ** -20
# Newton runs whose residual stays above this multiple of tol count as infeasible
STALL_FACTOR = 1e3
RESTART_SCALE = 0.1
DIVERGENCE_BOUND = 1e6
BASIS_TOLERANCE = 1e-10


@dataclass(frozen=True)
class MeanConstraint:
    """Measured expectation value of an observable"""

    observable: HermitianOperator
    mean: float

    def __post_init__(self):
        if not isinstance(self.observable, HermitianOperator):
            object.__setattr__(self, 'observable', HermitianOperator(self.observable))
        if not math.isfinite(self.mean):
            raise DomainError("Constraint mean must be finite", mean=self.mean)


@dataclass(frozen=True)
class DistributionConstraint:
    """Measured outcome distribution of a projective measurement

    ``basis`` holds the measurement vectors as matrix columns.
    """

    basis: np.ndarray
    probabilities: ClassicalDistribution

    def __post_init__(self):
        basis = as_square_matrix(self.basis)
        gram = basis.conj().T @ basis
        deviation = float(np.abs(gram - np.eye(basis.shape[0])).max())
        if deviation > BASIS_TOLERANCE:
            raise IncompleteBasis(
                f"Measurement basis is not orthonormal (max deviation {deviation:.3e})",
                deviation=deviation,
            )
        basis.setflags(write=False)
        object.__setattr__(self, 'basis', basis)
        if not isinstance(self.probabilities, ClassicalDistribution):
            object.__setattr__(self, 'probabilities', ClassicalDistribution(self.probabilities))
        if len(self.probabilities) != basis.shape[0]:
            raise DimMismatch(
                f"Basis has {basis.shape[0]} vectors but {len(self.probabilities)} probabilities given",
                dims=[basis.shape[0], len(self.probabilities)],
            )

    @classmethod
    def standard(cls, probabilities):
        """Constraint in the computational (Fock) basis"""
        probabilities = ClassicalDistribution(probabilities)
        return cls(np.eye(len(probabilities)), probabilities)


@dataclass(frozen=True)
class EstimationResult:
    posterior: DensityMatrix
    lambdas: np.ndarray
    partition: float
    relative_entropy: float
    residual: float
    iterations: int
    residuals: np.ndarray = field(default=None)


@dataclass(frozen=True)
class QuantumTrajectory:
    state: DensityMatrix
    lam: float
    steps: int
    max_trace_drift: float


def _check_dims(tau, op):
    if tau.dim != op.dim:
        raise DimMismatch(f"Prior has dimension {tau.dim}, observable {op.dim}", dims=[tau.dim, op.dim])


def _diagonal_weights(tau, spectrum):
    """tau in the eigenbasis of an observable and its (clipped) diagonal"""
    rotated = spectrum.eigenvectors.conj().T @ tau.matrix @ spectrum.eigenvectors
    weights = np.clip(np.real(np.diag(rotated)), 0.0, None)
    return rotated, weights


def _tilt_in_eigenbasis(rotated, weights, eigenvalues, lam, support_floor=0.0):
    """exp(-A lam / 2) tau exp(-A lam / 2) normalized, with A diagonal

    Every weight above ``support_floor`` is tilted. The largest exponent is
    shifted to zero before exponentiating.
    """
    support = weights > support_floor
    exponents = np.full(eigenvalues.shape, -np.inf)
    exponents[support] = -0.5 * eigenvalues[support] * lam
    shift = exponents[support].max()
    factors = np.exp(exponents - shift)
    tilted = factors[:, None] * rotated * factors[None, :]
    trace = float(np.real(np.trace(tilted)))
    log_z = math.log(trace) + 2.0 * shift
    return tilted / trace, log_z


def gibbs_posterior(tau, obs, lam, support_floor=0.0):
    """
    Closed-form posterior for a given multiplier

    Args:
        tau (DensityMatrix): prior
        obs (HermitianOperator): constrained observable
        lam (float): multiplier

    Returns:
        tuple: (DensityMatrix, partition function Z = Tr[tau exp(-A lam)])
    """
    obs = obs if isinstance(obs, HermitianOperator) else HermitianOperator(obs)
    _check_dims(tau, obs)
    spectrum = eigh(obs)
    rotated, weights = _diagonal_weights(tau, spectrum)
    tilted, log_z = _tilt_in_eigenbasis(rotated, weights, spectrum.eigenvalues, lam, support_floor)
    vectors = spectrum.eigenvectors
    return DensityMatrix(vectors @ tilted @ vectors.conj().T), math.exp(log_z)


def mke_single_mean(tau, constraint, tol=1e-9):
    """
    Minimum Kullback entropy state reproducing one mean value

    The multiplier solves a scalar problem on the diagonal of tau in the
    eigenbasis of A, which is exactly the classical estimator applied to
    w_k = <phi_k|tau|phi_k> and the eigenvalues a_k.

    Args:
        tau (DensityMatrix): prior
        constraint (MeanConstraint): observable and measured mean
        tol (float): accepted constraint residual

    Returns:
        EstimationResult
    """
    obs = constraint.observable
    _check_dims(tau, obs)
    spectrum = eigh(obs)
    rotated, weights = _diagonal_weights(tau, spectrum)

    try:
        estimate = classical_mke_estimate(
            ClassicalDistribution(weights / weights.sum()),
            ClassicalObservable(spectrum.eigenvalues),
            constraint.mean,
            tol=tol,
            support_floor=SUPPORT_THRESHOLD,
        )
    except DegenerateObservable as error:
        raise DegenerateSupport(
            f"Prior is supported on a single eigenvalue of the observable; {error.message}",
            **error.details,
        ) from error

    lam = estimate.lam
    tilted, log_z = _tilt_in_eigenbasis(rotated, weights, spectrum.eigenvalues, lam)
    vectors = spectrum.eigenvectors
    posterior = DensityMatrix(vectors @ tilted @ vectors.conj().T, label='mKE posterior')
    residual = abs(expectation(posterior, obs) - constraint.mean)
    logger.debug("Single-mean estimate: lambda=%.12g, residual=%.3e", lam, residual)
    return EstimationResult(
        posterior=posterior,
        lambdas=np.array([lam]),
        partition=math.exp(log_z),
        relative_entropy=quantum_kullback(posterior, tau),
        residual=residual,
        iterations=estimate.iterations,
        residuals=np.array([residual]),
    )


class _MultiMeanProblem:
    """Residual map lam -> (Tr[rho(lam) A_k] - <A_k>)_k"""

    def __init__(self, tau, constraints):
        self.tau = tau
        self.operators = [c.observable.matrix for c in constraints]
        self.means = np.array([c.mean for c in constraints], dtype=float)

    def state(self, lambdas):
        generator = sum(l * op for l, op in zip(lambdas, self.operators))
        values, vectors = np.linalg.eigh(0.5 * (generator + generator.conj().T))
        lowest = values[0]
        half = (vectors * np.exp(-0.5 * (values - lowest))) @ vectors.conj().T
        tilted = half @ self.tau.matrix @ half
        trace = float(np.real(np.trace(tilted)))
        return tilted / trace, math.log(trace) - lowest

    def residuals(self, lambdas):
        rho, _ = self.state(lambdas)
        return np.array([np.real(np.sum(rho * op.T)) for op in self.operators]) - self.means

    def jacobian(self, lambdas, base):
        columns = []
        for k in range(lambdas.size):
            shifted = lambdas.copy()
            h = JACOBIAN_STEP * max(1.0, abs(lambdas[k]))
            shifted[k] += h
            columns.append((self.residuals(shifted) - base) / h)
        return np.column_stack(columns)


def _check_attainable(tau, constraints, tol):
    for index, c in enumerate(constraints):
        _check_dims(tau, c.observable)
        spectrum = eigh(c.observable)
        _, weights = _diagonal_weights(tau, spectrum)
        support = weights > SUPPORT_THRESHOLD
        values = spectrum.eigenvalues[support]
        prior_mean = expectation(tau, c.observable)
        if abs(prior_mean - c.mean) <= tol:
            continue
        if not values.min() < c.mean < values.max():
            raise InfeasibleConstraints(
                f"Mean {c.mean!r} of constraint {index} lies outside the attainable interval "
                f"({values.min()!r}, {values.max()!r})",
                constraint=index, mean=c.mean, interval=[float(values.min()), float(values.max())],
            )


def _newton(problem, start, tol, max_iter):
    """
    Damped Newton iteration on the residual vector

    Returns:
        tuple: (lambdas, residual vector, iterations, outcome) with outcome one
        of 'converged', 'stalled', 'exhausted'
    """
    lambdas = start.copy()
    r = problem.residuals(lambdas)
    for iteration in range(1, max_iter + 1):
        norm = np.linalg.norm(r)
        if np.max(np.abs(r)) <= tol:
            return lambdas, r, iteration - 1, 'converged'

        jacobian = problem.jacobian(lambdas, r)
        step = np.linalg.lstsq(jacobian, -r, rcond=None)[0]
        damping = 1.0
        while damping >= MIN_DAMPING:
            trial = lambdas + damping * step
            trial_r = problem.residuals(trial)
            if np.all(np.isfinite(trial_r)) and np.linalg.norm(trial_r) < norm:
                break
            damping /= 2.0
        else:
            logger.debug("Newton step stalled at residual %.3e after %d iterations", norm, iteration)
            return lambdas, r, iteration, 'stalled'

        lambdas, r = trial, trial_r
        logger.debug("Newton iteration %d: |r|=%.3e damping=%g", iteration, np.linalg.norm(r), damping)
        if np.max(np.abs(lambdas)) > DIVERGENCE_BOUND:
            return lambdas, r, iteration, 'stalled'

    if np.max(np.abs(r)) <= tol:
        return lambdas, r, max_iter, 'converged'
    return lambdas, r, max_iter, 'exhausted'


def mke_multi_mean(tau, constraints, tol=1e-9, max_iter=200, restarts=5, seed=0):
    """
    Minimum Kullback entropy state reproducing several mean values

    Newton iteration starts from lam = 0. When a run stalls, up to ``restarts``
    further runs start from small seeded random multipliers.

    Args:
        tau (DensityMatrix): prior
        constraints (list): MeanConstraint objects
        tol (float): accepted residual for every constraint
        max_iter (int): Newton iterations per run
        restarts (int): additional runs after a stall
        seed (int): seed for the restart points

    Returns:
        EstimationResult

    Raises:
        InfeasibleConstraints: every run stalled far from the constraint set
        NonConvergence: no run reached the tolerance
    """
    constraints = list(constraints)
    if not constraints:
        raise DomainError("At least one constraint is required")
    if not tol > 0:
        raise DomainError("Tolerance must be positive", tol=tol)
    _check_attainable(tau, constraints, tol)

    problem = _MultiMeanProblem(tau, constraints)
    rng = np.random.default_rng(seed)
    start = np.zeros(len(constraints))
    total_iterations = 0
    outcomes = []
    best = None

    for attempt in range(restarts + 1):
        lambdas, r, iterations, outcome = _newton(problem, start, tol, max_iter)
        total_iterations += iterations
        residual = float(np.max(np.abs(r))) if np.all(np.isfinite(r)) else math.inf
        outcomes.append((outcome, residual))
        if best is None or residual < best[1]:
            best = (lambdas, residual)
        if outcome == 'converged':
            rho, log_z = problem.state(lambdas)
            posterior = DensityMatrix(rho, label='mKE posterior')
            return EstimationResult(
                posterior=posterior,
                lambdas=lambdas,
                partition=math.exp(log_z),
                relative_entropy=quantum_kullback(posterior, tau),
                residual=residual,
                iterations=total_iterations,
                residuals=np.abs(r),
            )
        logger.info("Newton run %d ended %s with residual %.3e", attempt, outcome, residual)
        start = rng.normal(scale=RESTART_SCALE, size=len(constraints))

    if all(outcome == 'stalled' and residual > STALL_FACTOR * tol for outcome, residual in outcomes):
        raise InfeasibleConstraints(
            f"No state reproduces the constraints; best residual {best[1]:.3e}",
            residual=best[1], iterations=total_iterations, restarts=restarts,
        )
    raise NonConvergence(
        f"Newton iteration did not reach tolerance {tol:g}; best residual {best[1]:.3e}",
        residual=best[1], iterations=total_iterations,
    )


def mke_from_distribution(tau, constraint):
    """
    Minimum Kullback entropy state reproducing a measured distribution

    In the measurement basis the estimate is
    rho_mn = tau_mn sqrt(p_m p_n / (tau_mm tau_nn)), so its diagonal is p and
    the prior's coherences are kept with rescaled magnitude.

    Args:
        tau (DensityMatrix): prior
        constraint (DistributionConstraint): basis and probabilities

    Returns:
        EstimationResult: multipliers are lam_k = ln(tau_kk / p_k) in the
        gauge Z = 1 (+inf for outcomes that were never observed)
    """
    basis = constraint.basis
    p = constraint.probabilities.probabilities
    if basis.shape[0] != tau.dim:
        raise DimMismatch(f"Prior has dimension {tau.dim}, basis {basis.shape[0]}", dims=[tau.dim, basis.shape[0]])

    rotated = basis.conj().T @ tau.matrix @ basis
    diagonal = np.clip(np.real(np.diag(rotated)), 0.0, None)
    unsupported = np.nonzero((p > SUPPORT_THRESHOLD) & (diagonal <= SUPPORT_THRESHOLD))[0]
    if unsupported.size:
        k = int(unsupported[0])
        raise UnsupportedOutcome(
            f"Outcome {k} has probability {p[k]:.3e} but the prior gives it none",
            outcome=k, outcomes=unsupported.tolist(),
        )

    scale = np.zeros_like(p)
    kept = (p > 0.0) & (diagonal > SUPPORT_THRESHOLD)
    scale[kept] = np.sqrt(p[kept] / diagonal[kept])
    estimate = scale[:, None] * rotated * scale[None, :]
    np.fill_diagonal(estimate, p)

    posterior = DensityMatrix(basis @ estimate @ basis.conj().T, label='mKE posterior')
    reproduced = np.real(np.diag(basis.conj().T @ posterior.matrix @ basis))
    residuals = np.abs(reproduced - p)

    lambdas = np.full(p.shape, math.inf)
    lambdas[kept] = np.log(diagonal[kept] / p[kept])
    return EstimationResult(
        posterior=posterior,
        lambdas=lambdas,
        partition=1.0,
        relative_entropy=quantum_kullback(posterior, tau),
        residual=float(residuals.max()),
        iterations=0,
        residuals=residuals,
    )


def maxent_estimate(constraints, tol=1e-9, max_iter=200, restarts=5, seed=0):
    """Maximum entropy state: the estimate with the maximally mixed prior"""
    constraints = list(constraints)
    if not constraints:
        raise DomainError("At least one constraint is required")
    tau = DensityMatrix.maximally_mixed(constraints[0].observable.dim)
    if len(constraints) == 1:
        return mke_single_mean(tau, constraints[0], tol=tol)
    return mke_multi_mean(tau, constraints, tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)


def quantum_trajectory(tau, obs, lambda_target, step=1e-3):
    """
    Integrate d rho / d lam = -1/2 {rho, A - <A>} from rho(0) = tau

    Uses ceil(|lambda_target| / step) equal fourth-order Runge-Kutta steps.

    Returns:
        QuantumTrajectory
    """
    obs = obs if isinstance(obs, HermitianOperator) else HermitianOperator(obs)
    _check_dims(tau, obs)
    if not step > 0:
        raise DomainError("Step must be positive", step=step)
    if not math.isfinite(lambda_target):
        raise DomainError("Target multiplier must be finite", lambda_target=lambda_target)

    a = obs.matrix
    identity = np.eye(tau.dim)

    def rate(rho):
        centered = a - (np.real(np.sum(rho * a.T)) / np.real(np.trace(rho))) * identity
        return -0.5 * (rho @ centered + centered @ rho)

    steps = math.ceil(abs(lambda_target) / step)
    rho = tau.matrix.copy()
    drift = 0.0
    if steps:
        h = lambda_target / steps
        for _ in range(steps):
            k1 = rate(rho)
            k2 = rate(rho + 0.5 * h * k1)
            k3 = rate(rho + 0.5 * h * k2)
            k4 = rate(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            drift = max(drift, abs(float(np.real(np.trace(rho))) - 1.0))

    rho = 0.5 * (rho + rho.conj().T)
    return QuantumTrajectory(DensityMatrix(rho / np.real(np.trace(rho))), float(lambda_target), steps, drift)
