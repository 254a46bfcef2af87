"""
Classical minimum Kullback entropy inference from a first-moment constraint

The posterior has the Gibbs form p_k = q_k exp(-A_k lam) / Z. The multiplier
is the root of the strictly decreasing map lam -> sum_k p_k(lam) A_k, found by
doubling a bracket outward from zero and bisecting it.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from src.entropy import ClassicalDistribution
from src.errors import (DegenerateObservable, DimMismatch, DomainError, InfeasibleMean,
                        NonConvergence, SurfaceNotReached)

logger = logging.getLogger(__name__)

# Prior entries at or below this do not count towards the attainable interval
SUPPORT_FLOOR = 1e-15
MAX_DOUBLINGS = 200
BISECTION_XTOL = 1e-15
BISECTION_RTOL = 4 * np.finfo(float).eps


class ClassicalObservable:
    """Real values A_k attached to the outcomes of a distribution"""

    def __init__(self, values):
        values = np.array(values, dtype=float).ravel()
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise DomainError("Observable values must be finite and nonempty")
        values.setflags(write=False)
        self._values = values

    @property
    def values(self):
        return self._values

    def __len__(self):
        return self._values.size


@dataclass(frozen=True)
class ClassicalEstimate:
    posterior: ClassicalDistribution
    lam: float
    partition: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class ClassicalTrajectory:
    distribution: ClassicalDistribution
    lam: float
    steps: int
    max_normalization_drift: float


def _inputs(prior, obs):
    q = prior.probabilities if isinstance(prior, ClassicalDistribution) else ClassicalDistribution(prior).probabilities
    a = obs.values if isinstance(obs, ClassicalObservable) else ClassicalObservable(obs).values
    if q.size != a.size:
        raise DimMismatch(f"Prior has {q.size} outcomes, observable {a.size}", dims=[q.size, a.size])
    return q, a


def _log_partition(q, a, support, lam):
    return float(logsumexp(-a[support] * lam, b=q[support]))


def _gibbs_weights(q, a, support, lam):
    weights = np.zeros_like(q)
    log_z = _log_partition(q, a, support, lam)
    weights[support] = q[support] * np.exp(-a[support] * lam - log_z)
    return weights, log_z


def gibbs_mean(prior, obs, lam, support_floor=0.0):
    """Constrained mean sum_k p_k(lam) A_k of the Gibbs posterior"""
    q, a = _inputs(prior, obs)
    weights, _ = _gibbs_weights(q, a, q > support_floor, lam)
    return float(np.dot(weights, a))


def gibbs_distribution(prior, obs, lam, support_floor=0.0):
    """
    Closed-form posterior p_k = q_k exp(-A_k lam) / Z

    Returns:
        tuple: (ClassicalDistribution, partition function Z)
    """
    q, a = _inputs(prior, obs)
    weights, log_z = _gibbs_weights(q, a, q > support_floor, lam)
    return ClassicalDistribution(weights / weights.sum()), float(np.exp(log_z))


def solve_decreasing(f, tol, label='multiplier'):
    """
    Root of a strictly decreasing scalar function by outward doubling and bisection

    Args:
        f (callable): strictly decreasing function of lam
        tol (float): accepted |f(root)|
        label (str): name used in log messages

    Returns:
        tuple: (root, |f(root)|, iterations)
    """
    f0 = f(0.0)
    if abs(f0) <= tol:
        return 0.0, abs(f0), 0

    direction = 1.0 if f0 > 0 else -1.0
    inner, outer = 0.0, direction
    doublings = 0
    while np.sign(f(outer)) == np.sign(f0):
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise NonConvergence(
                f"Could not bracket the {label}", residual=abs(float(f(outer))), iterations=doublings
            )
        inner, outer = outer, 2.0 * outer
    logger.debug("Bracketed %s in [%g, %g] after %d doublings", label, inner, outer, doublings)

    if f(outer) == 0.0:
        return outer, 0.0, doublings
    lo, hi = sorted((inner, outer))
    root, info = bisect(f, lo, hi, xtol=BISECTION_XTOL, rtol=BISECTION_RTOL,
                        maxiter=400, full_output=True, disp=False)
    residual = abs(float(f(root)))
    iterations = doublings + info.iterations
    if residual > tol:
        raise NonConvergence(
            f"Bisection for the {label} stalled with residual {residual:.3e}",
            residual=residual, iterations=iterations,
        )
    return float(root), residual, iterations


def classical_mke_estimate(prior, obs, mean, tol=1e-9, support_floor=SUPPORT_FLOOR):
    """
    Minimum Kullback entropy posterior reproducing a single mean value

    Args:
        prior (ClassicalDistribution): bias distribution q
        obs (ClassicalObservable): values A_k
        mean (float): measured <A>
        tol (float): accepted constraint residual
        support_floor (float): prior entries at or below this do not widen the
            attainable interval; every positive entry is still tilted

    Returns:
        ClassicalEstimate
    """
    q, a = _inputs(prior, obs)
    if not tol > 0:
        raise DomainError("Tolerance must be positive", tol=tol)
    if not np.isfinite(mean):
        raise DomainError("Mean must be finite", mean=mean)

    values = a[q > support_floor]
    prior_mean = float(np.dot(q, a))

    if abs(prior_mean - mean) > tol:
        low, high = float(values.min()), float(values.max())
        if high == low:
            raise DegenerateObservable(
                f"Every supported outcome has value {low!r}; mean {mean!r} is unattainable",
                value=low, mean=mean,
            )
        if not low < mean < high:
            raise InfeasibleMean(
                f"Mean {mean!r} outside the attainable interval ({low!r}, {high!r})",
                mean=mean, interval=[low, high],
            )

    active = q > 0.0

    def residual(lam):
        weights, _ = _gibbs_weights(q, a, active, lam)
        return float(np.dot(weights, a)) - mean

    lam, res, iterations = solve_decreasing(residual, tol)
    posterior, partition = gibbs_distribution(q, a, lam)
    return ClassicalEstimate(posterior, lam, partition, res, iterations)


def _rk4_step(p, a, h):
    def rate(x):
        centered = a - np.dot(a, x) / x.sum()
        return -centered * x

    k1 = rate(p)
    k2 = rate(p + 0.5 * h * k1)
    k3 = rate(p + 0.5 * h * k2)
    k4 = rate(p + h * k3)
    return p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def classical_trajectory(prior, obs, mean, lambda_max=50.0, step=1e-3):
    """
    Integrate dp_k/dlam = -(A_k - <A>) p_k from p(0) = q until the constraint is met

    The integration runs toward the side where the constraint surface lies
    and stops at the first crossing, located inside the last step by bisection.

    Returns:
        ClassicalTrajectory

    Raises:
        SurfaceNotReached: the surface is not crossed before |lam| = lambda_max
    """
    q, a = _inputs(prior, obs)
    if not step > 0:
        raise DomainError("Step must be positive", step=step)

    def gap(p):
        return float(np.dot(a, p) / p.sum()) - mean

    p = q.copy()
    g0 = gap(p)
    if g0 == 0.0 or abs(g0) <= 1e-14 * max(1.0, abs(mean)):
        return ClassicalTrajectory(ClassicalDistribution(q), 0.0, 0, 0.0)

    direction = 1.0 if g0 > 0 else -1.0
    lam, steps, drift = 0.0, 0, 0.0
    while abs(lam) < lambda_max:
        h = direction * min(step, lambda_max - abs(lam))
        candidate = _rk4_step(p, a, h)
        steps += 1
        drift = max(drift, abs(candidate.sum() - 1.0))
        if np.sign(gap(candidate)) != np.sign(g0):
            if gap(candidate) == 0.0:
                partial = abs(h)
            else:
                partial = bisect(lambda s: gap(_rk4_step(p, a, direction * s)), 0.0, abs(h),
                                 xtol=BISECTION_XTOL, rtol=BISECTION_RTOL, maxiter=200)
            p = _rk4_step(p, a, direction * partial)
            lam += direction * partial
            drift = max(drift, abs(p.sum() - 1.0))
            logger.debug("Classical trajectory crossed the constraint at lam=%.12g", lam)
            return ClassicalTrajectory(ClassicalDistribution(p), lam, steps, drift)
        p = candidate
        lam += h

    raise SurfaceNotReached(
        f"Constraint surface <A> = {mean!r} not reached by |lambda| = {lambda_max!r}",
        lambda_max=lambda_max, final_gap=gap(p),
    )
