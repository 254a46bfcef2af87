#!/usr/bin/env python3
"""
Unit tests for the quantum minimum Kullback entropy estimators
"""
import math
import os
import sys

import numpy as np
import pytest
import scipy.linalg

# Add src directory to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.classical_mke import classical_mke_estimate, gibbs_mean
from src.entropy import quantum_kullback, shannon_entropy
from src.errors import (DegenerateSupport, DimMismatch, IncompleteBasis, InfeasibleConstraints,
                        UnsupportedOutcome)
from src.linalg_core import DensityMatrix, HermitianOperator, expectation, support_projector
from src.oscillator import coherent_density
from src.quantum_mke import (DistributionConstraint, MeanConstraint, gibbs_posterior, maxent_estimate,
                             mke_from_distribution, mke_multi_mean, mke_single_mean, quantum_trajectory)
from src.qubit import SIGMA_X, SIGMA_Z, bloch_to_density, density_to_bloch
from src.simulator import exact_distribution
from helpers import diagonal_in, random_density, random_distribution, random_hermitian, random_unitary

MIXED = DensityMatrix.maximally_mixed(2)


def _project_out(delta, operators):
    """Remove the Frobenius components of delta along the given Hermitian operators"""
    basis = []
    for op in operators:
        v = op.astype(complex)
        for b in basis:
            v = v - np.vdot(b, v) * b
        basis.append(v / np.linalg.norm(v))
    for b in basis:
        delta = delta - np.vdot(b, delta) * b
    return 0.5 * (delta + delta.conj().T)


class TestSingleMean:
    """Test cases for mke_single_mean"""

    def test_prior_mean_returns_prior(self):
        """Test that a satisfied constraint leaves the prior unchanged"""
        result = mke_single_mean(MIXED, MeanConstraint(SIGMA_Z, 0.0))
        assert result.lambdas[0] == 0.0
        assert np.allclose(result.posterior.matrix, MIXED.matrix)
        assert result.relative_entropy == pytest.approx(0.0, abs=1e-14)

    def test_eigenprojector_prior(self):
        """Test that a prior inside one eigenspace is the only admissible state"""
        tau = DensityMatrix(np.diag([1.0, 0.0]))
        result = mke_single_mean(tau, MeanConstraint(SIGMA_Z, 1.0))
        assert np.allclose(result.posterior.matrix, tau.matrix)

    def test_diagonal_gibbs_case(self):
        """Test the maximally mixed qubit constrained to <sigma_z> = 0.4"""
        result = mke_single_mean(MIXED, MeanConstraint(SIGMA_Z, 0.4))
        assert np.allclose(density_to_bloch(result.posterior).v, [0.0, 0.0, 0.4], atol=1e-10)
        assert result.lambdas[0] == pytest.approx(-math.atanh(0.4), abs=1e-9)
        assert result.partition == pytest.approx(math.cosh(math.atanh(0.4)), rel=1e-9)
        expected = math.log(2) - shannon_entropy([0.7, 0.3])
        assert result.relative_entropy == pytest.approx(expected, abs=1e-9)

    def test_degenerate_support(self):
        """Test a prior supported on one eigenvalue with a different requested mean"""
        tau = DensityMatrix(np.diag([1.0, 0.0]))
        with pytest.raises(DegenerateSupport):
            mke_single_mean(tau, MeanConstraint(SIGMA_Z, 0.5))

    def test_dimension_mismatch(self):
        """Test that prior and observable must share a dimension"""
        with pytest.raises(DimMismatch):
            mke_single_mean(MIXED, MeanConstraint(np.eye(3), 1.0))

    def test_random_problems_are_valid(self):
        """Test validity, constraint residual and multiplier recovery for dims 2 to 8"""
        rng = np.random.default_rng(30)
        for dim in range(2, 9):
            for _ in range(5):
                tau = random_density(rng, dim)
                obs = random_hermitian(rng, dim)
                lam_true = rng.uniform(-1, 1)
                target, _ = gibbs_posterior(tau, obs, lam_true)
                mean = expectation(target, obs)
                result = mke_single_mean(tau, MeanConstraint(obs, mean))
                rho = result.posterior
                assert abs(np.trace(rho.matrix).real - 1.0) <= 1e-10
                assert rho.eigenvalues.min() >= -1e-12
                assert result.residual <= 1e-9
                assert result.lambdas[0] == pytest.approx(lam_true, abs=1e-6)
                assert np.isfinite(result.relative_entropy)

    def test_rank_deficient_prior_keeps_rank(self):
        """Test that the posterior of a rank-2 prior is the tilted rank-2 support"""
        rng = np.random.default_rng(31)
        for _ in range(10):
            tau = random_density(rng, 4, rank=2)
            obs = random_hermitian(rng, 4)
            target, _ = gibbs_posterior(tau, obs, rng.uniform(-1, 1))
            result = mke_single_mean(tau, MeanConstraint(obs, expectation(target, obs)))
            assert result.posterior.rank() == 2
            # Undoing the tilt lands back inside the prior support
            spectrum = obs.spectrum
            untilt = spectrum.reconstruct(np.exp(0.5 * spectrum.eigenvalues * result.lambdas[0]))
            restored = untilt @ result.posterior.matrix @ untilt
            projector = support_projector(tau)
            assert np.allclose(projector @ restored @ projector, restored, atol=1e-8)

    def test_support_contained_when_commuting(self):
        """Test support containment for a rank-deficient prior commuting with the observable"""
        rng = np.random.default_rng(40)
        u = random_unitary(rng, 4)
        tau = DensityMatrix(diagonal_in(u, [0.5, 0.3, 0.2, 0.0]))
        obs = HermitianOperator(diagonal_in(u, [0.0, 1.0, 2.0, 3.0]))
        result = mke_single_mean(tau, MeanConstraint(obs, 1.0))
        rho = result.posterior.matrix
        projector = support_projector(tau)
        assert np.allclose(projector @ rho @ projector, rho, atol=1e-8)
        assert np.isfinite(result.relative_entropy)

    def test_minimality_on_commuting_problems(self):
        """Test that constraint-preserving perturbations never lower K(rho|tau)"""
        rng = np.random.default_rng(32)
        for case in range(50):
            dim = 2 + case % 5
            u = random_unitary(rng, dim)
            tau = DensityMatrix(diagonal_in(u, random_distribution(rng, dim)))
            obs = HermitianOperator(diagonal_in(u, rng.normal(size=dim)))
            target, _ = gibbs_posterior(tau, obs, rng.uniform(-1, 1))
            result = mke_single_mean(tau, MeanConstraint(obs, expectation(target, obs)))
            rho = result.posterior.matrix
            best = result.relative_entropy
            floor = result.posterior.eigenvalues.min()
            for _ in range(200):
                z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
                delta = _project_out(z + z.conj().T, [np.eye(dim), obs.matrix])
                delta *= rng.uniform(0.01, 0.9) * floor / np.linalg.norm(delta, 2)
                trial = DensityMatrix(rho + delta)
                assert quantum_kullback(trial, tau) >= best - 1e-9

    def test_classical_reduction(self):
        """Test diagonal prior and observable against the classical estimator"""
        rng = np.random.default_rng(33)
        for _ in range(100):
            dim = int(rng.integers(2, 7))
            q = random_distribution(rng, dim)
            a = rng.normal(size=dim)
            mean = gibbs_mean(q, a, rng.uniform(-2, 2))
            quantum = mke_single_mean(DensityMatrix(np.diag(q)), MeanConstraint(np.diag(a), mean))
            classical = classical_mke_estimate(q, a, mean)
            assert np.allclose(np.diag(quantum.posterior.matrix).real,
                               classical.posterior.probabilities, atol=1e-10)
            assert quantum.lambdas[0] == pytest.approx(classical.lam, abs=1e-9)


class TestGibbsPosterior:
    """Test cases for the closed-form posterior"""

    def test_qubit_closed_form(self):
        """Test exp(-lam sigma_z / 2) (I/2) exp(-lam sigma_z / 2) / Z"""
        rho, partition = gibbs_posterior(MIXED, SIGMA_Z, 0.8)
        assert partition == pytest.approx(math.cosh(0.8))
        assert np.allclose(density_to_bloch(rho).v, [0.0, 0.0, -math.tanh(0.8)])

    def test_zero_multiplier_is_prior(self):
        """Test that lam = 0 returns the prior"""
        rng = np.random.default_rng(34)
        tau = random_density(rng, 3)
        rho, partition = gibbs_posterior(tau, random_hermitian(rng, 3), 0.0)
        assert np.allclose(rho.matrix, tau.matrix, atol=1e-12)
        assert partition == pytest.approx(1.0)


class TestMultiMean:
    """Test cases for mke_multi_mean"""

    def test_single_constraint_matches_single_mean(self):
        """Test that one constraint reproduces the scalar estimator"""
        rng = np.random.default_rng(35)
        tau = random_density(rng, 3)
        obs = random_hermitian(rng, 3)
        target, _ = gibbs_posterior(tau, obs, 0.7)
        constraint = MeanConstraint(obs, expectation(target, obs))
        single = mke_single_mean(tau, constraint, tol=1e-11)
        multi = mke_multi_mean(tau, [constraint], tol=1e-11)
        assert np.linalg.norm(single.posterior.matrix - multi.posterior.matrix) <= 1e-9
        assert multi.lambdas[0] == pytest.approx(single.lambdas[0], abs=1e-8)

    def test_two_paulis(self):
        """Test <sigma_x> = 0.3 and <sigma_z> = 0.4 on the maximally mixed qubit"""
        result = mke_multi_mean(MIXED, [MeanConstraint(SIGMA_X, 0.3), MeanConstraint(SIGMA_Z, 0.4)])
        assert np.allclose(density_to_bloch(result.posterior).v, [0.3, 0.0, 0.4], atol=1e-9)
        expected = -math.atanh(0.5) * np.array([0.6, 0.8])
        assert np.allclose(result.lambdas, expected, atol=1e-7)
        assert result.residual <= 1e-9
        assert result.residuals.shape == (2,)

    def test_out_of_spectrum(self):
        """Test a mean outside the observable's spectrum"""
        with pytest.raises(InfeasibleConstraints) as info:
            mke_multi_mean(MIXED, [MeanConstraint(SIGMA_Z, 1.5)])
        assert info.value.details['constraint'] == 0

    def test_jointly_infeasible(self):
        """Test individually attainable means that no qubit state reproduces together"""
        with pytest.raises(InfeasibleConstraints):
            mke_multi_mean(MIXED, [MeanConstraint(SIGMA_X, 0.9), MeanConstraint(SIGMA_Z, 0.9)])

    def test_random_constraints_reproduced(self):
        """Test recovery of means generated from known multipliers"""
        rng = np.random.default_rng(36)
        for _ in range(5):
            tau = random_density(rng, 4)
            observables = [random_hermitian(rng, 4) for _ in range(3)]
            lambdas = rng.uniform(-0.3, 0.3, size=3)
            half = scipy.linalg.expm(-0.5 * sum(l * op.matrix for l, op in zip(lambdas, observables)))
            target = DensityMatrix.from_unnormalized(half @ tau.matrix @ half)
            constraints = [MeanConstraint(op, expectation(target, op)) for op in observables]
            result = mke_multi_mean(tau, constraints)
            assert result.residual <= 1e-9
            for c in constraints:
                assert abs(expectation(result.posterior, c.observable) - c.mean) <= 1e-9
            assert np.allclose(result.posterior.matrix, target.matrix, atol=1e-7)


class TestFromDistribution:
    """Test cases for mke_from_distribution"""

    def test_own_distribution_returns_prior(self):
        """Test that the prior's own distribution reproduces the prior"""
        rng = np.random.default_rng(37)
        for rank in (1, 3):
            tau = random_density(rng, 3, rank=rank)
            basis = random_unitary(rng, 3)
            constraint = DistributionConstraint(basis, exact_distribution(tau, basis))
            result = mke_from_distribution(tau, constraint)
            assert np.allclose(result.posterior.matrix, tau.matrix, atol=1e-12)
            assert result.relative_entropy == pytest.approx(0.0, abs=1e-9)

    def test_positive_amplitudes(self):
        """Test p = (1/2, 1/2, 0, ...) on a prior with positive real amplitudes"""
        tau = coherent_density(1.0, 8, tail_tolerance=1e-3)
        result = mke_from_distribution(tau, DistributionConstraint.standard([0.5, 0.5] + [0.0] * 6))
        expected = np.zeros((8, 8))
        expected[:2, :2] = 0.5
        assert np.allclose(result.posterior.matrix, expected, atol=1e-12)
        assert np.isinf(result.lambdas[2:]).all()
        assert result.partition == 1.0
        assert result.iterations == 0

    def test_diagonal_equals_data(self):
        """Test that the estimate reproduces the distribution in its basis"""
        rng = np.random.default_rng(38)
        tau = random_density(rng, 5)
        basis = random_unitary(rng, 5)
        p = random_distribution(rng, 5)
        result = mke_from_distribution(tau, DistributionConstraint(basis, p))
        reproduced = np.real(np.diag(basis.conj().T @ result.posterior.matrix @ basis))
        assert np.allclose(reproduced, p, atol=1e-12)
        assert result.residual <= 1e-12

    def test_consistent_with_single_mean(self):
        """Test that the single-mean posterior's own distribution gives back the same diagonal"""
        rng = np.random.default_rng(43)
        for dim in (2, 3, 5):
            tau = random_density(rng, dim)
            obs = random_hermitian(rng, dim)
            target, _ = gibbs_posterior(tau, obs, rng.uniform(-1, 1))
            single = mke_single_mean(tau, MeanConstraint(obs, expectation(target, obs)), tol=1e-12)

            eigenbasis = obs.spectrum.eigenvectors
            p = exact_distribution(single.posterior, eigenbasis)
            result = mke_from_distribution(tau, DistributionConstraint(eigenbasis, p))
            rotated = eigenbasis.conj().T @ result.posterior.matrix @ eigenbasis
            assert np.allclose(np.real(np.diag(rotated)), p.probabilities, atol=1e-12)
            assert np.allclose(result.posterior.matrix, single.posterior.matrix, atol=1e-10)

            other = random_unitary(rng, dim)
            q = exact_distribution(single.posterior, other)
            reproduced = mke_from_distribution(tau, DistributionConstraint(other, q)).posterior
            assert np.allclose(exact_distribution(reproduced, other).probabilities, q.probabilities, atol=1e-12)

    def test_unsupported_outcome(self):
        """Test an outcome the prior gives zero probability"""
        tau = DensityMatrix.from_vector([1.0, 1.0, 0.0])
        with pytest.raises(UnsupportedOutcome) as info:
            mke_from_distribution(tau, DistributionConstraint.standard([0.4, 0.3, 0.3]))
        assert info.value.details['outcome'] == 2

    def test_basis_must_be_orthonormal(self):
        """Test that a non-orthonormal basis is rejected"""
        with pytest.raises(IncompleteBasis):
            DistributionConstraint(np.array([[1.0, 1.0], [0.0, 1.0]]), [0.5, 0.5])


class TestMaxEnt:
    """Test cases for the maximally mixed prior"""

    def test_single_constraint(self):
        """Test the maximum entropy qubit with <sigma_z> = 0.4"""
        result = maxent_estimate([MeanConstraint(SIGMA_Z, 0.4)])
        assert np.allclose(density_to_bloch(result.posterior).v, [0.0, 0.0, 0.4], atol=1e-10)

    def test_several_constraints(self):
        """Test that several constraints use the vector solver"""
        result = maxent_estimate([MeanConstraint(SIGMA_X, 0.3), MeanConstraint(SIGMA_Z, 0.4)])
        assert result.lambdas.shape == (2,)
        assert np.allclose(density_to_bloch(result.posterior).v, [0.3, 0.0, 0.4], atol=1e-9)


class TestQuantumTrajectory:
    """Test cases for the quantum trajectory integration"""

    def test_zero_target(self):
        """Test that a zero multiplier returns the prior without steps"""
        tau = bloch_to_density([0.1, 0.2, 0.3])
        trajectory = quantum_trajectory(tau, SIGMA_Z, 0.0)
        assert trajectory.steps == 0
        assert np.allclose(trajectory.state.matrix, tau.matrix)

    def test_qubit_endpoint(self):
        """Test the maximally mixed qubit at lam = 0.8"""
        trajectory = quantum_trajectory(MIXED, SIGMA_Z, 0.8)
        expected, _ = gibbs_posterior(MIXED, SIGMA_Z, 0.8)
        assert np.allclose(trajectory.state.matrix, expected.matrix, atol=1e-6)

    def test_random_endpoints(self):
        """Test endpoints against the closed-form posterior on random problems"""
        rng = np.random.default_rng(39)
        for _ in range(20):
            dim = int(rng.integers(2, 5))
            tau = random_density(rng, dim)
            obs = random_hermitian(rng, dim)
            lam = rng.uniform(-1.5, 1.5)
            trajectory = quantum_trajectory(tau, obs, lam)
            expected, _ = gibbs_posterior(tau, obs, lam)
            assert np.allclose(trajectory.state.matrix, expected.matrix, atol=1e-6)
            assert trajectory.max_trace_drift <= 1e-9
