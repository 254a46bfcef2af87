#!/usr/bin/env python3
"""
Unit tests for the entropy functionals
"""
import math
import os
import sys

import numpy as np
import pytest

# Add src directory to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.entropy import (DIVERGENT, ClassicalDistribution, is_divergent, kl_divergence,
                         quantum_kullback, shannon_entropy, von_neumann_entropy)
from src.errors import DimMismatch, InvalidDistribution
from src.linalg_core import DensityMatrix
from src.oscillator import thermal_density
from helpers import diagonal_in, random_density, random_distribution, random_unitary


class TestClassicalDistribution:
    """Test cases for probability vector validation"""

    def test_rejects_negative(self):
        """Test that a negative probability is rejected"""
        with pytest.raises(InvalidDistribution):
            ClassicalDistribution([1.2, -0.2])

    def test_rejects_unnormalized(self):
        """Test that probabilities must sum to one"""
        with pytest.raises(InvalidDistribution):
            ClassicalDistribution([0.5, 0.4])

    def test_clips_round_off(self):
        """Test that round-off negatives are clipped to zero"""
        p = ClassicalDistribution([1.0, -1e-13])
        assert p.probabilities[1] == 0.0

    def test_rejects_empty(self):
        """Test that an empty distribution is rejected"""
        with pytest.raises(InvalidDistribution):
            ClassicalDistribution([])


class TestClassicalEntropies:
    """Test cases for Shannon entropy and the Kullback-Leibler divergence"""

    def test_uniform_entropy(self):
        """Test that the uniform distribution has entropy ln N"""
        assert shannon_entropy(ClassicalDistribution.uniform(5)) == pytest.approx(math.log(5), abs=1e-15)

    def test_point_mass_entropy(self):
        """Test that 0 ln 0 counts as zero"""
        assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_divergence_from_uniform(self):
        """Test K(p|uniform) = ln N - H(p) on random distributions"""
        rng = np.random.default_rng(10)
        for size in range(2, 12):
            p = random_distribution(rng, size)
            expected = math.log(size) - shannon_entropy(p)
            assert kl_divergence(p, ClassicalDistribution.uniform(size)) == pytest.approx(expected, abs=1e-12)

    def test_divergence_is_zero_for_equal(self):
        """Test K(p|p) = 0"""
        p = [0.2, 0.3, 0.5]
        assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-15)

    def test_divergent_support(self):
        """Test that escaping the support of q gives the divergent sentinel"""
        value = kl_divergence([0.5, 0.5], [1.0, 0.0])
        assert value == DIVERGENT
        assert is_divergent(value)

    def test_zero_terms_do_not_diverge(self):
        """Test that p_k = 0 where q_k = 0 is harmless"""
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))

    def test_length_mismatch(self):
        """Test that distributions of different lengths are rejected"""
        with pytest.raises(DimMismatch):
            kl_divergence([1.0], [0.5, 0.5])


class TestQuantumEntropies:
    """Test cases for the von Neumann entropy and quantum relative entropy"""

    def test_von_neumann_limits(self):
        """Test pure and maximally mixed states"""
        assert von_neumann_entropy(DensityMatrix.maximally_mixed(3)) == pytest.approx(math.log(3))
        assert von_neumann_entropy(DensityMatrix.from_vector([1, 1j, 0])) == pytest.approx(0.0, abs=1e-12)

    def test_self_divergence_is_zero(self):
        """Test K(rho|rho) = 0 for full-rank and pure states"""
        rng = np.random.default_rng(11)
        rho = random_density(rng, 4)
        assert quantum_kullback(rho, rho) == pytest.approx(0.0, abs=1e-12)
        pure = DensityMatrix.from_vector(rng.normal(size=3) + 1j * rng.normal(size=3))
        assert quantum_kullback(pure, pure) == pytest.approx(0.0, abs=1e-10)

    def test_positive_for_different_states(self):
        """Test K(rho|tau) > 0 for distinct full-rank states"""
        rng = np.random.default_rng(12)
        for _ in range(20):
            rho, tau = random_density(rng, 3), random_density(rng, 3)
            assert quantum_kullback(rho, tau) > 0

    def test_support_violation_diverges(self):
        """Test that a posterior outside the prior support gives the sentinel"""
        rho = DensityMatrix.maximally_mixed(2)
        tau = DensityMatrix(np.diag([1.0, 0.0]))
        assert is_divergent(quantum_kullback(rho, tau))

    def test_commuting_reduces_to_classical(self):
        """Test that states diagonal in a common basis give the classical divergence"""
        rng = np.random.default_rng(13)
        u = random_unitary(rng, 4)
        p, q = random_distribution(rng, 4), random_distribution(rng, 4)
        rho = DensityMatrix(diagonal_in(u, p))
        tau = DensityMatrix(diagonal_in(u, q))
        assert quantum_kullback(rho, tau) == pytest.approx(kl_divergence(p, q), abs=1e-10)

    def test_thermal_prior_gives_entropy_difference(self):
        """Test K(rho|tau) = H(tau) - H(rho) for a thermal prior and a diagonal state of equal mean"""
        rng = np.random.default_rng(14)
        tau = thermal_density(1.5, 8)
        populations = np.real(np.diag(tau.matrix))
        n = np.arange(8)
        for _ in range(10):
            # Perturbation orthogonal to normalization and to the photon number
            direction = rng.normal(size=8)
            basis = np.vstack([np.ones(8), n]).T
            direction -= basis @ np.linalg.lstsq(basis, direction, rcond=None)[0]
            scale = 0.5 * populations.min() / np.abs(direction).max()
            rho = DensityMatrix(np.diag(populations + scale * direction))
            expected = von_neumann_entropy(tau) - von_neumann_entropy(rho)
            assert abs(quantum_kullback(rho, tau) - expected) <= 1e-9
