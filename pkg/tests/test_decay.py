"""Confidence curve mathematics: frozen values, error paths, properties."""

import math
from fractions import Fraction

import numpy as np
import pytest

from geoprobe.decay import (
    DecayParams,
    EntropyTrajectory,
    baseline_confidence,
    conditional_entropy,
    confidence_at,
    decay_derivative,
    fit_decay_rate,
)


def random_params(rng) -> tuple[DecayParams, EntropyTrajectory]:
    vocab = int(rng.integers(4, 200_000))
    params = DecayParams(
        c0=float(rng.uniform(0.1, 1.0)),
        decay_rate=float(rng.uniform(0.01, 0.5)),
        entropy_sensitivity=float(rng.uniform(0.05, 0.95)),
        vocab_size=vocab,
    )
    traj = EntropyTrajectory(
        h_max=float(rng.uniform(0.0, math.log(vocab))),
        rise_rate=float(rng.uniform(0.0, 1.0)),
    )
    return params, traj


class TestBaselineConfidence:
    def test_identity_product(self):
        assert baseline_confidence([1.0, 1.0, 1.0]) == 1.0

    def test_forced_arithmetic(self):
        assert baseline_confidence([0.5, 0.5]) == 0.25

    def test_three_step_product(self):
        # Exact rational oracle: 9/10 * 8/10 * 7/10 = 63/125.
        expected = float(Fraction(9, 10) * Fraction(8, 10) * Fraction(7, 10))
        assert abs(baseline_confidence([0.9, 0.8, 0.7]) - expected) < 1e-15
        assert abs(expected - 0.504) < 1e-15

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            baseline_confidence([])

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            baseline_confidence([0.5, 0.0])
        with pytest.raises(ValueError):
            baseline_confidence([0.5, -0.1])

    def test_above_one_rejected(self):
        with pytest.raises(ValueError):
            baseline_confidence([0.5, 1.1])


class TestConditionalEntropy:
    def test_one_hot_is_zero(self):
        assert conditional_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_fair_coin(self):
        assert abs(conditional_entropy([0.5, 0.5]) - math.log(2)) < 1e-15

    def test_uniform_four(self):
        assert abs(conditional_entropy([0.25] * 4) - math.log(4)) < 1e-15

    @pytest.mark.parametrize("n", [2, 3, 7, 16, 64])
    def test_uniform_matches_log_n(self, n):
        assert abs(conditional_entropy([1.0 / n] * n) - math.log(n)) < 1e-12

    def test_bad_sum_rejected(self):
        with pytest.raises(ValueError):
            conditional_entropy([0.5, 0.4])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            conditional_entropy([1.1, -0.1])

    def test_bounded_by_log_n(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 20))
            p = rng.dirichlet(np.ones(n))
            h = conditional_entropy(list(p))
            assert -1e-12 <= h <= math.log(n) + 1e-12


class TestConfidenceAt:
    def test_time_zero_is_c0(self):
        params = DecayParams(0.8, 0.1, 0.5, 1000)
        traj = EntropyTrajectory(2.0, 0.3)
        assert confidence_at(params, traj, 0.0) == 0.8

    def test_derived_value(self):
        # c0=1, rate=0.05, t=10, sensitivity=0.5, H(t)/log V = 0.4:
        # exp(-0.5) * (1 - 0.2) evaluated at high precision.
        params = DecayParams(1.0, 0.05, 0.5, 50000)
        traj = EntropyTrajectory(h_max=0.4 * math.log(50000), rise_rate=50.0)
        value = confidence_at(params, traj, 10.0)
        assert abs(value - 0.4852245277701067) < 1e-9

    def test_vanishing_sensitivity_collapses_penalty(self):
        params = DecayParams(0.9, 0.2, 1e-12, 100)
        traj = EntropyTrajectory(h_max=math.log(100), rise_rate=1.0)
        for t in (0.0, 1.0, 7.5):
            assert abs(confidence_at(params, traj, t) - 0.9 * math.exp(-0.2 * t)) < 1e-9

    def test_negative_time_rejected(self):
        params = DecayParams(1.0, 0.1, 0.5, 100)
        with pytest.raises(ValueError):
            confidence_at(params, EntropyTrajectory(0.0, 0.0), -1.0)

    def test_penalty_band(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            params, traj = random_params(rng)
            t = float(rng.uniform(0.0, 50.0))
            c = confidence_at(params, traj, t)
            envelope = params.c0 * math.exp(-params.decay_rate * t)
            assert (1.0 - params.entropy_sensitivity) * envelope - 1e-12 <= c <= envelope + 1e-12


class TestDecayDerivative:
    def test_strictly_negative(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            params, traj = random_params(rng)
            t = float(rng.uniform(0.0, 60.0))
            assert decay_derivative(params, traj, t) < 0.0

    def test_flat_entropy_reduces_to_rate_times_confidence(self):
        params = DecayParams(0.7, 0.08, 0.3, 500)
        traj = EntropyTrajectory(h_max=1.5, rise_rate=0.0)
        for t in (0.0, 3.0, 12.0):
            expected = -params.decay_rate * confidence_at(params, traj, t)
            assert abs(decay_derivative(params, traj, t) - expected) < 1e-15

    def test_matches_central_difference(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            params, traj = random_params(rng)
            t = 5.0
            h = 1e-4
            fd = (confidence_at(params, traj, t + h) - confidence_at(params, traj, t - h)) / (2 * h)
            analytic = decay_derivative(params, traj, t)
            assert abs(analytic - fd) / abs(fd) < 1e-6


class TestFitDecayRate:
    def test_exact_exponential(self):
        samples = [(t, 2.0 * math.exp(-0.1 * t)) for t in (0.0, 1.0, 4.0, 9.0, 16.0)]
        assert abs(fit_decay_rate(samples) - 0.1) < 1e-9

    def test_constant_scores(self):
        assert abs(fit_decay_rate([(0.0, 0.4), (1.0, 0.4), (2.0, 0.4)])) < 1e-12

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_decay_rate([(0.0, 1.0), (1.0, 0.9)])

    def test_nonpositive_score(self):
        with pytest.raises(ValueError):
            fit_decay_rate([(0.0, 1.0), (1.0, 0.0), (2.0, 0.5)])

    def test_degenerate_times(self):
        with pytest.raises(ValueError):
            fit_decay_rate([(3.0, 1.0), (3.0, 0.9), (3.0, 0.8)])


class TestMonotonicityGuarantee:
    """Smaller rehearsal of the full randomized suite in test_acceptance."""

    def test_strict_monotone_decay_and_limit(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            params, traj = random_params(rng)
            horizon = 120.0 / params.decay_rate
            grid = np.linspace(0.0, horizon, 25)
            values = [confidence_at(params, traj, float(t)) for t in grid]
            assert all(a > b for a, b in zip(values, values[1:]))
            assert confidence_at(params, traj, 200.0 / params.decay_rate) < 1e-80 * params.c0


class TestInputValidation:
    def test_params_bounds(self):
        with pytest.raises(ValueError):
            DecayParams(0.0, 0.1, 0.5, 100)
        with pytest.raises(ValueError):
            DecayParams(1.0, 0.0, 0.5, 100)
        with pytest.raises(ValueError):
            DecayParams(1.0, 0.1, 1.0, 100)
        with pytest.raises(ValueError):
            DecayParams(1.0, 0.1, 0.5, 1)

    def test_trajectory_bounds(self):
        with pytest.raises(ValueError):
            EntropyTrajectory(-0.1, 0.5)
        with pytest.raises(ValueError):
            EntropyTrajectory(1.0, -0.5)

    def test_trajectory_exceeding_vocab_entropy_rejected(self):
        params = DecayParams(1.0, 0.1, 0.5, 4)  # log 4 ~ 1.386
        traj = EntropyTrajectory(h_max=5.0, rise_rate=10.0)
        with pytest.raises(ValueError):
            confidence_at(params, traj, 30.0)
