"""Confidence decay mathematics for a simulated generative engine.

The central object is a confidence curve

    C(t) = c0 * exp(-decay_rate * t) * (1 - sensitivity * H(t) / log(V))

where ``c0`` is the joint probability of emitting the target tokens at
time zero, the exponential factor models the retrieval corpus forgetting
older material, and the last factor penalizes rising conditional entropy
``H(t)`` normalized by the maximum entropy ``log(V)`` of a vocabulary of
size ``V``. All logarithms are natural, so entropies are in nats.

The entropy trajectory is a saturating exponential
``H(t) = h_max * (1 - exp(-rise_rate * t))``: it is non-decreasing,
bounded by ``h_max``, and has a closed-form slope, which keeps the
derivative of the curve in closed form as well.

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "DecayParams",
    "EntropyTrajectory",
    "baseline_confidence",
    "conditional_entropy",
    "confidence_at",
    "decay_derivative",
    "fit_decay_rate",
]

_DIST_SUM_TOL = 1e-9


@dataclass(frozen=True)
class DecayParams:
    """Parameters of the confidence curve.

    c0:                  initial confidence, in (0, 1]
    decay_rate:          per-unit-time forgetting rate, strictly positive
    entropy_sensitivity: weight of the entropy penalty, strictly in (0, 1)
    vocab_size:          vocabulary size, at least 2
    """

    c0: float
    decay_rate: float
    entropy_sensitivity: float
    vocab_size: int

    def __post_init__(self) -> None:
        if not 0.0 < self.c0 <= 1.0:
            raise ValueError(f"c0 must be in (0, 1], got {self.c0}")
        if self.decay_rate <= 0.0:
            raise ValueError(f"decay_rate must be > 0, got {self.decay_rate}")
        if not 0.0 < self.entropy_sensitivity < 1.0:
            raise ValueError(
                "entropy_sensitivity must be strictly inside (0, 1), "
                f"got {self.entropy_sensitivity}"
            )
        if self.vocab_size < 2:
            raise ValueError(f"vocab_size must be >= 2, got {self.vocab_size}")

    @property
    def max_entropy(self) -> float:
        """log of the vocabulary size, the entropy normalizer (nats)."""
        return math.log(self.vocab_size)


@dataclass(frozen=True)
class EntropyTrajectory:
    """Saturating entropy rise H(t) = h_max * (1 - exp(-rise_rate * t)).

    ``h_max`` is the plateau in nats and may sit below the vocabulary
    maximum; ``rise_rate`` controls how fast the plateau is approached.
    ``rise_rate == 0`` gives a flat zero trajectory.
    """

    h_max: float
    rise_rate: float

    def __post_init__(self) -> None:
        if self.h_max < 0.0:
            raise ValueError(f"h_max must be >= 0, got {self.h_max}")
        if self.rise_rate < 0.0:
            raise ValueError(f"rise_rate must be >= 0, got {self.rise_rate}")

    def value_at(self, t: float) -> float:
        if t < 0.0:
            raise ValueError(f"t must be >= 0, got {t}")
        return self.h_max * (1.0 - math.exp(-self.rise_rate * t))

    def slope_at(self, t: float) -> float:
        if t < 0.0:
            raise ValueError(f"t must be >= 0, got {t}")
        return self.h_max * self.rise_rate * math.exp(-self.rise_rate * t)


def baseline_confidence(step_probs: Sequence[float]) -> float:
    """Joint probability of a token sequence: the product of step probabilities.

    Every entry must lie in (0, 1]; an empty sequence has no defined
    confidence and raises.
    """
    if len(step_probs) == 0:
        raise ValueError("cannot compute confidence of an empty token sequence")
    for i, p in enumerate(step_probs):
        if p <= 0.0 or p > 1.0:
            raise ValueError(f"step probability at index {i} out of (0, 1]: {p}")
    return math.prod(step_probs)


def conditional_entropy(probs: Sequence[float]) -> float:
    """Shannon entropy -sum(p * log p) of a discrete distribution, in nats.

    The distribution must have entries in [0, 1] summing to 1 within 1e-9.
    Zero entries contribute nothing (0 * log 0 := 0 by continuity).
    """
    if len(probs) == 0:
        raise ValueError("empty distribution")
    for i, p in enumerate(probs):
        if p < 0.0 or p > 1.0:
            raise ValueError(f"probability at index {i} out of [0, 1]: {p}")
    total = math.fsum(probs)
    if abs(total - 1.0) > _DIST_SUM_TOL:
        raise ValueError(f"distribution sums to {total}, expected 1 within {_DIST_SUM_TOL}")
    return -math.fsum(p * math.log(p) for p in probs if p > 0.0)


def _penalty(params: DecayParams, traj: EntropyTrajectory, t: float) -> float:
    h = traj.value_at(t)
    max_h = params.max_entropy
    if h > max_h * (1.0 + 1e-12):
        raise ValueError(
            f"entropy trajectory exceeds log(vocab_size): H({t}) = {h} > {max_h}"
        )
    return 1.0 - params.entropy_sensitivity * h / max_h


def confidence_at(params: DecayParams, traj: EntropyTrajectory, t: float) -> float:
    """Evaluate the confidence curve at time t >= 0.

    The result is bounded between ``(1 - sensitivity) * c0 * exp(-rate*t)``
    and ``c0 * exp(-rate*t)`` because the entropy penalty factor lives in
    ``[1 - sensitivity, 1]``.
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    return params.c0 * math.exp(-params.decay_rate * t) * _penalty(params, traj, t)


def decay_derivative(params: DecayParams, traj: EntropyTrajectory, t: float) -> float:
    """Closed-form time derivative of the confidence curve.

    dC/dt = -c0 * exp(-rate*t) * [rate * penalty(t) + sensitivity * H'(t) / log V]

    Strictly negative for all valid parameters: the first bracket term is
    strictly positive and the second is nonnegative since H is
    non-decreasing.
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    bracket = params.decay_rate * _penalty(params, traj, t)
    bracket += params.entropy_sensitivity * traj.slope_at(t) / params.max_entropy
    return -params.c0 * math.exp(-params.decay_rate * t) * bracket


def fit_decay_rate(samples: Sequence[tuple[float, float]]) -> float:
    """Recover the forgetting rate from (t, mean_score) samples.

    Fits ordinary least squares of ln(mean_score) against t and returns
    the negated slope. Requires at least 3 samples with strictly positive
    scores and non-degenerate t values.
    """
    if len(samples) < 3:
        raise ValueError(f"need at least 3 samples, got {len(samples)}")
    ts = [float(t) for t, _ in samples]
    scores = [float(s) for _, s in samples]
    for i, s in enumerate(scores):
        if s <= 0.0:
            raise ValueError(f"sample {i} has nonpositive score {s}; log fit undefined")
    t_mean = math.fsum(ts) / len(ts)
    var = math.fsum((t - t_mean) ** 2 for t in ts)
    if var == 0.0:
        raise ValueError("all t values identical; slope undefined")
    logs = [math.log(s) for s in scores]
    log_mean = math.fsum(logs) / len(logs)
    cov = math.fsum((t - t_mean) * (y - log_mean) for t, y in zip(ts, logs))
    return -(cov / var)
