"""Attribution probability model with a structural-mismatch penalty.

``predict`` scores the probability that a probe produced a clean,
hallucination-free brand attribution: a logistic regression over
optimization features with an extra term ``-gamma * ged`` that suppresses
the probability as the normalized graph edit distance between generated
and ground-truth knowledge grows. ``gamma`` is deliberately excluded from
gradient fitting; it only moves through ``calibrate_gamma`` in response
to human arbitration verdicts, so the optimizer can never cancel the
penalty to inflate scores.

Fitting is plain full-batch gradient descent: simplicity wins at the
data volumes a probe campaign produces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import FitDivergenceError

__all__ = [
    "Severity",
    "IarModel",
    "LabeledObservation",
    "FitConfig",
    "predict",
    "log_loss",
    "gradient",
    "fit",
    "calibrate_gamma",
]

DEFAULT_FEATURE_SCHEMA = (
    "semantic_alignment",
    "schema_injection_density",
    "domain_authority",
)

_PROB_CLIP = 1e-15


class Severity(enum.Enum):
    """Human verdict on an arbitrated hallucination."""

    BENIGN = "BENIGN"
    PARTIAL = "PARTIAL"
    FATAL = "FATAL"


@dataclass(frozen=True)
class IarModel:
    """Immutable snapshot of the attribution model."""

    beta0: float
    betas: tuple[float, ...]
    gamma: float
    feature_schema: tuple[str, ...] = DEFAULT_FEATURE_SCHEMA

    def __post_init__(self) -> None:
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if len(self.betas) != len(self.feature_schema):
            raise ValueError(
                f"got {len(self.betas)} weights for "
                f"{len(self.feature_schema)} schema features"
            )

    @classmethod
    def zeros(cls, gamma: float, feature_schema: Sequence[str] = DEFAULT_FEATURE_SCHEMA) -> "IarModel":
        return cls(0.0, (0.0,) * len(feature_schema), gamma, tuple(feature_schema))

    def to_wire(self) -> dict:
        return {
            "beta0": self.beta0,
            "betas": list(self.betas),
            "gamma": self.gamma,
            "feature_schema": list(self.feature_schema),
        }


@dataclass(frozen=True)
class LabeledObservation:
    """One verified probe outcome: features, normalized GED, and label."""

    features: tuple[float, ...]
    ged_normalized: float
    label: bool

    def __post_init__(self) -> None:
        if not 0.0 <= self.ged_normalized <= 1.0:
            raise ValueError(
                f"ged_normalized out of [0, 1]: {self.ged_normalized}"
            )


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 0.1
    max_iterations: int = 5000
    tolerance: float = 1e-8


def _sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def predict(model: IarModel, features: Sequence[float], ged: float) -> float:
    """Probability of hallucination-free attribution for one probe."""
    if len(features) != len(model.betas):
        raise ValueError(
            f"feature vector of length {len(features)} does not match "
            f"model with {len(model.betas)} weights"
        )
    if not 0.0 <= ged <= 1.0:
        raise ValueError(f"ged out of [0, 1]: {ged}")
    z = model.beta0 + math.fsum(b * x for b, x in zip(model.betas, features))
    z -= model.gamma * ged
    return _sigmoid(z)


def _design(observations: Sequence[LabeledObservation], n_features: int):
    if len(observations) == 0:
        raise ValueError("need at least one observation")
    X = np.empty((len(observations), n_features))
    g = np.empty(len(observations))
    y = np.empty(len(observations))
    for i, obs in enumerate(observations):
        if len(obs.features) != n_features:
            raise ValueError(
                f"observation {i} has {len(obs.features)} features, expected {n_features}"
            )
        X[i] = obs.features
        g[i] = obs.ged_normalized
        y[i] = 1.0 if obs.label else 0.0
    return X, g, y


def _predict_array(beta0: float, betas: np.ndarray, gamma: float, X, g) -> np.ndarray:
    z = beta0 + X @ betas - gamma * g
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(model: IarModel, observations: Sequence[LabeledObservation]) -> float:
    """Mean binary cross-entropy of the model's predictions."""
    X, g, y = _design(observations, len(model.betas))
    p = _predict_array(model.beta0, np.asarray(model.betas), model.gamma, X, g)
    p = np.clip(p, _PROB_CLIP, 1.0 - _PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def gradient(model: IarModel, observations: Sequence[LabeledObservation]) -> np.ndarray:
    """Analytic gradient of log_loss over (beta0, betas). gamma stays fixed."""
    X, g, y = _design(observations, len(model.betas))
    p = _predict_array(model.beta0, np.asarray(model.betas), model.gamma, X, g)
    r = p - y
    return np.concatenate(([np.mean(r)], (X.T @ r) / len(observations)))


def fit(
    observations: Sequence[LabeledObservation],
    config: FitConfig | None = None,
    start: IarModel | None = None,
) -> IarModel:
    """Fit the beta weights by full-batch gradient descent.

    gamma and the feature schema are taken from ``start`` and never
    touched. A candidate step that would increase the loss is rejected
    (the model is left where it was); ten consecutive rejections raise
    FitDivergenceError. Stops early once the gradient norm falls below
    the configured tolerance.
    """
    config = config or FitConfig()
    if start is None:
        n = len(observations[0].features) if observations else len(DEFAULT_FEATURE_SCHEMA)
        schema = DEFAULT_FEATURE_SCHEMA if n == len(DEFAULT_FEATURE_SCHEMA) else tuple(
            f"x{i}" for i in range(n)
        )
        start = IarModel.zeros(0.0, schema)
    X, g, y = _design(observations, len(start.betas))
    beta0 = start.beta0
    betas = np.asarray(start.betas, dtype=float)
    loss = log_loss(replace(start, beta0=beta0, betas=tuple(betas)), observations)
    rejects = 0
    for _ in range(config.max_iterations):
        p = _predict_array(beta0, betas, start.gamma, X, g)
        r = p - y
        grad0 = float(np.mean(r))
        grads = (X.T @ r) / len(observations)
        norm = math.sqrt(grad0 * grad0 + float(grads @ grads))
        if norm < config.tolerance:
            break
        cand0 = beta0 - config.learning_rate * grad0
        cands = betas - config.learning_rate * grads
        cand_model = replace(start, beta0=cand0, betas=tuple(cands))
        cand_loss = log_loss(cand_model, observations)
        # Rounding-level wobble near a minimum is not divergence.
        slack = 1e-12 * max(1.0, abs(loss))
        if not math.isfinite(cand_loss) or cand_loss > loss + slack:
            rejects += 1
            if rejects >= 10:
                raise FitDivergenceError(
                    f"loss increased for {rejects} consecutive iterations "
                    f"(loss={loss}, candidate={cand_loss})"
                )
            continue
        rejects = 0
        beta0, betas, loss = cand0, cands, cand_loss
    return replace(start, beta0=beta0, betas=tuple(float(b) for b in betas))


def calibrate_gamma(model: IarModel, severity: Severity, eta: float = 0.1) -> IarModel:
    """Move the hallucination penalty in response to a human verdict.

    FATAL multiplies gamma by (1 + eta), BENIGN by max(1 - eta, 0.5), and
    PARTIAL leaves it alone. Updates compose in decision order, and gamma
    can never go negative.
    """
    if eta < 0.0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    if severity is Severity.FATAL:
        return replace(model, gamma=model.gamma * (1.0 + eta))
    if severity is Severity.BENIGN:
        return replace(model, gamma=model.gamma * max(1.0 - eta, 0.5))
    return model
