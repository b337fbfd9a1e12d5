"""Single-step logistic classifier and walk-forward multistep prediction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ingest import OccupancySeries
from ..neuralnet import sigmoid

N_LAGS = 3
FEATURE_NAMES = ("slot", "day_of_week", "weekend", "y_lag1", "y_lag2", "y_lag3")


@dataclass
class LogisticConfig:
    steps: int = 2000
    learning_rate: float = 0.5
    threshold: float = 0.5
    seed: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float = 0.0
    config: LogisticConfig = field(default_factory=LogisticConfig)
    kind = "logistic"

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.weights, "b": np.array([self.intercept])}

    def predict_proba(self, features) -> np.ndarray:
        return logistic_predict(self, features)


def calendar_features(series: OccupancySeries, steps) -> np.ndarray:
    steps = np.asarray(steps)
    per_day = series.slots_per_day
    return np.stack([series.slot_of_day(steps) / per_day,
                     series.day_of_week(steps) / 6.0,
                     series.is_weekend(steps).astype(float)], axis=-1)


def lag_features(series: OccupancySeries, steps) -> np.ndarray:
    """The single-step feature rows ``(t, d, w, y[t-1], y[t-2], y[t-3])``."""
    steps = np.asarray(steps)
    if np.any(steps < N_LAGS):
        raise IndexError(f"need {N_LAGS} states of history")
    lags = series.states[steps[:, None] - np.arange(1, N_LAGS + 1)[None, :]].astype(float)
    return np.concatenate([calendar_features(series, steps), lags], axis=1)


def logistic_predict(model: LogisticModel, features) -> np.ndarray:
    return sigmoid(np.asarray(features, dtype=float) @ model.weights + model.intercept)


def logistic_fit(features, targets, config: LogisticConfig | None = None) -> LogisticModel:
    """Full-batch gradient descent on mean binary cross-entropy."""
    config = config or LogisticConfig()
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).reshape(-1)
    if len(X) == 0:
        raise ValueError("no training rows")
    rng = np.random.default_rng(config.seed)
    w = rng.normal(0.0, 0.01, X.shape[1])
    b = 0.0
    n = len(y)
    for _ in range(config.steps):
        err = sigmoid(X @ w + b) - y
        w -= config.learning_rate * (X.T @ err) / n
        b -= config.learning_rate * err.mean()
    return LogisticModel(w, float(b), config)


def walk_forward_predict(classifier, series: OccupancySeries, origins, k: int,
                         threshold: float = 0.5) -> np.ndarray:
    """Roll a single-step classifier over ``k`` steps, feeding back its own decisions.

    The history before each origin is the observed series; calendar features
    of later steps follow the series clock across midnight.
    Returns an ``(N, k)`` array of binary predictions.
    """
    origins = np.atleast_1d(np.asarray(origins, dtype=int))
    if np.any(origins < N_LAGS):
        raise IndexError(f"walk-forward needs {N_LAGS} states of history before each origin")
    # newest first
    hist = series.states[origins[:, None] - np.arange(1, N_LAGS + 1)[None, :]].astype(float)
    preds = np.empty((len(origins), k), dtype=np.int8)
    for j in range(k):
        feats = np.concatenate([calendar_features(series, origins + j), hist], axis=1)
        yhat = (classifier.predict_proba(feats) >= threshold).astype(np.int8)
        preds[:, j] = yhat
        hist = np.concatenate([yhat[:, None].astype(float), hist[:, :-1]], axis=1)
    return preds
