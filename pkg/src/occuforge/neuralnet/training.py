"""Mini-batch training loop, analytic gradients and the finite-difference check.

A trainable model exposes:

* ``params`` -- dict of named float64 arrays, updated in place
* ``loss_and_grads(batch, rng=None, dropout_rate=0.0)`` -- mean loss and a
  gradient dict keyed like ``params``; dropout is active iff ``rng`` is given
* ``copy()``
* optionally ``flat`` -- one buffer that every ``params`` array views, in
  ``params`` order; the optimiser then steps the buffer directly

and a batch is whatever ``dataset.subset(indices)`` returns.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class TrainHyperparams:
    learning_rate: float = 0.001
    batch_size: int = 30
    epochs: int = 15
    dropout_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")


@dataclass
class TrainResult:
    model: Any
    loss_history: list[float] = field(default_factory=list)
    optimizer: AdamState | None = None


def compute_gradients(model, batch, rng: np.random.Generator | None = None,
                      dropout_rate: float = 0.0) -> dict[str, np.ndarray]:
    """Gradient of the mean batch loss for every parameter block."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    _, grads = model.loss_and_grads(batch, rng=rng, dropout_rate=dropout_rate)
    _check_finite(grads)
    return grads


def _check_finite(grads):
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient in parameter block {name!r}")


def finite_diff_grad(model, batch, eps: float = 1e-5) -> dict[str, np.ndarray]:
    """Central differences of the dropout-free loss, one scalar at a time."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    grads = {}
    for name, p in model.params.items():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = model.loss(batch)
            flat[j] = orig - eps
            down = model.loss(batch)
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * eps)
        grads[name] = g
    return grads


def scalar_finite_diff(f: Callable[[float], float], x: float, eps: float = 1e-5) -> float:
    if not eps > 0:
        raise ValueError("eps must be positive")
    return (f(x + eps) - f(x - eps)) / (2.0 * eps)


def max_relative_error(analytic: dict, numeric: dict, floor: float = 1e-8) -> dict[str, float]:
    """Per-block max of ``|a - n| / max(|a| + |n|, floor)``."""
    out = {}
    for name, a in analytic.items():
        n = numeric[name]
        out[name] = float(np.max(np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)))
    return out


def train(model, dataset, hp: TrainHyperparams, rng: np.random.Generator | None = None) -> TrainResult:
    """Shuffled mini-batch Adam. The input model is left untouched."""
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(hp.seed) if rng is None else rng
    model = model.copy()
    if hasattr(model, "config"):
        model.config.dropout_rate = hp.dropout_rate
    flat = getattr(model, "flat", None)
    opt_params = model.params if flat is None else {"flat": flat}
    state = AdamState.for_params(opt_params)
    history = []
    for epoch in range(hp.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            batch = dataset.subset(idx)
            loss, grads = model.loss_and_grads(batch, rng=rng, dropout_rate=hp.dropout_rate)
            if not math.isfinite(loss):
                raise NonFiniteError(f"non-finite loss in epoch {epoch}")
            if flat is not None:
                gflat = np.concatenate([grads[k].ravel() for k in model.params])
                if not np.isfinite(gflat).all():
                    _check_finite(grads)  # names the offending block
                grads = {"flat": gflat}
            else:
                _check_finite(grads)
            adam_step(state, opt_params, grads, hp.learning_rate)
            total += loss * len(idx)
        history.append(total / n)
        log.debug("epoch %d loss %.6f", epoch, history[-1])
    return TrainResult(model, history, state)
