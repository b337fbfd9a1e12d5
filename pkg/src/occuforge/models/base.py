from __future__ import annotations

import copy

import numpy as np

from ..neuralnet import bce_loss


class NetModel:
    """Shared plumbing for the networks: parameter dict, copying, thresholding.

    Subclasses implement ``_forward(batch, rng, dropout_rate)`` returning
    ``(probs, cache)`` and ``_backward(cache, dlogits)`` returning grads.
    """

    kind = "net"

    def __init__(self, config, params: dict[str, np.ndarray]):
        self.config = config
        # every parameter array is a view into one buffer so the optimiser
        # can update them all in a few vector operations
        self.flat = np.concatenate([np.asarray(p, dtype=float).ravel() for p in params.values()])
        self.params = {}
        offset = 0
        for name, p in params.items():
            size = np.size(p)
            self.params[name] = self.flat[offset:offset + size].reshape(np.shape(p))
            offset += size

    def copy(self):
        return type(self)(copy.deepcopy(self.config), {k: v.copy() for k, v in self.params.items()})

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def predict_proba(self, batch) -> np.ndarray:
        probs, _ = self._forward(batch, None, 0.0)
        return probs

    def predict(self, batch, threshold: float | None = None) -> np.ndarray:
        thr = self.config.threshold if threshold is None else threshold
        return (self.predict_proba(batch) >= thr).astype(np.int8)

    def loss(self, batch) -> float:
        return bce_loss(self.predict_proba(batch), batch.y)

    def loss_and_grads(self, batch, rng=None, dropout_rate: float = 0.0):
        from ..neuralnet import bce_sigmoid_grad

        rate = dropout_rate if rng is not None else 0.0
        probs, cache = self._forward(batch, rng, rate)
        loss = bce_loss(probs, batch.y)
        return loss, self._backward(cache, bce_sigmoid_grad(probs, batch.y))
