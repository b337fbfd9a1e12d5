"""The two-branch network: an LSTM over recent states and a dense stack over
time/tendency features, merged before a k-unit sigmoid output."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..features import Dataset, Sample
from ..neuralnet import (
    DenseLayer,
    LstmCellParams,
    dense_backward,
    dense_forward,
    dropout_apply,
    lstm_sequence_backward,
    lstm_sequence_forward,
)
from ..neuralnet.cells import uniform_init
from .base import NetModel

N_TIME_FEATURES = 147


@dataclass
class HybridConfig:
    m: int = 12
    k: int = 1
    lstm_hidden: int = 36
    branch: tuple[int, ...] = (64, 32, 16)
    post_lstm: int = 16
    merge: int = 32
    dropout_rate: float = 0.2
    threshold: float = 0.5
    n_time_features: int = N_TIME_FEATURES

    def __post_init__(self):
        self.branch = tuple(int(b) for b in self.branch)
        if self.k < 1 or self.m < 1:
            raise ValueError("m and k must be positive")
        if not self.branch:
            raise ValueError("the time-feature branch needs at least one layer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["branch"] = list(self.branch)
        return d


class HybridModel(NetModel):
    kind = "hybrid"

    @classmethod
    def init(cls, config: HybridConfig, rng: np.random.Generator | int = 0) -> "HybridModel":
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        c = config
        lstm = LstmCellParams.init(1, c.lstm_hidden, rng)
        params = {"lstm.Wx": lstm.Wx, "lstm.Wh": lstm.Wh, "lstm.b": lstm.b}
        n_in = c.n_time_features
        for j, width in enumerate(c.branch):
            params[f"branch{j}.W"] = uniform_init(rng, (width, n_in), n_in)
            params[f"branch{j}.b"] = np.zeros(width)
            n_in = width
        params["post.W"] = uniform_init(rng, (c.post_lstm, c.lstm_hidden), c.lstm_hidden)
        params["post.b"] = np.zeros(c.post_lstm)
        n_cat = c.post_lstm + c.branch[-1]
        params["merge.W"] = uniform_init(rng, (c.merge, n_cat), n_cat)
        params["merge.b"] = np.zeros(c.merge)
        params["out.W"] = uniform_init(rng, (c.k, c.merge), c.merge)
        params["out.b"] = np.zeros(c.k)
        return cls(config, params)

    @property
    def lstm(self) -> LstmCellParams:
        p = self.params
        return LstmCellParams(p["lstm.Wx"], p["lstm.Wh"], p["lstm.b"])

    def dense(self, name: str) -> DenseLayer:
        act = "sigmoid" if name == "out" else "relu"
        return DenseLayer(self.params[f"{name}.W"], self.params[f"{name}.b"], act)

    @property
    def branch_names(self) -> list[str]:
        return [f"branch{j}" for j in range(len(self.config.branch))]

    def _forward(self, batch, rng, dropout_rate):
        c = self.config
        if batch.x1.shape[1] != c.m or batch.x2.shape[1] != c.n_time_features:
            raise ValueError(f"sample shape mismatch: x1 {batch.x1.shape[1]} vs m={c.m}, "
                             f"x2 {batch.x2.shape[1]} vs {c.n_time_features}")
        training = rng is not None
        # x1 is most-recent-first; the LSTM reads oldest first
        xs = batch.x1[:, ::-1].T[:, :, None]
        h, lstm_cache = lstm_sequence_forward(self.lstm, xs)
        h_d, mask1 = dropout_apply(h, dropout_rate, rng, training)
        post = dense_forward(self.dense("post"), h_d)
        acts = [batch.x2]
        for name in self.branch_names:
            acts.append(dense_forward(self.dense(name), acts[-1]))
        cat = np.concatenate([post, acts[-1]], axis=1)
        merged = dense_forward(self.dense("merge"), cat)
        merged_d, mask2 = dropout_apply(merged, dropout_rate, rng, training)
        probs = dense_forward(self.dense("out"), merged_d)
        cache = (lstm_cache, h_d, mask1, post, acts, cat, merged, merged_d, mask2)
        return probs, cache

    def _backward(self, cache, dlogits):
        lstm_cache, h_d, mask1, post, acts, cat, merged, merged_d, mask2 = cache
        g = {}
        out = self.dense("out")
        g["out.W"] = dlogits.T @ merged_d
        g["out.b"] = dlogits.sum(axis=0)
        dmerged = (dlogits @ out.W) * mask2
        g["merge.W"], g["merge.b"], dcat = dense_backward(self.dense("merge"), cat, merged, dmerged)
        n_post = self.config.post_lstm
        dpost, dbranch = dcat[:, :n_post], dcat[:, n_post:]
        for j in range(len(self.branch_names) - 1, -1, -1):
            name = self.branch_names[j]
            g[f"{name}.W"], g[f"{name}.b"], dbranch = dense_backward(
                self.dense(name), acts[j], acts[j + 1], dbranch)
        g["post.W"], g["post.b"], dh_d = dense_backward(self.dense("post"), h_d, post, dpost)
        g["lstm.Wx"], g["lstm.Wh"], g["lstm.b"], _ = lstm_sequence_backward(
            self.lstm, lstm_cache, dh_d * mask1, need_dx=False)
        return g


def hybrid_forward(model: HybridModel, sample: Sample, training: bool = False,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """k probabilities for one sample."""
    batch = Dataset.from_samples([sample])
    if training and rng is None:
        raise ValueError("training mode needs an rng for dropout")
    probs, _ = model._forward(batch, rng if training else None,
                              model.config.dropout_rate if training else 0.0)
    return probs[0]


def predict_window(model, sample: Sample, threshold: float | None = None) -> np.ndarray:
    thr = model.config.threshold if threshold is None else threshold
    return (hybrid_forward(model, sample) >= thr).astype(np.int8)
