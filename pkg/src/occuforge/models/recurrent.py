"""Plain recurrent baselines: one LSTM or GRU block over a short sequence of
per-step feature frames, then dense, dropout and a k-unit sigmoid output."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..neuralnet import (
    DenseLayer,
    GruCellParams,
    LstmCellParams,
    dense_backward,
    dense_forward,
    dropout_apply,
    gru_sequence_backward,
    gru_sequence_forward,
    lstm_sequence_backward,
    lstm_sequence_forward,
)
from ..neuralnet.cells import uniform_init
from .base import NetModel

FRAME_DIM = 148  # 147 time/tendency features + the previous state


@dataclass
class RecurrentConfig:
    cell: str = "lstm"
    k: int = 1
    m: int = 12
    n_frames: int = 3
    hidden: int = 36
    dense: int = 32
    dropout_rate: float = 0.2
    threshold: float = 0.5
    frame_dim: int = FRAME_DIM

    def __post_init__(self):
        if self.cell not in ("lstm", "gru"):
            raise ValueError(f"unknown recurrent cell {self.cell!r}")

    def to_dict(self) -> dict:
        return asdict(self)


_CELLS = {
    "lstm": (LstmCellParams, lstm_sequence_forward, lstm_sequence_backward),
    "gru": (GruCellParams, gru_sequence_forward, gru_sequence_backward),
}


class RecurrentModel(NetModel):
    kind = "recurrent"

    @classmethod
    def init(cls, config: RecurrentConfig, rng: np.random.Generator | int = 0) -> "RecurrentModel":
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        c = config
        cell = _CELLS[c.cell][0].init(c.frame_dim, c.hidden, rng)
        params = {
            "rnn.Wx": cell.Wx, "rnn.Wh": cell.Wh, "rnn.b": cell.b,
            "dense.W": uniform_init(rng, (c.dense, c.hidden), c.hidden), "dense.b": np.zeros(c.dense),
            "out.W": uniform_init(rng, (c.k, c.dense), c.dense), "out.b": np.zeros(c.k),
        }
        return cls(config, params)

    @property
    def cell(self):
        p = self.params
        return _CELLS[self.config.cell][0](p["rnn.Wx"], p["rnn.Wh"], p["rnn.b"])

    def _forward(self, batch, rng, dropout_rate):
        c = self.config
        frames = batch.frames(c.n_frames)
        _, seq_forward, _ = _CELLS[c.cell]
        h, rnn_cache = seq_forward(self.cell, np.transpose(frames, (1, 0, 2)))
        hidden = dense_forward(DenseLayer(self.params["dense.W"], self.params["dense.b"]), h)
        hidden_d, mask = dropout_apply(hidden, dropout_rate, rng, rng is not None)
        probs = dense_forward(DenseLayer(self.params["out.W"], self.params["out.b"], "sigmoid"), hidden_d)
        return probs, (rnn_cache, h, hidden, hidden_d, mask)

    def _backward(self, cache, dlogits):
        rnn_cache, h, hidden, hidden_d, mask = cache
        g = {"out.W": dlogits.T @ hidden_d, "out.b": dlogits.sum(axis=0)}
        dhidden = (dlogits @ self.params["out.W"]) * mask
        dense = DenseLayer(self.params["dense.W"], self.params["dense.b"])
        g["dense.W"], g["dense.b"], dh = dense_backward(dense, h, hidden, dhidden)
        _, _, seq_backward = _CELLS[self.config.cell]
        g["rnn.Wx"], g["rnn.Wh"], g["rnn.b"], _ = seq_backward(self.cell, rnn_cache, dh, need_dx=False)
        return g


def build_baseline_recurrent(kind: str, config: RecurrentConfig | None = None, rng=0) -> RecurrentModel:
    config = RecurrentConfig(cell=kind) if config is None else RecurrentConfig(**{**config.to_dict(), "cell": kind})
    return RecurrentModel.init(config, rng)
