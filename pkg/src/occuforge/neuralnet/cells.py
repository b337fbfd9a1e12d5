"""Recurrent cells, dense layers and dropout.

All kernels work on row-major batches: an input of shape ``(B, D)`` maps to
``(B, H)``.  A single vector ``(D,)`` is accepted wherever a batch is.
Gate blocks are stacked along the first weight axis in the order
``i, f, o, c`` (LSTM) and ``z, r, n`` (GRU).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity")


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _check_dims(name: str, arr: np.ndarray, expected: int) -> None:
    if arr.shape[-1] != expected:
        raise ValueError(f"{name}: expected trailing dimension {expected}, got {arr.shape[-1]}")


@dataclass
class LstmCellParams:
    Wx: np.ndarray  # (4H, D)
    Wh: np.ndarray  # (4H, H)
    b: np.ndarray   # (4H,)

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "LstmCellParams":
        H, D = hidden_dim, input_dim
        Wx = np.concatenate([uniform_init(rng, (H, D), D) for _ in range(4)])
        Wh = np.concatenate([uniform_init(rng, (H, H), H) for _ in range(4)])
        return cls(Wx, Wh, np.zeros(4 * H))

    @property
    def input_dim(self) -> int:
        return self.Wx.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.Wh.shape[1]

    def _block(self, arr, k):
        H = self.hidden_dim
        return arr[k * H:(k + 1) * H]

    W_xi = property(lambda self: self._block(self.Wx, 0))
    W_xf = property(lambda self: self._block(self.Wx, 1))
    W_xo = property(lambda self: self._block(self.Wx, 2))
    W_xc = property(lambda self: self._block(self.Wx, 3))
    W_hi = property(lambda self: self._block(self.Wh, 0))
    W_hf = property(lambda self: self._block(self.Wh, 1))
    W_ho = property(lambda self: self._block(self.Wh, 2))
    W_hc = property(lambda self: self._block(self.Wh, 3))
    b_i = property(lambda self: self._block(self.b, 0))
    b_f = property(lambda self: self._block(self.b, 1))
    b_o = property(lambda self: self._block(self.b, 2))
    b_c = property(lambda self: self._block(self.b, 3))


@dataclass
class GruCellParams:
    Wx: np.ndarray  # (3H, D)
    Wh: np.ndarray  # (3H, H)
    b: np.ndarray   # (3H,)

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "GruCellParams":
        H, D = hidden_dim, input_dim
        Wx = np.concatenate([uniform_init(rng, (H, D), D) for _ in range(3)])
        Wh = np.concatenate([uniform_init(rng, (H, H), H) for _ in range(3)])
        return cls(Wx, Wh, np.zeros(3 * H))

    @property
    def input_dim(self) -> int:
        return self.Wx.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.Wh.shape[1]


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.shape[0] != self.b.shape[0]:
            raise ValueError("dense layer: W and b disagree on output width")

    @classmethod
    def init(cls, n_in: int, n_out: int, rng: np.random.Generator, activation="relu") -> "DenseLayer":
        return cls(uniform_init(rng, (n_out, n_in), n_in), np.zeros(n_out), activation)


def lstm_cell_forward(params: LstmCellParams, x_t, h_prev, c_prev):
    """One LSTM step. Returns ``(h_t, c_t)``."""
    x_t, h_prev, c_prev = (np.asarray(a, dtype=float) for a in (x_t, h_prev, c_prev))
    _check_dims("lstm x_t", x_t, params.input_dim)
    _check_dims("lstm h_prev", h_prev, params.hidden_dim)
    _check_dims("lstm c_prev", c_prev, params.hidden_dim)
    h_t, c_t, _ = _lstm_step(params.Wx, params.Wh, params.b, x_t, h_prev, c_prev)
    return h_t, c_t


def _lstm_step(Wx, Wh, b, x, h, c):
    H = Wh.shape[1]
    a = x @ Wx.T + h @ Wh.T + b
    gates = sigmoid(a[..., :3 * H])
    i, f, o = gates[..., :H], gates[..., H:2 * H], gates[..., 2 * H:]
    g = np.tanh(a[..., 3 * H:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (x, h, c, i, f, o, g, tc)


def lstm_sequence_forward(params: LstmCellParams, xs: np.ndarray):
    """Unroll over ``xs`` of shape ``(T, B, D)`` from zero state.

    Returns the final hidden state ``(B, H)`` and a cache for
    :func:`lstm_sequence_backward`.
    """
    T, B, D = xs.shape
    H = params.hidden_dim
    # Internally feature-major: z[t] = [h; x; 1] is (H + D + 1, B) and the
    # gates are (4H, B), so every gate block is a contiguous row range and
    # each step is one matmul. sigmoid(a) = 0.5 + 0.5 tanh(a / 2), so the
    # 1/2 is folded into the weights and one tanh serves all four blocks.
    scale = np.ones((4 * H, 1))
    scale[:3 * H] = 0.5
    W = np.concatenate([params.Wh, params.Wx, params.b[:, None]], axis=1) * scale
    z = np.empty((T + 1, H + D + 1, B))
    z[0, :H] = 0.0
    z[:T, H:H + D] = xs.transpose(0, 2, 1)
    z[:, -1] = 1.0
    cs = np.zeros((T + 1, H, B))
    gates = np.empty((T, 4 * H, B))
    for t in range(T):
        act = gates[t]
        np.matmul(W, z[t], out=act)
        np.tanh(act, out=act)
        sig = act[:3 * H]
        sig *= 0.5
        sig += 0.5
        np.multiply(act[H:2 * H], cs[t], out=cs[t + 1])
        cs[t + 1] += act[:H] * act[3 * H:]
        h = z[t + 1, :H]
        np.tanh(cs[t + 1], out=h)
        h *= act[2 * H:3 * H]
    return z[T, :H].T.copy(), (z, cs, gates, D)


def lstm_sequence_backward(params: LstmCellParams, cache, dh_last: np.ndarray, need_dx: bool = True):
    """BPTT through an unrolled LSTM given the gradient on the final hidden state.

    Returns ``(dWx, dWh, db, dxs)``; ``dxs`` is None when ``need_dx`` is false.
    """
    z, cs, gates, D = cache
    T, _, B = gates.shape
    H = params.hidden_dim
    i, f, o, g = (gates[:, k * H:(k + 1) * H] for k in range(4))
    tc = np.tanh(cs[1:])
    dc_from_h = o * (1.0 - tc * tc)
    # d(pre-activation) = [dc; dc; dh; dc] * factor, blockwise
    factor = np.concatenate([g * i * (1.0 - i), cs[:-1] * f * (1.0 - f),
                             tc * o * (1.0 - o), i * (1.0 - g * g)], axis=1)
    WhT = params.Wh.T.copy()
    dW = np.zeros((4 * H, H + D + 1))
    da = np.empty((T, 4 * H, B))
    dh = dh_last.T
    dc = np.zeros((H, B))
    for t in range(T - 1, -1, -1):
        dc = dc + dh * dc_from_h[t]
        np.multiply(np.concatenate([dc, dc, dh, dc]), factor[t], out=da[t])
        dW += da[t] @ z[t].T
        dh = WhT @ da[t]
        dc = dc * f[t]
    dxs = (params.Wx.T @ da).transpose(0, 2, 1) if need_dx else None
    return dW[:, H:H + D].copy(), dW[:, :H].copy(), dW[:, -1].copy(), dxs


def gru_cell_forward(params: GruCellParams, x_t, h_prev):
    """One GRU step: update gate z, reset gate r, candidate n."""
    x_t, h_prev = (np.asarray(a, dtype=float) for a in (x_t, h_prev))
    _check_dims("gru x_t", x_t, params.input_dim)
    _check_dims("gru h_prev", h_prev, params.hidden_dim)
    h_t, _ = _gru_step(params.Wx, params.Wh, params.b, x_t, h_prev)
    return h_t


def _gru_step(Wx, Wh, b, x, h):
    H = Wh.shape[1]
    ax = x @ Wx.T + b
    ah_zr = h @ Wh[:2 * H].T
    zr = sigmoid(ax[..., :2 * H] + ah_zr)
    z, r = zr[..., :H], zr[..., H:]
    rh = r * h
    n = np.tanh(ax[..., 2 * H:] + rh @ Wh[2 * H:].T)
    h_new = (1.0 - z) * h + z * n
    return h_new, (x, h, z, r, rh, n)


def gru_sequence_forward(params: GruCellParams, xs: np.ndarray):
    T, B, _ = xs.shape
    h = np.zeros((B, params.hidden_dim))
    cache = []
    for t in range(T):
        h, step = _gru_step(params.Wx, params.Wh, params.b, xs[t], h)
        cache.append(step)
    return h, cache


def gru_sequence_backward(params: GruCellParams, cache, dh_last: np.ndarray, need_dx: bool = True):
    """BPTT through an unrolled GRU; same return convention as the LSTM version."""
    H = params.hidden_dim
    Wh_zr, Wh_n = params.Wh[:2 * H], params.Wh[2 * H:]
    dWx = np.zeros_like(params.Wx)
    dWh = np.zeros_like(params.Wh)
    db = np.zeros_like(params.b)
    dxs = []
    dh = dh_last
    da = np.empty((dh.shape[0], 3 * H))
    for x, h_prev, z, r, rh, n in reversed(cache):
        dn_pre = dh * z * (1.0 - n * n)
        drh = dn_pre @ Wh_n
        da[:, :H] = dh * (n - h_prev) * z * (1.0 - z)
        da[:, H:2 * H] = drh * h_prev * r * (1.0 - r)
        da[:, 2 * H:] = dn_pre
        dWx += da.T @ x
        dWh[:2 * H] += da[:, :2 * H].T @ h_prev
        dWh[2 * H:] += dn_pre.T @ rh
        db += da.sum(axis=0)
        if need_dx:
            dxs.append(da @ params.Wx)
        dh = dh * (1.0 - z) + drh * r + da[:, :2 * H] @ Wh_zr
    dxs.reverse()
    return dWx, dWh, db, (np.stack(dxs) if need_dx else None)


def _activate(kind: str, a):
    if kind == "relu":
        return np.maximum(a, 0.0)
    if kind == "sigmoid":
        return sigmoid(a)
    return a


def dense_forward(layer: DenseLayer, x):
    x = np.asarray(x, dtype=float)
    _check_dims("dense input", x, layer.W.shape[1])
    return _activate(layer.activation, x @ layer.W.T + layer.b)


def dense_backward(layer: DenseLayer, x, out, dout):
    """Gradients of a dense layer given its input, output and upstream gradient.

    Returns ``(dW, db, dx)``.
    """
    if layer.activation == "relu":
        da = dout * (out > 0.0)
    elif layer.activation == "sigmoid":
        da = dout * out * (1.0 - out)
    else:
        da = dout
    return da.T @ x, da.sum(axis=0), da @ layer.W


def dropout_apply(x, rate: float, rng: np.random.Generator | None, training: bool):
    """Inverted dropout.

    Returns ``(y, mask)`` where ``mask`` holds the per-unit multiplier
    (``0`` or ``1 / (1 - rate)``), so the backward pass is ``dy * mask``.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    x = np.asarray(x, dtype=float)
    if not training or rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep) / keep
    return x * mask, mask


PROB_CLAMP = 1e-12


def bce_loss(p, y) -> float:
    """Mean binary cross-entropy over every entry, probabilities clamped."""
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_sigmoid_grad(p, y):
    """d(mean BCE)/d(pre-sigmoid activation); zero where the clamp is active."""
    active = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    return (p - y) * active / p.size
