import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occuforge.neuralnet import (
    AdamState,
    DenseLayer,
    GruCellParams,
    LstmCellParams,
    TrainHyperparams,
    adam_step,
    bce_loss,
    dense_backward,
    dense_forward,
    dropout_apply,
    gru_cell_forward,
    gru_sequence_backward,
    gru_sequence_forward,
    lstm_cell_forward,
    lstm_sequence_backward,
    lstm_sequence_forward,
    scalar_finite_diff,
    sigmoid,
    finite_diff_grad,
    max_relative_error,
    train,
)


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm_scalar_oracle(wx, wh, b, x, h, c):
    """One LSTM step for scalar input/state; weights given per gate as i, f, o, c."""
    i = _sig(wx[0] * x + wh[0] * h + b[0])
    f = _sig(wx[1] * x + wh[1] * h + b[1])
    o = _sig(wx[2] * x + wh[2] * h + b[2])
    g = math.tanh(wx[3] * x + wh[3] * h + b[3])
    c_new = f * c + i * g
    return o * math.tanh(c_new), c_new


def gru_scalar_oracle(wx, wh, b, x, h):
    z = _sig(wx[0] * x + wh[0] * h + b[0])
    r = _sig(wx[1] * x + wh[1] * h + b[1])
    n = math.tanh(wx[2] * x + wh[2] * (r * h) + b[2])
    return (1 - z) * h + z * n


def scalar_lstm(wx, wh, b):
    return LstmCellParams(np.array(wx, float).reshape(4, 1), np.array(wh, float).reshape(4, 1),
                          np.array(b, float))


def scalar_gru(wx, wh, b):
    return GruCellParams(np.array(wx, float).reshape(3, 1), np.array(wh, float).reshape(3, 1),
                         np.array(b, float))


class TestLstmCell:
    def test_zero_weights(self):
        p = scalar_lstm([0] * 4, [0] * 4, [0] * 4)
        h, c = lstm_cell_forward(p, np.array([0.7]), np.array([0.0]), np.array([2.0]))
        assert c[0] == pytest.approx(1.0)
        assert h[0] == pytest.approx(0.5 * math.tanh(1.0))

    @given(st.lists(st.floats(-2, 2), min_size=15, max_size=15))
    @settings(max_examples=50, deadline=None)
    def test_against_scalar_oracle(self, v):
        wx, wh, b, (x, h, c) = v[0:4], v[4:8], v[8:12], v[12:15]
        h1, c1 = lstm_cell_forward(scalar_lstm(wx, wh, b), np.array([x]), np.array([h]), np.array([c]))
        eh, ec = lstm_scalar_oracle(wx, wh, b, x, h, c)
        assert h1[0] == pytest.approx(eh, abs=1e-12)
        assert c1[0] == pytest.approx(ec, abs=1e-12)

    def test_dimension_mismatch(self, rng):
        p = LstmCellParams.init(3, 2, rng)
        with pytest.raises(ValueError):
            lstm_cell_forward(p, np.zeros(4), np.zeros(2), np.zeros(2))
        with pytest.raises(ValueError):
            lstm_cell_forward(p, np.zeros(3), np.zeros(5), np.zeros(2))

    def test_sequence_matches_repeated_cell(self, rng):
        p = LstmCellParams.init(5, 4, rng)
        xs = rng.normal(size=(7, 3, 5))
        h_last, _ = lstm_sequence_forward(p, xs)
        h = c = np.zeros((3, 4))
        for x in xs:
            h, c = lstm_cell_forward(p, x, h, c)
        assert np.allclose(h_last, h, atol=1e-12)

    def test_sequence_backward(self, rng):
        p = LstmCellParams.init(3, 4, rng)
        xs = rng.normal(size=(5, 2, 3))
        w = rng.normal(size=(2, 4))

        def f():
            return float(np.sum(lstm_sequence_forward(p, xs)[0] * w))

        _, cache = lstm_sequence_forward(p, xs)
        dWx, dWh, db, dxs = lstm_sequence_backward(p, cache, w)
        for arr, grad in ((p.Wx, dWx), (p.Wh, dWh), (p.b, db), (xs, dxs)):
            num = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                j = it.multi_index
                orig = arr[j]
                arr[j] = orig + 1e-6
                up = f()
                arr[j] = orig - 1e-6
                down = f()
                arr[j] = orig
                num[j] = (up - down) / 2e-6
            assert np.allclose(grad, num, atol=1e-7)


class TestGruCell:
    def test_zero_weights(self):
        p = scalar_gru([0] * 3, [0] * 3, [0] * 3)
        h = gru_cell_forward(p, np.array([0.3]), np.array([1.0]))
        assert h[0] == pytest.approx(0.5)

    @given(st.lists(st.floats(-2, 2), min_size=11, max_size=11))
    @settings(max_examples=50, deadline=None)
    def test_against_scalar_oracle(self, v):
        wx, wh, b, (x, h) = v[0:3], v[3:6], v[6:9], v[9:11]
        out = gru_cell_forward(scalar_gru(wx, wh, b), np.array([x]), np.array([h]))
        assert out[0] == pytest.approx(gru_scalar_oracle(wx, wh, b, x, h), abs=1e-12)

    def test_sequence_backward(self, rng):
        p = GruCellParams.init(3, 4, rng)
        xs = rng.normal(size=(3, 2, 3))
        w = rng.normal(size=(2, 4))
        _, cache = gru_sequence_forward(p, xs)
        dWx, dWh, db, dxs = gru_sequence_backward(p, cache, w)
        for arr, grad in ((p.Wx, dWx), (p.Wh, dWh), (p.b, db)):
            num = np.zeros_like(arr)
            for j in np.ndindex(arr.shape):
                orig = arr[j]
                arr[j] = orig + 1e-6
                up = float(np.sum(gru_sequence_forward(p, xs)[0] * w))
                arr[j] = orig - 1e-6
                down = float(np.sum(gru_sequence_forward(p, xs)[0] * w))
                arr[j] = orig
                num[j] = (up - down) / 2e-6
            assert np.allclose(grad, num, atol=1e-7)


class TestDense:
    def test_relu_forward(self):
        layer = DenseLayer(np.array([[1.0, -1.0], [2.0, 0.0]]), np.array([0.0, -1.0]), "relu")
        out = dense_forward(layer, np.array([[1.0, 3.0]]))
        assert out.tolist() == [[0.0, 1.0]]

    @pytest.mark.parametrize("activation", ["relu", "sigmoid", "identity"])
    def test_backward(self, rng, activation):
        layer = DenseLayer.init(4, 3, rng, activation)
        layer.b[:] = rng.normal(size=3)
        x = rng.normal(size=(5, 4))
        w = rng.normal(size=(5, 3))
        out = dense_forward(layer, x)
        dW, db, dx = dense_backward(layer, x, out, w)
        f = lambda: float(np.sum(dense_forward(layer, x) * w))
        for arr, grad in ((layer.W, dW), (layer.b, db), (x, dx)):
            for j in np.ndindex(arr.shape):
                orig = arr[j]
                arr[j] = orig + 1e-6
                up = f()
                arr[j] = orig - 1e-6
                down = f()
                arr[j] = orig
                assert grad[j] == pytest.approx((up - down) / 2e-6, abs=1e-6)

    def test_init_ranges(self, rng):
        layer = DenseLayer.init(25, 10, rng)
        assert np.all(np.abs(layer.W) <= 1 / 5) and np.all(layer.b == 0)


class TestDropout:
    def test_identity_when_not_training(self, rng):
        x = rng.normal(size=(10, 10))
        y, _ = dropout_apply(x, 0.2, rng, training=False)
        assert np.array_equal(x, y)

    def test_rate_zero(self, rng):
        x = rng.normal(size=5)
        assert np.array_equal(dropout_apply(x, 0.0, rng, training=True)[0], x)

    @pytest.mark.parametrize("rate", [1.0, -0.1, 1.5])
    def test_bad_rate(self, rng, rate):
        with pytest.raises(ValueError):
            dropout_apply(np.ones(3), rate, rng, training=True)

    def test_expectation_preserved(self):
        rng = np.random.default_rng(7)
        x = np.full(1_000_000, 2.5)
        y, mask = dropout_apply(x, 0.2, rng, training=True)
        # sd of one entry is 2.5 * sqrt(0.2 / 0.8) = 1.25; 5-sigma band on the mean
        assert abs(y.mean() - 2.5) < 5 * 1.25 / 1000
        assert set(np.unique(mask)) == {0.0, 1.25}


class TestLoss:
    def test_values(self):
        assert bce_loss(np.array([0.5]), np.array([1.0])) == pytest.approx(math.log(2))
        assert bce_loss(np.array([[0.9, 0.2]]), np.array([[1, 0]])) == pytest.approx(
            -(math.log(0.9) + math.log(0.8)) / 2)

    def test_clamp(self):
        assert math.isfinite(bce_loss(np.array([0.0, 1.0]), np.array([1.0, 0.0])))

    def test_sigmoid_stable(self):
        assert sigmoid(np.array([-1000.0, 0.0, 1000.0])).tolist() == [0.0, 0.5, 1.0]


class TestAdam:
    def test_hand_computed_steps(self):
        p = {"w": np.array([1.0, -2.0])}
        g = {"w": np.array([0.3, -0.05])}
        state = AdamState.for_params(p)
        adam_step(state, p, g, 0.1)
        # first step: m_hat = g, v_hat = g^2 so the update is lr * g / (|g| + eps)
        assert p["w"][0] == pytest.approx(1.0 - 0.1 * 0.3 / (0.3 + 1e-8), abs=1e-12)
        assert p["w"][1] == pytest.approx(-2.0 + 0.1 * 0.05 / (0.05 + 1e-8), abs=1e-12)
        assert state.m["w"][0] == pytest.approx(0.03)
        assert state.v["w"][0] == pytest.approx(0.00009)
        adam_step(state, p, g, 0.1)
        # m = 0.057, v = 0.00017991; corrected back to 0.3 and 0.09
        assert state.m["w"][0] == pytest.approx(0.057)
        assert state.v["w"][0] == pytest.approx(0.00017991)
        assert p["w"][0] == pytest.approx(1.0 - 2 * 0.1 * 0.3 / (0.3 + 1e-8), abs=1e-12)
        assert state.step == 2


class Quadratic:
    """Loss theta^2 summed, used to exercise the finite-difference helpers and the loop."""

    def __init__(self, theta):
        self.params = {"theta": np.array(theta, dtype=float)}

    def copy(self):
        return Quadratic(self.params["theta"].copy())

    def loss(self, batch):
        return float(np.sum(self.params["theta"] ** 2))

    def loss_and_grads(self, batch, rng=None, dropout_rate=0.0):
        return self.loss(batch), {"theta": 2 * self.params["theta"]}


class Rows:
    def __init__(self, n):
        self.n = n

    def __len__(self):
        return self.n

    def subset(self, idx):
        return Rows(len(idx))


class TestFiniteDifferences:
    def test_scalar(self):
        assert scalar_finite_diff(lambda t: t * t, 3.0) == pytest.approx(6.0, abs=1e-8)

    def test_model_blocks(self):
        g = finite_diff_grad(Quadratic([3.0, -1.0]), Rows(1))
        assert g["theta"] == pytest.approx([6.0, -2.0], abs=1e-8)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            scalar_finite_diff(lambda t: t, 0.0, eps=0.0)

    def test_relative_error(self):
        err = max_relative_error({"a": np.array([1.0, 0.0])}, {"a": np.array([1.1, 0.0])})
        assert err["a"] == pytest.approx(0.1 / 2.1)


class TestTrainLoop:
    def test_epochs_zero_returns_copy(self):
        model = Quadratic([1.0])
        res = train(model, Rows(10), TrainHyperparams(epochs=0))
        assert res.loss_history == [] and res.model.params["theta"][0] == 1.0
        assert res.model is not model

    def test_step_count_and_convergence(self):
        res = train(Quadratic([1.0, -1.0]), Rows(95), TrainHyperparams(learning_rate=0.05, epochs=40))
        assert res.optimizer.step == 40 * 4
        assert np.all(np.abs(res.model.params["theta"]) < 0.1)

    def test_original_untouched(self):
        model = Quadratic([1.0])
        train(model, Rows(5), TrainHyperparams(epochs=3))
        assert model.params["theta"][0] == 1.0

    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            train(Quadratic([1.0]), Rows(0), TrainHyperparams())

    @pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(batch_size=0), dict(epochs=-1),
                                    dict(dropout_rate=1.0)])
    def test_bad_hyperparams(self, kw):
        with pytest.raises(ValueError):
            TrainHyperparams(**kw)
