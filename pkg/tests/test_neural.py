"""
Test suite for the layer kit: gradients, dropout, Adam and parameter documents
"""
import numpy as np
import pytest

from app.exceptions import MissingCacheError, NonFiniteGradientError, ShapeError
from app.models import Activation
from neural import (
    GRU, LSTM, AdamState, Conv1d, Conv1dParams, Dense, DenseParams, Dropout, Flatten, GruParams,
    LstmParams, Network, ParameterSet, Reshape, adam_update, backward, conv1d_forward, dense_forward,
    dropout_apply, gradient_check, gru_step, load_parameters, lstm_step, mse_loss, save_parameters,
)

SIZES = (1, 3, 5)
UNROLLS = (1, 3, 6)


def _rng(*key):
    return np.random.default_rng(list(key))


class TestGradientCheck:

    @pytest.mark.parametrize("n_in", SIZES)
    @pytest.mark.parametrize("n_out", SIZES)
    @pytest.mark.parametrize("activation", [Activation.IDENTITY, Activation.RELU])
    def test_dense(self, n_in, n_out, activation):
        rng = _rng(1, n_in, n_out)
        network = Network([Dense(DenseParams.create(n_in, n_out, activation, rng))])
        network.parameters()["0.dense.b"][:] = rng.normal(0, 0.5, n_out)
        inputs, targets = rng.normal(size=(4, n_in)), rng.normal(size=(4, n_out))
        assert gradient_check(network, inputs, targets) < 1e-4

    @pytest.mark.parametrize("n_in", SIZES)
    @pytest.mark.parametrize("hidden", SIZES)
    @pytest.mark.parametrize("steps", UNROLLS)
    def test_lstm(self, n_in, hidden, steps):
        rng = _rng(2, n_in, hidden, steps)
        network = Network([LSTM(LstmParams.create(n_in, hidden, rng))])
        inputs, targets = rng.normal(size=(3, steps, n_in)), rng.normal(size=(3, hidden))
        assert gradient_check(network, inputs, targets) < 1e-4

    @pytest.mark.parametrize("n_in", SIZES)
    @pytest.mark.parametrize("hidden", SIZES)
    @pytest.mark.parametrize("steps", UNROLLS)
    def test_gru(self, n_in, hidden, steps):
        rng = _rng(3, n_in, hidden, steps)
        network = Network([GRU(GruParams.create(n_in, hidden, rng))])
        inputs, targets = rng.normal(size=(3, steps, n_in)), rng.normal(size=(3, hidden))
        assert gradient_check(network, inputs, targets) < 1e-4

    @pytest.mark.parametrize("layer_type", [LSTM, GRU])
    def test_stacked_recurrent_with_sequences(self, layer_type):
        rng = _rng(4)
        make = LstmParams.create if layer_type is LSTM else GruParams.create
        network = Network([
            layer_type(make(2, 3, rng), return_sequences=True),
            layer_type(make(3, 4, rng)),
            Dense(DenseParams.create(4, 2, Activation.IDENTITY, rng)),
        ])
        inputs, targets = rng.normal(size=(3, 6, 2)), rng.normal(size=(3, 2))
        assert gradient_check(network, inputs, targets) < 1e-4

    @pytest.mark.parametrize("channels", SIZES)
    @pytest.mark.parametrize("kernels", SIZES)
    @pytest.mark.parametrize("kernel_size", (1, 3))
    def test_conv1d(self, channels, kernels, kernel_size):
        rng = _rng(5, channels, kernels, kernel_size)
        params = Conv1dParams.create(channels, kernels, kernel_size, Activation.IDENTITY, rng)
        network = Network([Conv1d(params)])
        inputs = rng.normal(size=(3, channels, 6))
        targets = rng.normal(size=(3, kernels, 6 - kernel_size + 1))
        assert gradient_check(network, inputs, targets) < 1e-4

    def test_conv_stack_with_readout(self):
        rng = _rng(6)
        network = Network([
            Reshape((1, 8)),
            Conv1d(Conv1dParams.create(1, 3, 3, Activation.RELU, rng)),
            Conv1d(Conv1dParams.create(3, 2, 3, Activation.IDENTITY, rng)),
            Flatten(),
            Dense(DenseParams.create(8, 2, Activation.IDENTITY, rng)),
        ])
        inputs, targets = rng.normal(size=(4, 8)), rng.normal(size=(4, 2))
        assert gradient_check(network, inputs, targets) < 1e-4

    def test_large_layer_is_subsampled(self):
        rng = _rng(7)
        network = Network([Dense(DenseParams.create(30, 20, Activation.IDENTITY, rng))])
        inputs, targets = rng.normal(size=(5, 30)), rng.normal(size=(5, 20))
        assert gradient_check(network, inputs, targets, sample_size=200) < 1e-4


class TestBackward:

    def test_dense_identity_matches_closed_form(self):
        rng = _rng(8)
        params = DenseParams.create(3, 2, Activation.IDENTITY, rng)
        network = Network([Dense(params)])
        X, y = rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
        pred = network.forward(X)
        _, dY = mse_loss(pred, y)
        grads = backward(network, X, dY)
        assert np.allclose(grads["0.dense.W"], X.T @ (2 * (pred - y) / pred.size))

    def test_zero_loss_gradient_gives_zero_gradients(self):
        rng = _rng(9)
        network = Network([Reshape((4, 1)), LSTM(LstmParams.create(1, 3, rng)),
                           Dense(DenseParams.create(3, 2, Activation.IDENTITY, rng))])
        X = rng.normal(size=(2, 4))
        network.forward(X)
        grads = backward(network, X, np.zeros((2, 2)))
        assert all(not np.any(g) for g in grads.values())

    def test_backward_before_forward(self):
        layer = Dense(DenseParams.create(2, 2, Activation.IDENTITY, _rng(10)))
        with pytest.raises(MissingCacheError):
            layer.backward(np.ones((1, 2)))
        with pytest.raises(MissingCacheError):
            Network([layer]).backward(np.ones((1, 2)))

    def test_gradients_before_backward(self):
        network = Network([Dense(DenseParams.create(2, 2, Activation.IDENTITY, _rng(11)))])
        network.forward(np.ones((1, 2)))
        with pytest.raises(MissingCacheError):
            network.gradients()

    def test_backward_checks_cached_input(self):
        network = Network([Dense(DenseParams.create(2, 1, Activation.IDENTITY, _rng(12)))])
        network.forward(np.ones((3, 2)))
        with pytest.raises(ShapeError):
            backward(network, np.ones((4, 2)), np.ones((4, 1)))


class TestForward:

    def test_dense_shape_mismatch(self):
        params = DenseParams.create(3, 2, Activation.IDENTITY, _rng(13))
        with pytest.raises(ShapeError):
            dense_forward(params, np.ones((4, 2)))

    def test_relu_clips(self):
        params = DenseParams(W=np.eye(2), b=np.zeros(2), activation=Activation.RELU)
        assert dense_forward(params, np.array([[-1.0, 2.0]])).tolist() == [[0.0, 2.0]]

    def test_dense_hand_arithmetic(self):
        params = DenseParams(W=np.array([[1.0], [1.0]]), b=np.array([0.5]))
        assert dense_forward(params, np.array([[1.0, 1.0]])).tolist() == [[2.5]]

    def test_lstm_step_with_zero_parameters(self):
        params = LstmParams(**{name: np.zeros_like(value)
                               for name, value in LstmParams.create(1, 1, _rng(14)).arrays().items()})
        h, c = lstm_step(params, np.array([[0.3]]), np.zeros((1, 1)), np.zeros((1, 1)))
        assert h.tolist() == [[0.0]] and c.tolist() == [[0.0]]
        h, c = lstm_step(params, np.array([[0.3]]), np.zeros((1, 1)), np.ones((1, 1)))
        assert c[0, 0] == pytest.approx(0.5)
        assert h[0, 0] == pytest.approx(0.231059, abs=1e-6)

    def test_gru_step_with_zero_parameters(self):
        params = GruParams(**{name: np.zeros_like(value)
                              for name, value in GruParams.create(1, 1, _rng(15)).arrays().items()})
        assert gru_step(params, np.array([[0.3]]), np.ones((1, 1)))[0, 0] == pytest.approx(0.5)
        assert gru_step(params, np.array([[0.3]]), np.zeros((1, 1)))[0, 0] == 0.0

    def test_gru_saturated_update_gate_carries_state(self):
        params = GruParams.create(1, 1, _rng(16))
        params.b_u[:] = 20.0
        h = gru_step(params, np.array([[0.3]]), np.full((1, 1), 0.7))
        assert h[0, 0] == pytest.approx(0.7, abs=1e-6)

    def test_conv_hand_arithmetic(self):
        params = Conv1dParams(kernels=np.array([[1.0, 0.0, -1.0]]), biases=np.zeros(1))
        out = conv1d_forward(params, np.array([[1.0, 2.0, 3.0, 4.0, 5.0]]))
        assert out[0, 0].tolist() == [-2.0, -2.0, -2.0]

    def test_conv_full_width_kernel_gives_one_column(self, rng):
        params = Conv1dParams(kernels=rng.normal(size=(2, 5)), biases=np.zeros(2))
        assert conv1d_forward(params, rng.normal(size=(3, 5))).shape == (3, 2, 1)

    def test_recurrent_states_stay_bounded(self, rng):
        lstm, gru = LstmParams.create(2, 4, rng), GruParams.create(2, 4, rng)
        h = np.zeros((5, 4))
        c = np.zeros((5, 4))
        g = np.zeros((5, 4))
        for _ in range(50):
            x = rng.normal(size=(5, 2))
            h, c = lstm_step(lstm, x, h, c)
            g = gru_step(gru, x, g)
            assert np.all(np.abs(h) < 1.0)
            assert np.all(np.abs(g) < 1.0)

    def test_gru_step_rejects_wrong_state(self, rng):
        with pytest.raises(ShapeError):
            gru_step(GruParams.create(1, 3, rng), np.ones((2, 1)), np.ones((2, 4)))

    def test_conv_is_cross_correlation(self):
        params = Conv1dParams(kernels=np.array([[1.0, 0.0, -1.0]]), biases=np.array([0.5]))
        out = conv1d_forward(params, np.array([[1.0, 2.0, 4.0, 8.0]]))
        assert out.shape == (1, 1, 2)
        assert out[0, 0].tolist() == [-2.5, -5.5]

    def test_conv_kernel_longer_than_input(self):
        params = Conv1dParams(kernels=np.ones((1, 5)), biases=np.zeros(1))
        with pytest.raises(ShapeError):
            conv1d_forward(params, np.ones((1, 4)))

    def test_forward_is_deterministic(self, rng):
        network = Network([Reshape((6, 1)), GRU(GruParams.create(1, 3, rng)),
                           Dense(DenseParams.create(3, 2, Activation.IDENTITY, rng))])
        X = rng.normal(size=(4, 6))
        assert np.array_equal(network.forward(X), network.forward(X))


class TestDropout:

    def test_inference_is_identity(self, rng):
        x = rng.normal(size=(3, 4))
        assert dropout_apply(x, 0.9, training=False, seed=1) is x

    def test_rate_zero_is_identity(self, rng):
        x = rng.normal(size=(3, 4))
        assert np.array_equal(dropout_apply(x, 0.0, training=True, seed=1), x)

    def test_expectation_is_preserved(self):
        out = dropout_apply(np.ones((1000, 1000)), 0.3, training=True, seed=2)
        assert 0.99 <= out.mean() <= 1.01

    def test_rejects_rate_one(self):
        with pytest.raises(ValueError):
            dropout_apply(np.ones(3), 1.0, training=True, seed=0)

    def test_mask_keyed_by_epoch_and_batch(self):
        network = Network([Dropout(0.5, seed=3)])
        X = np.ones((8, 8))
        first = network.forward(X, training=True, key=(1, 2))
        again = network.forward(X, training=True, key=(1, 2))
        other = network.forward(X, training=True, key=(1, 3))
        assert np.array_equal(first, again)
        assert not np.array_equal(first, other)

    def test_backward_uses_same_mask(self):
        layer = Dropout(0.5, seed=4)
        out = layer.forward(np.ones((4, 4)), training=True)
        assert np.array_equal(layer.backward(np.ones((4, 4))), out)


class TestAdam:

    def test_first_step_is_signed_step_size(self):
        params = ParameterSet({"w": np.array([1.0, 1.0, 1.0])})
        grads = {"w": np.array([0.5, -2.0, 1e-3])}
        adam_update(AdamState(step_size=0.001), params, grads)
        assert np.allclose(params["w"], [0.999, 1.001, 0.999], atol=1e-6)

    def test_first_step_is_scale_invariant(self):
        params = ParameterSet({"a": np.zeros(1), "b": np.zeros(1)})
        adam_update(AdamState(), params, {"a": np.array([0.02]), "b": np.array([20.0])})
        assert params["a"][0] == pytest.approx(params["b"][0], rel=1e-6)

    def test_zero_gradient_is_noop(self):
        params = ParameterSet({"w": np.array([0.3, -0.7])})
        state = AdamState()
        for _ in range(5):
            adam_update(state, params, {"w": np.zeros(2)})
        assert params["w"].tolist() == [0.3, -0.7]
        assert state.t == 5

    def test_non_finite_gradient_names_parameter(self):
        params = ParameterSet({"w": np.zeros(2)})
        with pytest.raises(NonFiniteGradientError) as exc_info:
            adam_update(AdamState(), params, {"w": np.array([np.nan, 0.0])})
        assert exc_info.value.parameter == "w"
        assert params["w"].tolist() == [0.0, 0.0]

    def test_fits_linear_data(self):
        rng = _rng(14)
        X = rng.uniform(-1, 1, size=(64, 3))
        y = X @ np.array([[0.5], [-0.3], [0.2]]) + 0.1
        network = Network([Dense(DenseParams.create(3, 1, Activation.IDENTITY, rng))])
        state = AdamState(step_size=0.01)
        for _ in range(2000):
            loss, dY = mse_loss(network.forward(X, training=True), y)
            network.backward(dY)
            adam_update(state, network.parameters(), network.gradients())
        assert mse_loss(network.forward(X), y)[0] < 1e-6


class TestParameterSet:

    @pytest.fixture
    def network(self, rng):
        return Network([Reshape((5, 1)), GRU(GruParams.create(1, 3, rng)),
                        Dense(DenseParams.create(3, 2, Activation.IDENTITY, rng))])

    def test_names_and_size(self, network):
        params = network.parameters()
        assert "1.gru.W_xu" in params
        assert "2.dense.b" in params
        assert params.size == 3 * (1 * 3 + 3 * 3 + 3) + 3 * 2 + 2

    def test_json_round_trip_is_exact(self, network, tmp_path):
        path = save_parameters(tmp_path / "params.json", network.parameters(), {"family": "gru"})
        restored, header = load_parameters(path)
        assert header == {"family": "gru"}
        assert list(restored) == list(network.parameters())
        for name, array in network.parameters().items():
            assert np.array_equal(restored[name], array)

    def test_json_is_byte_stable(self, network):
        assert network.parameters().to_json() == network.parameters().copy().to_json()

    def test_rejects_foreign_document(self):
        with pytest.raises(ValueError, match="not a parameter-set"):
            ParameterSet.from_json('{"format": "other"}')

    def test_snapshot_and_restore(self, network):
        snapshot = network.snapshot()
        network.parameters()["2.dense.W"][:] = 0.0
        network.restore(snapshot)
        assert np.array_equal(network.parameters()["2.dense.W"], snapshot["2.dense.W"])

    def test_assign_checks_names(self, network):
        with pytest.raises(KeyError):
            network.parameters().assign({"x": np.zeros(1)})
