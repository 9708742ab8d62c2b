import numpy as np
import pytest
from pydantic import ValidationError

from errors import ConfigError, NumericalError
from mlp.network import Gradients, MlpModel, TrainBatch, forward, init_model, loss_and_gradients
from mlp.optimizer import AdamState, optimizer_step


def _model(weights, biases, activation="tanh"):
    weights = [np.asarray(w, dtype=float) for w in weights]
    dims = [weights[0].shape[1]] + [w.shape[0] for w in weights]
    return MlpModel(layer_dims=dims, weights=weights, biases=biases, activation=activation)


def test_init_is_deterministic():
    a = init_model([12, 7, 3], seed=4)
    b = init_model([12, 7, 3], seed=4)
    c = init_model([12, 7, 3], seed=5)
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)
    assert not np.array_equal(a.weights[0], c.weights[0])
    assert all(np.all(bias == 0) for bias in a.biases)


def test_init_rejects_bad_dims():
    with pytest.raises(ConfigError):
        init_model([5])
    with pytest.raises(ConfigError):
        init_model([5, 0, 2])


def test_zero_input_gives_zero_output():
    """Zero biases and odd activations map the zero vector to zero."""
    model = init_model([900, 100, 100, 100, 6], seed=0)
    np.testing.assert_array_equal(forward(model, np.zeros(900)), np.zeros(6))


def test_init_weight_spread():
    """Pre-activation std on unit-variance input is sqrt(2 fan_in / (fan_in + fan_out))."""
    x = np.random.default_rng(0).normal(size=(1000, 900))
    model = init_model([900, 100, 6], seed=1)
    assert np.std(model.weights[0]) == pytest.approx(np.sqrt(2.0 / 1000), rel=0.05)
    pre = x @ model.weights[0].T + model.biases[0]
    assert np.std(pre) == pytest.approx(np.sqrt(2.0 * 900 / 1000), rel=0.05)

    square = init_model([200, 200], activation="identity", seed=2)
    assert np.std(forward(square, x[:, :200])) == pytest.approx(1.0, rel=0.05)


def test_single_unit_forward():
    """w = 2, b = 1, x = 3 gives 7."""
    model = _model([[[2.0]]], [[1.0]])
    assert forward(model, [3.0]).tolist() == [7.0]


def test_two_layer_tanh_by_hand():
    w1 = np.array([[0.5, -1.0], [0.25, 0.75]])
    b1 = np.array([0.1, -0.2])
    w2 = np.array([[1.5, -0.5]])
    b2 = np.array([0.3])
    model = _model([w1, w2], [b1, b2])
    x = np.array([0.4, -0.6])
    hidden = np.tanh(w1 @ x + b1)
    np.testing.assert_allclose(forward(model, x), w2 @ hidden + b2, rtol=1e-15)


def test_batched_forward_equals_rows(rng):
    model = init_model([10, 8, 8, 4], seed=3)
    x = rng.normal(size=(7, 10))
    batched = forward(model, x)
    for i in range(7):
        np.testing.assert_allclose(batched[i], forward(model, x[i]), rtol=1e-12, atol=1e-15)


def test_forward_rejects_wrong_length(tiny_model):
    with pytest.raises(ValueError, match="expected input length"):
        forward(tiny_model, np.zeros(899))


def test_model_rejects_inconsistent_shapes():
    with pytest.raises(ValidationError):
        MlpModel(layer_dims=[3, 2], weights=[np.zeros((3, 2))], biases=[np.zeros(2)])
    with pytest.raises(ValidationError):
        MlpModel(layer_dims=[2, 1], weights=[[[np.nan, 0.0]]], biases=[[0.0]])


def test_exact_fit_has_zero_loss_and_gradients():
    model = _model([[[2.0]]], [[1.0]])
    loss, grads = loss_and_gradients(model, TrainBatch(inputs=[[3.0]], targets=[[7.0]]))
    assert loss == 0.0
    assert grads.weights[0].tolist() == [[0.0]]
    assert grads.biases[0].tolist() == [0.0]


def test_loss_and_bias_gradient_for_offset():
    """An output off by delta gives loss delta^2 and output bias gradient 2 * delta."""
    delta = 0.25
    model = _model([[[2.0]]], [[1.0]])
    loss, grads = loss_and_gradients(model, TrainBatch(inputs=[[3.0]], targets=[[7.0 - delta]]))
    assert loss == pytest.approx(delta**2)
    assert grads.biases[0][0] == pytest.approx(2 * delta)
    assert grads.weights[0][0, 0] == pytest.approx(2 * delta * 3.0)


def test_mean_reduction_divides_by_size(rng):
    model = init_model([4, 5, 2], seed=0)
    batch = TrainBatch(inputs=rng.normal(size=(3, 4)), targets=rng.normal(size=(3, 2)))
    total, g_sum = loss_and_gradients(model, batch)
    mean, g_mean = loss_and_gradients(model, batch, reduction="mean")
    assert mean == pytest.approx(total / 6)
    np.testing.assert_allclose(g_mean.weights[0], g_sum.weights[0] / 6)


def _numeric_gradient(model, batch, array, eps=1e-6):
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        saved = array[idx]
        array[idx] = saved + eps
        plus, _ = loss_and_gradients(model, batch)
        array[idx] = saved - eps
        minus, _ = loss_and_gradients(model, batch)
        array[idx] = saved
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


def test_gradients_match_finite_differences(rng):
    """Backprop agrees with central differences on random small networks."""
    for trial in range(20):
        depth = int(rng.integers(1, 5))
        dims = [int(rng.integers(1, 11))] + [int(rng.integers(1, 9)) for _ in range(depth - 1)] + [int(rng.integers(1, 5))]
        activation = "identity" if trial % 5 == 4 else "tanh"
        model = init_model(dims, activation=activation, seed=trial)
        for b in model.biases:
            b[:] = rng.normal(0, 0.3, b.shape)
        rows = int(rng.integers(1, 6))
        batch = TrainBatch(inputs=rng.normal(size=(rows, dims[0])), targets=rng.normal(size=(rows, dims[-1])))
        _, grads = loss_and_gradients(model, batch)
        for analytic, param in zip([*grads.weights, *grads.biases], [*model.weights, *model.biases]):
            numeric = _numeric_gradient(model, batch, param)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6)


def test_blow_up_names_the_layer():
    w1 = np.eye(2)
    w2 = np.array([[1e308, 1e308]])
    model = _model([w1, w2], [np.zeros(2), np.zeros(1)])
    batch = TrainBatch(inputs=[[5.0, 5.0]], targets=[[0.0]])
    with np.errstate(over="ignore"), pytest.raises(NumericalError, match="layer 1"):
        loss_and_gradients(model, batch)


def test_adam_zero_gradient_is_a_no_op(tiny_model):
    before = tiny_model.clone()
    zeros = Gradients(
        weights=[np.zeros_like(w) for w in tiny_model.weights],
        biases=[np.zeros_like(b) for b in tiny_model.biases],
    )
    model, state = optimizer_step(tiny_model, zeros, AdamState.for_model(tiny_model))
    assert state.step == 1
    for a, b in zip(model.weights, before.weights):
        np.testing.assert_array_equal(a, b)


def _bias_problem(target):
    """Loss (b - target)^2: zero input leaves only the bias trainable."""
    model = _model([[[0.0]]], [[0.0]], activation="identity")
    return model, TrainBatch(inputs=[[0.0]], targets=[[target]])


def test_adam_first_step_moves_toward_minimum():
    model, batch = _bias_problem(0.3)
    state = AdamState.for_model(model, learning_rate=0.01)
    _, grads = loss_and_gradients(model, batch)
    optimizer_step(model, grads, state)
    assert model.biases[0][0] == pytest.approx(0.01, rel=1e-6)


def test_adam_converges_on_quadratic():
    model, batch = _bias_problem(0.3)
    state = AdamState.for_model(model, learning_rate=0.01)
    for _ in range(2000):
        _, grads = loss_and_gradients(model, batch)
        optimizer_step(model, grads, state)
    loss, _ = loss_and_gradients(model, batch)
    assert loss < 1e-6


def test_adam_rejects_shape_mismatch(tiny_model):
    bad = Gradients(weights=[np.zeros((2, 2)) for _ in tiny_model.weights], biases=[np.zeros_like(b) for b in tiny_model.biases])
    with pytest.raises(ValueError, match="shape"):
        optimizer_step(tiny_model, bad, AdamState.for_model(tiny_model))
