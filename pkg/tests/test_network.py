import numpy as np
import pytest

from nirstress._util import substream
from nirstress.errors import ConfigError, DimensionError
from nirstress.nn import (
    AdamState,
    NetworkSpec,
    TrainConfig,
    accuracy,
    adam_step,
    backward,
    bce_loss,
    forward,
    get_flat_params,
    init_network,
    network_from_dict,
    network_to_dict,
    predict,
    set_flat_params,
    train,
)

from oracles import central_diff_gradient, max_rel_error

SMALL_SPEC = NetworkSpec(
    conv_kernels=3, conv_width=3, dense_sizes=(6, 4, 3, 1),
    dropout_rates=(0.6, 0.4, 0.2),
)


def small_net(seed=0, input_dim=8):
    return init_network(SMALL_SPEC, input_dim, substream(seed))


class TestBceLoss:
    def test_perfect_prediction_hits_clamp_floor(self):
        y = np.array([0.0, 1.0])
        loss, _ = bce_loss(np.array([0.0, 1.0]), y)
        assert 0.0 < loss <= -np.log(1.0 - 1e-7) + 1e-12

    def test_coin_flip(self):
        loss, _ = bce_loss(np.full(4, 0.5), np.array([0.0, 1.0, 1.0, 0.0]))
        assert loss == pytest.approx(np.log(2.0), rel=1e-12)

    def test_hand_example(self):
        loss, _ = bce_loss(np.array([0.9, 0.2]), np.array([1.0, 0.0]))
        expected = (-np.log(0.9) - np.log(0.8)) / 2.0
        assert loss == pytest.approx(expected, rel=1e-9)

    def test_gradient_formula(self):
        p = np.array([0.3, 0.8])
        y = np.array([1.0, 0.0])
        _, grad = bce_loss(p, y)
        np.testing.assert_allclose(grad, (p - y) / (p * (1 - p)) / 2.0, rtol=1e-12)


class TestForwardShapes:
    def test_default_architecture_chain(self):
        spec = NetworkSpec()
        net = init_network(spec, 48, substream(0))
        assert net.conv_out_len == 46
        assert net.flat_dim == 460
        assert net.params["dense1_w"].shape == (460, 256)
        assert net.params["dense2_w"].shape == (256, 16)
        assert net.params["dense3_w"].shape == (16, 4)
        assert net.params["dense4_w"].shape == (4, 1)
        prob = forward(net, np.random.default_rng(0).normal(size=(5, 48)))
        assert prob.shape == (5,)
        assert np.all((prob > 0) & (prob < 1))

    def test_zero_weights_give_half(self):
        net = small_net()
        for name, arr in net.params.items():
            if name.endswith(("_w", "_b", "_beta")):
                net.params[name] = np.zeros_like(arr)
        prob = forward(net, np.zeros((3, 8)), mode="infer")
        np.testing.assert_allclose(prob, 0.5, atol=1e-12)

    def test_wrong_input_dim_rejected(self):
        net = small_net()
        with pytest.raises(DimensionError):
            forward(net, np.zeros((2, 9)))

    def test_parameter_count_formula(self):
        spec = NetworkSpec()
        net = init_network(spec, 48, substream(1))
        conv = 10 * 3 + 10
        bn = 2 * (10 + 256 + 16 + 4)
        dense = 460 * 256 + 256 + 256 * 16 + 16 + 16 * 4 + 4 + 4 * 1 + 1
        assert net.n_parameters() == conv + bn + dense


class TestGradients:
    def test_composed_small_network(self):
        rng = np.random.default_rng(0)
        for trial in range(10):
            net = small_net(seed=trial)
            X = rng.normal(size=(4, 8))
            y = rng.integers(0, 2, 4).astype(np.float64)
            names = net.trainable_names()
            _, grads = backward(net, X, y)
            analytic = np.concatenate([grads[n].ravel() for n in names])

            def loss_at(flat):
                clone = small_net(seed=trial)
                set_flat_params(clone, flat, names)
                prob = forward(clone, X, mode="train")
                return bce_loss(prob, y)[0]

            numeric = central_diff_gradient(loss_at, get_flat_params(net, names))
            assert max_rel_error(analytic, numeric) < 1e-4

    def test_full_size_network_sampled_coordinates(self):
        rng = np.random.default_rng(1)
        spec = NetworkSpec()
        net = init_network(spec, 48, substream(7))
        X = rng.normal(size=(6, 48))
        y = rng.integers(0, 2, 6).astype(np.float64)
        names = net.trainable_names()
        _, grads = backward(net, X, y)
        flat = get_flat_params(net, names)
        analytic = np.concatenate([grads[n].ravel() for n in names])
        picks = rng.choice(flat.size, size=60, replace=False)

        def loss_at(flat_vec):
            clone = init_network(spec, 48, substream(7))
            set_flat_params(clone, flat_vec, names)
            prob = forward(clone, X, mode="train")
            return bce_loss(prob, y)[0]

        h = 1e-5
        for idx in picks:
            bump = np.zeros_like(flat)
            bump[idx] = h
            numeric = (loss_at(flat + bump) - loss_at(flat - bump)) / (2 * h)
            scale = max(1e-6, abs(analytic[idx]), abs(numeric))
            assert abs(analytic[idx] - numeric) / scale < 1e-4


class TestAdamStepApi:
    def test_dict_level_update(self):
        net = small_net()
        names = net.trainable_names()
        state = AdamState(net.params, names)
        grads = {n: np.ones_like(net.params[n]) for n in names}
        before = get_flat_params(net, names)
        adam_step(net.params, grads, state, TrainConfig(), 1)
        after = get_flat_params(net, names)
        np.testing.assert_allclose(before - after, 2e-4, rtol=1e-6)

    def test_shape_mismatch_rejected(self):
        net = small_net()
        names = net.trainable_names()
        state = AdamState(net.params, names)
        grads = {names[0]: np.zeros(9999)}
        with pytest.raises(DimensionError):
            adam_step(net.params, grads, state, TrainConfig(), 1)


class TestTrain:
    def test_loss_curve_length_and_determinism(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(24, 8))
        y = rng.integers(0, 2, 24)
        config = TrainConfig(epochs=5, batch_size=8, seed=123)
        net1, curve1 = train(SMALL_SPEC, (X, y), config)
        net2, curve2 = train(SMALL_SPEC, (X, y), config)
        assert curve1.shape == (5,)
        assert np.array_equal(curve1, curve2)
        for name in net1.params:
            assert np.array_equal(net1.params[name], net2.params[name])

    def test_losses_finite(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(20, 8))
        y = rng.integers(0, 2, 20)
        _, curve = train(SMALL_SPEC, (X, y), TrainConfig(epochs=8, seed=5))
        assert np.isfinite(curve).all()

    def test_separable_toy_problem(self):
        # two informative features with unit margin, padded to conv width
        rng = np.random.default_rng(4)
        n = 200
        y = rng.integers(0, 2, n)
        X = np.zeros((n, 4))
        X[:, 0] = rng.normal(size=n) * 0.3 + (2.0 * y - 1.0)
        X[:, 1] = rng.normal(size=n) * 0.3 - (2.0 * y - 1.0)
        X[:, 2] = rng.normal(size=n) * 0.1
        X[:, 3] = rng.normal(size=n) * 0.1
        config = TrainConfig(epochs=100, batch_size=20, seed=9)
        net, _ = train(SMALL_SPEC, (X, y), config)
        assert accuracy(predict(net, X), y) >= 0.99

    def test_empty_split_rejected(self):
        with pytest.raises(ConfigError):
            train(SMALL_SPEC, (np.zeros((0, 8)), np.zeros(0)), TrainConfig(epochs=1))

    def test_singleton_tail_batch_folded(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(9, 8))
        y = rng.integers(0, 2, 9)
        _, curve = train(
            SMALL_SPEC, (X, y), TrainConfig(epochs=2, batch_size=4, seed=1)
        )
        assert np.isfinite(curve).all()


class TestPredict:
    def test_threshold_tie_goes_to_one(self):
        net = small_net()
        for name, arr in net.params.items():
            if name.endswith(("_w", "_b", "_beta")):
                net.params[name] = np.zeros_like(arr)
        labels = predict(net, np.zeros((2, 8)))
        np.testing.assert_array_equal(labels, [1, 1])

    def test_accuracy_values(self):
        assert accuracy([0, 1], [0, 1]) == 1.0
        assert accuracy([1, 0], [0, 1]) == 0.0
        assert accuracy([1, 1, 0, 0], [1, 0, 0, 1]) == 0.5

    def test_batchsize_invariance_in_inference(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(10, 8))
        y = rng.integers(0, 2, 10)
        net, _ = train(SMALL_SPEC, (X, y), TrainConfig(epochs=3, seed=2))
        full = forward(net, X, mode="infer")
        rows = np.array([forward(net, X[i : i + 1], mode="infer")[0] for i in range(10)])
        np.testing.assert_allclose(full, rows, rtol=0, atol=1e-9)


class TestSerialization:
    def test_bit_exact_roundtrip(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(12, 8))
        y = rng.integers(0, 2, 12)
        net, _ = train(SMALL_SPEC, (X, y), TrainConfig(epochs=3, seed=3))
        clone = network_from_dict(network_to_dict(net))
        assert clone.input_dim == net.input_dim
        assert clone.spec == net.spec
        for name in net.params:
            assert np.array_equal(clone.params[name], net.params[name])
        np.testing.assert_array_equal(
            forward(clone, X, mode="infer"), forward(net, X, mode="infer")
        )

    def test_version_check(self):
        payload = network_to_dict(small_net())
        payload["format_version"] = 99
        with pytest.raises(ConfigError):
            network_from_dict(payload)


class TestSpecValidation:
    def test_dropout_count_must_match(self):
        with pytest.raises(ConfigError):
            NetworkSpec(dense_sizes=(8, 1), dropout_rates=(0.5, 0.5))

    def test_train_config_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(beta1=1.0)
