import numpy as np
import pytest

from rbnn.data import Dataset
from rbnn.ffnn import FfnnConfig, GradientSet, backward, init_weights, sgd_step, train_ffnn
from rbnn.network import (
    Activation,
    LossKind,
    Topology,
    WeightSet,
    forward,
    loss,
)


from oracles import finite_difference_grads, max_rel_error


class TestBackward:
    def test_single_linear_neuron_scalar_calculus(self):
        # d/dw (y - w*x)^2 at w=0, x=1, y=1 is -2
        topo = Topology((1, 1), (Activation.IDENTITY,))
        ws = WeightSet((np.array([[0.0]]),))
        g = backward(ws, topo, np.array([1.0]), np.array([1.0]), LossKind.MSE)
        assert g.matrices[0][0, 0] == pytest.approx(-2.0)

    def test_zero_gradient_at_exact_fit(self):
        topo = Topology((2, 1), (Activation.IDENTITY,))
        ws = WeightSet((np.array([[0.5], [0.5]]),))
        x = np.array([1.0, 1.0])
        g = backward(ws, topo, x, forward(ws, topo, x), LossKind.MSE)
        np.testing.assert_allclose(g.matrices[0], 0.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_differences_sigmoid_net(self, seed):
        topo = Topology((3, 4, 2), (Activation.SIGMOID, Activation.SIGMOID))
        rng = np.random.default_rng(seed)
        ws = WeightSet(tuple(rng.normal(size=topo.weight_shape(l)) for l in range(2)))
        x = rng.normal(size=3)
        y = rng.uniform(0, 1, size=2)
        analytic = backward(ws, topo, x, y, LossKind.MSE)
        numeric = finite_difference_grads(ws, topo, x, y, LossKind.MSE)
        assert max_rel_error(analytic.matrices, numeric) < 1e-4

    @pytest.mark.parametrize("kind", [LossKind.MSE, LossKind.CROSS_ENTROPY])
    def test_softmax_head_finite_differences(self, kind):
        topo = Topology((3, 4, 3), (Activation.TANH, Activation.SOFTMAX))
        rng = np.random.default_rng(2)
        ws = WeightSet(tuple(rng.normal(size=topo.weight_shape(l)) for l in range(2)))
        x = rng.normal(size=3)
        y = np.array([0.0, 1.0, 0.0])
        analytic = backward(ws, topo, x, y, kind)
        numeric = finite_difference_grads(ws, topo, x, y, kind)
        assert max_rel_error(analytic.matrices, numeric) < 1e-4

    def test_bias_and_relu_finite_differences(self):
        topo = Topology((2, 3, 2), (Activation.RELU, Activation.SIGMOID), use_bias=True)
        rng = np.random.default_rng(6)
        ws = WeightSet(tuple(rng.normal(size=topo.weight_shape(l)) for l in range(2)))
        x = rng.normal(size=2)
        y = rng.uniform(0, 1, size=2)
        analytic = backward(ws, topo, x, y, LossKind.MSE)
        numeric = finite_difference_grads(ws, topo, x, y, LossKind.MSE)
        assert max_rel_error(analytic.matrices, numeric) < 1e-4


class TestSgdStep:
    def test_zero_learning_rate(self):
        ws = WeightSet((np.array([[1.0]]),))
        out = sgd_step(ws, GradientSet((np.array([[5.0]]),)), 0.0)
        np.testing.assert_array_equal(out.matrices[0], [[1.0]])

    def test_zero_gradient(self):
        ws = WeightSet((np.array([[1.0]]),))
        out = sgd_step(ws, GradientSet((np.array([[0.0]]),)), 0.1)
        np.testing.assert_array_equal(out.matrices[0], [[1.0]])

    def test_arithmetic(self):
        ws = WeightSet((np.array([[1.0]]),))
        out = sgd_step(ws, GradientSet((np.array([[0.5]]),)), 0.1)
        assert out.matrices[0][0, 0] == pytest.approx(0.95)

    @pytest.mark.parametrize("seed", range(10))
    def test_small_step_decreases_loss(self, seed):
        topo = Topology((3, 4, 2), (Activation.SIGMOID, Activation.SIGMOID))
        rng = np.random.default_rng(100 + seed)
        ws = WeightSet(tuple(rng.normal(size=topo.weight_shape(l)) for l in range(2)))
        x = rng.normal(size=3)
        y = rng.uniform(0, 1, size=2)
        g = backward(ws, topo, x, y, LossKind.MSE)
        if all(np.allclose(m, 0) for m in g.matrices):
            pytest.skip("zero gradient")
        before = loss(LossKind.MSE, y, forward(ws, topo, x))
        after = loss(LossKind.MSE, y, forward(sgd_step(ws, g, 1e-4), topo, x))
        assert after < before


class TestTrainFfnn:
    def test_fixed_seed_reproducible(self, blob_dataset, blob_topo):
        cfg = FfnnConfig(learning_rate=0.01, epochs=20, loss_kind=LossKind.MSE, seed=7)
        a = train_ffnn(cfg, blob_topo, blob_dataset)
        b = train_ffnn(cfg, blob_topo, blob_dataset)
        assert a.records == b.records
        for ma, mb in zip(a.final_state.matrices, b.final_state.matrices):
            np.testing.assert_array_equal(ma, mb)

    def test_blob_error_decreases(self, blob_dataset, blob_topo):
        cfg = FfnnConfig(learning_rate=0.01, epochs=100, loss_kind=LossKind.CROSS_ENTROPY, seed=0)
        report = train_ffnn(cfg, blob_topo, blob_dataset)
        assert report.records[-1].best_error < report.records[0].best_error
        assert report.records[-1].train_accuracy == 1.0

    def test_early_stop_record_count(self, blob_dataset, blob_topo):
        # generous epsilon stops after the very first epoch
        cfg = FfnnConfig(learning_rate=0.01, epochs=50, epsilon=1e6, seed=0)
        report = train_ffnn(cfg, blob_topo, blob_dataset)
        assert len(report.records) == 1
        assert report.records[0].best_error <= 1e6

    def test_init_weights_within_scale(self, blob_topo):
        ws = init_weights(blob_topo, 0.5, np.random.default_rng(0))
        for m in ws.matrices:
            assert np.all(np.abs(m) <= 0.5)
