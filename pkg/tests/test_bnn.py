import math

import numpy as np
import pytest

from rbnn.bnn import (
    BnnConfig,
    VariationalParams,
    elbo_loss,
    init_params,
    kl_gaussian,
    reparam_sample,
    softplus,
    step_loss_and_grads,
    train_bnn,
    weights_from_noise,
)
from rbnn.network import Activation, Topology, param_count


class TestKlGaussian:
    def test_standard_normal_is_zero(self):
        assert kl_gaussian(0.0, 1.0) == 0.0

    def test_mean_shift_only(self):
        assert kl_gaussian(1.0, 1.0) == pytest.approx(0.5)

    def test_closed_form_value(self):
        assert kl_gaussian(0.0, 0.5) == pytest.approx(math.log(2) + 0.125 - 0.5, abs=1e-12)
        assert kl_gaussian(0.0, 0.5) == pytest.approx(0.3181472, abs=1e-7)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            kl_gaussian(0.0, 0.0)

    def test_nonnegative_and_zero_iff_standard(self):
        grid = np.linspace(-2, 2, 9)
        sigmas = np.linspace(0.1, 3, 9)
        for mu in grid:
            for s in sigmas:
                v = kl_gaussian(mu, s)
                assert v >= 0.0
                if mu == 0.0 and s == 1.0:
                    assert v == 0.0
                else:
                    assert v > 0.0


class TestReparam:
    def _vp(self):
        topo = Topology((3, 4, 2), (Activation.SIGMOID, Activation.SOFTMAX))
        rng = np.random.default_rng(0)
        return init_params(BnnConfig(seed=0), topo, rng)

    def test_zero_noise_gives_means(self):
        vp = self._vp()
        eps = tuple(np.zeros_like(m) for m in vp.mu)
        ws = weights_from_noise(vp, eps)
        for W, mu in zip(ws.matrices, vp.mu):
            np.testing.assert_array_equal(W, mu)

    def test_softplus_of_zero(self):
        topo = Topology((2, 2), (Activation.SIGMOID,))
        vp = VariationalParams(topo, (np.zeros((2, 2)),), (np.zeros((2, 2)),))
        np.testing.assert_allclose(vp.sigma()[0], math.log(2.0), atol=1e-12)

    def test_shapes_match_topology(self):
        vp = self._vp()
        ws, eps = reparam_sample(vp, np.random.default_rng(1))
        assert ws.matrices[0].shape == (3, 4)
        assert ws.matrices[1].shape == (4, 2)
        assert eps[0].shape == (3, 4)


class TestElboLoss:
    def test_zero_weight_is_plain_nll(self):
        assert elbo_loss(1.3, 99.0, 0.0) == 1.3

    def test_arithmetic(self):
        assert elbo_loss(1.0, 2.0, 0.5) == pytest.approx(2.0)

    def test_monotone_in_kl(self):
        assert elbo_loss(1.0, 3.0, 0.5) >= elbo_loss(1.0, 2.0, 0.5)


class TestStepGradients:
    def test_matches_finite_differences_with_fixed_noise(self):
        topo = Topology((3, 4, 2), (Activation.SIGMOID, Activation.SOFTMAX))
        rng = np.random.default_rng(3)
        vp = init_params(BnnConfig(seed=0), topo, rng)
        Xb = rng.normal(size=(5, 3))
        Yb = np.zeros((5, 2))
        Yb[np.arange(5), rng.integers(0, 2, 5)] = 1.0
        eps = tuple(rng.standard_normal(m.shape) for m in vp.mu)
        kl_weight = 0.3

        _, _, _, dmu, drho = step_loss_and_grads(vp, Xb, Yb, eps, kl_weight)

        h = 1e-5
        worst = 0.0
        for l in range(topo.n_layers):
            for idx in np.ndindex(vp.mu[l].shape):
                for which, analytic in (("mu", dmu), ("rho", drho)):
                    def loss_at(delta):
                        mu = [m.copy() for m in vp.mu]
                        rho = [r.copy() for r in vp.rho]
                        (mu if which == "mu" else rho)[l][idx] += delta
                        vp2 = VariationalParams(topo, tuple(mu), tuple(rho))
                        return step_loss_and_grads(vp2, Xb, Yb, eps, kl_weight)[0]

                    numeric = (loss_at(h) - loss_at(-h)) / (2 * h)
                    a = analytic[l][idx]
                    denom = max(abs(a), abs(numeric), 1e-8)
                    worst = max(worst, abs(a - numeric) / denom)
        assert worst < 1e-4


class TestTrainBnn:
    def test_fixed_seed_reproducible(self, blob_dataset, blob_topo):
        cfg = BnnConfig(learning_rate=0.05, epochs=10, minibatch_size=8, seed=5)
        a = train_bnn(cfg, blob_topo, blob_dataset)
        b = train_bnn(cfg, blob_topo, blob_dataset)
        assert a.records == b.records

    def test_blob_elbo_improves(self, blob_dataset, blob_topo):
        cfg = BnnConfig(learning_rate=0.05, epochs=100, minibatch_size=8, seed=0)
        report = train_bnn(cfg, blob_topo, blob_dataset)
        assert report.records[-1].best_error < report.records[0].best_error

    def test_param_count_is_double_ffnn(self, blob_dataset, blob_topo):
        cfg = BnnConfig(epochs=2, seed=0)
        report = train_bnn(cfg, blob_topo, blob_dataset)
        assert report.params_stored == 2 * param_count("ffnn", blob_topo)
        stored = sum(m.size for m in report.final_state.mu) + sum(
            r.size for r in report.final_state.rho
        )
        assert stored == report.params_stored

    def test_softplus_positive(self):
        assert np.all(softplus(np.array([-50.0, 0.0, 50.0])) > 0.0)
