"""Mean-field Gaussian variational baseline.

Every weight gets a posterior N(mu, softplus(rho)^2); training minimizes
negative log-likelihood plus a weighted closed-form KL to a standard
normal prior, with gradients flowing through reparameterized samples
(w = mu + sigma * eps, eps held fixed within a step).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import ffnn
from .network import (
    LossKind,
    Topology,
    WeightSet,
    accuracy,
    forward_batch,
    loss as loss_fn,
    param_count,
    targets_for,
)
from .report import IterationRecord, TrainReport


@dataclass(frozen=True)
class BnnConfig:
    learning_rate: float = 0.05
    epochs: int = 100
    minibatch_size: int = 16
    # None -> 1 / (number of minibatches per epoch)
    kl_weight: float | None = None
    mc_samples: int = 1
    mc_eval: int = 10
    seed: int = 0
    rho_init: float = -3.0
    init_scale: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if self.kl_weight is not None and self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")
        if self.mc_samples < 1 or self.mc_eval < 1:
            raise ValueError("mc_samples and mc_eval must be >= 1")


@dataclass(frozen=True)
class VariationalParams:
    topo: Topology
    mu: tuple[np.ndarray, ...]
    rho: tuple[np.ndarray, ...]

    def __post_init__(self):
        mu = tuple(np.asarray(m, dtype=np.float64) for m in self.mu)
        rho = tuple(np.asarray(r, dtype=np.float64) for r in self.rho)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "rho", rho)
        for l in range(self.topo.n_layers):
            want = self.topo.weight_shape(l)
            if mu[l].shape != want or rho[l].shape != want:
                raise ValueError(f"layer {l + 1}: parameter shapes do not match {want}")

    def sigma(self) -> tuple[np.ndarray, ...]:
        return tuple(softplus(r) for r in self.rho)


def softplus(x):
    x = np.asarray(x, dtype=np.float64)
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def kl_gaussian(mu, sigma):
    """Closed-form KL( N(mu, sigma^2) || N(0, 1) ), elementwise-summed."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be > 0")
    return float(np.sum(-np.log(sigma) + (sigma**2 + mu**2) / 2.0 - 0.5))


def reparam_sample(vp: VariationalParams, rng: np.random.Generator):
    """Sample weights w = mu + sigma * eps; the noise is returned for reuse."""
    eps = tuple(rng.standard_normal(m.shape) for m in vp.mu)
    return weights_from_noise(vp, eps), eps


def weights_from_noise(vp: VariationalParams, eps) -> WeightSet:
    sig = vp.sigma()
    return WeightSet(tuple(vp.mu[l] + sig[l] * eps[l] for l in range(vp.topo.n_layers)))


def elbo_loss(nll: float, kl: float, kl_weight: float) -> float:
    return float(nll + kl_weight * kl)


def step_loss_and_grads(vp: VariationalParams, Xb, Yb, eps, kl_weight: float):
    """Loss and exact (mu, rho) gradients for one minibatch with fixed noise.

    Returns (loss, nll, kl, dmu, drho). NLL is the summed cross-entropy
    over the minibatch at the sampled weights.
    """
    topo = vp.topo
    ws = weights_from_noise(vp, eps)
    sig = vp.sigma()

    nll = 0.0
    dw = [np.zeros(topo.weight_shape(l)) for l in range(topo.n_layers)]
    for i in range(Xb.shape[0]):
        g = ffnn.backward(ws, topo, Xb[i], Yb[i], LossKind.CROSS_ENTROPY)
        for l in range(topo.n_layers):
            dw[l] += g.matrices[l]
    P = forward_batch(ws, topo, Xb)
    for i in range(Xb.shape[0]):
        nll += loss_fn(LossKind.CROSS_ENTROPY, Yb[i], P[i])

    kl = sum(kl_gaussian(vp.mu[l], sig[l]) for l in range(topo.n_layers))
    total = elbo_loss(nll, kl, kl_weight)

    dmu, drho = [], []
    for l in range(topo.n_layers):
        sp_grad = _sigmoid(vp.rho[l])  # dsigma/drho
        dmu.append(dw[l] + kl_weight * vp.mu[l])
        dkl_dsigma = sig[l] - 1.0 / sig[l]
        drho.append((dw[l] * eps[l] + kl_weight * dkl_dsigma) * sp_grad)
    return total, nll, kl, tuple(dmu), tuple(drho)


def init_params(cfg: BnnConfig, topo: Topology, rng: np.random.Generator) -> VariationalParams:
    mu = tuple(
        rng.uniform(-cfg.init_scale, cfg.init_scale, size=topo.weight_shape(l))
        for l in range(topo.n_layers)
    )
    rho = tuple(np.full(topo.weight_shape(l), cfg.rho_init) for l in range(topo.n_layers))
    return VariationalParams(topo, mu, rho)


def predict_batch(
    vp: VariationalParams, X: np.ndarray, mc_eval: int, rng: np.random.Generator
) -> np.ndarray:
    """Posterior-predictive probabilities: average over sampled weight sets."""
    outs = [forward_batch(reparam_sample(vp, rng)[0], vp.topo, X) for _ in range(mc_eval)]
    return np.mean(outs, axis=0)


def _acc(vp, cfg, data, rng) -> float | None:
    if data is None or data.X.shape[0] == 0:
        return None
    P = predict_batch(vp, data.X, cfg.mc_eval, rng)
    return accuracy(targets_for(vp.topo, data.Y), P)


def train_bnn(cfg: BnnConfig, topo: Topology, train_data, test_data=None) -> TrainReport:
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    vp = init_params(cfg, topo, rng)
    X = train_data.X
    Y = targets_for(topo, train_data.Y)
    n = X.shape[0]
    n_batches = max(1, math.ceil(n / cfg.minibatch_size))
    kl_weight = cfg.kl_weight if cfg.kl_weight is not None else 1.0 / n_batches
    records: list[IterationRecord] = []

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for b in range(n_batches):
            idx = order[b * cfg.minibatch_size : (b + 1) * cfg.minibatch_size]
            Xb, Yb = X[idx], Y[idx]
            dmu = [np.zeros(topo.weight_shape(l)) for l in range(topo.n_layers)]
            drho = [np.zeros(topo.weight_shape(l)) for l in range(topo.n_layers)]
            step_loss = 0.0
            for _ in range(cfg.mc_samples):
                _, eps = reparam_sample(vp, rng)
                total, _, _, gm, gr = step_loss_and_grads(vp, Xb, Yb, eps, kl_weight)
                step_loss += total
                for l in range(topo.n_layers):
                    dmu[l] += gm[l]
                    drho[l] += gr[l]
            scale = cfg.learning_rate / cfg.mc_samples
            vp = VariationalParams(
                topo,
                tuple(vp.mu[l] - scale * dmu[l] for l in range(topo.n_layers)),
                tuple(vp.rho[l] - scale * drho[l] for l in range(topo.n_layers)),
            )
            step_loss /= cfg.mc_samples
            if not math.isfinite(step_loss):
                raise ArithmeticError(f"training diverged at epoch {epoch}: loss {step_loss}")
            epoch_loss += step_loss
        records.append(
            IterationRecord(
                iteration=epoch,
                population_mean_error=None,
                elite_mean_error=None,
                best_error=epoch_loss / n_batches,
                train_accuracy=_acc(vp, cfg, train_data, rng),
                test_accuracy=_acc(vp, cfg, test_data, rng),
            )
        )

    return TrainReport(
        model="bnn",
        records=records,
        final_state=vp,
        best_weights=None,
        params_stored=param_count("bnn", topo),
        seed=cfg.seed,
        wall_time_seconds=time.perf_counter() - t0,
    )
