"""Backpropagation-trained feed-forward baseline.

Full-batch gradient descent: per-example gradients are summed over the
dataset in fixed index order each epoch, then one step is taken. The
analytic gradients are exact and checked against finite differences in
the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .network import (
    CE_EPS,
    Activation,
    LossKind,
    ShapeError,
    Topology,
    WeightSet,
    accuracy,
    activation_derivative,
    apply_activation,
    forward_batch,
    param_count,
    targets_for,
    total_error,
    _augment,
)
from .report import IterationRecord, TrainReport


@dataclass(frozen=True)
class FfnnConfig:
    learning_rate: float = 0.1
    epochs: int = 100
    epsilon: float = 0.0  # early stop when total error falls to/below this
    loss_kind: LossKind = LossKind.MSE
    init_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be > 0")


@dataclass(frozen=True)
class GradientSet:
    matrices: tuple[np.ndarray, ...]


def _loss_grad(kind: LossKind, y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    """dL/dy_hat for the per-example loss."""
    k = y.shape[0]
    if kind is LossKind.MSE:
        return 2.0 * (y_hat - y) / k
    if kind is LossKind.MAE:
        return np.sign(y_hat - y) / k
    return -y / np.maximum(y_hat, CE_EPS)


def backward(
    ws: WeightSet, topo: Topology, x: np.ndarray, y: np.ndarray, loss_kind: LossKind
) -> GradientSet:
    """Exact gradient of the per-example loss with respect to every weight."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != (topo.input_dim,):
        raise ShapeError(f"input shape {x.shape}, expected ({topo.input_dim},)")
    if y.shape != (topo.output_dim,):
        raise ShapeError(f"target shape {y.shape}, expected ({topo.output_dim},)")
    ws.check_shapes(topo)
    loss_kind = LossKind(loss_kind)

    # forward, remembering augmented inputs, pre-activations and outputs
    inputs, zs, outs = [], [], []
    o = x
    for l in range(topo.n_layers):
        a = _augment(o, topo.use_bias)
        z = ws.matrices[l].T @ a
        o = apply_activation(topo.activations[l], z)
        inputs.append(a)
        zs.append(z)
        outs.append(o)

    last = topo.activations[-1]
    g = _loss_grad(loss_kind, y, outs[-1])
    if last is Activation.SOFTMAX:
        if loss_kind is LossKind.CROSS_ENTROPY:
            # softmax + cross-entropy collapse to the standard output delta
            delta = outs[-1] - y
        else:
            p = outs[-1]
            delta = p * (g - np.dot(p, g))
    else:
        delta = g * activation_derivative(last, zs[-1], outs[-1])

    grads: list[np.ndarray | None] = [None] * topo.n_layers
    for l in range(topo.n_layers - 1, -1, -1):
        grads[l] = np.outer(inputs[l], delta)
        if l > 0:
            W = ws.matrices[l]
            if topo.use_bias:
                W = W[:-1, :]  # bias row carries no upstream signal
            upstream = W @ delta
            delta = upstream * activation_derivative(
                topo.activations[l - 1], zs[l - 1], outs[l - 1]
            )
    return GradientSet(tuple(grads))


def sgd_step(ws: WeightSet, grads: GradientSet, learning_rate: float) -> WeightSet:
    if len(ws.matrices) != len(grads.matrices):
        raise ShapeError("gradient/weight layer count mismatch")
    return WeightSet(
        tuple(W - learning_rate * G for W, G in zip(ws.matrices, grads.matrices))
    )


def init_weights(topo: Topology, init_scale: float, rng: np.random.Generator) -> WeightSet:
    return WeightSet(
        tuple(
            rng.uniform(-init_scale, init_scale, size=topo.weight_shape(l))
            for l in range(topo.n_layers)
        )
    )


def _batch_gradients(ws, topo, X, Y, loss_kind) -> GradientSet:
    total = [np.zeros(topo.weight_shape(l)) for l in range(topo.n_layers)]
    for i in range(X.shape[0]):
        g = backward(ws, topo, X[i], Y[i], loss_kind)
        for l in range(topo.n_layers):
            total[l] += g.matrices[l]
    return GradientSet(tuple(total))


def _acc(ws, topo, data) -> float | None:
    if data is None or data.X.shape[0] == 0:
        return None
    P = forward_batch(ws, topo, data.X)
    return accuracy(targets_for(topo, data.Y), P)


def train_ffnn(cfg: FfnnConfig, topo: Topology, train_data, test_data=None) -> TrainReport:
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    ws = init_weights(topo, cfg.init_scale, rng)
    X = train_data.X
    Y = targets_for(topo, train_data.Y)
    records: list[IterationRecord] = []

    for epoch in range(1, cfg.epochs + 1):
        grads = _batch_gradients(ws, topo, X, Y, cfg.loss_kind)
        ws = sgd_step(ws, grads, cfg.learning_rate)
        err = total_error(ws, topo, train_data, cfg.loss_kind)
        if not math.isfinite(err):
            raise ArithmeticError(f"training diverged at epoch {epoch}: error {err}")
        records.append(
            IterationRecord(
                iteration=epoch,
                population_mean_error=None,
                elite_mean_error=None,
                best_error=err,
                train_accuracy=_acc(ws, topo, train_data),
                test_accuracy=_acc(ws, topo, test_data),
            )
        )
        if err <= cfg.epsilon:
            break

    return TrainReport(
        model="ffnn",
        records=records,
        final_state=ws,
        best_weights=ws,
        params_stored=param_count("ffnn", topo),
        seed=cfg.seed,
        wall_time_seconds=time.perf_counter() - t0,
    )
