"""Dense feed-forward network core: topology, forward pass, losses, metrics.

All arithmetic is float64. Everything here is a pure function of its
inputs; weight containers are plain numpy arrays and never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

CE_EPS = 1e-12


class ShapeError(ValueError):
    """Raised when matrix/vector shapes are inconsistent with a topology."""


class NumericError(ValueError):
    """Raised on non-finite values where finite ones are required."""


class Activation(str, Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"
    IDENTITY = "identity"
    SOFTMAX = "softmax"


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def apply_activation(act: Activation, z: np.ndarray) -> np.ndarray:
    if act is Activation.SIGMOID:
        return sigmoid(z)
    if act is Activation.TANH:
        return np.tanh(z)
    if act is Activation.RELU:
        return np.maximum(z, 0.0)
    if act is Activation.IDENTITY:
        return np.asarray(z, dtype=np.float64)
    if act is Activation.SOFTMAX:
        return softmax(z)
    raise ValueError(f"unknown activation {act!r}")


def activation_derivative(act: Activation, z: np.ndarray, o: np.ndarray) -> np.ndarray:
    """Elementwise derivative dphi/dz given pre-activation z and output o.

    Softmax is excluded (its Jacobian is not elementwise); callers handle it
    separately. ReLU uses subgradient 0 at z = 0.
    """
    if act is Activation.SIGMOID:
        return o * (1.0 - o)
    if act is Activation.TANH:
        return 1.0 - o * o
    if act is Activation.RELU:
        return (z > 0).astype(np.float64)
    if act is Activation.IDENTITY:
        return np.ones_like(z)
    raise ValueError(f"no elementwise derivative for {act!r}")


@dataclass(frozen=True)
class Topology:
    """Layer sizes and activations of a dense network.

    layer_sizes[0] is the input width; entries 1..L are neuron counts.
    activations has one entry per non-input layer. When use_bias is set,
    each layer input gets a constant-1 entry appended and every weight
    matrix gains one input row.
    """

    layer_sizes: tuple[int, ...]
    activations: tuple[Activation, ...]
    use_bias: bool = False

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        acts = tuple(Activation(a) for a in self.activations)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "activations", acts)
        if len(sizes) < 2:
            raise ShapeError("topology needs an input layer and at least one layer")
        if any(s < 1 for s in sizes):
            raise ShapeError(f"layer sizes must be >= 1, got {sizes}")
        if len(acts) != len(sizes) - 1:
            raise ShapeError(
                f"need {len(sizes) - 1} activations for {len(sizes)} layer sizes, got {len(acts)}"
            )
        if any(a is Activation.SOFTMAX for a in acts[:-1]):
            raise ShapeError("softmax is only permitted in the final layer")

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def weight_shape(self, layer: int) -> tuple[int, int]:
        """Shape of the weight matrix feeding non-input layer `layer` (0-based)."""
        rows = self.layer_sizes[layer] + (1 if self.use_bias else 0)
        return rows, self.layer_sizes[layer + 1]


@dataclass(frozen=True)
class WeightSet:
    """One concrete realization of all layer weight matrices."""

    matrices: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=np.float64) for m in self.matrices)
        object.__setattr__(self, "matrices", mats)
        for i, m in enumerate(mats):
            if not np.all(np.isfinite(m)):
                raise NumericError(f"non-finite entry in weight matrix {i}")

    def check_shapes(self, topo: Topology) -> None:
        if len(self.matrices) != topo.n_layers:
            raise ShapeError(
                f"expected {topo.n_layers} weight matrices, got {len(self.matrices)}"
            )
        for l, m in enumerate(self.matrices):
            want = topo.weight_shape(l)
            if m.shape != want:
                raise ShapeError(f"layer {l + 1}: weight shape {m.shape}, expected {want}")


class LossKind(str, Enum):
    MSE = "mse"
    CROSS_ENTROPY = "cross_entropy"
    MAE = "mae"


def _augment(o: np.ndarray, use_bias: bool) -> np.ndarray:
    if not use_bias:
        return o
    if o.ndim == 1:
        return np.concatenate([o, [1.0]])
    return np.concatenate([o, np.ones((o.shape[0], 1))], axis=1)


def forward(ws: WeightSet, topo: Topology, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (topo.input_dim,):
        raise ShapeError(f"input shape {x.shape}, expected ({topo.input_dim},)")
    ws.check_shapes(topo)
    o = x
    for l in range(topo.n_layers):
        z = ws.matrices[l].T @ _augment(o, topo.use_bias)
        o = apply_activation(topo.activations[l], z)
    return o


def forward_batch(ws: WeightSet, topo: Topology, X: np.ndarray) -> np.ndarray:
    """Row-wise forward pass: row i of the result equals forward(ws, topo, X[i])."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != topo.input_dim:
        raise ShapeError(f"batch shape {X.shape}, expected (n, {topo.input_dim})")
    ws.check_shapes(topo)
    if X.shape[0] == 0:
        return np.empty((0, topo.output_dim))
    O = X
    for l in range(topo.n_layers):
        Z = _augment(O, topo.use_bias) @ ws.matrices[l]
        O = apply_activation(topo.activations[l], Z)
    return O


def normalize_layer_weights(W: np.ndarray) -> np.ndarray:
    """Rescale a layer matrix by its max absolute entry so weights lie in [-1, 1].

    An all-zero matrix is returned unchanged.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.size == 0:
        raise ShapeError("empty weight matrix")
    if not np.all(np.isfinite(W)):
        raise NumericError("non-finite entry in weight matrix")
    w = np.max(np.abs(W))
    if w == 0.0:
        return W.copy()
    return W / w


def loss(kind: LossKind, y: np.ndarray, y_hat: np.ndarray) -> float:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ShapeError(f"target shape {y.shape} != prediction shape {y_hat.shape}")
    kind = LossKind(kind)
    if kind is LossKind.MSE:
        return float(np.mean((y - y_hat) ** 2))
    if kind is LossKind.MAE:
        return float(np.mean(np.abs(y - y_hat)))
    return float(-np.sum(y * np.log(np.maximum(y_hat, CE_EPS))))


def total_error(ws: WeightSet, topo: Topology, data, kind: LossKind) -> float:
    """Sum of the per-row loss over an entire dataset.

    `data` is any object with X (n x d features) and Y (n x c one-hot labels);
    when the network has a single output the positive-class column Y[:, 1] is
    used as the scalar target.
    """
    P = forward_batch(ws, topo, data.X)
    Y = targets_for(topo, data.Y)
    if Y.shape != P.shape:
        raise ShapeError(f"labels shape {Y.shape} != predictions shape {P.shape}")
    kind = LossKind(kind)
    if kind is LossKind.MSE:
        per_row = np.mean((Y - P) ** 2, axis=1)
    elif kind is LossKind.MAE:
        per_row = np.mean(np.abs(Y - P), axis=1)
    else:
        per_row = -np.sum(Y * np.log(np.maximum(P, CE_EPS)), axis=1)
    return float(np.sum(per_row))


def targets_for(topo: Topology, Y: np.ndarray) -> np.ndarray:
    """Adapt an n x c one-hot label matrix to the network's output width.

    A single-output (sigmoid) head trains against the class-1 indicator.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if topo.output_dim == 1 and Y.ndim == 2 and Y.shape[1] == 2:
        return Y[:, [1]]
    return Y


def accuracy(Y: np.ndarray, P: np.ndarray) -> float:
    """Fraction of rows whose predicted class matches the label.

    Ties in P break toward the lowest index. Single-column matrices are
    treated as positive-class probabilities and thresholded at 0.5.
    """
    Y = _to_two_columns(np.asarray(Y, dtype=np.float64))
    P = _to_two_columns(np.asarray(P, dtype=np.float64))
    if Y.shape != P.shape:
        raise ShapeError(f"labels shape {Y.shape} != predictions shape {P.shape}")
    if Y.shape[0] == 0:
        raise ShapeError("accuracy of an empty prediction set is undefined")
    return float(np.mean(np.argmax(P, axis=1) == np.argmax(Y, axis=1)))


def _to_two_columns(M: np.ndarray) -> np.ndarray:
    if M.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {M.shape}")
    if M.shape[1] == 1:
        pos = (M[:, 0] >= 0.5).astype(np.float64)
        return np.stack([1.0 - pos, pos], axis=1)
    return M


def param_count(model_kind: str, topo: Topology) -> int:
    """Stored-parameter count per model family.

    rbnn: one mean per non-input neuron (the shared sigma is not counted);
    ffnn: every weight matrix entry; bnn: a mean and a deviation per weight.
    """
    kind = str(model_kind).lower()
    if kind == "rbnn":
        return int(sum(topo.layer_sizes[1:]))
    ffnn = sum(r * c for r, c in (topo.weight_shape(l) for l in range(topo.n_layers)))
    if kind == "ffnn":
        return int(ffnn)
    if kind == "bnn":
        return int(2 * ffnn)
    raise ValueError(f"unknown model kind {model_kind!r}")
