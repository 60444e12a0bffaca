"""Gradient-free neural network training via cross-entropy optimization
of per-neuron weight distributions, with backprop and variational-Bayes
baselines and a benchmarking CLI."""

from .network import (
    Activation,
    LossKind,
    Topology,
    WeightSet,
    accuracy,
    forward,
    forward_batch,
    loss,
    normalize_layer_weights,
    param_count,
    total_error,
)
from .cem import CemConfig, CemResult, optimize
from .restricted import ColumnGaussians, RbnnConfig, predict, sample_weightset, train
from .ffnn import FfnnConfig, backward, sgd_step, train_ffnn
from .bnn import BnnConfig, VariationalParams, kl_gaussian, train_bnn
from .data import DataSchema, Dataset, load_csv, load_iris, preprocess, split
from .report import IterationRecord, TrainReport

__version__ = "0.1.0"
