"""Restricted-BNN trainer.

All incoming weights of one neuron share a single Gaussian: the stored
state is one scalar mean per non-input neuron plus one shared standard
deviation. Candidate weight sets are sampled from those column Gaussians,
scored by total dataset error, and the column means are refit to the
elite candidates with a smoothed update. No gradients anywhere.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import cem
from .cem import CemConfig, candidate_rng
from .network import (
    LossKind,
    Topology,
    WeightSet,
    accuracy,
    forward,
    forward_batch,
    param_count,
    targets_for,
    total_error,
)
from .report import IterationRecord, TrainReport

INFERENCE_MODES = ("best_candidate", "mean_weights", "ensemble")


@dataclass(frozen=True)
class ColumnGaussians:
    """Per-neuron weight distributions: one mean per column, shared sigma."""

    topo: Topology
    means: tuple[np.ndarray, ...]
    sigma: float
    clamp_weights: bool = True

    def __post_init__(self):
        means = tuple(np.asarray(m, dtype=np.float64) for m in self.means)
        object.__setattr__(self, "means", means)
        if len(means) != self.topo.n_layers:
            raise ValueError(f"expected {self.topo.n_layers} mean vectors, got {len(means)}")
        for l, m in enumerate(means):
            if m.shape != (self.topo.layer_sizes[l + 1],):
                raise ValueError(
                    f"layer {l + 1}: {m.shape[0]} means for {self.topo.layer_sizes[l + 1]} neurons"
                )
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @classmethod
    def zeros(cls, topo: Topology, sigma: float, clamp_weights: bool = True):
        means = tuple(np.zeros(n) for n in topo.layer_sizes[1:])
        return cls(topo, means, sigma, clamp_weights)


@dataclass(frozen=True)
class RbnnConfig:
    cem: CemConfig = field(default_factory=lambda: CemConfig(sigma0=0.5))
    loss_kind: LossKind = LossKind.MSE
    inference_mode: str = "best_candidate"
    ensemble_samples: int = 10

    def __post_init__(self):
        object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))
        if self.inference_mode not in INFERENCE_MODES:
            raise ValueError(f"inference_mode must be one of {INFERENCE_MODES}")
        if self.ensemble_samples < 1:
            raise ValueError("ensemble_samples must be >= 1")


def sample_weightset(params: ColumnGaussians, rng: np.random.Generator) -> WeightSet:
    """Draw one full weight set: column k of layer l ~ N(mu_l[k], sigma^2)."""
    mats = []
    for l, mu in enumerate(params.means):
        rows, cols = params.topo.weight_shape(l)
        W = mu[None, :] + params.sigma * rng.standard_normal((rows, cols))
        if params.clamp_weights:
            W = np.clip(W, -1.0, 1.0)
        mats.append(W)
    return WeightSet(tuple(mats))


def _sample_and_score(params, data, loss_kind, seed, iteration, i):
    ws = sample_weightset(params, candidate_rng(seed, iteration, i))
    return ws, total_error(ws, params.topo, data, loss_kind)


def evaluate_candidates(
    params: ColumnGaussians,
    n: int,
    data,
    loss_kind: LossKind,
    seed: int,
    iteration: int = 0,
    n_jobs: int = 1,
) -> list[tuple[WeightSet, float]]:
    """Sample n weight sets and score each by total error on the full dataset."""
    if n_jobs != 1:
        pairs = Parallel(n_jobs=n_jobs)(
            delayed(_sample_and_score)(params, data, loss_kind, seed, iteration, i)
            for i in range(n)
        )
    else:
        pairs = [_sample_and_score(params, data, loss_kind, seed, iteration, i) for i in range(n)]
    for i, (_, score) in enumerate(pairs):
        if not math.isfinite(score):
            raise cem.ObjectiveError(
                f"non-finite error {score} at iteration {iteration}, candidate {i}"
            )
    return list(pairs)


def fit_elite(
    params: ColumnGaussians,
    elite: list[tuple[WeightSet, float]],
    alpha: float,
    weighting: str = "uniform",
) -> ColumnGaussians:
    """Refit column means to the elite weight sets with smoothing alpha.

    The per-member target for column k is the average of that column's
    entries (over incoming indices); member weights are uniform or the
    inverted-shift fitness weights from the CEM module.
    """
    if not elite:
        raise ValueError("elite must be nonempty")
    scores = np.array([s for _, s in elite])
    if weighting == "fitness":
        w = cem.fitness_weights(scores)
    else:
        w = np.full(len(elite), 1.0 / len(elite))

    new_means = []
    for l, old_mu in enumerate(params.means):
        # column means per elite member, shape (members, N_l)
        col_means = np.stack([np.mean(ws.matrices[l], axis=0) for ws, _ in elite])
        target = w @ col_means
        mu = alpha * target + (1.0 - alpha) * old_mu
        if params.clamp_weights:
            mu = np.clip(mu, -1.0, 1.0)
        new_means.append(mu)
    return replace(params, means=tuple(new_means))


def mean_weightset(params: ColumnGaussians) -> WeightSet:
    """Deterministic weight set with every entry of column k set to mu_l[k]."""
    degenerate = replace(params, sigma=0.0)
    return sample_weightset(degenerate, np.random.default_rng(0))


def predict(
    params: ColumnGaussians,
    x: np.ndarray,
    mode: str = "best_candidate",
    best_weights: WeightSet | None = None,
    ensemble_samples: int = 10,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Probability vector for one input under the chosen inference mode."""
    if mode == "best_candidate":
        if best_weights is None:
            raise ValueError("best_candidate inference requires a retained weight set")
        return forward(best_weights, params.topo, x)
    if mode == "mean_weights":
        return forward(mean_weightset(params), params.topo, x)
    if mode == "ensemble":
        if rng is None:
            rng = np.random.default_rng(0)
        outs = [
            forward(sample_weightset(params, rng), params.topo, x)
            for _ in range(ensemble_samples)
        ]
        return np.mean(outs, axis=0)
    raise ValueError(f"unknown inference mode {mode!r}")


def _inference_weightset(
    params: ColumnGaussians,
    mode: str,
    best_weights: WeightSet | None,
) -> WeightSet | None:
    if mode == "best_candidate":
        return best_weights
    if mode == "mean_weights":
        return mean_weightset(params)
    return None


def _accuracy_of(params, cfg, best_weights, data, iteration) -> float | None:
    if data is None or data.X.shape[0] == 0:
        return None
    ws = _inference_weightset(params, cfg.inference_mode, best_weights)
    if ws is not None:
        P = forward_batch(ws, params.topo, data.X)
    else:
        # ensemble: average forwards over freshly sampled weight sets,
        # seeded deterministically per iteration
        rng = candidate_rng(cfg.cem.seed ^ 0x5EED, iteration, 0)
        P = np.mean(
            [
                forward_batch(sample_weightset(params, rng), params.topo, data.X)
                for _ in range(cfg.ensemble_samples)
            ],
            axis=0,
        )
    return accuracy(targets_for(params.topo, data.Y), P)


def train(cfg: RbnnConfig, topo: Topology, train_data, test_data=None) -> TrainReport:
    """Full CEM training loop over column-Gaussian weight distributions."""
    t0 = time.perf_counter()
    c = cfg.cem
    params = ColumnGaussians.zeros(topo, sigma=c.sigma0)
    best_ws: WeightSet | None = None
    best_score = math.inf
    records: list[IterationRecord] = []

    for t in range(c.iterations):
        params = replace(params, sigma=c.sigma_at(t))
        pairs = evaluate_candidates(
            params, c.population_at(t), train_data, cfg.loss_kind, c.seed, t, c.n_jobs
        )
        for ws, score in pairs:
            if score < best_score:
                best_score = score
                best_ws = ws
        keep = cem.elite_count(len(pairs), c.elite_fraction)
        elite = sorted(pairs, key=lambda p: p[1])[:keep]
        params = fit_elite(params, elite, c.smoothing, c.weighting)

        records.append(
            IterationRecord(
                iteration=t + 1,
                population_mean_error=float(np.mean([s for _, s in pairs])),
                elite_mean_error=float(np.mean([s for _, s in elite])),
                best_error=best_score,
                train_accuracy=_accuracy_of(params, cfg, best_ws, train_data, t),
                test_accuracy=_accuracy_of(params, cfg, best_ws, test_data, t),
            )
        )

    return TrainReport(
        model="rbnn",
        records=records,
        final_state=params,
        best_weights=best_ws,
        params_stored=param_count("rbnn", topo),
        seed=c.seed,
        wall_time_seconds=time.perf_counter() - t0,
    )
