"""Cross-entropy method over real vectors with a fixed diagonal scale.

The sampling distribution is N(mean, sigma^2 I); only the mean is refit
from the elite each iteration, with sigma following an explicit geometric
schedule. Candidate i of iteration t draws from its own generator stream
seeded by (master_seed, t, i), so results are identical whether candidates
are evaluated serially or in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

FITNESS_EPS = 1e-12


class ObjectiveError(RuntimeError):
    """Raised when the objective returns a non-finite value."""


@dataclass(frozen=True)
class CemConfig:
    population_size: int = 100
    elite_fraction: float = 0.1
    smoothing: float = 0.7
    iterations: int = 100
    sigma0: float = 1.0
    sigma_decay: float = 1.0
    direction: str = "minimize"
    seed: int = 0
    weighting: str = "uniform"
    # optional per-iteration population sizes; overrides population_size
    population_schedule: tuple[int, ...] | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if not 0.0 < self.elite_fraction <= 1.0:
            raise ValueError("elite_fraction must be in (0, 1]")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ValueError("smoothing must be in [0, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be >= 0")
        if not 0.0 < self.sigma_decay <= 1.0:
            raise ValueError("sigma_decay must be in (0, 1]")
        if self.direction not in ("minimize", "maximize"):
            raise ValueError(f"direction must be minimize or maximize, got {self.direction!r}")
        if self.weighting not in ("uniform", "fitness"):
            raise ValueError(f"weighting must be uniform or fitness, got {self.weighting!r}")
        if self.population_schedule is not None:
            object.__setattr__(
                self, "population_schedule", tuple(int(n) for n in self.population_schedule)
            )

    def population_at(self, t: int) -> int:
        if self.population_schedule is not None:
            return self.population_schedule[min(t, len(self.population_schedule) - 1)]
        return self.population_size

    def sigma_at(self, t: int) -> float:
        return self.sigma0 * self.sigma_decay**t


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: np.ndarray
    score: float


@dataclass(frozen=True)
class IterationStats:
    mean: np.ndarray
    elite_mean_score: float
    best_score: float


@dataclass(frozen=True)
class CemResult:
    final_mean: np.ndarray
    best_candidate: np.ndarray
    best_score: float
    history: tuple[IterationStats, ...]


def candidate_rng(seed: int, iteration: int, index: int) -> np.random.Generator:
    """Dedicated generator stream for one candidate of one iteration."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(iteration), int(index)))
    return np.random.default_rng(ss)


def sample_population(
    mean: np.ndarray, sigma: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw n i.i.d. vectors from N(mean, sigma^2 I), shape (n, d)."""
    mean = np.asarray(mean, dtype=np.float64)
    return mean[None, :] + float(sigma) * rng.standard_normal((n, mean.shape[0]))


def elite_count(n: int, rho: float) -> int:
    # floor(rho * N) can be 0; at least one elite is always kept
    return max(1, math.floor(rho * n))


def select_elite(
    scored: list[ScoredCandidate], rho: float, direction: str = "minimize"
) -> list[ScoredCandidate]:
    """Best max(1, floor(rho*N)) candidates, stably ordered by score."""
    if not scored:
        raise ValueError("cannot select an elite from an empty population")
    m = elite_count(len(scored), rho)
    reverse = direction == "maximize"
    ordered = sorted(scored, key=lambda s: -s.score if reverse else s.score)
    return ordered[:m]


def fitness_weights(scores: np.ndarray, direction: str = "minimize") -> np.ndarray:
    """Inverted-shift elite weights: better scores get larger weight."""
    scores = np.asarray(scores, dtype=np.float64)
    if direction == "minimize":
        raw = np.max(scores) - scores + FITNESS_EPS
    else:
        raw = scores - np.min(scores) + FITNESS_EPS
    return raw / np.sum(raw)


def update_mean(
    old_mean: np.ndarray,
    elite: list[ScoredCandidate],
    alpha: float,
    weighting: str = "uniform",
    direction: str = "minimize",
) -> np.ndarray:
    """Smoothed mean update: alpha * elite target + (1 - alpha) * old mean."""
    if not elite:
        raise ValueError("elite must be nonempty")
    old_mean = np.asarray(old_mean, dtype=np.float64)
    candidates = np.stack([s.candidate for s in elite])
    if weighting == "fitness":
        w = fitness_weights(np.array([s.score for s in elite]), direction)
        target = w @ candidates
    else:
        target = np.mean(candidates, axis=0)
    return alpha * target + (1.0 - alpha) * old_mean


def _score_one(objective, mean, sigma, seed, t, i):
    x = sample_population(mean, sigma, 1, candidate_rng(seed, t, i))[0]
    return x, float(objective(x))


def optimize(objective, dim: int, cfg: CemConfig, initial_mean=None) -> CemResult:
    """Run T iterations of sample -> score -> select elite -> refit mean."""
    mean = (
        np.zeros(dim)
        if initial_mean is None
        else np.asarray(initial_mean, dtype=np.float64).copy()
    )
    if mean.shape != (dim,):
        raise ValueError(f"initial mean shape {mean.shape}, expected ({dim},)")

    sign = 1.0 if cfg.direction == "minimize" else -1.0
    best_candidate = None
    best_score = math.inf * sign
    history = []

    for t in range(cfg.iterations):
        sigma = cfg.sigma_at(t)
        n = cfg.population_at(t)
        if cfg.n_jobs != 1:
            pairs = Parallel(n_jobs=cfg.n_jobs)(
                delayed(_score_one)(objective, mean, sigma, cfg.seed, t, i) for i in range(n)
            )
        else:
            pairs = [_score_one(objective, mean, sigma, cfg.seed, t, i) for i in range(n)]

        scored = []
        for i, (x, s) in enumerate(pairs):
            if not math.isfinite(s):
                raise ObjectiveError(
                    f"non-finite objective value {s} at iteration {t}, candidate {i}"
                )
            scored.append(ScoredCandidate(x, s))
            if sign * s < sign * best_score:
                best_score = s
                best_candidate = x

        elite = select_elite(scored, cfg.elite_fraction, cfg.direction)
        mean = update_mean(mean, elite, cfg.smoothing, cfg.weighting, cfg.direction)
        elite_mean = float(np.mean([s.score for s in elite]))
        history.append(IterationStats(mean.copy(), elite_mean, best_score))

    return CemResult(mean, best_candidate, best_score, tuple(history))
