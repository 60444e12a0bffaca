"""Shared training-report containers emitted by all three trainers."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class IterationRecord:
    """One row of a training trajectory.

    Population/elite errors apply only to population-based training; the
    gradient baselines leave them as None and report their total error in
    best_error. Accuracies are None when the corresponding split is absent.
    """

    iteration: int
    population_mean_error: float | None
    elite_mean_error: float | None
    best_error: float
    train_accuracy: float | None
    test_accuracy: float | None


@dataclass
class TrainReport:
    model: str
    records: list[IterationRecord]
    final_state: object
    best_weights: object | None
    params_stored: int
    seed: int
    wall_time_seconds: float = 0.0

    @property
    def final_record(self) -> IterationRecord:
        return self.records[-1]
