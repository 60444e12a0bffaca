"""CSV ingestion, cleaning, one-hot encoding, normalization and splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

MISSING_TOKENS = {"", "NA", "nan", "?"}


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class DataSchema:
    feature_columns: tuple = ()  # names or indices; empty -> all non-label columns
    label_column: str | int = -1
    missing_policy: str = "drop_rows"  # or "drop_columns"
    drop_non_numeric: bool = True
    normalize: str = "zscore"  # or "none"

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        if self.missing_policy not in ("drop_rows", "drop_columns"):
            raise DataError(f"missing_policy must be drop_rows or drop_columns, got {self.missing_policy!r}")
        if self.normalize not in ("none", "zscore"):
            raise DataError(f"normalize must be none or zscore, got {self.normalize!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "DataSchema":
        return cls(
            feature_columns=tuple(d.get("feature_columns", ())),
            label_column=d.get("label_column", -1),
            missing_policy=d.get("missing_policy", "drop_rows"),
            drop_non_numeric=bool(d.get("drop_non_numeric", True)),
            normalize=d.get("normalize", "zscore"),
        )


@dataclass(frozen=True)
class RawTable:
    header: tuple[str, ...]
    # cell is float, str (non-numeric) or None (missing)
    rows: tuple[tuple, ...]


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    class_names: tuple[str, ...]


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...]
    normalization_stats: NormStats | None = None

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=np.float64))
        object.__setattr__(self, "Y", np.asarray(self.Y, dtype=np.float64))
        if self.X.ndim != 2 or self.Y.ndim != 2:
            raise DataError("X and Y must be 2-d")
        if self.X.shape[0] != self.Y.shape[0]:
            raise DataError("X and Y row counts differ")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            self.X[idx], self.Y[idx], self.class_names, self.feature_names,
            self.normalization_stats,
        )


def _parse_cell(cell: str):
    cell = cell.strip()
    if cell in MISSING_TOKENS:
        return None
    try:
        return float(cell)
    except ValueError:
        return cell


def load_csv(path, schema: DataSchema | None = None) -> RawTable:
    """Parse a headered CSV; empty cells and NA/nan/? tokens become missing."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row")
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise DataError(f"{path}: line {lineno} has {len(row)} cells, expected {width}")
            rows.append(tuple(_parse_cell(c) for c in row))
    return RawTable(tuple(h.strip() for h in header), tuple(rows))


def _resolve(col, header) -> int:
    if isinstance(col, int):
        return col % len(header)
    try:
        return header.index(col)
    except ValueError:
        raise DataError(f"column {col!r} not in header {list(header)}")


def preprocess(raw: RawTable, schema: DataSchema, fit_stats: NormStats | None = None) -> Dataset:
    """Clean a raw table into a numeric dataset with one-hot labels.

    Classes are ordered by first appearance. When fit_stats is given the
    normalization and class list are taken from it (test-set transform);
    otherwise statistics are fitted on this data.
    """
    label_idx = _resolve(schema.label_column, raw.header)
    if schema.feature_columns:
        feat_idx = [_resolve(c, raw.header) for c in schema.feature_columns]
    else:
        feat_idx = [i for i in range(len(raw.header)) if i != label_idx]
    if label_idx in feat_idx:
        raise DataError("label_column must not be among feature_columns")

    rows = [r for r in raw.rows if r[label_idx] is not None]

    if schema.drop_non_numeric:
        feat_idx = [
            j for j in feat_idx
            if not any(isinstance(r[j], str) for r in rows)
        ]
    if schema.missing_policy == "drop_columns":
        feat_idx = [j for j in feat_idx if all(r[j] is not None for r in rows)]
    else:
        rows = [r for r in rows if all(r[j] is not None for j in feat_idx)]

    if not rows:
        raise DataError("no rows left after missing-value filtering")
    if not feat_idx:
        raise DataError("no feature columns left after filtering")
    for j in feat_idx:
        for r in rows:
            if isinstance(r[j], str):
                raise DataError(f"non-numeric value {r[j]!r} in feature column {raw.header[j]!r}")

    labels = [r[label_idx] for r in rows]
    labels = [str(int(v)) if isinstance(v, float) and v == int(v) else str(v) for v in labels]
    if fit_stats is not None:
        class_names = tuple(fit_stats.class_names)
        unknown = set(labels) - set(class_names)
        if unknown:
            raise DataError(f"unknown label classes {sorted(unknown)}")
    else:
        class_names = tuple(dict.fromkeys(labels))
    class_to_idx = {c: i for i, c in enumerate(class_names)}

    X = np.array([[r[j] for j in feat_idx] for r in rows], dtype=np.float64)
    Y = np.zeros((len(rows), len(class_names)))
    for i, lab in enumerate(labels):
        Y[i, class_to_idx[lab]] = 1.0

    stats = None
    if schema.normalize == "zscore":
        if fit_stats is not None:
            stats = fit_stats
        else:
            stats = fit_zscore(X, class_names)
        X = apply_zscore(X, stats)

    return Dataset(X, Y, class_names, tuple(raw.header[j] for j in feat_idx), stats)


def fit_zscore(X: np.ndarray, class_names=()) -> NormStats:
    mean = np.mean(X, axis=0)
    std = np.std(X, axis=0)
    std = np.where(std == 0.0, 1.0, std)  # constant columns pass through
    return NormStats(mean, std, tuple(class_names))


def apply_zscore(X: np.ndarray, stats: NormStats) -> np.ndarray:
    return (X - stats.mean) / stats.std


def normalize_train_test(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset]:
    """Z-score both splits using statistics fitted on the training split only."""
    stats = fit_zscore(train.X, train.class_names)
    return (
        Dataset(apply_zscore(train.X, stats), train.Y, train.class_names,
                train.feature_names, stats),
        Dataset(apply_zscore(test.X, stats), test.Y, test.class_names,
                test.feature_names, stats),
    )


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded disjoint train/test index partition.

    Symmetric by construction: fractions f and 1-f with the same seed yield
    swapped partitions.
    """
    if n < 2:
        raise DataError("need at least 2 rows to split")
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must be in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    small = min(test_fraction, 1.0 - test_fraction)
    cut = int(np.clip(int(n * small + 0.5), 1, n - 1))
    front, back = perm[:cut], perm[cut:]
    if test_fraction <= 0.5:
        return back, front
    return front, back


def split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(data.n_rows, test_fraction, seed)
    return data.take(train_idx), data.take(test_idx)


def iris_path():
    """Path to the bundled 150-row iris CSV (public-domain Fisher data)."""
    return resources.files("rbnn").joinpath("datafiles/iris.csv")


def load_iris(schema: DataSchema | None = None) -> RawTable:
    if schema is None:
        schema = DataSchema(label_column="species")
    with resources.as_file(iris_path()) as p:
        return load_csv(p, schema)
