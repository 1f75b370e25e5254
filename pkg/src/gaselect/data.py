"""Dataset ingestion, splitting, normalization, and a synthetic sensor rig.

Datasets are immutable once constructed: the backing arrays are marked
read-only so they can be shared freely across evaluations and threads.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadSplitError,
    IndexOutOfRangeError,
    MissingTargetError,
    NonFiniteValueError,
    ParseError,
)
from .genome import Chromosome


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sample matrix (n_samples x n_vars), target vector, and column labels."""

    samples: np.ndarray
    target: np.ndarray
    var_names: tuple[str, ...]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.var_names == other.var_names
            and np.array_equal(self.samples, other.samples)
            and np.array_equal(self.target, other.target)
        )

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=float)
        target = np.ascontiguousarray(self.target, dtype=float)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-d, got shape {samples.shape}")
        if target.ndim != 1 or target.shape[0] != samples.shape[0]:
            raise ValueError(
                f"target length {target.shape} does not match {samples.shape[0]} rows"
            )
        names = tuple(self.var_names)
        if len(names) != samples.shape[1]:
            raise ValueError(
                f"{len(names)} var_names for {samples.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise ValueError("var_names must be unique")
        if not np.isfinite(samples).all() or not np.isfinite(target).all():
            raise NonFiniteValueError("dataset contains NaN or infinite values")
        samples.setflags(write=False)
        target.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "var_names", names)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_vars(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-variable mean and standard deviation, computed on train rows only."""

    mean: np.ndarray
    sd: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, NormStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.sd, other.sd)

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=float)
        sd = np.ascontiguousarray(self.sd, dtype=float)
        if mean.shape != sd.shape or mean.ndim != 1:
            raise ValueError("mean and sd must be matching 1-d vectors")
        if not (sd > 0).all():
            raise ValueError("standard deviations must be positive")
        mean.setflags(write=False)
        sd.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)

    def subset(self, indices: Sequence[int]) -> "NormStats":
        idx = list(indices)
        return NormStats(self.mean[idx], self.sd[idx])


@dataclass(frozen=True)
class SplitDataset:
    """Train and cross-validation partitions plus train-derived norm stats."""

    train: Dataset
    cv: Dataset
    norm_stats: NormStats

    def __post_init__(self):
        if self.train.var_names != self.cv.var_names:
            raise ValueError("train and cv must share columns")
        if self.norm_stats.mean.shape[0] != self.train.n_vars:
            raise ValueError("norm_stats dimension must match n_vars")

    @property
    def n_vars(self) -> int:
        return self.train.n_vars


def load_csv(path: str | Path, target_column: str) -> Dataset:
    """Read a UTF-8 comma-separated file with a header row.

    The named target column is stripped out of the sample matrix and becomes
    the target vector; remaining columns keep header order. Error messages
    locate the offending cell with 1-based row/column numbers.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise MissingTargetError(
                f"{path}: target column {target_column!r} not in header {header}"
            )
        if len(set(header)) != len(header):
            raise ParseError(f"{path}: duplicate column names in header")
        t_idx = header.index(target_column)
        var_names = tuple(h for i, h in enumerate(header) if i != t_idx)

        rows: list[list[float]] = []
        targets: list[float] = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {row_no} has {len(row)} cells, expected {len(header)}"
                )
            values = []
            for col_no, cell in enumerate(row, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_no}, column {col_no} "
                        f"({header[col_no - 1]!r}): cannot parse {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise NonFiniteValueError(
                        f"{path}: row {row_no}, column {col_no} "
                        f"({header[col_no - 1]!r}): non-finite value {cell!r}"
                    )
                values.append(value)
            targets.append(values.pop(t_idx))
            rows.append(values)

    if not rows:
        raise ParseError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(targets), var_names)


def write_csv(d: Dataset, path: str | Path, target_name: str = "level") -> None:
    """Write a dataset back out in the load_csv format (target column last)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.var_names) + [target_name])
        for x, y in zip(d.samples, d.target):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def split_sequential(d: Dataset, n_train: int) -> SplitDataset:
    """First ``n_train`` rows become the train block, the rest the cv block.

    The data is a time history, so blocks are kept contiguous rather than
    shuffled. Normalization stats come from the train block only; a constant
    train column gets unit scale (with a warning) instead of failing, since
    the search should be free to discover that such a column is useless.
    """
    if not 0 < n_train < d.n_samples:
        raise BadSplitError(
            f"n_train must be in (0, {d.n_samples}), got {n_train}"
        )
    train = Dataset(d.samples[:n_train], d.target[:n_train], d.var_names)
    cv = Dataset(d.samples[n_train:], d.target[n_train:], d.var_names)
    mean = train.samples.mean(axis=0)
    sd = train.samples.std(axis=0, ddof=1) if n_train > 1 else np.zeros(d.n_vars)
    degenerate = ~(np.isfinite(sd) & (sd > 0))
    if degenerate.any():
        bad = [d.var_names[i] for i in np.flatnonzero(degenerate)]
        warnings.warn(f"constant train columns {bad} given unit scale")
        sd = np.where(degenerate, 1.0, sd)
    return SplitDataset(train, cv, NormStats(mean, sd))


def select_columns(d: Dataset, c: Chromosome) -> Dataset:
    """Project the sample matrix onto the chromosome's columns."""
    if c.genes[-1] >= d.n_vars:
        raise IndexOutOfRangeError(
            f"gene {c.genes[-1]} out of range for {d.n_vars} variables"
        )
    idx = list(c.genes)
    return Dataset(d.samples[:, idx], d.target, tuple(d.var_names[i] for i in idx))


def normalize_apply(d: Dataset, stats: NormStats) -> Dataset:
    """Z-score each column with train-derived stats; the target stays raw."""
    if stats.mean.shape[0] != d.n_vars:
        raise ValueError(
            f"stats cover {stats.mean.shape[0]} variables, dataset has {d.n_vars}"
        )
    return Dataset((d.samples - stats.mean) / stats.sd, d.target, d.var_names)


def synthetic_sensors(
    n_vars: int,
    n_samples: int,
    informative: Chromosome,
    noise_sd: float,
    seed: int,
) -> Dataset:
    """Generate a level-sensor rig: some sensors track the target, most don't.

    The target is a fixed smooth trajectory (slow ramp plus a periodic
    component) that sweeps its range in both halves of the record, so a
    sequential split sees the same operating region on both sides.

    Each informative sensor responds through its own monotone nonlinearity,
    centered on a different quantile of the trajectory (sensors mounted at
    different heights saturate over different ranges), with its own affine
    scale/offset plus Gaussian noise. Non-informative sensors are pure noise
    with a per-column random bias and scale. Byte-identical output for a
    given seed.
    """
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    if informative.genes[-1] >= n_vars:
        raise IndexOutOfRangeError(
            f"informative gene {informative.genes[-1]} out of range for {n_vars}"
        )
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, n_samples)
    level = 0.3 * t + np.sin(2.0 * np.pi * 2.5 * t)

    info = set(informative.genes)
    centers = np.quantile(level, [(k + 1) / (len(info) + 1) for k in range(len(info))])
    columns = np.empty((n_samples, n_vars))
    rank = 0
    for j in range(n_vars):
        if j in info:
            gain = rng.uniform(2.0, 4.0)
            scale = rng.uniform(0.8, 1.2)
            offset = rng.uniform(-0.5, 0.5)
            response = level + 0.4 * np.tanh(gain * (level - centers[rank]))
            columns[:, j] = scale * response + offset
            rank += 1
        else:
            offset = rng.uniform(-1.0, 1.0)
            scale = rng.uniform(0.5, 1.5)
            columns[:, j] = offset + scale * rng.standard_normal(n_samples)
        if noise_sd > 0 and j in info:
            columns[:, j] += noise_sd * rng.standard_normal(n_samples)
    names = tuple(f"s{j + 1}" for j in range(n_vars))
    return Dataset(columns, level, names)
