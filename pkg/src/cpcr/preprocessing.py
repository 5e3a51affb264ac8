"""Discretization onto an integer grid and cross-validation fold planning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .datasets import Dataset
from .validation import as_rng, check_grid_values, check_labels, check_matrix


@dataclass(frozen=True)
class DiscretePoint:
    """An integer-grid record: values in [1, grid], even length after padding."""

    values: tuple[int, ...]
    label: int | None
    grid: int

    def __post_init__(self):
        if len(self.values) % 2 != 0:
            raise ValueError("discrete points must have an even number of values")
        for v in self.values:
            if not 1 <= v <= self.grid:
                raise ValueError(f"value {v} outside the grid range [1, {self.grid}]")


@dataclass
class DiscreteDataset:
    """A dataset mapped to integer grid values, last attribute repeated if n was odd."""

    values: np.ndarray
    y: np.ndarray
    case_ids: np.ndarray
    grid: int
    class_names: list[str]
    attr_names: list[str]
    name: str = "dataset"

    def __post_init__(self):
        self.values = check_grid_values(self.values, self.grid, "values")
        if self.values.shape[1] % 2 != 0:
            raise ValueError("discrete datasets must have an even attribute count")
        self.y = check_labels(self.y, self.values.shape[0], "y")
        self.case_ids = np.asarray(self.case_ids, dtype=np.int64)

    @property
    def n_cases(self) -> int:
        return self.values.shape[0]

    @property
    def n_values(self) -> int:
        return self.values.shape[1]

    def point(self, i: int) -> DiscretePoint:
        return DiscretePoint(tuple(int(v) for v in self.values[i]), int(self.y[i]), self.grid)

    def subset(self, indices) -> "DiscreteDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return DiscreteDataset(
            values=self.values[idx],
            y=self.y[idx],
            case_ids=self.case_ids[idx],
            grid=self.grid,
            class_names=list(self.class_names),
            attr_names=list(self.attr_names),
            name=self.name,
        )


class BinningSchema:
    """Per-attribute rule mapping reals to grid values 1..grid.

    Each attribute uses either a uniform (lo, hi) rule,
    bin(x) = floor((x - lo) / ((hi - lo) / grid)) + 1, or explicit ascending
    edges (grid + 1 of them, bins left-closed). With ``clip`` on, values below
    the range go to bin 1 and values at or above the top go to bin ``grid``;
    with it off they raise.
    """

    def __init__(self, grid: int, ranges=None, edges=None, clip: bool = True):
        if grid < 2:
            raise ValueError("grid must be >= 2")
        if (ranges is None) == (edges is None):
            raise ValueError("give exactly one of ranges or edges")
        self.grid = int(grid)
        self.clip = bool(clip)
        if ranges is not None:
            self.ranges = [(float(lo), float(hi)) for lo, hi in ranges]
            for j, (lo, hi) in enumerate(self.ranges):
                if not hi > lo:
                    raise ValueError(f"attribute {j}: range ({lo}, {hi}) must be increasing")
            self.edges = None
        else:
            self.ranges = None
            self.edges = [np.asarray(e, dtype=np.float64) for e in edges]
            for j, e in enumerate(self.edges):
                if e.shape != (self.grid + 1,):
                    raise ValueError(f"attribute {j}: needs {self.grid + 1} edges, got {e.shape}")
                if not np.all(np.diff(e) > 0):
                    raise ValueError(f"attribute {j}: edges must be strictly increasing")

    @property
    def n_attributes(self) -> int:
        return len(self.ranges) if self.ranges is not None else len(self.edges)

    @classmethod
    def uniform(cls, lo: float, hi: float, grid: int, n_attributes: int, clip: bool = True):
        """Same uniform (lo, hi) rule for every attribute."""
        return cls(grid, ranges=[(lo, hi)] * n_attributes, clip=clip)

    @classmethod
    def identity(cls, grid: int, n_attributes: int):
        """Pass integer values 1..grid through unchanged."""
        return cls(grid, ranges=[(1.0, float(grid + 1))] * n_attributes, clip=True)

    @classmethod
    def from_data(cls, X, grid: int, clip: bool = True):
        """Uniform rule per attribute with (lo, hi) = column (min, max)."""
        X = check_matrix(X)
        ranges = []
        for j in range(X.shape[1]):
            lo, hi = float(X[:, j].min()), float(X[:, j].max())
            if hi == lo:  # constant column: everything lands in bin 1
                hi = lo + 1.0
            ranges.append((lo, hi))
        return cls(grid, ranges=ranges, clip=clip)

    @classmethod
    def decimal_grid(cls, lo_tenths: int, step_tenths: int, grid: int, n_attributes: int,
                     clip: bool = True):
        """Edges on an exact decimal lattice, e.g. (-8, 2, 10) gives
        -0.8, -0.6, ... 1.2. Integer scaling keeps edges bit-equal to the
        decimal literals, so boundary values bin exactly.
        """
        e = np.array([lo_tenths + step_tenths * k for k in range(grid + 1)]) / 10.0
        return cls(grid, edges=[e] * n_attributes, clip=clip)

    def bin_column(self, j: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.ranges is not None:
            lo, hi = self.ranges[j]
            width = (hi - lo) / self.grid
            raw = np.floor((x - lo) / width).astype(np.int64) + 1
        else:
            raw = np.searchsorted(self.edges[j], x, side="right").astype(np.int64)
        if self.clip:
            return np.clip(raw, 1, self.grid)
        bad = (raw < 1) | (raw > self.grid)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(
                f"value {x[i]} in attribute {j} falls outside the binning range "
                "and clipping is off"
            )
        return raw

    def transform(self, X) -> np.ndarray:
        X = check_matrix(X)
        if X.shape[1] != self.n_attributes:
            raise ValueError(
                f"schema covers {self.n_attributes} attributes, data has {X.shape[1]}"
            )
        out = np.empty(X.shape, dtype=np.int64)
        for j in range(X.shape[1]):
            out[:, j] = self.bin_column(j, X[:, j])
        return out

    def bin_midpoints(self, j: int) -> np.ndarray:
        """Midpoint of each bin for attribute j (used by level-set round trips)."""
        if self.ranges is not None:
            lo, hi = self.ranges[j]
            e = lo + (hi - lo) * np.arange(self.grid + 1) / self.grid
        else:
            e = self.edges[j]
        return (e[:-1] + e[1:]) / 2.0


class Discretizer(BaseEstimator, TransformerMixin):
    """Transformer mapping real records to grid values, padding odd widths.

    With no explicit ``ranges``/``edges``, fit learns per-attribute (min, max)
    from the data. Odd attribute counts are padded by repeating the last
    column so downstream pairing always sees an even width.
    """

    def __init__(self, grid=10, ranges=None, edges=None, clip=True, pad_to_even=True):
        self.grid = grid
        self.ranges = ranges
        self.edges = edges
        self.clip = clip
        self.pad_to_even = pad_to_even

    def fit(self, X, y=None):
        X = check_matrix(X)
        if self.edges is not None:
            self.schema_ = BinningSchema(self.grid, edges=self.edges, clip=self.clip)
        elif self.ranges is not None:
            self.schema_ = BinningSchema(self.grid, ranges=self.ranges, clip=self.clip)
        else:
            self.schema_ = BinningSchema.from_data(X, self.grid, clip=self.clip)
        if self.schema_.n_attributes != X.shape[1]:
            raise ValueError("binning schema does not cover all attributes")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "schema_"):
            raise RuntimeError("Discretizer must be fitted before transform")
        out = self.schema_.transform(X)
        if self.pad_to_even and out.shape[1] % 2 != 0:
            out = np.column_stack([out, out[:, -1]])
        return out


def discretize(dataset: Dataset, schema: BinningSchema) -> DiscreteDataset:
    """Map a dataset onto the integer grid, repeating the last attribute if n is odd."""
    values = schema.transform(dataset.X)
    attr_names = list(dataset.attr_names)
    if values.shape[1] % 2 != 0:
        values = np.column_stack([values, values[:, -1]])
        attr_names.append(attr_names[-1] + "_rep")
    return DiscreteDataset(
        values=values,
        y=dataset.y,
        case_ids=dataset.case_ids,
        grid=schema.grid,
        class_names=list(dataset.class_names),
        attr_names=attr_names,
        name=dataset.name,
    )


@dataclass
class FoldPlan:
    """Assignment of every case to exactly one of k folds."""

    k: int
    case_ids: np.ndarray
    folds: np.ndarray  # fold index per case, aligned with case_ids
    stratified: bool
    seed: int

    def __post_init__(self):
        self.case_ids = np.asarray(self.case_ids, dtype=np.int64)
        self.folds = np.asarray(self.folds, dtype=np.int64)
        if self.case_ids.shape != self.folds.shape:
            raise ValueError("case_ids and folds must align")
        if self.folds.size and (self.folds.min() < 0 or self.folds.max() >= self.k):
            raise ValueError("fold index outside 0..k-1")

    @property
    def assignments(self) -> dict[int, int]:
        return {int(c): int(f) for c, f in zip(self.case_ids, self.folds)}

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.folds, minlength=self.k)

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Positional (train_idx, val_idx) for one fold."""
        if not 0 <= fold < self.k:
            raise ValueError(f"fold {fold} outside 0..{self.k - 1}")
        val = np.flatnonzero(self.folds == fold)
        train = np.flatnonzero(self.folds != fold)
        return train, val

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "stratified": self.stratified,
            "seed": self.seed,
            "case_ids": self.case_ids.tolist(),
            "folds": self.folds.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FoldPlan":
        return cls(
            k=int(d["k"]),
            case_ids=np.asarray(d["case_ids"], dtype=np.int64),
            folds=np.asarray(d["folds"], dtype=np.int64),
            stratified=bool(d["stratified"]),
            seed=int(d["seed"]),
        )


def make_folds(dataset, k: int, stratified: bool = False, seed: int = 0) -> FoldPlan:
    """Deterministic k-fold plan; fold sizes differ by at most one.

    Stratified plans additionally keep per-class counts across folds within
    one of each other, by dealing shuffled class blocks around the fold cycle
    with a carried cursor.

    Accepts a Dataset, DiscreteDataset, or a bare label vector.
    """
    if hasattr(dataset, "y"):
        y = np.asarray(dataset.y)
        case_ids = np.asarray(dataset.case_ids, dtype=np.int64)
    else:
        y = np.asarray(dataset)
        case_ids = np.arange(len(y), dtype=np.int64)
    n = len(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot split {n} cases into {k} folds")
    rng = as_rng(seed)
    folds = np.empty(n, dtype=np.int64)
    if stratified:
        classes, counts = np.unique(y, return_counts=True)
        small = classes[counts < k]
        if small.size:
            raise ValueError(
                f"class {int(small[0])} has only {int(counts[classes == small[0]][0])} "
                f"cases, fewer than k={k}; cannot stratify"
            )
        cursor = 0
        for cls in classes:
            idx = np.flatnonzero(y == cls)
            idx = idx[rng.permutation(len(idx))]
            for i, pos in enumerate(idx):
                folds[pos] = (cursor + i) % k
            cursor = (cursor + len(idx)) % k
    else:
        perm = rng.permutation(n)
        for i, pos in enumerate(perm):
            folds[pos] = i % k
    return FoldPlan(k=k, case_ids=case_ids, folds=folds, stratified=stratified, seed=seed)
