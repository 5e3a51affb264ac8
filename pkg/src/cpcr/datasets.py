"""Dataset containers, CSV ingestion and synthetic data generators.

Labels are interned to 0-based class indices in first-appearance order; the
original label strings are kept in ``class_names``. Incomplete records are
rejected (no imputation).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .validation import as_rng, check_labels, check_matrix

MISSING_TOKENS = {"", "?"}

# Parametric window of the two-arm roll; class 1 is rotated by pi.
ROLL_T_MIN = 1.5 * math.pi
ROLL_T_MAX = 4.5 * math.pi
ROLL_HEIGHT = 21.0


@dataclass(frozen=True)
class RawCase:
    """One labeled numeric record."""

    attributes: tuple[float, ...]
    label: int
    case_id: int


@dataclass
class Dataset:
    """A labeled numeric dataset with stable case ids.

    Attributes:
        X: (n_cases, n_attributes) float matrix.
        y: (n_cases,) 0-based class indices.
        case_ids: (n_cases,) unique integer ids, preserved across subsetting.
        class_names: original label per class index.
        attr_names: one name per attribute column.
    """

    X: np.ndarray
    y: np.ndarray
    case_ids: np.ndarray
    class_names: list[str]
    attr_names: list[str]
    name: str = "dataset"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = check_matrix(self.X, "X")
        self.y = check_labels(self.y, self.X.shape[0], "y")
        self.case_ids = np.asarray(self.case_ids, dtype=np.int64)
        if self.case_ids.shape != (self.X.shape[0],):
            raise ValueError("case_ids must align with X rows")
        if len(np.unique(self.case_ids)) != len(self.case_ids):
            raise ValueError("case_ids must be unique")
        if self.y.size and self.y.max() >= len(self.class_names):
            raise ValueError("label index outside the declared class set")
        if len(self.attr_names) != self.X.shape[1]:
            raise ValueError("attr_names must align with X columns")

    @property
    def n_cases(self) -> int:
        return self.X.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def case(self, i: int) -> RawCase:
        return RawCase(tuple(self.X[i]), int(self.y[i]), int(self.case_ids[i]))

    def subset(self, indices, name: str | None = None) -> "Dataset":
        """Row subset by positional indices; case ids are preserved."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            X=self.X[idx],
            y=self.y[idx],
            case_ids=self.case_ids[idx],
            class_names=list(self.class_names),
            attr_names=list(self.attr_names),
            name=name or self.name,
            meta=dict(self.meta),
        )


class CsvFormatError(ValueError):
    """Malformed CSV input; the message carries the offending line number."""


def _parse_cell(token: str, line_no: int, column: str) -> float:
    token = token.strip()
    if token in MISSING_TOKENS:
        raise CsvFormatError(
            f"line {line_no}: missing value in column {column!r} "
            "(incomplete records are not supported)"
        )
    try:
        value = float(token)
    except ValueError:
        raise CsvFormatError(
            f"line {line_no}: non-numeric value {token!r} in column {column!r}"
        ) from None
    if not math.isfinite(value):
        raise CsvFormatError(f"line {line_no}: non-finite value {token!r} in column {column!r}")
    return value


def _looks_like_header(row: list[str], label_idx: int | None) -> bool:
    for j, tok in enumerate(row):
        if label_idx is not None and j == label_idx:
            continue
        tok = tok.strip()
        if tok in MISSING_TOKENS:
            return False
        try:
            float(tok)
        except ValueError:
            return True
    return False


def load_csv(
    path,
    label_column="-1",
    delimiter: str = ",",
    header: bool | None = None,
    name: str | None = None,
) -> Dataset:
    """Load a labeled numeric dataset from a CSV file.

    Args:
        path: CSV file path.
        label_column: column name (requires a header) or integer index;
            negative indices count from the end. Defaults to the last column.
        delimiter: field separator.
        header: True/False, or None to auto-detect from the first row.
        name: dataset name; defaults to the file stem.

    Raises:
        CsvFormatError: ragged rows, non-numeric or missing attribute values,
            with the offending 1-based line number.
    """
    path = str(path)
    with open(path, newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh, delimiter=delimiter)) if row]
    if not rows:
        raise CsvFormatError(f"{path}: empty file")

    label_is_name = isinstance(label_column, str) and not _is_intlike(label_column)
    first = rows[0][1]
    n_cols = len(first)

    label_idx_guess = None
    if not label_is_name:
        label_idx_guess = _resolve_index(int(label_column), n_cols)
    if header is None:
        header = True if label_is_name else _looks_like_header(first, label_idx_guess)
    if label_is_name and not header:
        raise CsvFormatError(
            f"label column {label_column!r} given by name but the file has no header"
        )

    if header:
        names = [c.strip() for c in first]
        data_rows = rows[1:]
    else:
        names = None
        data_rows = rows
    if not data_rows:
        raise CsvFormatError(f"{path}: no data rows")

    if label_is_name:
        if label_column not in names:
            raise CsvFormatError(f"label column {label_column!r} not found in header {names}")
        label_idx = names.index(label_column)
    else:
        label_idx = _resolve_index(int(label_column), n_cols)

    attr_cols = [j for j in range(n_cols) if j != label_idx]
    if not attr_cols:
        raise CsvFormatError("no attribute columns besides the label")
    attr_names = (
        [names[j] for j in attr_cols] if names else [f"x{k + 1}" for k in range(len(attr_cols))]
    )

    X = np.empty((len(data_rows), len(attr_cols)), dtype=np.float64)
    labels: list[str] = []
    for r, (line_no, row) in enumerate(data_rows):
        if len(row) != n_cols:
            raise CsvFormatError(
                f"line {line_no}: expected {n_cols} columns, got {len(row)}"
            )
        for k, j in enumerate(attr_cols):
            X[r, k] = _parse_cell(row[j], line_no, attr_names[k])
        lab = row[label_idx].strip()
        if lab in MISSING_TOKENS:
            raise CsvFormatError(f"line {line_no}: missing label")
        labels.append(lab)

    class_names: list[str] = []
    index_of: dict[str, int] = {}
    y = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab not in index_of:
            index_of[lab] = len(class_names)
            class_names.append(lab)
        y[i] = index_of[lab]
    if len(class_names) < 2:
        raise CsvFormatError(f"{path}: needs at least 2 classes, found {class_names}")

    if name is None:
        stem = path.rsplit("/", 1)[-1]
        name = stem.rsplit(".", 1)[0] if "." in stem else stem
    return Dataset(
        X=X,
        y=y,
        case_ids=np.arange(len(data_rows), dtype=np.int64),
        class_names=class_names,
        attr_names=attr_names,
        name=name,
    )


def _is_intlike(s: str) -> bool:
    try:
        int(s)
        return True
    except ValueError:
        return False


def _resolve_index(idx: int, n_cols: int) -> int:
    resolved = idx if idx >= 0 else n_cols + idx
    if not 0 <= resolved < n_cols:
        raise CsvFormatError(f"label column index {idx} outside 0..{n_cols - 1}")
    return resolved


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset back to CSV with a header row and a trailing label column."""
    with open(str(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.attr_names + ["label"])
        for i in range(dataset.n_cases):
            writer.writerow(
                [repr(float(v)) for v in dataset.X[i]]
                + [dataset.class_names[dataset.y[i]]]
            )


def gen_swiss_roll(
    dim: int = 2, n_per_class: int = 500, noise: float = 0.0, seed: int = 0
) -> Dataset:
    """Two interleaved spiral-arm classes, in 2-D or 3-D.

    Points of class c sit at (t*cos(t + c*pi), t*sin(t + c*pi)) for t uniform
    in [1.5*pi, 4.5*pi]; 3-D adds a uniform height coordinate. Optional
    isotropic Gaussian noise. Bit-identical for identical arguments.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = as_rng(seed)
    blocks = []
    for c in (0, 1):
        t = rng.uniform(ROLL_T_MIN, ROLL_T_MAX, n_per_class)
        angle = t + c * math.pi
        cols = [t * np.cos(angle), t * np.sin(angle)]
        if dim == 3:
            cols.append(rng.uniform(0.0, ROLL_HEIGHT, n_per_class))
        blocks.append(np.column_stack(cols))
    X = np.vstack(blocks)
    if noise > 0:
        X = X + rng.normal(0.0, noise, X.shape)
    y = np.repeat([0, 1], n_per_class)
    lim = ROLL_T_MAX + 4.0 * noise
    ranges = [(-lim, lim), (-lim, lim)] + ([(0.0, ROLL_HEIGHT)] if dim == 3 else [])
    return Dataset(
        X=X,
        y=y,
        case_ids=np.arange(2 * n_per_class, dtype=np.int64),
        class_names=["arm_a", "arm_b"],
        attr_names=[f"x{k + 1}" for k in range(dim)],
        name=f"swiss_roll_{dim}d",
        meta={"ranges": ranges, "noise": noise, "seed": seed},
    )


WBC_ATTRS = [
    "clump_thickness",
    "uniformity_cell_size",
    "uniformity_cell_shape",
    "marginal_adhesion",
    "single_epithelial_cell_size",
    "bare_nuclei",
    "bland_chromatin",
    "normal_nucleoli",
    "mitoses",
]


def make_wbc_like(n_cases: int = 699, seed: int = 0) -> Dataset:
    """Synthetic stand-in for the 9-attribute breast-cancer screening table.

    Same schema as the classic file: integer attributes in 1..10, two classes
    with a ~65/35 split, benign cases concentrated at low values and malignant
    cases higher and more dispersed. Intended for CI runs where the original
    file is unavailable.
    """
    rng = as_rng(seed)
    n_benign = round(n_cases * 458 / 699)
    n_malign = n_cases - n_benign
    benign = 1.0 + np.abs(rng.normal(0.6, 1.4, (n_benign, 9)))
    malign = rng.normal(6.3, 2.6, (n_malign, 9))
    X = np.vstack([benign, malign])
    X = np.clip(np.rint(X), 1, 10)
    y = np.repeat([0, 1], [n_benign, n_malign])
    perm = rng.permutation(n_cases)
    return Dataset(
        X=X[perm],
        y=y[perm],
        case_ids=np.arange(n_cases, dtype=np.int64),
        class_names=["benign", "malignant"],
        attr_names=list(WBC_ATTRS),
        name="wbc_like",
        meta={"seed": seed},
    )


def make_ionosphere_like(n_cases: int = 351, seed: int = 0) -> Dataset:
    """Synthetic stand-in for the 34-attribute radar-returns table.

    Values in [-1, 1], two classes with a ~64/36 split. Good returns are
    smooth and positively biased, bad returns are noisy around zero.
    """
    rng = as_rng(seed)
    n_good = round(n_cases * 225 / 351)
    n_bad = n_cases - n_good
    good = np.clip(rng.normal(0.55, 0.35, (n_good, 34)), -1.0, 1.0)
    bad = np.clip(rng.normal(0.0, 0.55, (n_bad, 34)), -1.0, 1.0)
    X = np.vstack([good, bad])
    y = np.repeat([0, 1], [n_good, n_bad])
    perm = rng.permutation(n_cases)
    return Dataset(
        X=X[perm],
        y=y[perm],
        case_ids=np.arange(n_cases, dtype=np.int64),
        class_names=["g", "b"],
        attr_names=[f"x{k + 1}" for k in range(34)],
        name="ionosphere_like",
        meta={"seed": seed},
    )


def make_xor_pairs(
    n_cases: int = 240,
    grid: int = 10,
    seed: int = 0,
    informative: tuple[int, int] = (0, 2),
    low: int = 2,
    high: int = 9,
) -> Dataset:
    """4-attribute dataset whose label is the XOR of two attributes being high.

    The two informative attributes each take one of two values {low, high};
    the class is whether they agree. The remaining attributes are uniform
    noise on 1..grid, so only the joint distribution of the informative
    attributes carries signal. Useful for testing that uniting them in one
    pair beats splitting them across pairs.
    """
    rng = as_rng(seed)
    a, b = informative
    if a == b or not (0 <= a < 4 and 0 <= b < 4):
        raise ValueError("informative must be two distinct indices in 0..3")
    X = rng.integers(1, grid + 1, (n_cases, 4)).astype(np.float64)
    va = rng.choice([low, high], n_cases)
    vb = rng.choice([low, high], n_cases)
    X[:, a] = va
    X[:, b] = vb
    y = (va == vb).astype(np.int64)
    if len(np.unique(y)) < 2:  # tiny n_cases edge
        y[0] = 1 - y[0]
    return Dataset(
        X=X,
        y=y,
        case_ids=np.arange(n_cases, dtype=np.int64),
        class_names=["differ", "agree"],
        attr_names=[f"x{k + 1}" for k in range(4)],
        name="xor_pairs",
        meta={"informative": [a, b], "seed": seed},
    )
