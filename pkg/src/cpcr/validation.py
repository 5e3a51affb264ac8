"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    """Coerce a seed (int, SeedSequence, Generator or None) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def stable_seed(*parts: int) -> int:
    """Derive a reproducible child seed from integer parts.

    Used to split one user-facing seed into independent streams (per fold,
    per candidate) without coupling results to execution order.
    """
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


def check_matrix(X, name: str = "X") -> np.ndarray:
    """Validate a 2-D float matrix of shape (n_cases, n_attributes)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n_cases, n_attributes), got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        r, c = np.argwhere(~np.isfinite(X))[0]
        raise ValueError(f"{name} contains a non-finite value at row {r}, column {c}")
    return X


def check_grid_values(values, grid: int, name: str = "values") -> np.ndarray:
    """Validate an integer matrix with entries in [1, grid]."""
    arr = np.asarray(values)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        flt = np.asarray(arr, dtype=np.float64)
        arr = flt.astype(np.int64)
        if not np.array_equal(arr, flt):
            raise ValueError(f"{name} must contain integers")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 1 or arr.max() > grid):
        r, c = np.argwhere((arr < 1) | (arr > grid))[0]
        raise ValueError(
            f"{name}[{r}, {c}] = {arr[r, c]} is outside the grid range [1, {grid}]"
        )
    return arr


def check_labels(y, n_cases: int | None = None, name: str = "y") -> np.ndarray:
    """Validate an integer label vector."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        flt = np.asarray(y, dtype=np.float64)
        y = flt.astype(np.int64)
        if not np.array_equal(y, flt):
            raise ValueError(f"{name} must contain integer class indices")
    y = y.astype(np.int64)
    if n_cases is not None and y.shape[0] != n_cases:
        raise ValueError(f"{name} has {y.shape[0]} entries, expected {n_cases}")
    if y.size and y.min() < 0:
        raise ValueError(f"{name} contains a negative class index")
    return y


def check_pixels(pixels, name: str = "pixels") -> np.ndarray:
    """Validate an (H, W, C) uint8 pixel array with C in {1, 3}."""
    arr = np.asarray(pixels)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"{name} must have shape (H, W, 1) or (H, W, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 255:
            arr = arr.astype(np.uint8)
        else:
            raise ValueError(f"{name} must be 8-bit intensities in [0, 255]")
    return arr
