"""Input checking helpers.

scikit-learn's ``check_array`` rejects complex input, so the complex-valued
checks used throughout the package live here.
"""

import numbers

import numpy as np


def check_complex_vector(x, n=None, name="x"):
    """Return ``x`` as a finite 1-D complex array, optionally of length ``n``."""
    arr = np.asarray(x)
    if arr.dtype == object or not (np.issubdtype(arr.dtype, np.number) or arr.dtype == bool):
        raise TypeError(f"{name} must be numeric")
    arr = np.array(arr, dtype=complex).reshape(-1) if arr.ndim <= 1 else arr
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_complex_array(X, n_features=None, name="X"):
    """Return ``X`` as a finite 2-D complex array with ``n_features`` columns."""
    arr = np.asarray(X)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.number):
        raise TypeError(f"{name} must be numeric")
    arr = np.array(arr, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"{name} must have {n_features} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_index_set(idx, n, name="indices"):
    """Sorted unique integer indices within ``[0, n)``."""
    arr = np.asarray(idx, dtype=float).reshape(-1)
    if arr.size and (np.any(arr != np.round(arr)) or arr.min() < 0 or arr.max() >= n):
        raise ValueError(f"{name} must be integers in [0, {n})")
    arr = arr.astype(int)
    if len(np.unique(arr)) != len(arr):
        raise ValueError(f"{name} contains duplicates")
    return np.sort(arr)


def check_random_state(seed):
    """Turn ``None``, an int or a Generator into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.integer)):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a random generator from {seed!r}")


def check_positive(value, name, strict=True):
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        raise ValueError(f"{name} must be {'positive' if strict else 'non-negative'}, got {value}")
    return value
