"""Small input-validation helpers shared across the package."""

import numpy as np

SYMMETRY_TOL = 1e-8


def as_float_matrix(x, name="array"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_symmetric_matrix(x, name="matrix", tol=SYMMETRY_TOL):
    """Validate a square matrix symmetric within ``tol`` and symmetrize it."""
    arr = as_float_matrix(x, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    gap = np.abs(arr - arr.T).max() if arr.size else 0.0
    scale = max(1.0, np.abs(arr).max()) if arr.size else 1.0
    if gap > tol * scale:
        raise ValueError(f"{name} is not symmetric (max asymmetry {gap!r})")
    return 0.5 * (arr + arr.T)


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_nonnegative(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a nonnegative finite number, got {value!r}")
    return value
