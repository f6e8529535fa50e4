"""Input validation helpers.

Small checks shared by the estimator, the renderer and the metrics so that
array inputs fail early with a readable message instead of deep inside a
vectorized pipeline.
"""

from __future__ import annotations

import numpy as np


def as_float_array(a, name: str = "array") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def check_color_image(img, name: str = "image") -> np.ndarray:
    """Validate an H x W x 3 float image with values in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            f"{name} values must lie in [0, 1], got range "
            f"[{arr.min():.4g}, {arr.max():.4g}]"
        )
    return arr


def check_depth_map(depth, shape=None, name: str = "depth") -> np.ndarray:
    """Validate an H x W depth map; +inf marks empty pixels, NaN is rejected."""
    arr = np.asarray(depth, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W), got {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} shape {arr.shape} does not match expected {tuple(shape)}")
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} contains NaN values")
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} contains non-positive depths")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "images") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what} must share dimensions, got {a.shape} vs {b.shape}")


def check_positive(value, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return v


def check_positive_int(value, name: str) -> int:
    v = int(value)
    if v != value or v < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
    return v
