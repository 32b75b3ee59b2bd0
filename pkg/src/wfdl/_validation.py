"""Input validation helpers for image batches."""

from __future__ import annotations

import numpy as np


def check_images(X, image_size: int | None = None, channels: int | None = None,
                 name: str = "X") -> np.ndarray:
    """Validate and return a float64 ``(n, H, W, C)`` batch of [0, 1] images.

    Grayscale ``(n, H, W)`` batches get a trailing channel axis of one.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 3:
        arr = arr[..., None]
    if arr.ndim != 4:
        raise ValueError(f"{name} must be a batch of images (n, H, W, C); got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} contains no images")
    if arr.shape[1] != arr.shape[2]:
        raise ValueError(f"{name} images must be square; got {arr.shape[1]}x{arr.shape[2]}")
    if image_size is not None and arr.shape[1] != image_size:
        raise ValueError(f"{name} images are {arr.shape[1]} px; expected {image_size}")
    if channels is not None and arr.shape[3] != channels:
        raise ValueError(f"{name} has {arr.shape[3]} channels; expected {channels}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0 or arr.max() > 1:
        raise ValueError(f"{name} intensities must lie in [0, 1]")
    return arr


def check_labels(y, n: int) -> np.ndarray:
    """Map labels to a boolean "anomalous" mask.

    Accepts booleans, 0/1, or the strings ``'normal'`` / ``'anomalous'``.
    """
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {y.shape}")
    if y.dtype.kind in "US" or y.dtype == object:
        bad = set(y.tolist()) - {"normal", "anomalous"}
        if bad:
            raise ValueError(f"unknown labels {sorted(bad)}")
        return y == "anomalous"
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise ValueError("numeric labels must be 0 (normal) or 1 (anomalous)")
    return y.astype(bool)
