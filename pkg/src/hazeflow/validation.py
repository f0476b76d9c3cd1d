"""Input checking shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np


def check_image(img, *, rgb: bool = False, min_size: int = 1, name: str = "image") -> np.ndarray:
    """Return ``img`` as a float64 array in [0, 1].

    ``uint8`` input is scaled by 1/255. Float input must already be finite;
    it is clamped to [0, 1]. Shapes ``(H, W)``, ``(H, W, 1)`` and
    ``(H, W, 3)`` are accepted; ``(H, W, 1)`` is squeezed.

    Raises
    ------
    ValueError
        On bad shape, non-finite samples, a grayscale image where RGB is
        required, or a side shorter than ``min_size``.
    """
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    elif np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool:
        raise ValueError(f"{name}: integer input must be uint8, got {arr.dtype}")
    else:
        arr = arr.astype(np.float64, copy=False)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name}: contains non-finite samples")
        arr = np.clip(arr, 0.0, 1.0)

    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ValueError(f"{name}: expected (H, W) or (H, W, 3), got shape {arr.shape}")
    if rgb and arr.ndim != 3:
        raise ValueError(f"{name}: a 3-channel image is required")
    if min(arr.shape[:2]) < min_size:
        raise ValueError(f"{name}: sides must be at least {min_size} pixels, got {arr.shape[:2]}")
    return arr


def check_field(field, name: str = "field") -> np.ndarray:
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name}: expected a non-empty 2-D field, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite samples")
    return arr


def check_in_range(name: str, value, lo=None, hi=None, *, lo_open=False, hi_open=False):
    """Raise ``ValueError`` naming ``name`` if ``value`` leaves the interval."""
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ValueError(f"{name}={value!r} out of range (must be {'>' if lo_open else '>='} {lo})")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise ValueError(f"{name}={value!r} out of range (must be {'<' if hi_open else '<='} {hi})")
    return value
