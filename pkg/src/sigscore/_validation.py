"""Input validation helpers used by the public entry points."""

from __future__ import annotations

import numpy as np


def check_float_array(x, name, ndim=None):
    """Coerce to a C-contiguous float64 array and reject non-finite entries."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_times(times, n=None):
    """Validate a strictly increasing 1-D stamp vector."""
    t = check_float_array(times, "times", ndim=1)
    if n is not None and len(t) != n:
        raise ValueError(f"times has length {len(t)}, expected {n}")
    if len(t) > 1 and not (np.diff(t) > 0).all():
        raise ValueError("times must be strictly increasing")
    return t


def check_positive(value, name):
    v = float(value)
    if not np.isfinite(v) or v <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return v


def check_fraction(value, name):
    v = float(value)
    if not 0 < v <= 1:
        raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
    return v


def check_dyadic_order(value):
    v = int(value)
    if v != value or v < 0:
        raise ValueError(f"dyadic_order must be a nonnegative integer, got {value!r}")
    if v > 6:
        raise ValueError(f"dyadic_order {v} exceeds the guard limit 6 (grid cost grows as 4**order)")
    return v


def check_index_range(window, length, name="time_window", min_len=1):
    """Normalize a (start, stop) index range against an axis of given length."""
    start, stop = int(window[0]), int(window[1])
    if not (0 <= start < stop <= length):
        raise ValueError(f"{name} ({start}, {stop}) out of bounds for axis of length {length}")
    if stop - start < min_len:
        raise ValueError(f"{name} must select at least {min_len} points, got {stop - start}")
    return start, stop
