"""Piecewise-linear data streams, path augmentations, and grid-to-path extraction.

A :class:`DataStream` is the discrete form of a path: strictly increasing time
stamps plus an (N, d) value matrix, interpolated linearly between knots.
Augmentations (pre-scaling, lead-lag, time coordinate, basepoint) are applied
in a fixed order by :class:`PathAugmenter`. Gridded fields are turned into
path families either one latitude slice at a time (dimension = number of
longitudes) or as flattened spatial patches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import (
    check_float_array,
    check_index_range,
    check_positive,
    check_times,
)

__all__ = [
    "DataStream",
    "GridField",
    "PathAugmenter",
    "interpolate_linear",
    "augment",
    "normalize_for_kernel",
    "latitude_slice_streams",
    "extract_patches",
]


@dataclass(frozen=True)
class DataStream:
    """An ordered multivariate sequence: times (N,) and values (N, d)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        values = check_float_array(self.values, "values", ndim=2)
        times = check_times(self.times, n=values.shape[0])
        if values.shape[0] < 1:
            raise ValueError("a stream needs at least one point")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GridField:
    """A scalar field on a lat/lon grid over time: data indexed (time, lat, lon).

    ``times`` defaults to 0..T-1; it exists so slice/patch streams carry
    explicit stamps.
    """

    data: np.ndarray
    lat_centers: np.ndarray
    lon_centers: np.ndarray
    times: np.ndarray | None = field(default=None)

    def __post_init__(self):
        data = check_float_array(self.data, "data", ndim=3)
        lat = check_float_array(self.lat_centers, "lat_centers", ndim=1)
        lon = check_float_array(self.lon_centers, "lon_centers", ndim=1)
        if data.shape[1] != len(lat) or data.shape[2] != len(lon):
            raise ValueError(
                f"data shape {data.shape} inconsistent with {len(lat)} lats, {len(lon)} lons"
            )
        if np.abs(lat).max(initial=0.0) > 90:
            raise ValueError("lat_centers must lie in [-90, 90]")
        if lon.size and (lon.min() < -180 or lon.max() >= 360):
            raise ValueError("lon_centers must lie in [-180, 180) or [0, 360)")
        for name, c in (("lat_centers", lat), ("lon_centers", lon)):
            if len(c) > 1:
                d = np.diff(c)
                if not ((d > 0).all() or (d < 0).all()):
                    raise ValueError(f"{name} must be strictly monotone")
        times = self.times
        if times is None:
            times = np.arange(data.shape[0], dtype=np.float64)
        times = check_times(times, n=data.shape[0])
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "lat_centers", lat)
        object.__setattr__(self, "lon_centers", lon)
        object.__setattr__(self, "times", times)

    @property
    def n_times(self) -> int:
        return self.data.shape[0]

    @property
    def n_lat(self) -> int:
        return self.data.shape[1]

    @property
    def n_lon(self) -> int:
        return self.data.shape[2]


def interpolate_linear(stream: DataStream, t: float) -> np.ndarray:
    """Evaluate the piecewise-linear path at time t (exact at knots).

    Raises ValueError when t lies outside [times[0], times[-1]].
    """
    times = stream.times
    if not times[0] <= t <= times[-1]:
        raise ValueError(f"t={t} outside the stream's span [{times[0]}, {times[-1]}]")
    i = int(np.searchsorted(times, t, side="right")) - 1
    i = min(max(i, 0), len(times) - 2) if len(times) > 1 else 0
    if len(times) == 1 or t == times[i]:
        return stream.values[i].copy()
    frac = (t - times[i]) / (times[i + 1] - times[i])
    return stream.values[i] + frac * (stream.values[i + 1] - stream.values[i])


def _lead_lag(values: np.ndarray, times: np.ndarray):
    """Zig-zag embedding: N points -> 2N-1 points of dimension 2d.

    Row r pairs (lead value, lag value) = (values[(r+1)//2], values[r//2]);
    odd rows get midpoint stamps so times stay strictly increasing.
    """
    n = values.shape[0]
    rows = np.arange(2 * n - 1)
    lead = values[(rows + 1) // 2]
    lag = values[rows // 2]
    out = np.concatenate([lead, lag], axis=1)
    t = np.empty(2 * n - 1)
    t[0::2] = times
    if n > 1:
        t[1::2] = 0.5 * (times[:-1] + times[1:])
    return out, t


def _basepoint_delta(times: np.ndarray) -> float:
    # median positive knot spacing; single-point streams fall back to 1
    if len(times) < 2:
        return 1.0
    return float(np.median(np.diff(times)))


class PathAugmenter(TransformerMixin, BaseEstimator):
    """Applies the path augmentations in the fixed order
    pre_scale -> lead_lag -> time -> basepoint.

    Parameters
    ----------
    basepoint : bool
        Prepend an all-zero value row at stamp ``times[0] - delta`` where
        delta is the median knot spacing (1 for single-point streams). The
        prepended row is zero in every coordinate, including the appended
        time coordinate when ``time_coord`` is on.
    time_coord : bool
        Append the raw time stamp as an extra coordinate.
    lead_lag : bool
        Replace the path by its lead-lag zig-zag (2N-1 points, dimension 2d).
    pre_scale : float
        Positive factor multiplying all value entries before anything else.
    """

    def __init__(self, basepoint=False, time_coord=False, lead_lag=False, pre_scale=1.0):
        self.basepoint = basepoint
        self.time_coord = time_coord
        self.lead_lag = lead_lag
        self.pre_scale = pre_scale

    def fit(self, X, y=None):
        check_positive(self.pre_scale, "pre_scale")
        return self

    def transform(self, X):
        """Augment a DataStream, an (N, d) array, or a sequence of either."""
        if isinstance(X, DataStream) or (hasattr(X, "ndim") and getattr(X, "ndim", 0) == 2):
            return self._one(X)
        return [self._one(x) for x in X]

    def _one(self, x):
        scale = check_positive(self.pre_scale, "pre_scale")
        as_stream = isinstance(x, DataStream)
        if as_stream:
            values, times = x.values, x.times
        else:
            values = check_float_array(x, "values", ndim=2)
            times = np.arange(values.shape[0], dtype=np.float64)
        values = values * scale
        if self.lead_lag:
            values, times = _lead_lag(values, times)
        if self.time_coord:
            values = np.concatenate([values, times[:, None]], axis=1)
        if self.basepoint:
            delta = _basepoint_delta(times)
            values = np.concatenate([np.zeros((1, values.shape[1])), values], axis=0)
            times = np.concatenate([[times[0] - delta], times])
        if as_stream:
            return DataStream(times=times, values=values)
        return values

    def output_dim(self, d: int) -> int:
        """Dimension of augmented paths given input dimension d."""
        return d * (2 if self.lead_lag else 1) + (1 if self.time_coord else 0)


def augment(stream: DataStream, pipeline: PathAugmenter) -> DataStream:
    """Functional form of PathAugmenter.transform for a single stream."""
    return pipeline.fit(None).transform(stream)


def normalize_for_kernel(field: GridField, obs_mean: float, obs_std: float,
                         path_dim: int | None = None) -> GridField:
    """Center/scale a field by observation statistics and the path-dimension factor.

    Every entry maps to ``((x - obs_mean) / obs_std) / sqrt(path_dim)``. The
    default ``path_dim`` is the longitude count, i.e. the dimension of a
    latitude-slice path; pass the flattened patch size when scoring patches.
    """
    if not np.isfinite(obs_std) or obs_std <= 0:
        raise ValueError(f"obs_std must be positive, got {obs_std!r}")
    if path_dim is None:
        path_dim = field.n_lon
    if path_dim <= 0:
        raise ValueError("path_dim must be positive")
    scaled = (field.data - obs_mean) / obs_std / np.sqrt(path_dim)
    return GridField(data=scaled, lat_centers=field.lat_centers,
                     lon_centers=field.lon_centers, times=field.times)


def latitude_slice_streams(field: GridField, time_window) -> list[tuple[int, DataStream]]:
    """One stream per latitude index; stream dimension = number of longitudes.

    ``time_window`` is an index range (start, stop) on the time axis; the
    window must select at least two points so each slice is a real path.
    """
    start, stop = check_index_range(time_window, field.n_times, min_len=2)
    times = field.times[start:stop]
    out = []
    for j in range(field.n_lat):
        values = np.ascontiguousarray(field.data[start:stop, j, :])
        out.append((j, DataStream(times=times, values=values)))
    return out


def extract_patches(field: GridField, patch_size, lat_starts, lon_starts,
                    time_window) -> list[DataStream]:
    """Flattened spatial patches as path families.

    Each (lat_start, lon_start) pair yields one stream of dimension h*w with
    values flattened latitude-major. Longitude indices wrap modulo the grid
    width; latitude does not wrap and overruns raise.
    """
    h, w = int(patch_size[0]), int(patch_size[1])
    if h <= 0 or w <= 0:
        raise ValueError("patch_size entries must be positive")
    if h > field.n_lat:
        raise ValueError(f"patch height {h} exceeds {field.n_lat} latitudes")
    start, stop = check_index_range(time_window, field.n_times, min_len=2)
    times = field.times[start:stop]
    streams = []
    for ls in lat_starts:
        ls = int(ls)
        if ls < 0 or ls + h > field.n_lat:
            raise ValueError(
                f"latitude patch [{ls}, {ls + h}) out of bounds for {field.n_lat} rows"
            )
        for lo in lon_starts:
            cols = (int(lo) + np.arange(w)) % field.n_lon
            block = field.data[start:stop, ls:ls + h, :][:, :, cols]
            values = block.reshape(stop - start, h * w)
            streams.append(DataStream(times=times, values=np.ascontiguousarray(values)))
    return streams
