"""Flat binary grid bundles with a JSON manifest.

A bundle is a directory holding one little-endian float32 C-order binary
file per variable plus a manifest describing dims, coordinates, and
per-variable metadata. Forecast bundles are indexed
(init_time, lead, member, lat, lon); observation bundles (time, lat, lon).
`write_bundle` followed by `load_bundle` returns identical arrays and
coordinates. All validation failures raise IngestionError.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import IngestionError

__all__ = [
    "SCHEMA_VERSION",
    "GridBundleManifest",
    "EnsembleForecastGrid",
    "ObservationGrid",
    "load_bundle",
    "write_bundle",
    "align_observations",
]

SCHEMA_VERSION = 1

FORECAST_DIMS = ("init_time", "lead", "member", "lat", "lon")
OBS_DIMS = ("time", "lat", "lon")


@dataclass(frozen=True)
class GridBundleManifest:
    """Parsed manifest: dims in fixed order, coords, per-variable metadata."""

    schema_version: int
    kind: str
    dims: dict
    coords: dict
    variables: dict
    root: Path


@dataclass(frozen=True)
class EnsembleForecastGrid:
    """variables: name -> (n_init, n_lead, n_member, n_lat, n_lon) float64."""

    variables: dict
    init_times: tuple
    lead_hours: np.ndarray
    lat_centers: np.ndarray
    lat_bounds: np.ndarray
    lon_centers: np.ndarray
    units: dict = field(default_factory=dict)

    @property
    def shape(self):
        return next(iter(self.variables.values())).shape


@dataclass(frozen=True)
class ObservationGrid:
    """variables: name -> (n_time, n_lat, n_lon) float64."""

    variables: dict
    times: tuple
    lat_centers: np.ndarray
    lat_bounds: np.ndarray
    lon_centers: np.ndarray
    units: dict = field(default_factory=dict)

    @property
    def shape(self):
        return next(iter(self.variables.values())).shape


def _fail(msg: str) -> None:
    raise IngestionError(msg)


def _coord_array(coords, key, length, *, strictly_monotone=False, increasing=False):
    if key not in coords:
        _fail(f"manifest coords missing {key!r}")
    arr = np.asarray(coords[key], dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != length:
        _fail(f"coord {key!r} must have length {length}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        _fail(f"coord {key!r} contains non-finite values")
    d = np.diff(arr)
    if increasing and not np.all(d > 0):
        _fail(f"coord {key!r} must be strictly increasing")
    if strictly_monotone and not (np.all(d > 0) or np.all(d < 0)):
        _fail(f"coord {key!r} must be strictly monotone")
    return arr


def _parse_times(values, key):
    out = []
    for v in values:
        try:
            out.append(datetime.fromisoformat(str(v)))
        except ValueError:
            _fail(f"coord {key!r} entry {v!r} is not an ISO-8601 timestamp")
    if any(b <= a for a, b in zip(out, out[1:])):
        _fail(f"coord {key!r} must be strictly increasing")
    return tuple(str(v) for v in values)


def _read_manifest(manifest_path) -> GridBundleManifest:
    path = Path(manifest_path)
    if not path.is_file():
        _fail(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        _fail(f"manifest is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        _fail("manifest root must be a JSON object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        _fail(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    kind = raw.get("kind")
    if kind not in ("forecast", "observation"):
        _fail(f"manifest kind must be 'forecast' or 'observation', got {kind!r}")
    dims = raw.get("dims")
    expected = FORECAST_DIMS if kind == "forecast" else OBS_DIMS
    if not isinstance(dims, dict) or tuple(dims) != expected:
        _fail(f"dims must be exactly {list(expected)} in order, got "
              f"{list(dims) if isinstance(dims, dict) else dims!r}")
    for name, size in dims.items():
        if not isinstance(size, int) or size < 1:
            _fail(f"dim {name!r} must be a positive integer, got {size!r}")
    coords = raw.get("coords")
    if not isinstance(coords, dict):
        _fail("manifest coords must be an object")
    variables = raw.get("variables")
    if not isinstance(variables, dict) or not variables:
        _fail("manifest must declare at least one variable")
    return GridBundleManifest(schema_version=version, kind=kind, dims=dict(dims),
                              coords=dict(coords), variables=dict(variables),
                              root=path.parent)


def _validate_geometry(coords, n_lat, n_lon):
    lat_centers = _coord_array(coords, "lat_centers", n_lat, strictly_monotone=True)
    lon_centers = _coord_array(coords, "lon_centers", n_lon, increasing=True)
    if "lat_bounds" not in coords:
        _fail("manifest coords missing 'lat_bounds'")
    bounds = np.asarray(coords["lat_bounds"], dtype=np.float64)
    if bounds.shape != (n_lat, 2):
        _fail(f"lat_bounds must have shape ({n_lat}, 2), got {bounds.shape}")
    if not np.all(np.isfinite(bounds)):
        _fail("lat_bounds contains non-finite values")
    lo = np.minimum(bounds[:, 0], bounds[:, 1])
    hi = np.maximum(bounds[:, 0], bounds[:, 1])
    if not np.all((lo <= lat_centers) & (lat_centers <= hi)):
        bad = np.where(~((lo <= lat_centers) & (lat_centers <= hi)))[0]
        _fail(f"lat_bounds do not cover lat_centers at rows {bad.tolist()}")
    return lat_centers, bounds, lon_centers


def _load_variable(manifest: GridBundleManifest, name: str, meta, shape) -> np.ndarray:
    if not isinstance(meta, dict):
        _fail(f"variable {name!r} metadata must be an object")
    for key, required in (("dtype", "float32"), ("byte_order", "little"), ("layout", "C")):
        if meta.get(key) != required:
            _fail(f"variable {name!r} {key} must be {required!r}, got {meta.get(key)!r}")
    rel = meta.get("file")
    if not isinstance(rel, str) or not rel:
        _fail(f"variable {name!r} missing 'file'")
    path = manifest.root / rel
    if not path.is_file():
        _fail(f"variable {name!r} data file not found: {path}")
    expected = math.prod(shape) * 4
    actual = path.stat().st_size
    if actual != expected:
        _fail(f"variable {name!r} file size {actual} bytes does not match "
              f"dims {shape} (expected {expected})")
    data = np.fromfile(path, dtype="<f4").reshape(shape).astype(np.float64)
    if not np.all(np.isfinite(data)):
        n_bad = int(np.size(data) - np.isfinite(data).sum())
        _fail(f"variable {name!r} contains {n_bad} non-finite values")
    return np.ascontiguousarray(data)


def load_bundle(manifest_path):
    """Load and fully validate a bundle; returns EnsembleForecastGrid or
    ObservationGrid."""
    manifest = _read_manifest(manifest_path)
    dims = manifest.dims
    n_lat, n_lon = dims["lat"], dims["lon"]
    lat_centers, lat_bounds, lon_centers = _validate_geometry(manifest.coords, n_lat, n_lon)
    shape = tuple(dims[k] for k in (FORECAST_DIMS if manifest.kind == "forecast" else OBS_DIMS))
    arrays, units = {}, {}
    for name in sorted(manifest.variables):
        arrays[name] = _load_variable(manifest, name, manifest.variables[name], shape)
        units[name] = str(manifest.variables[name].get("units", ""))
    if manifest.kind == "forecast":
        init_times = _parse_times(manifest.coords.get("init_times", ()), "init_times")
        if len(init_times) != dims["init_time"]:
            _fail(f"init_times length {len(init_times)} does not match dim "
                  f"{dims['init_time']}")
        lead_hours = _coord_array(manifest.coords, "lead_hours", dims["lead"], increasing=True)
        return EnsembleForecastGrid(variables=arrays, init_times=init_times,
                                    lead_hours=lead_hours, lat_centers=lat_centers,
                                    lat_bounds=lat_bounds, lon_centers=lon_centers,
                                    units=units)
    times = _parse_times(manifest.coords.get("times", ()), "times")
    if len(times) != dims["time"]:
        _fail(f"times length {len(times)} does not match dim {dims['time']}")
    return ObservationGrid(variables=arrays, times=times, lat_centers=lat_centers,
                           lat_bounds=lat_bounds, lon_centers=lon_centers, units=units)


def write_bundle(out_dir, kind: str, variables: dict, coords: dict,
                 units: dict | None = None) -> Path:
    """Write arrays + manifest to out_dir; returns the manifest path.

    Arrays are stored little-endian float32 C-order, so a round trip is exact
    for float32-representable values.
    """
    if kind not in ("forecast", "observation"):
        raise ValueError(f"kind must be 'forecast' or 'observation', got {kind!r}")
    dims_order = FORECAST_DIMS if kind == "forecast" else OBS_DIMS
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    units = units or {}
    shapes = {np.asarray(a).shape for a in variables.values()}
    if len(shapes) != 1:
        raise ValueError(f"all variables must share one shape, got {sorted(shapes)}")
    shape = shapes.pop()
    if len(shape) != len(dims_order):
        raise ValueError(f"{kind} arrays must be {len(dims_order)}-d "
                         f"{dims_order}, got shape {shape}")
    var_meta = {}
    for name in sorted(variables):
        rel = f"{name}.bin"
        arr = np.ascontiguousarray(np.asarray(variables[name], dtype="<f4"))
        arr.tofile(out / rel)
        var_meta[name] = {"units": str(units.get(name, "")), "file": rel,
                          "dtype": "float32", "byte_order": "little", "layout": "C"}

    def _listify(v):
        a = np.asarray(v)
        return a.tolist() if a.dtype.kind in "fiu" else [str(x) for x in np.ravel(v)]

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "dims": {k: int(s) for k, s in zip(dims_order, shape)},
        "coords": {k: _listify(coords[k]) for k in sorted(coords)},
        "variables": var_meta,
    }
    path = out / "manifest.json"
    # dims carry meaning through key order, so the dict is built in canonical
    # order and dumped unsorted; every dict here has a fixed insertion order,
    # keeping the file byte-deterministic.
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def align_observations(forecast: EnsembleForecastGrid, obs: ObservationGrid) -> dict:
    """Pair each (init, lead) with the observation at init + lead hours.

    Returns variable -> (n_init, n_lead, n_lat, n_lon). Geometry must match
    exactly; every valid time must exist in the observation series.
    """
    mism = [ax for ax, (a, b) in (("lat", (forecast.lat_centers, obs.lat_centers)),
                                  ("lon", (forecast.lon_centers, obs.lon_centers)))
            if not np.array_equal(a, b)]
    if mism:
        _fail(f"forecast/observation geometry mismatch on axes {mism}")
    missing_vars = sorted(set(forecast.variables) - set(obs.variables))
    if missing_vars:
        _fail(f"observation bundle missing variables {missing_vars}")
    index = {datetime.fromisoformat(t): i for i, t in enumerate(obs.times)}
    rows = []
    for t in forecast.init_times:
        init = datetime.fromisoformat(t)
        row = []
        for h in forecast.lead_hours:
            stamp = init + timedelta(hours=float(h))
            if stamp not in index:
                _fail(f"no observation at valid time {stamp.isoformat()} "
                      f"(init {t}, lead +{float(h)}h)")
            row.append(index[stamp])
        rows.append(row)
    idx = np.asarray(rows, dtype=int)
    return {name: arr[idx] for name, arr in obs.variables.items()}
