"""Region-split scorecards comparing a target model against a baseline.

Signature-kernel cells are computed per path length (trajectory prefixes of
k segments, k from 2 to lead count minus one); classical metrics are
computed per lead. Every cell carries a normalized difference

    s * (baseline - target) / max(|baseline|, 1e-12),   s = +1 when lower is better,

clamped to [-1, 1], so positive always means the target wins. Model arrays
are indexed (init, member, lead, lat, lon) and observations
(init, lead, lat, lon).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_float_array, check_fraction
from .kernel import SignatureKernel
from .metrics import lat_weights, rmse_lat, crps_empirical
from .paths import PathAugmenter
from .scoring import lat_weighted_sig_score

__all__ = [
    "Region",
    "ScorecardCell",
    "Scorecard",
    "standard_regions",
    "region_indices",
    "sigk_by_pathlength",
    "classical_by_lead",
    "normalized_difference",
    "build_scorecard",
    "subsample_inits",
    "scorecard_to_csv",
    "scorecard_to_json",
    "scorecard_to_svg",
    "CLASSICAL_METRICS",
]

CSV_HEADER = "variable,region,metric,axis,target,baseline,normalized_diff"

CLASSICAL_METRICS = ("RMSE", "MSE", "CRPS", "ENSMSE")


@dataclass(frozen=True)
class Region:
    """A latitude band [lo, hi); hi = 90 is treated as inclusive so the
    standard trio partitions the sphere with no overlap."""

    name: str
    lat_range: tuple

    def contains(self, lat: float) -> bool:
        lo, hi = self.lat_range
        if lat == 90.0 and hi == 90.0:
            return True
        return lo <= lat < hi


def standard_regions() -> dict:
    """The standard trio keyed by short alias."""
    return {
        "NH": Region("NorthernHemisphere", (20.0, 90.0)),
        "Tropics": Region("Tropics", (-20.0, 20.0)),
        "SH": Region("SouthernHemisphere", (-90.0, -20.0)),
    }


def region_indices(lat_centers, region: Region) -> np.ndarray:
    lats = check_float_array(lat_centers, "lat_centers", ndim=1)
    idx = np.array([j for j, la in enumerate(lats) if region.contains(float(la))], dtype=int)
    if idx.size == 0:
        raise ValueError(f"region {region.name} selects no latitude slices")
    return idx


@dataclass(frozen=True)
class ScorecardCell:
    variable: str
    region: str
    metric: str
    axis_value: int
    target_score: float
    baseline_score: float
    normalized_diff: float


@dataclass(frozen=True)
class Scorecard:
    cells: tuple
    metadata: dict = field(default_factory=dict)


def normalized_difference(target: float, baseline: float, orientation: str = "lower_better") -> float:
    """Signed relative difference, positive when the target is better."""
    if orientation == "lower_better":
        sign = 1.0
    elif orientation == "higher_better":
        sign = -1.0
    else:
        raise ValueError(f"orientation must be 'lower_better' or 'higher_better', got {orientation!r}")
    value = sign * (baseline - target) / max(abs(baseline), 1e-12)
    return float(min(1.0, max(-1.0, value)))


def subsample_inits(init_times, fraction: float):
    """Evenly strided subsequence of ceil(fraction * n) initialisation times."""
    items = list(init_times)
    if not items:
        return []
    check_fraction(fraction, "fraction")
    n = len(items)
    m = math.ceil(fraction * n)
    return [items[(i * n) // m] for i in range(m)]


def _check_model_arrays(model, obs):
    model = np.asarray(model, dtype=np.float64)
    obs = np.asarray(obs, dtype=np.float64)
    if model.ndim != 5:
        raise ValueError(f"model must be (init, member, lead, lat, lon), got shape {model.shape}")
    if obs.ndim != 4:
        raise ValueError(f"obs must be (init, lead, lat, lon), got shape {obs.shape}")
    expected = (model.shape[0],) + model.shape[2:]
    if obs.shape != expected:
        bad = [name for name, x, y in zip(("init", "lead", "lat", "lon"),
                                          obs.shape, expected) if x != y]
        raise ValueError(
            f"obs shape {obs.shape} misaligned with model {model.shape} "
            f"on axes {bad}"
        )
    return model, obs


def sigk_by_pathlength(model, obs, region: Region, lat_centers, lat_bounds,
                       cfg: SignatureKernel | None = None, mode: str = "score",
                       path_lengths=None, pipeline: PathAugmenter | None = None,
                       workers=None) -> dict:
    """Signature-kernel score/distance per path length, averaged over inits.

    Observations and model values are normalized by the global observation
    mean/std and the 1/sqrt(n_lon) slice factor before any kernel call. Path
    length k uses exactly the first k+1 lead points; stamps are the lead
    indices 1..k+1. Distance mode reduces the ensemble to its mean.
    """
    model, obs = _check_model_arrays(model, obs)
    n_init, n_mem, n_lead, n_lat, n_lon = model.shape
    if n_lead < 3:
        raise ValueError("need at least 3 leads for a path-length sweep")
    js = region_indices(lat_centers, region)
    bounds = check_float_array(lat_bounds, "lat_bounds", ndim=2)
    w = lat_weights(bounds[js]).weights
    if path_lengths is None:
        path_lengths = range(2, n_lead)
    mu, sd = float(obs.mean()), float(obs.std())
    if sd <= 0:
        raise ValueError("observations are constant; kernel normalization undefined")
    scale = 1.0 / (sd * np.sqrt(n_lon))
    obs_n = (obs[:, :, js, :] - mu) * scale
    model_n = (model[:, :, :, js, :] - mu) * scale
    if mode == "distance":
        forecast_n = model_n.mean(axis=1)
    elif mode == "score":
        forecast_n = model_n
    else:
        raise ValueError(f"mode must be 'score' or 'distance', got {mode!r}")

    out = {}
    for k in path_lengths:
        k = int(k)
        if not 2 <= k <= n_lead - 1:
            raise ValueError(f"path length {k} outside [2, {n_lead - 1}]")
        npts = k + 1
        fc = forecast_n[:, :, :npts] if mode == "score" else forecast_n[:, :npts]
        value = lat_weighted_sig_score(
            fc, obs_n[:, :npts], w, mode=mode, cfg=cfg, pipeline=pipeline,
            times=np.arange(1, npts + 1, dtype=np.float64), workers=workers,
        )
        out[k] = value / n_init
    return out


def classical_by_lead(model, obs, region: Region, metric: str,
                      lat_centers=None, lat_bounds=None) -> dict:
    """Per-lead latitude-weighted classical metric over a region.

    RMSE and ENSMSE evaluate the ensemble mean (root/square respectively);
    MSE averages each member's weighted MSE; CRPS is the ensemble CRPS. The
    init axis plays the role of time inside each lead.
    """
    if metric not in CLASSICAL_METRICS:
        raise ValueError(f"unsupported metric {metric!r}; supported: {', '.join(CLASSICAL_METRICS)}")
    model, obs = _check_model_arrays(model, obs)
    js = region_indices(lat_centers, region)
    bounds = check_float_array(lat_bounds, "lat_bounds", ndim=2)
    w = lat_weights(bounds[js]).weights
    model = model[:, :, :, js, :]
    obs = obs[:, :, js, :]
    n_lead = model.shape[2]
    out = {}
    for h in range(n_lead):
        f = model[:, :, h]                       # (init, member, lat, lon)
        o = obs[:, h]                            # (init, lat, lon)
        if metric == "RMSE":
            value = rmse_lat(f.mean(axis=1), o, w)
        elif metric == "ENSMSE":
            value = rmse_lat(f.mean(axis=1), o, w) ** 2
        elif metric == "MSE":
            value = float(np.mean(w[None, None, :, None] * (f - o[:, None]) ** 2))
        else:                                    # CRPS
            value = crps_empirical(f.transpose(1, 0, 2, 3), o, w)
        out[h + 1] = value
    return out


def build_scorecard(target, baseline, obs, lat_centers, lat_bounds,
                    regions=None, metrics=None, cfg: SignatureKernel | None = None,
                    path_lengths=None, pipeline: PathAugmenter | None = None,
                    metadata=None, workers=None) -> Scorecard:
    """Full cross-product scorecard of (variable, region, metric, axis) cells.

    target/baseline/obs are dicts variable -> array ((init, member, lead,
    lat, lon) for models, (init, lead, lat, lon) for observations). Both
    models must be aligned to the observations; mismatches raise with the
    offending axes named. Member counts may differ between the models.
    """
    if regions is None:
        regions = standard_regions()
    if metrics is None:
        metrics = list(CLASSICAL_METRICS) + ["SIGK"]
    if set(target) != set(baseline) or set(target) != set(obs):
        raise ValueError(
            f"variable sets differ: target {sorted(target)}, baseline {sorted(baseline)}, "
            f"obs {sorted(obs)}"
        )
    cells = []
    for var in sorted(target):
        t_arr, o_arr = _check_model_arrays(target[var], obs[var])
        b_arr, _ = _check_model_arrays(baseline[var], obs[var])
        for rkey in sorted(regions):
            region = regions[rkey]
            for metric in sorted(metrics):
                if metric == "SIGK":
                    tv = sigk_by_pathlength(t_arr, o_arr, region, lat_centers, lat_bounds,
                                            cfg=cfg, path_lengths=path_lengths,
                                            pipeline=pipeline, workers=workers)
                    bv = sigk_by_pathlength(b_arr, o_arr, region, lat_centers, lat_bounds,
                                            cfg=cfg, path_lengths=path_lengths,
                                            pipeline=pipeline, workers=workers)
                else:
                    tv = classical_by_lead(t_arr, o_arr, region, metric, lat_centers, lat_bounds)
                    bv = classical_by_lead(b_arr, o_arr, region, metric, lat_centers, lat_bounds)
                for axis in sorted(tv):
                    cells.append(ScorecardCell(
                        variable=var, region=region.name, metric=metric,
                        axis_value=int(axis),
                        target_score=float(tv[axis]), baseline_score=float(bv[axis]),
                        normalized_diff=normalized_difference(tv[axis], bv[axis]),
                    ))
    cells.sort(key=lambda c: (c.variable, c.region, c.metric, c.axis_value))
    return Scorecard(cells=tuple(cells), metadata=dict(metadata or {}))


def scorecard_to_csv(scorecard: Scorecard) -> str:
    lines = [CSV_HEADER]
    for c in scorecard.cells:
        lines.append(
            f"{c.variable},{c.region},{c.metric},{c.axis_value},"
            f"{c.target_score!r},{c.baseline_score!r},{c.normalized_diff!r}"
        )
    return "\n".join(lines) + "\n"


def scorecard_to_json(scorecard: Scorecard) -> str:
    payload = {
        "metadata": scorecard.metadata,
        "cells": [
            {
                "variable": c.variable, "region": c.region, "metric": c.metric,
                "axis": c.axis_value, "target": c.target_score,
                "baseline": c.baseline_score, "normalized_diff": c.normalized_diff,
            }
            for c in scorecard.cells
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _cell_color(v: float) -> str:
    # diverging map centered at 0: negative red, positive blue
    t = min(1.0, abs(v))
    anchor = (33, 102, 172) if v >= 0 else (178, 24, 43)
    rgb = tuple(round(255 + t * (a - 255)) for a in anchor)
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def scorecard_to_svg(scorecard: Scorecard, cell: int = 26, pad: int = 4) -> str:
    """Hand-rolled heatmap: one panel per (variable, region), metrics as rows,
    axis values as columns, diverging colors centered at zero."""
    panels = {}
    for c in scorecard.cells:
        panels.setdefault((c.variable, c.region), []).append(c)
    label_w, title_h, tick_h = 70, 18, 12
    blocks, y_off, width = [], pad, 0
    for (var, region) in sorted(panels):
        cells = panels[(var, region)]
        rows = sorted({c.metric for c in cells})
        cols_by_metric = {m: sorted(c.axis_value for c in cells if c.metric == m) for m in rows}
        n_cols = max(len(v) for v in cols_by_metric.values())
        panel_w = label_w + n_cols * cell + pad
        width = max(width, panel_w)
        blocks.append(
            f'<text x="{pad}" y="{y_off + 12}" font-size="12" font-family="sans-serif" '
            f'font-weight="bold">{var} / {region}</text>'
        )
        y = y_off + title_h
        for metric in rows:
            blocks.append(
                f'<text x="{pad}" y="{y + cell * 0.7:.0f}" font-size="10" '
                f'font-family="sans-serif">{metric}</text>'
            )
            row_cells = sorted((c for c in cells if c.metric == metric),
                               key=lambda c: c.axis_value)
            for i, c in enumerate(row_cells):
                x = label_w + i * cell
                blocks.append(
                    f'<rect x="{x}" y="{y}" width="{cell - 1}" height="{cell - 1}" '
                    f'fill="{_cell_color(c.normalized_diff)}">'
                    f'<title>{c.metric} axis={c.axis_value}: {c.normalized_diff:.4f}</title></rect>'
                )
            y += cell
        last_metric = rows[-1]
        for i, axis in enumerate(cols_by_metric[last_metric]):
            x = label_w + i * cell
            blocks.append(
                f'<text x="{x + cell / 2:.0f}" y="{y + tick_h - 2}" font-size="8" '
                f'text-anchor="middle" font-family="sans-serif">{axis}</text>'
            )
        y_off = y + tick_h + pad
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{y_off}" '
        f'viewBox="0 0 {width} {y_off}">\n' + "\n".join(blocks) + "\n</svg>\n"
    )
    return svg
