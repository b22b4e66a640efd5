"""Classical verification metrics for gridded forecasts.

Array convention throughout: fields are (T, J, I) = (time, lat, lon),
ensembles add a leading member axis (M, T, J, I), and latitude weights have
length J with mean exactly 1. Quantiles always use linear interpolation
between order statistics so every result is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_float_array

__all__ = [
    "LatWeights",
    "MetricReport",
    "lat_weights",
    "rmse_lat",
    "nrmse",
    "r2_field",
    "crps_empirical",
    "ncrps_field",
    "rqe",
    "tail_percentiles",
    "calibration_error",
]


@dataclass(frozen=True)
class LatWeights:
    """Positive per-latitude weights with mean 1 (self-normalized)."""

    weights: np.ndarray

    def __post_init__(self):
        w = check_float_array(self.weights, "weights", ndim=1)
        if (w <= 0).any():
            raise ValueError("latitude weights must be positive")
        if abs(w.mean() - 1.0) > 1e-12:
            raise ValueError(f"latitude weights must average to 1, got mean {w.mean()!r}")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)


def lat_weights(lat_bounds) -> LatWeights:
    """Area weights from per-cell latitude bounds.

    lat_bounds is a sequence of (lower, upper) degree pairs; the weight of
    band j is its sine increment normalized by the mean sine increment, so
    the result always averages to exactly 1.
    """
    bounds = check_float_array(lat_bounds, "lat_bounds", ndim=2)
    if bounds.shape[1] != 2:
        raise ValueError(f"lat_bounds must be (J, 2) pairs, got shape {bounds.shape}")
    lower, upper = bounds[:, 0], bounds[:, 1]
    if (upper <= lower).any():
        raise ValueError("each latitude band needs upper > lower")
    if (lower < -90).any() or (upper > 90).any():
        raise ValueError("latitude bounds must lie in [-90, 90]")
    inc = np.sin(np.deg2rad(upper)) - np.sin(np.deg2rad(lower))
    return LatWeights(weights=inc / inc.mean())


def _weights_array(w, n_lat: int) -> np.ndarray:
    if isinstance(w, LatWeights):
        w = w.weights
    w = check_float_array(w, "weights", ndim=1)
    if len(w) != n_lat:
        raise ValueError(f"got {len(w)} weights for {n_lat} latitudes")
    return w


def _aligned(f, o):
    f = check_float_array(f, "forecast", ndim=3)
    o = check_float_array(o, "observation", ndim=3)
    if f.shape != o.shape:
        raise ValueError(f"shape mismatch: forecast {f.shape} vs observation {o.shape}")
    return f, o


def rmse_lat(f, o, w) -> float:
    """Latitude-weighted RMSE: sqrt(mean over (t, j, i) of L(j) * (f - o)**2)."""
    f, o = _aligned(f, o)
    w = _weights_array(w, f.shape[1])
    return float(np.sqrt(np.mean(w[None, :, None] * (f - o) ** 2)))


def nrmse(f, o, w) -> float:
    """RMSE normalized by the global observation range."""
    f, o = _aligned(f, o)
    rng = float(o.max() - o.min())
    if rng <= 0:
        raise ValueError("observation range is zero; NRMSE undefined")
    return rmse_lat(f, o, w) / rng


def r2_field(f, o) -> np.ndarray:
    """Per-cell coefficient of determination, 1 - SSE/SST over time.

    Cells with zero temporal observation variance are degenerate and
    returned as NaN so aggregates can exclude them.
    """
    f, o = _aligned(f, o)
    if f.shape[0] < 2:
        raise ValueError("r2_field needs at least two time steps")
    sse = ((f - o) ** 2).sum(axis=0)
    sst = ((o - o.mean(axis=0, keepdims=True)) ** 2).sum(axis=0)
    out = np.full(sse.shape, np.nan)
    ok = sst > 0
    out[ok] = 1.0 - sse[ok] / sst[ok]
    return out


def _weighted_norm(g: np.ndarray, w: np.ndarray) -> np.ndarray:
    # (..., T, J, I) -> (..., T): mean over cells of L(j) |g|
    return np.mean(w[None, :, None] * np.abs(g), axis=(-2, -1))


def crps_empirical(f_ensemble, o, w) -> float:
    """Latitude-weighted empirical CRPS of an ensemble.

    Uses the probability-weighted form

        (1/T) sum_t [ (1/M) sum_m ||f_m - o|| - (1/(2 M^2)) sum_{m,n} ||f_m - f_n|| ]

    whose spread constant reproduces the defining integral of the empirical
    CDF, int (F(z) - 1{z >= o})^2 dz, exactly; a single member reduces it to
    the weighted MAE with no special casing. ||.|| is the latitude-weighted
    cell mean of absolute values.
    """
    f = check_float_array(f_ensemble, "forecast ensemble", ndim=4)
    o = check_float_array(o, "observation", ndim=3)
    if f.shape[1:] != o.shape:
        raise ValueError(f"ensemble shape {f.shape} misaligned with observation {o.shape}")
    m = f.shape[0]
    if m < 1:
        raise ValueError("ensemble is empty")
    w = _weights_array(w, o.shape[1])
    term1 = _weighted_norm(f - o[None], w).mean(axis=0)          # (T,)
    spread = np.zeros(o.shape[0])
    for r in range(m):
        spread += _weighted_norm(f - f[r][None], w).sum(axis=0)
    spread /= 2.0 * m * m
    return float(np.mean(term1 - spread))


def ncrps_field(f_ensemble, o) -> np.ndarray:
    """Per-cell CRPS divided by the cell's temporal observation std (ddof 0).

    Zero-std cells come back NaN (degenerate).
    """
    f = check_float_array(f_ensemble, "forecast ensemble", ndim=4)
    o = check_float_array(o, "observation", ndim=3)
    if f.shape[1:] != o.shape:
        raise ValueError(f"ensemble shape {f.shape} misaligned with observation {o.shape}")
    m = f.shape[0]
    term1 = np.abs(f - o[None]).mean(axis=0)                     # (T, J, I)
    spread = np.zeros_like(o)
    for r in range(m):
        spread += np.abs(f - f[r][None]).sum(axis=0)
    spread /= 2.0 * m * m
    crps_cell = (term1 - spread).mean(axis=0)                    # (J, I)
    std = o.std(axis=0, ddof=0)
    out = np.full(crps_cell.shape, np.nan)
    ok = std > 0
    out[ok] = crps_cell[ok] / std[ok]
    return out


def tail_percentiles(n: int = 50, start: float = 0.90, stop: float = 0.9999) -> np.ndarray:
    """n percentiles spaced evenly in log tail mass between start and stop."""
    if not (0 < start < stop < 1):
        raise ValueError("need 0 < start < stop < 1")
    mass = np.power(10.0, np.linspace(np.log10(1 - start), np.log10(1 - stop), n))
    return 1.0 - mass


def rqe(f_samples, o_samples, percentiles=None) -> float:
    """Relative quantile error over tail percentiles.

    Sum over d of (Qhat_d - Q_d)/Q_d, Qhat from pooled forecast samples and Q
    from pooled observations. Positive values mean the forecast overstates
    extremes. Default percentiles: 50, evenly log-spaced between the 90th and
    99.99th.
    """
    f = check_float_array(np.ravel(f_samples), "forecast samples", ndim=1)
    o = check_float_array(np.ravel(o_samples), "observation samples", ndim=1)
    if percentiles is None:
        percentiles = tail_percentiles()
    percentiles = check_float_array(percentiles, "percentiles", ndim=1)
    q_hat = np.quantile(f, percentiles, method="linear")
    q_obs = np.quantile(o, percentiles, method="linear")
    if (q_obs == 0).any():
        raise ValueError("an observation quantile is exactly zero; shift or rescale first")
    return float(np.sum((q_hat - q_obs) / q_obs))


def calibration_error(f_ensemble, o, levels=None) -> float:
    """Median absolute deviation between nominal and empirical coverage.

    For each credibility level alpha the central interval
    [q_{(1-alpha)/2}, q_{(1+alpha)/2}] is read off each case's ensemble; the
    empirical coverage is compared to alpha and the median |alpha - coverage|
    over levels is returned. 0 is perfectly calibrated, about 0.5 is fully
    miscalibrated.
    """
    f = check_float_array(f_ensemble, "forecast ensemble", ndim=2)
    o = check_float_array(o, "observations", ndim=1)
    m, n = f.shape
    if m < 2:
        raise ValueError(f"calibration needs at least 2 members, got {m}")
    if len(o) != n:
        raise ValueError(f"{len(o)} observations for {n} forecast cases")
    if levels is None:
        levels = np.linspace(0.01, 1.0, 100)
    levels = check_float_array(levels, "levels", ndim=1)
    if (levels <= 0).any() or (levels > 1).any():
        raise ValueError("levels must lie in (0, 1]")
    lo_q = (1.0 - levels) / 2.0
    hi_q = (1.0 + levels) / 2.0
    lo = np.quantile(f, lo_q, axis=0, method="linear")           # (L, N)
    hi = np.quantile(f, hi_q, axis=0, method="linear")
    coverage = ((o[None, :] >= lo) & (o[None, :] <= hi)).mean(axis=1)
    return float(np.median(np.abs(levels - coverage)))


@dataclass(frozen=True)
class MetricReport:
    """Per-variable metric values plus degenerate-cell bookkeeping."""

    variables: dict
    degenerate: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"variables": self.variables, "degenerate": self.degenerate}
