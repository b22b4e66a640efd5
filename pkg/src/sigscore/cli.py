"""Command-line interface.

Subcommands: evaluate (classical metric report for one forecast bundle),
scorecard (target vs baseline comparison), preq-demo (toy generator fit on
synthetic data), selftest (quick internal consistency checks).

Exit codes: 0 success, 2 ingestion failure, 3 configuration failure,
4 numerical instability. Outputs are byte-deterministic: sorted JSON keys,
repr float formatting, no timestamps.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .bundle import EnsembleForecastGrid, ObservationGrid, align_observations, load_bundle
from .errors import ConfigError, IngestionError, NumericalInstabilityError
from .kernel import SignatureKernel, goursat_kernel
from .metrics import (MetricReport, calibration_error, crps_empirical, lat_weights,
                      ncrps_field, nrmse, r2_field, rmse_lat, rqe)
from .paths import DataStream, PathAugmenter
from .scorecard import (CLASSICAL_METRICS, build_scorecard, scorecard_to_csv,
                        scorecard_to_json, scorecard_to_svg, standard_regions,
                        subsample_inits)
from .scoring import EnsemblePaths, fit_toy_generator, kernel_score
from .signature import stream_signature, truncated_inner_product

__all__ = ["RunConfig", "load_run_config", "main"]

_KNOWN_METRICS = tuple(sorted(CLASSICAL_METRICS + ("SIGK",)))


@dataclass(frozen=True)
class RunConfig:
    """Run settings; JSON config file first, command-line flags override."""

    kernel: str = "rbf"
    sigma: float = 1.0
    dyadic_order: int = 1
    basepoint: bool = True
    time_coord: bool = True
    lead_lag: bool = False
    pre_scale: float = 1.0
    path_lengths: tuple | None = None
    regions: tuple = ("NH", "SH", "Tropics")
    metrics: tuple = _KNOWN_METRICS
    subsample: float = 1.0
    seed: int = 0
    out_dir: str = "out"
    workers: int | None = None

    def validate(self) -> "RunConfig":
        if self.kernel not in ("rbf", "linear"):
            raise ConfigError(f"kernel must be 'rbf' or 'linear', got {self.kernel!r}")
        if not (isinstance(self.sigma, (int, float)) and self.sigma > 0):
            raise ConfigError(f"sigma must be positive, got {self.sigma!r}")
        if not (isinstance(self.dyadic_order, int) and 0 <= self.dyadic_order <= 6):
            raise ConfigError(f"dyadic_order must be an integer in [0, 6], got {self.dyadic_order!r}")
        if not (isinstance(self.subsample, (int, float)) and 0 < self.subsample <= 1):
            raise ConfigError(f"subsample must lie in (0, 1], got {self.subsample!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        known = standard_regions()
        for r in self.regions:
            if r not in known:
                raise ConfigError(f"unknown region {r!r}; pick from {sorted(known)}")
        for m in self.metrics:
            if m not in _KNOWN_METRICS:
                raise ConfigError(f"unsupported metric {m!r}; pick from {list(_KNOWN_METRICS)}")
        if self.path_lengths is not None:
            for k in self.path_lengths:
                if not (isinstance(k, int) and k >= 2):
                    raise ConfigError(f"path lengths must be integers >= 2, got {k!r}")
        return self

    def signature_kernel(self) -> SignatureKernel:
        return SignatureKernel(kernel=self.kernel, sigma=self.sigma,
                               dyadic_order=self.dyadic_order)

    def pipeline(self) -> PathAugmenter:
        return PathAugmenter(basepoint=self.basepoint, time_coord=self.time_coord,
                             lead_lag=self.lead_lag, pre_scale=self.pre_scale)


def _parse_path_lengths(text: str) -> tuple:
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":", 1))
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(
            f"--path-lengths expects 'lo:hi' or a comma list of integers, got {text!r}"
        ) from None


def _parse_list(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def load_run_config(config_path=None, overrides=None) -> RunConfig:
    """Layer defaults < JSON config file < explicit overrides, then validate."""
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file root must be a JSON object")
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}; known: {sorted(names)}")
        for key in ("regions", "metrics", "path_lengths"):
            if isinstance(raw.get(key), list):
                raw[key] = tuple(raw[key])
        cfg = replace(cfg, **raw)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in names:
            raise ConfigError(f"unknown config override {key!r}")
        cfg = replace(cfg, **{key: value})
    return cfg.validate()


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; configuration failures must exit 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run-config file")
    common.add_argument("--out-dir", dest="out_dir", help="output directory")
    common.add_argument("--seed", type=int)
    parser = _Parser(prog="sigscore",
                     description="signature-kernel forecast verification")
    sub = parser.add_subparsers(dest="command", required=True)

    kernel = argparse.ArgumentParser(add_help=False)
    kernel.add_argument("--kernel", choices=["rbf", "linear"])
    kernel.add_argument("--sigma", type=float)
    kernel.add_argument("--dyadic-order", dest="dyadic_order", type=int)

    p_eval = sub.add_parser("evaluate", parents=[common, kernel],
                            help="classical metric report for a forecast bundle")
    p_eval.add_argument("--manifest", required=True, help="forecast bundle manifest")
    p_eval.add_argument("--obs-manifest", dest="obs_manifest", required=True)
    p_eval.add_argument("--subsample", type=float, help="fraction of inits to keep")

    p_card = sub.add_parser("scorecard", parents=[common, kernel],
                            help="target vs baseline scorecard")
    p_card.add_argument("--manifest", required=True, help="target bundle manifest")
    p_card.add_argument("--baseline-manifest", dest="baseline_manifest", required=True)
    p_card.add_argument("--obs-manifest", dest="obs_manifest", required=True)
    p_card.add_argument("--regions", help="comma list, e.g. NH,Tropics,SH")
    p_card.add_argument("--metrics", help=f"comma list from {list(_KNOWN_METRICS)}")
    p_card.add_argument("--path-lengths", dest="path_lengths",
                        help="'lo:hi' or comma list for SIGK cells")
    p_card.add_argument("--subsample", type=float)
    p_card.add_argument("--svg", action="store_true", help="also write a heatmap")

    sub.add_parser("preq-demo", parents=[common, kernel],
                   help="fit a toy generator on synthetic AR(1) data")
    sub.add_parser("selftest", parents=[common],
                   help="quick internal consistency checks")
    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for name in ("kernel", "sigma", "dyadic_order", "subsample", "seed", "out_dir"):
        overrides[name] = getattr(args, name, None)
    if getattr(args, "regions", None):
        overrides["regions"] = _parse_list(args.regions)
    if getattr(args, "metrics", None):
        overrides["metrics"] = _parse_list(args.metrics)
    if getattr(args, "path_lengths", None):
        overrides["path_lengths"] = _parse_path_lengths(args.path_lengths)
    return load_run_config(getattr(args, "config", None), overrides)


def _load_forecast(path) -> EnsembleForecastGrid:
    bundle = load_bundle(path)
    if not isinstance(bundle, EnsembleForecastGrid):
        raise IngestionError(f"{path}: expected a forecast bundle, got an observation bundle")
    return bundle


def _load_obs(path) -> ObservationGrid:
    bundle = load_bundle(path)
    if not isinstance(bundle, ObservationGrid):
        raise IngestionError(f"{path}: expected an observation bundle, got a forecast bundle")
    return bundle


def _init_indices(n_init: int, fraction: float) -> list:
    return subsample_inits(range(n_init), fraction)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}")


def _dump_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def _evaluate(args) -> int:
    cfg = _config_from_args(args)
    forecast = _load_forecast(args.manifest)
    obs = _load_obs(args.obs_manifest)
    aligned = align_observations(forecast, obs)
    keep = _init_indices(len(forecast.init_times), cfg.subsample)
    w = lat_weights(forecast.lat_bounds).weights
    values, degenerate = {}, {}
    for name in sorted(forecast.variables):
        fc = forecast.variables[name][keep]          # (n, L, m, J, I)
        ob = aligned[name][keep]                     # (n, L, J, I)
        n, lead, m, n_lat, n_lon = fc.shape
        members = fc.transpose(2, 0, 1, 3, 4).reshape(m, n * lead, n_lat, n_lon)
        target = ob.reshape(n * lead, n_lat, n_lon)
        mean = members.mean(axis=0)
        r2 = r2_field(mean, target)
        ncrps = ncrps_field(members, target)
        try:
            nrmse_val = nrmse(mean, target, w)
        except ValueError:
            nrmse_val = None
        try:
            rqe_val = rqe(members, target)
        except ValueError:
            rqe_val = None
        values[name] = {
            "rmse": rmse_lat(mean, target, w),
            "nrmse": nrmse_val,
            "r2_mean": _finite_or_none(np.nanmean(r2)),
            "crps": crps_empirical(members, target, w),
            "ncrps_mean": _finite_or_none(np.nanmean(ncrps)),
            "rqe": rqe_val,
            "calibration_error": calibration_error(
                members.reshape(m, -1), target.ravel()),
        }
        degenerate[name] = {
            "r2_cells": int(np.isnan(r2).sum()),
            "ncrps_cells": int(np.isnan(ncrps).sum()),
        }
    report = MetricReport(variables=values, degenerate=degenerate)
    payload = report.as_dict()
    payload["n_init_used"] = len(keep)
    _write(Path(cfg.out_dir) / "metrics.json", _dump_json(payload))
    return 0


def _model_arrays(forecast: EnsembleForecastGrid, keep) -> dict:
    # bundle layout (init, lead, member, lat, lon) -> scorecard layout
    # (init, member, lead, lat, lon)
    return {name: arr[keep].transpose(0, 2, 1, 3, 4)
            for name, arr in forecast.variables.items()}


def _scorecard(args) -> int:
    cfg = _config_from_args(args)
    target = _load_forecast(args.manifest)
    baseline = _load_forecast(args.baseline_manifest)
    obs = _load_obs(args.obs_manifest)
    if list(target.init_times) != list(baseline.init_times) or not np.array_equal(
            target.lead_hours, baseline.lead_hours):
        raise IngestionError("target and baseline bundles disagree on init_times/lead_hours")
    aligned_t = align_observations(target, obs)
    align_observations(baseline, obs)
    keep = _init_indices(len(target.init_times), cfg.subsample)
    regions = {name: standard_regions()[name] for name in sorted(cfg.regions)}
    card = build_scorecard(
        _model_arrays(target, keep), _model_arrays(baseline, keep),
        {name: arr[keep] for name, arr in aligned_t.items()},
        target.lat_centers, target.lat_bounds,
        regions=regions, metrics=list(cfg.metrics),
        cfg=cfg.signature_kernel(), path_lengths=cfg.path_lengths,
        pipeline=cfg.pipeline(), workers=cfg.workers,
        metadata={
            "kernel": cfg.kernel, "sigma": cfg.sigma,
            "dyadic_order": cfg.dyadic_order, "subsample": cfg.subsample,
            "regions": sorted(cfg.regions), "metrics": sorted(cfg.metrics),
            "n_init_used": len(keep),
        },
    )
    out = Path(cfg.out_dir)
    _write(out / "scorecard.csv", scorecard_to_csv(card))
    _write(out / "scorecard.json", scorecard_to_json(card))
    if args.svg:
        _write(out / "scorecard.svg", scorecard_to_svg(card))
    return 0


def _preq_demo(args) -> int:
    cfg = _config_from_args(args)
    rng = np.random.default_rng(cfg.seed)
    big_t, a_true, s_true = 120, 0.8, 0.5
    obs = np.zeros((big_t, 1))
    for t in range(big_t - 1):
        obs[t + 1] = a_true * obs[t] + s_true * rng.normal()
    fit = fit_toy_generator(
        "ar1", obs, k=2, l=4, m=4, cfg=cfg.signature_kernel(),
        parameter_grid={"coefficient": [0.5, 0.65, 0.8, 0.95],
                        "noise_scale": [0.25, 0.5, 1.0]},
        seed=cfg.seed,
    )
    payload = {
        "family": fit.family,
        "best_params": fit.best_params,
        "best_objective": fit.best_objective,
        "trace": list(fit.trace),
        "truth": {"coefficient": a_true, "noise_scale": s_true},
        "seed": cfg.seed,
    }
    _write(Path(cfg.out_dir) / "preq_trace.json", _dump_json(payload))
    print(f"best params: {json.dumps(fit.best_params, sort_keys=True)}")
    return 0


def _selftest(args) -> int:
    _config_from_args(args)
    checks = []

    times = np.array([0.0, 0.5, 1.0])
    x = DataStream(times, np.array([[0.0, 0.0], [0.3, -0.2], [1.0, 0.4]]))
    y = DataStream(times, np.array([[0.1, 0.0], [-0.2, 0.5], [0.6, 0.9]]))
    lin = SignatureKernel(kernel="linear", dyadic_order=3)
    got = goursat_kernel(x, y, lin)
    want = truncated_inner_product(stream_signature(x, 10), stream_signature(y, 10))
    checks.append(("kernel-vs-signature-oracle", abs(got - want) <= 1e-3 * abs(want)))

    rng = np.random.default_rng(7)
    stamps = np.arange(5.0)
    members = tuple(DataStream(stamps, rng.normal(size=(5, 2))) for _ in range(4))
    target = DataStream(stamps, rng.normal(size=(5, 2)))
    ens = EnsemblePaths(members)
    flipped = EnsemblePaths(members[::-1])
    checks.append(("member-permutation-invariance",
                   kernel_score(ens, target) == kernel_score(flipped, target)))

    f = rng.normal(size=(100, 400))
    o = rng.normal(size=400)
    checks.append(("calibration-sanity", calibration_error(f, o) < 0.1))

    ok = True
    for name, passed in checks:
        print(f"check {name}: {'PASS' if passed else 'FAIL'}")
        ok = ok and passed
    return 0 if ok else 1


_COMMANDS = {
    "evaluate": _evaluate,
    "scorecard": _scorecard,
    "preq-demo": _preq_demo,
    "selftest": _selftest,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except IngestionError as exc:
        print(f"sigscore: ingestion error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"sigscore: config error: {exc}", file=sys.stderr)
        return 3
    except NumericalInstabilityError as exc:
        print(f"sigscore: numerical instability: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
