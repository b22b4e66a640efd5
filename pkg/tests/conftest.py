"""Shared fixture builders and the acceptance-summary terminal hook."""

import numpy as np

from sigscore.bundle import write_bundle

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def record_criterion(number: int, name: str, ok: bool, note: str = "") -> bool:
    line = f"criterion {number:2d} {name}: {'PASS' if ok else 'FAIL'}"
    if note:
        line += f" ({note})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def grid_geometry(n_lat=6, n_lon=8):
    """Evenly spaced latitude bands covering the sphere plus wrap longitudes."""
    half = 90.0 / n_lat
    lats = np.linspace(-90.0 + half, 90.0 - half, n_lat)
    lat_bounds = np.stack([lats - half, lats + half], axis=1)
    lons = np.linspace(0.0, 360.0, n_lon, endpoint=False)
    return lats, lat_bounds, lons


def build_demo_bundles(root, seed=3, n_init=6, n_lead=5, n_mem=3, n_lat=6,
                       n_lon=8, target_noise=0.3, baseline_noise=0.45,
                       target_fill=None):
    """Write aligned target/baseline/observation bundles under root.

    Observations are a daily series long enough to cover every valid time;
    forecasts are observation + member noise. ``target_fill`` overrides the
    target values with a constant (used to provoke kernel overflow).
    """
    rng = np.random.default_rng(seed)
    lats, lat_bounds, lons = grid_geometry(n_lat, n_lon)
    init_times = [f"2020-01-{d:02d}T00:00:00" for d in range(1, n_init + 1)]
    lead_hours = [24.0 * k for k in range(1, n_lead + 1)]
    obs_times = [f"2020-01-{d:02d}T00:00:00" for d in range(1, n_init + n_lead + 1)]

    truth = rng.normal(size=(len(obs_times), n_lat, n_lon))
    truth = truth.astype(np.float32).astype(np.float64)
    target = np.empty((n_init, n_lead, n_mem, n_lat, n_lon))
    baseline = np.empty_like(target)
    for i in range(n_init):
        for k in range(n_lead):
            valid = truth[i + 1 + k]
            target[i, k] = valid + target_noise * rng.normal(size=(n_mem, n_lat, n_lon))
            baseline[i, k] = valid + baseline_noise * rng.normal(size=(n_mem, n_lat, n_lon))
    if target_fill is not None:
        target[:] = target_fill

    coords_fc = {"init_times": init_times, "lead_hours": lead_hours,
                 "lat_centers": lats, "lat_bounds": lat_bounds, "lon_centers": lons}
    coords_obs = {"times": obs_times, "lat_centers": lats,
                  "lat_bounds": lat_bounds, "lon_centers": lons}
    paths = {
        "target": write_bundle(root / "target", "forecast", {"t2m": target},
                               coords_fc, {"t2m": "K"}),
        "baseline": write_bundle(root / "baseline", "forecast", {"t2m": baseline},
                                 coords_fc, {"t2m": "K"}),
        "obs": write_bundle(root / "obs", "observation", {"t2m": truth},
                            coords_obs, {"t2m": "K"}),
    }
    return paths
