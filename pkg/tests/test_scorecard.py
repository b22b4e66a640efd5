"""Scorecard assembly tests: regions, cell algebra, render formats."""

import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from conftest import grid_geometry

from sigscore import (
    CLASSICAL_METRICS,
    Region,
    SignatureKernel,
    build_scorecard,
    classical_by_lead,
    normalized_difference,
    region_indices,
    scorecard_to_csv,
    scorecard_to_json,
    scorecard_to_svg,
    sigk_by_pathlength,
    standard_regions,
    subsample_inits,
)
from sigscore.metrics import lat_weights
from sigscore.scorecard import CSV_HEADER

LATS, LAT_BOUNDS, _ = grid_geometry(6, 4)
LIN1 = SignatureKernel(kernel="linear", dyadic_order=1)


def make_models(seed=0, n_init=2, n_mem=2, n_lead=4, n_lat=6, n_lon=4):
    rng = np.random.default_rng(seed)
    obs = rng.normal(size=(n_init, n_lead, n_lat, n_lon))
    target = obs[:, None] + 0.2 * rng.normal(size=(n_init, n_mem, n_lead, n_lat, n_lon))
    baseline = obs[:, None] + 0.4 * rng.normal(size=(n_init, n_mem, n_lead, n_lat, n_lon))
    return target, baseline, obs


def test_standard_regions_partition_the_sphere():
    regions = standard_regions()
    for lat in np.linspace(-90.0, 90.0, 361):
        hits = [k for k, r in regions.items() if r.contains(float(lat))]
        assert len(hits) == 1, lat
    assert regions["NH"].contains(20.0) and regions["NH"].contains(90.0)
    assert regions["Tropics"].contains(-20.0) and not regions["Tropics"].contains(20.0)
    assert regions["SH"].contains(-90.0) and not regions["SH"].contains(-20.0)
    assert regions["NH"].name == "NorthernHemisphere"


def test_region_indices():
    assert np.array_equal(region_indices(LATS, standard_regions()["NH"]), [4, 5])
    assert np.array_equal(region_indices(LATS, standard_regions()["Tropics"]), [2, 3])
    with pytest.raises(ValueError, match="selects no latitude"):
        region_indices(LATS, Region("Arctic", (89.0, 90.0)))


def test_normalized_difference():
    assert normalized_difference(1.0, 2.0) == 0.5
    assert normalized_difference(2.0, 1.0) == -1.0
    assert normalized_difference(3.0, 1.0) == -1.0          # clamped from -2
    assert normalized_difference(0.0, 5.0) == 1.0
    assert normalized_difference(1.0, 0.0) == -1.0          # guarded denominator
    assert normalized_difference(0.0, 0.0) == 0.0
    assert normalized_difference(2.0, 1.0, orientation="higher_better") == 1.0
    with pytest.raises(ValueError, match="orientation"):
        normalized_difference(1.0, 2.0, orientation="bigger")


def test_subsample_inits():
    items = list(range(0, 100, 10))
    assert subsample_inits(items, 1.0) == items
    assert subsample_inits(items, 0.35) == [0, 20, 50, 70]
    assert subsample_inits([], 0.5) == []
    with pytest.raises(ValueError, match="fraction"):
        subsample_inits(items, 0.0)
    with pytest.raises(ValueError, match="fraction"):
        subsample_inits(items, 1.5)


def test_classical_ensmse_is_rmse_squared_and_mse_dominates():
    target, _, obs = make_models()
    region = standard_regions()["Tropics"]
    rmse = classical_by_lead(target, obs, region, "RMSE", LATS, LAT_BOUNDS)
    ensmse = classical_by_lead(target, obs, region, "ENSMSE", LATS, LAT_BOUNDS)
    mse = classical_by_lead(target, obs, region, "MSE", LATS, LAT_BOUNDS)
    assert sorted(rmse) == [1, 2, 3, 4]
    for h in rmse:
        assert ensmse[h] == rmse[h] ** 2
        # member MSE = ensemble-mean MSE + spread
        assert mse[h] >= ensmse[h] - 1e-12


def test_classical_crps_single_member_is_weighted_mae():
    target, _, obs = make_models(n_mem=1)
    region = standard_regions()["NH"]
    crps = classical_by_lead(target, obs, region, "CRPS", LATS, LAT_BOUNDS)
    js = region_indices(LATS, region)
    w = lat_weights(LAT_BOUNDS[js]).weights
    for h in crps:
        diff = np.abs(target[:, 0, h - 1][:, js, :] - obs[:, h - 1][:, js, :])
        assert math.isclose(crps[h], float(np.mean(w[None, :, None] * diff)),
                            rel_tol=1e-12)


def test_classical_rejects_unknown_metric():
    target, _, obs = make_models()
    with pytest.raises(ValueError, match="'R2'"):
        classical_by_lead(target, obs, standard_regions()["NH"], "R2", LATS, LAT_BOUNDS)


def test_sigk_path_length_cells_are_prefix_stable():
    target, _, obs = make_models()
    region = standard_regions()["SH"]
    both = sigk_by_pathlength(target, obs, region, LATS, LAT_BOUNDS, cfg=LIN1,
                              path_lengths=[2, 3])
    only = sigk_by_pathlength(target, obs, region, LATS, LAT_BOUNDS, cfg=LIN1,
                              path_lengths=[2])
    assert sorted(both) == [2, 3]
    assert both[2] == only[2]


def test_sigk_distance_is_zero_for_a_perfect_model():
    _, _, obs = make_models()
    model = np.repeat(obs[:, None], 2, axis=1)
    region = standard_regions()["Tropics"]
    out = sigk_by_pathlength(model, obs, region, LATS, LAT_BOUNDS, cfg=LIN1,
                             mode="distance")
    assert sorted(out) == [2, 3]
    assert all(v == 0.0 for v in out.values())


def test_sigk_validation():
    target, _, obs = make_models()
    region = standard_regions()["NH"]
    with pytest.raises(ValueError, match="mode"):
        sigk_by_pathlength(target, obs, region, LATS, LAT_BOUNDS, mode="x")
    with pytest.raises(ValueError, match=r"outside \[2, 3\]"):
        sigk_by_pathlength(target, obs, region, LATS, LAT_BOUNDS, cfg=LIN1,
                           path_lengths=[1])
    with pytest.raises(ValueError, match=r"outside \[2, 3\]"):
        sigk_by_pathlength(target, obs, region, LATS, LAT_BOUNDS, cfg=LIN1,
                           path_lengths=[4])
    with pytest.raises(ValueError, match="at least 3 leads"):
        sigk_by_pathlength(target[:, :, :2], obs[:, :2], region, LATS, LAT_BOUNDS)
    with pytest.raises(ValueError, match="constant"):
        sigk_by_pathlength(np.zeros_like(target), np.zeros_like(obs), region,
                           LATS, LAT_BOUNDS)
    with pytest.raises(ValueError, match="misaligned"):
        sigk_by_pathlength(target, obs[:, :, :4], region, LATS, LAT_BOUNDS)
    with pytest.raises(ValueError, match=r"\(init, member, lead, lat, lon\)"):
        sigk_by_pathlength(target[0], obs, region, LATS, LAT_BOUNDS)


def test_scorecard_cells_cover_the_cross_product_in_order():
    target, baseline, obs = make_models()
    card = build_scorecard({"t2m": target, "z500": target.copy()},
                           {"t2m": baseline, "z500": baseline.copy()},
                           {"t2m": obs, "z500": obs.copy()},
                           LATS, LAT_BOUNDS, cfg=LIN1, metadata={"seed": 0})
    # per variable and region: 4 classical metrics x 4 leads + SIGK x {2, 3}
    assert len(card.cells) == 2 * 3 * (4 * 4 + 2)
    keys = [(c.variable, c.region, c.metric, c.axis_value) for c in card.cells]
    assert keys == sorted(keys)
    assert card.metadata == {"seed": 0}
    assert {c.metric for c in card.cells} == set(CLASSICAL_METRICS) | {"SIGK"}
    sigk_axes = {c.axis_value for c in card.cells if c.metric == "SIGK"}
    assert sigk_axes == {2, 3}


def test_identical_models_give_the_all_zero_scorecard():
    target, _, obs = make_models()
    card = build_scorecard({"t2m": target}, {"t2m": target}, {"t2m": obs},
                           LATS, LAT_BOUNDS, cfg=LIN1)
    assert len(card.cells) == 3 * (4 * 4 + 2)
    for c in card.cells:
        assert c.target_score == c.baseline_score
        assert c.normalized_diff == 0.0


def test_scorecard_alignment_errors():
    target, baseline, obs = make_models()
    with pytest.raises(ValueError, match="variable sets differ"):
        build_scorecard({"t2m": target}, {"z500": baseline}, {"t2m": obs},
                        LATS, LAT_BOUNDS)
    with pytest.raises(ValueError, match=r"axes \['init'\]"):
        build_scorecard({"t2m": target}, {"t2m": baseline}, {"t2m": obs[:1]},
                        LATS, LAT_BOUNDS)
    with pytest.raises(ValueError, match=r"axes \['lat', 'lon'\]"):
        build_scorecard({"t2m": target}, {"t2m": baseline},
                        {"t2m": obs.transpose(0, 1, 3, 2)}, LATS, LAT_BOUNDS)


def test_models_may_have_different_member_counts():
    target, baseline, obs = make_models()
    card = build_scorecard({"t2m": target}, {"t2m": np.repeat(baseline, 2, axis=1)},
                           {"t2m": obs}, LATS, LAT_BOUNDS, cfg=LIN1,
                           metrics=["CRPS", "SIGK"])
    assert len(card.cells) == 3 * (4 + 2)


def test_csv_format_round_trips():
    target, baseline, obs = make_models()
    card = build_scorecard({"t2m": target}, {"t2m": baseline}, {"t2m": obs},
                           LATS, LAT_BOUNDS, cfg=LIN1, metrics=["RMSE", "CRPS"])
    text = scorecard_to_csv(card)
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == len(card.cells) + 1
    first = lines[1].split(",")
    assert first[0] == "t2m"
    assert first[1] == card.cells[0].region
    assert float(first[4]) == card.cells[0].target_score
    assert float(first[6]) == card.cells[0].normalized_diff


def test_json_format_mirrors_cells():
    target, baseline, obs = make_models()
    card = build_scorecard({"t2m": target}, {"t2m": baseline}, {"t2m": obs},
                           LATS, LAT_BOUNDS, cfg=LIN1, metrics=["RMSE"],
                           metadata={"run": "demo"})
    payload = json.loads(scorecard_to_json(card))
    assert payload["metadata"] == {"run": "demo"}
    assert len(payload["cells"]) == len(card.cells)
    head = payload["cells"][0]
    assert head["variable"] == "t2m"
    assert head["axis"] == card.cells[0].axis_value
    assert head["target"] == card.cells[0].target_score
    assert head["normalized_diff"] == card.cells[0].normalized_diff


def test_svg_renders_one_rect_per_cell():
    target, baseline, obs = make_models()
    card = build_scorecard({"t2m": target}, {"t2m": baseline}, {"t2m": obs},
                           LATS, LAT_BOUNDS, cfg=LIN1, metrics=["RMSE", "MSE"])
    svg = scorecard_to_svg(card)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    rects = root.findall(".//{http://www.w3.org/2000/svg}rect")
    assert len(rects) == len(card.cells)
