import numpy as np
import pytest

from sigscore.paths import (
    DataStream,
    GridField,
    PathAugmenter,
    augment,
    extract_patches,
    interpolate_linear,
    latitude_slice_streams,
    normalize_for_kernel,
)


def test_datastream_validation():
    with pytest.raises(ValueError):
        DataStream(np.array([0.0, 0.0]), np.zeros((2, 1)))      # not increasing
    with pytest.raises(ValueError):
        DataStream(np.array([0.0, 1.0]), np.array([[np.nan], [0.0]]))
    with pytest.raises(ValueError):
        DataStream(np.array([0.0, 1.0, 2.0]), np.zeros((2, 1)))  # length mismatch
    s = DataStream(np.array([0.0, 2.0]), np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert s.n_points == 2 and s.dim == 2


def test_interpolate_linear_exact_at_knots_and_midpoints():
    s = DataStream(np.array([0.0, 1.0, 3.0]), np.array([[0.0], [2.0], [6.0]]))
    assert interpolate_linear(s, 0.0) == pytest.approx(0.0)
    assert interpolate_linear(s, 1.0) == pytest.approx(2.0)
    assert interpolate_linear(s, 2.0) == pytest.approx(4.0)
    assert interpolate_linear(s, 0.25) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        interpolate_linear(s, -0.1)
    with pytest.raises(ValueError):
        interpolate_linear(s, 3.1)


def test_lead_lag_zigzag_hand_case():
    # values [0, 1, 3]: row r pairs (lead, lag) = (v[(r+1)//2], v[r//2])
    s = DataStream(np.array([0.0, 1.0, 2.0]), np.array([[0.0], [1.0], [3.0]]))
    out = augment(s, PathAugmenter(lead_lag=True))
    expected = np.array([[0, 0], [1, 0], [1, 1], [3, 1], [3, 3]], dtype=float)
    np.testing.assert_array_equal(out.values, expected)
    np.testing.assert_array_equal(out.times, [0.0, 0.5, 1.0, 1.5, 2.0])


def test_augmentation_order_and_basepoint_zero_row():
    # pre_scale -> time -> basepoint; the basepoint row is zero everywhere,
    # including the time coordinate
    s = DataStream(np.array([0.0, 1.0]), np.array([[1.0], [2.0]]))
    aug = PathAugmenter(basepoint=True, time_coord=True, pre_scale=2.0)
    out = augment(s, aug)
    np.testing.assert_array_equal(out.values, [[0.0, 0.0], [2.0, 0.0], [4.0, 1.0]])
    np.testing.assert_array_equal(out.times, [-1.0, 0.0, 1.0])


def test_basepoint_delta_is_median_spacing():
    s = DataStream(np.array([0.0, 1.0, 2.0, 10.0]), np.zeros((4, 1)))
    out = augment(s, PathAugmenter(basepoint=True))
    assert out.times[0] == pytest.approx(-1.0)   # median of (1, 1, 8) = 1


def test_output_dim_matches_transform():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(5, 3))
    for basepoint in (False, True):
        for time_coord in (False, True):
            for lead_lag in (False, True):
                aug = PathAugmenter(basepoint=basepoint, time_coord=time_coord,
                                    lead_lag=lead_lag)
                out = aug.fit(None).transform(x)
                assert out.shape[1] == aug.output_dim(3)
                expected_rows = (2 * 5 - 1 if lead_lag else 5) + (1 if basepoint else 0)
                assert out.shape[0] == expected_rows


def test_transform_handles_arrays_streams_and_sequences():
    aug = PathAugmenter(time_coord=True)
    arr = np.zeros((3, 2))
    stream = DataStream(np.arange(3.0), arr)
    assert isinstance(aug.fit(None).transform(arr), np.ndarray)
    assert isinstance(aug.transform(stream), DataStream)
    out = aug.transform([arr, stream])
    assert isinstance(out, list) and len(out) == 2


def test_pre_scale_must_be_positive():
    with pytest.raises(ValueError):
        PathAugmenter(pre_scale=0.0).fit(None).transform(np.zeros((2, 1)))


def test_grid_field_validation():
    data = np.zeros((2, 2, 3))
    lats = np.array([10.0, 20.0])
    lons = np.array([0.0, 120.0, 240.0])
    f = GridField(data, lats, lons)
    np.testing.assert_array_equal(f.times, [0.0, 1.0])
    with pytest.raises(ValueError):
        GridField(data, np.array([10.0, 95.0]), lons)
    with pytest.raises(ValueError):
        GridField(np.zeros((2, 3, 3)), np.array([20.0, 10.0, 30.0]), lons)
    with pytest.raises(ValueError):
        GridField(data, lats, np.array([0.0, 120.0]))  # lon count mismatch


def test_normalize_for_kernel_values():
    data = np.full((2, 2, 4), 5.0)
    f = GridField(data, np.array([0.0, 10.0]), np.array([0.0, 90.0, 180.0, 270.0]))
    out = normalize_for_kernel(f, obs_mean=1.0, obs_std=2.0)
    assert out.data[0, 0, 0] == pytest.approx(((5.0 - 1.0) / 2.0) / np.sqrt(4))
    # overriding path_dim (patch scoring) changes only the 1/sqrt factor
    out16 = normalize_for_kernel(f, 1.0, 2.0, path_dim=16)
    assert out16.data[0, 0, 0] == pytest.approx(2.0 / 4.0)
    with pytest.raises(ValueError):
        normalize_for_kernel(f, 0.0, 0.0)


def test_latitude_slice_streams():
    rng = np.random.default_rng(1)
    data = rng.normal(size=(5, 3, 4))
    f = GridField(data, np.array([-30.0, 0.0, 30.0]), np.arange(4.0) * 90.0,
                  times=np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
    streams = latitude_slice_streams(f, (1, 4))
    assert [j for j, _ in streams] == [0, 1, 2]
    for j, s in streams:
        assert s.dim == 4
        np.testing.assert_array_equal(s.values, data[1:4, j, :])
        np.testing.assert_array_equal(s.times, [2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        latitude_slice_streams(f, (2, 3))  # single-point window is not a path


def test_extract_patches_wrap_and_flatten_order():
    data = np.arange(2 * 3 * 4, dtype=float).reshape(2, 3, 4)
    f = GridField(data, np.array([-30.0, 0.0, 30.0]), np.arange(4.0) * 90.0)
    streams = extract_patches(f, (2, 2), lat_starts=[0], lon_starts=[3],
                              time_window=(0, 2))
    assert len(streams) == 1
    # latitude-major flattening with longitude wrap: cells (0,3),(0,0),(1,3),(1,0)
    expected = data[:, [0, 0, 1, 1], [3, 0, 3, 0]]
    np.testing.assert_array_equal(streams[0].values, expected)
    with pytest.raises(ValueError):
        extract_patches(f, (2, 2), lat_starts=[2], lon_starts=[0], time_window=(0, 2))
    with pytest.raises(ValueError):
        extract_patches(f, (4, 2), lat_starts=[0], lon_starts=[0], time_window=(0, 2))
