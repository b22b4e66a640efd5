import math

import numpy as np
import pytest

from sigscore.paths import DataStream
from sigscore.signature import (
    MAX_LEVEL_ENTRIES,
    SignatureFeatures,
    TruncatedSignature,
    chen_concat,
    levy_area,
    segment_signature,
    shuffle_words,
    stream_signature,
    truncated_inner_product,
    unit_signature,
    word_coefficient,
)

# ---------------------------------------------------------------- oracles


def shoelace_area(points: np.ndarray) -> float:
    """Signed area of the polygon formed by a 2-D polyline closed by its chord."""
    closed = np.vstack([points, points[:1]])
    x, y = closed[:, 0], closed[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def one_dim_signature_levels(total_increment: float, depth: int) -> list:
    # 1-d signatures commute: level k is always Delta**k / k!
    return [total_increment ** k / math.factorial(k) for k in range(depth + 1)]


# ---------------------------------------------------------------- tests


def test_segment_signature_hand_case():
    sig = segment_signature(np.array([2.0]), depth=3)
    got = [float(lev[0]) for lev in sig.levels]
    assert got == pytest.approx([1.0, 2.0, 2.0, 4.0 / 3.0])


def test_one_dimensional_streams_depend_only_on_total_increment():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        values = rng.normal(size=(n, 1))
        s = DataStream(np.arange(float(n)), values)
        sig = stream_signature(s, depth=6)
        want = one_dim_signature_levels(float(values[-1, 0] - values[0, 0]), 6)
        got = [float(lev[0]) for lev in sig.levels]
        assert got == pytest.approx(want, abs=1e-12)


def test_chen_split_concatenation_is_exact():
    rng = np.random.default_rng(1)
    for _ in range(5):
        values = rng.normal(size=(6, 2)) * 0.5
        s = DataStream(np.arange(6.0), values)
        full = stream_signature(s, depth=5)
        left = stream_signature(DataStream(np.arange(3.0), values[:3]), depth=5)
        right = stream_signature(DataStream(np.arange(4.0), values[2:]), depth=5)
        joined = chen_concat(left, right)
        for a, b in zip(full.levels, joined.levels):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_chen_associativity():
    rng = np.random.default_rng(2)
    a = segment_signature(rng.normal(size=3) * 0.4, 4)
    b = segment_signature(rng.normal(size=3) * 0.4, 4)
    c = segment_signature(rng.normal(size=3) * 0.4, 4)
    left = chen_concat(chen_concat(a, b), c)
    right = chen_concat(a, chen_concat(b, c))
    for x, y in zip(left.levels, right.levels):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


def test_chen_unit_is_identity():
    sig = segment_signature(np.array([0.3, -0.7]), 4)
    for other in (chen_concat(sig, unit_signature(2, 4)),
                  chen_concat(unit_signature(2, 4), sig)):
        for x, y in zip(sig.levels, other.levels):
            np.testing.assert_array_equal(x, y)


def test_shuffle_words_counts_and_validation():
    words = shuffle_words((0,), (1, 2))
    assert len(words) == 3                       # binom(3, 1)
    assert sorted(words) == [(0, 1, 2), (1, 0, 2), (1, 2, 0)]
    assert len(shuffle_words((0, 1), (0, 1))) == 6
    with pytest.raises(ValueError):
        shuffle_words((), (0,))


def test_two_index_shuffle_identity():
    # <S,i><S,j> = <S,ij> + <S,ji>
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = DataStream(np.arange(4.0), rng.normal(size=(4, 2)))
        sig = stream_signature(s, depth=2)
        lhs = word_coefficient(sig, (0,)) * word_coefficient(sig, (1,))
        rhs = word_coefficient(sig, (0, 1)) + word_coefficient(sig, (1, 0))
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_shuffle_identity_random_words():
    rng = np.random.default_rng(4)
    for _ in range(100):
        d = int(rng.integers(2, 4))
        s = DataStream(np.arange(4.0), rng.normal(size=(4, d)) * 0.8)
        depth = 6
        sig = stream_signature(s, depth)
        la, lb = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        a = tuple(rng.integers(0, d, size=la))
        b = tuple(rng.integers(0, d, size=lb))
        lhs = word_coefficient(sig, a) * word_coefficient(sig, b)
        rhs = sum(word_coefficient(sig, w) for w in shuffle_words(a, b))
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_levy_area_matches_shoelace():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    s = DataStream(np.arange(3.0), tri)
    assert shoelace_area(tri) == pytest.approx(0.5)
    assert levy_area(s, 0, 1) == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(5)
    for _ in range(10):
        pts = rng.normal(size=(6, 2))
        stream = DataStream(np.arange(6.0), pts)
        assert levy_area(stream, 0, 1) == pytest.approx(shoelace_area(pts), abs=1e-10)
        assert levy_area(stream, 1, 0) == pytest.approx(-shoelace_area(pts), abs=1e-10)
    with pytest.raises(ValueError):
        levy_area(s, 1, 1)


def test_word_coefficient_flat_indexing():
    sig = segment_signature(np.array([2.0, 3.0]), 2)
    assert word_coefficient(sig, (0, 1)) == pytest.approx(2.0 * 3.0 / 2.0)
    assert word_coefficient(sig, (1, 1)) == pytest.approx(3.0 * 3.0 / 2.0)
    with pytest.raises(ValueError):
        word_coefficient(sig, (0, 1, 0))
    with pytest.raises(ValueError):
        word_coefficient(sig, (2,))


def test_truncated_inner_product_includes_level_zero():
    a = unit_signature(2, 3)
    assert truncated_inner_product(a, a) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        truncated_inner_product(a, unit_signature(3, 3))


def test_storage_guard():
    with pytest.raises(ValueError):
        segment_signature(np.zeros(30), 5)       # 30**5 > MAX_LEVEL_ENTRIES
    assert 4 ** 12 <= MAX_LEVEL_ENTRIES          # the depth-12 oracle must fit


def test_level_zero_must_be_one():
    with pytest.raises(ValueError):
        TruncatedSignature(dim=1, depth=0, levels=(np.array([2.0]),))


def test_signature_features_shape():
    rng = np.random.default_rng(6)
    X = [rng.normal(size=(4, 2)) for _ in range(3)]
    feats = SignatureFeatures(depth=3).fit(X).transform(X)
    assert feats.shape == (3, 1 + 2 + 4 + 8)
    np.testing.assert_array_equal(feats[:, 0], 1.0)
