"""Truncated path signatures by brute-force tensor algebra.

Levels are stored dense and flat: level k of a d-dimensional signature is a
C-ordered vector of length d**k whose entry at flat index
``i_1*d**(k-1) + ... + i_k`` is the coefficient of the word (i_1, ..., i_k)
(indices 0-based). This module is the exact oracle for the PDE kernel solver
and the home of the algebraic identities (concatenation, shuffle, signed
area).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_float_array
from .paths import DataStream

__all__ = [
    "TruncatedSignature",
    "SignatureFeatures",
    "segment_signature",
    "chen_concat",
    "stream_signature",
    "shuffle_words",
    "levy_area",
    "truncated_inner_product",
    "word_coefficient",
    "MAX_LEVEL_ENTRIES",
]

# Dense storage guard: level k holds d**k doubles. The ceiling admits the
# depth-12 oracle at d=4 (4**12 ~ 1.7e7) and nothing much beyond it.
MAX_LEVEL_ENTRIES = 20_000_000


def _check_size(dim: int, depth: int):
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if dim <= 0:
        raise ValueError("dimension must be positive")
    if dim ** depth > MAX_LEVEL_ENTRIES:
        raise ValueError(
            f"dense signature storage d**K = {dim}**{depth} exceeds "
            f"{MAX_LEVEL_ENTRIES} entries"
        )


@dataclass(frozen=True)
class TruncatedSignature:
    """Signature coefficients up to a truncation depth.

    levels[k] is the flat level-k tensor (length dim**k); levels[0] is the
    scalar 1.
    """

    dim: int
    depth: int
    levels: tuple

    def __post_init__(self):
        if len(self.levels) != self.depth + 1:
            raise ValueError(f"expected {self.depth + 1} levels, got {len(self.levels)}")
        for k, lev in enumerate(self.levels):
            if lev.shape != (self.dim ** k,):
                raise ValueError(f"level {k} has shape {lev.shape}, expected ({self.dim ** k},)")
        if self.levels[0][0] != 1.0:
            raise ValueError("level 0 must be exactly 1")


def segment_signature(increment, depth: int) -> TruncatedSignature:
    """Signature of a single linear segment: level k = increment^(x)k / k!."""
    gamma = check_float_array(increment, "increment", ndim=1)
    d = len(gamma)
    _check_size(d, depth)
    levels = [np.ones(1)]
    for k in range(1, depth + 1):
        levels.append((levels[-1][:, None] * gamma[None, :]).ravel() / k)
    return TruncatedSignature(dim=d, depth=depth, levels=tuple(levels))


def unit_signature(dim: int, depth: int) -> TruncatedSignature:
    """The identity element of concatenation (signature of a constant path)."""
    return segment_signature(np.zeros(dim), depth)


def chen_concat(a: TruncatedSignature, b: TruncatedSignature) -> TruncatedSignature:
    """Concatenation: level k of the result is sum_l levels_l(a) (x) levels_{k-l}(b)."""
    if a.dim != b.dim or a.depth != b.depth:
        raise ValueError(
            f"signature mismatch: dim {a.dim} vs {b.dim}, depth {a.depth} vs {b.depth}"
        )
    levels = []
    for k in range(a.depth + 1):
        acc = np.zeros(a.dim ** k)
        for l in range(k + 1):
            # kron of flat C-ordered levels is the flat tensor product
            acc += np.kron(a.levels[l], b.levels[k - l])
        levels.append(acc)
    return TruncatedSignature(dim=a.dim, depth=a.depth, levels=tuple(levels))


def _append_segment(sig: TruncatedSignature, gamma: np.ndarray) -> TruncatedSignature:
    """Chen product sig (x) exp(gamma), folding the exponential by Horner.

    Level k of the product is sum_m sig_m (x) gamma^(x)(k-m) / (k-m)!. The
    chain Z_1 = sig_0, Z_{m+1} = sig_m + Z_m (x) gamma/(k-m+1), level =
    sig_k + Z_k (x) gamma reproduces those factorial weights while growing a
    single tensor per level instead of forming k full-size products.
    """
    a = sig.levels
    out = [np.ones(1)]
    for k in range(1, sig.depth + 1):
        z = a[0]
        for m in range(1, k):
            z = (z[:, None] * (gamma / (k - m + 1))[None, :]).ravel()
            z += a[m]
        lev = (z[:, None] * gamma[None, :]).ravel()
        lev += a[k]
        out.append(lev)
    return TruncatedSignature(dim=sig.dim, depth=sig.depth, levels=tuple(out))


def stream_signature(stream: DataStream, depth: int) -> TruncatedSignature:
    """Signature of a piecewise-linear stream: left-to-right concatenation fold."""
    if stream.n_points < 2:
        raise ValueError("stream_signature needs at least two points")
    _check_size(stream.dim, depth)
    increments = np.diff(stream.values, axis=0)
    sig = segment_signature(increments[0], depth)
    for gamma in increments[1:]:
        sig = _append_segment(sig, gamma)
    return sig


def shuffle_words(a, b) -> list[tuple]:
    """All order-preserving interleavings of two words, with multiplicity.

    Words are tuples of 0-based dimension indices. The result is a list (a
    multiset): duplicates are meaningful and preserved.
    """
    a, b = tuple(a), tuple(b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("shuffle operands must be nonempty words")

    def rec(x, y):
        if not x:
            return [y]
        if not y:
            return [x]
        return [(x[0],) + w for w in rec(x[1:], y)] + [(y[0],) + w for w in rec(x, y[1:])]

    return rec(a, b)


def word_coefficient(sig: TruncatedSignature, word) -> float:
    """Signature coefficient of a word (tuple of 0-based indices)."""
    word = tuple(int(i) for i in word)
    k = len(word)
    if k > sig.depth:
        raise ValueError(f"word length {k} exceeds truncation depth {sig.depth}")
    idx = 0
    for i in word:
        if not 0 <= i < sig.dim:
            raise ValueError(f"letter {i} out of range for dimension {sig.dim}")
        idx = idx * sig.dim + i
    return float(sig.levels[k][idx])


def levy_area(stream: DataStream, i1: int, i2: int) -> float:
    """Signed area between the (i1, i2) projection of the path and its chord.

    Equals half the antisymmetric part of the level-2 signature:
    0.5 * (S^(i1,i2) - S^(i2,i1)).
    """
    if i1 == i2:
        raise ValueError("levy_area needs two distinct coordinate indices")
    sig = stream_signature(stream, depth=2)
    return 0.5 * (word_coefficient(sig, (i1, i2)) - word_coefficient(sig, (i2, i1)))


def truncated_inner_product(a: TruncatedSignature, b: TruncatedSignature) -> float:
    """Sum over levels of flat dot products (level 0 contributes 1)."""
    if a.dim != b.dim or a.depth != b.depth:
        raise ValueError(
            f"signature mismatch: dim {a.dim} vs {b.dim}, depth {a.depth} vs {b.depth}"
        )
    return float(sum(x @ y for x, y in zip(a.levels, b.levels)))


class SignatureFeatures(TransformerMixin, BaseEstimator):
    """Transformer mapping paths to flattened truncated-signature features.

    transform takes a sequence of DataStream or (N, d) arrays and returns an
    (n_paths, sum_k d**k) matrix: all levels concatenated, level 0 included.
    """

    def __init__(self, depth=3):
        self.depth = depth

    def fit(self, X, y=None):
        depth = int(self.depth)
        if depth < 1:
            raise ValueError("depth must be >= 1")
        return self

    def transform(self, X):
        self.fit(X)
        rows = []
        for x in X:
            stream = x if isinstance(x, DataStream) else DataStream(
                times=np.arange(np.asarray(x).shape[0], dtype=float),
                values=np.asarray(x, dtype=float),
            )
            sig = stream_signature(stream, int(self.depth))
            rows.append(np.concatenate(sig.levels))
        return np.vstack(rows)
