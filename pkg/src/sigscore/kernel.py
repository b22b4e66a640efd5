"""Signature kernel of piecewise-linear paths via a hyperbolic (Goursat) PDE.

The kernel K(X, Y) solves u_st = (dx/ds . dy/dt) u with boundary 1 along the
initial row/column; for piecewise-linear paths it is computed on a grid with
2**order subdivisions per knot interval. Per cell the coefficient is the
double increment of the static kernel,

    C[p, q] = k(x_{p+1}, y_{q+1}) - k(x_{p+1}, y_q) - k(x_p, y_{q+1}) + k(x_p, y_q),

and the interior update is the corrected second-order rectangle rule

    K[p+1, q+1] = (K[p+1, q] + K[p, q+1]) * (1 + C/2 + C^2/12)
                  - K[p, q] * (1 - C^2/12).

The kernel depends on values only (signatures are parametrization
invariant); time stamps enter solely through the time augmentation upstream.
All sweeps run in double precision. Batches of equal-shape pairs share one
vectorized antidiagonal sweep, which is the performance primitive every
scoring routine reduces to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import _parallel
from ._validation import check_dyadic_order, check_float_array, check_positive
from .errors import NumericalInstabilityError
from .paths import DataStream

__all__ = [
    "StaticKernel",
    "SignatureKernel",
    "GramMatrix",
    "static_kernel_eval",
    "goursat_kernel",
    "signature_kernel_pairs",
    "gram",
]


@dataclass(frozen=True)
class StaticKernel:
    """Pointwise kernel lifting path values: 'linear' (dot) or 'rbf'."""

    kind: str = "rbf"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise ValueError(f"static kernel kind must be 'rbf' or 'linear', got {self.kind!r}")
        if self.kind == "rbf":
            check_positive(self.sigma, "sigma")

    def matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Batched kernel matrix: X (B,P,d), Y (B,Q,d) -> (B,P,Q)."""
        with np.errstate(over="ignore", invalid="ignore"):
            if self.kind == "linear":
                return np.matmul(X, np.swapaxes(Y, -1, -2))
            sq = (
                np.sum(X * X, axis=-1)[..., :, None]
                + np.sum(Y * Y, axis=-1)[..., None, :]
                - 2.0 * np.matmul(X, np.swapaxes(Y, -1, -2))
            )
            return np.exp(-sq / (2.0 * self.sigma ** 2))


def static_kernel_eval(cfg: StaticKernel, x, y) -> float:
    """Static kernel of two points."""
    x = check_float_array(x, "x", ndim=1)
    y = check_float_array(y, "y", ndim=1)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(cfg.matrix(x[None, None, :], y[None, None, :])[0, 0, 0])


class SignatureKernel(BaseEstimator):
    """Signature kernel configuration and entry points.

    Parameters
    ----------
    kernel : {'rbf', 'linear'}
        Static kernel applied to path values.
    sigma : float
        RBF bandwidth (ignored for 'linear').
    dyadic_order : int
        Number of halving refinements per knot interval (0..6); the PDE grid
        has 2**dyadic_order cells per interval and axis.
    """

    def __init__(self, kernel="rbf", sigma=1.0, dyadic_order=1):
        self.kernel = kernel
        self.sigma = sigma
        self.dyadic_order = dyadic_order

    def static(self) -> StaticKernel:
        check_dyadic_order(self.dyadic_order)
        return StaticKernel(kind=self.kernel, sigma=self.sigma)

    def __call__(self, path_x, path_y) -> float:
        return goursat_kernel(path_x, path_y, self)

    def gram(self, paths_a, paths_b=None, workers=None) -> "GramMatrix":
        return gram(paths_a, paths_b, self, workers=workers)


@dataclass(frozen=True)
class GramMatrix:
    """Pairwise signature-kernel values; symmetric when both families coincide."""

    entries: np.ndarray
    symmetric: bool


def _as_values(path) -> np.ndarray:
    if isinstance(path, DataStream):
        return path.values
    return check_float_array(path, "path", ndim=2)


def _refine(paths: np.ndarray, order: int) -> np.ndarray:
    """Linear dyadic refinement: (B,N,d) -> (B,(N-1)*2**order + 1, d)."""
    if order == 0:
        return paths
    b, n, d = paths.shape
    m = 2 ** order
    frac = (np.arange(m) / m)[None, None, :, None]
    mids = paths[:, :-1, None, :] * (1.0 - frac) + paths[:, 1:, None, :] * frac
    out = mids.reshape(b, (n - 1) * m, d)
    return np.concatenate([out, paths[:, -1:, :]], axis=1)


_DIAG_CACHE: dict = {}


def _diagonals(p_cells: int, q_cells: int):
    # precomputed antidiagonal index lists; cells on one diagonal are independent
    key = (p_cells, q_cells)
    cached = _DIAG_CACHE.get(key)
    if cached is None:
        cached = []
        for s in range(p_cells + q_cells - 1):
            lo = max(0, s - q_cells + 1)
            hi = min(p_cells - 1, s)
            p = np.arange(lo, hi + 1)
            cached.append((p, s - p))
        _DIAG_CACHE[key] = cached
    return cached


def _solve_batch(C: np.ndarray) -> np.ndarray:
    """Sweep the corrected rectangle rule over a batch of coefficient grids.

    C has shape (B, P, Q); returns the (B,) terminal corner values.
    """
    b, p_cells, q_cells = C.shape
    # non-finite accumulation is reported by the caller, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        gain = 1.0 + 0.5 * C + (C * C) / 12.0
        loss = 1.0 - (C * C) / 12.0
        K = np.ones((b, p_cells + 1, q_cells + 1))
        for p, q in _diagonals(p_cells, q_cells):
            K[:, p + 1, q + 1] = (
                (K[:, p + 1, q] + K[:, p, q + 1]) * gain[:, p, q]
                - K[:, p, q] * loss[:, p, q]
            )
    return K[:, p_cells, q_cells]


def _coefficients(X: np.ndarray, Y: np.ndarray, static: StaticKernel, order: int) -> np.ndarray:
    """Refine both path batches and form double-increment coefficient grids."""
    Xr = _refine(X, order)
    Yr = _refine(Y, order)
    km = static.matrix(Xr, Yr)
    # grouped so the float result is invariant under argument swap (grid
    # transpose); K(X,Y) == K(Y,X) then holds bitwise, which the exact
    # member-permutation invariance of the scores relies on
    with np.errstate(over="ignore", invalid="ignore"):
        # non-finite entries are reported by the caller, not warned about
        return (km[:, 1:, 1:] + km[:, :-1, :-1]) - (km[:, 1:, :-1] + km[:, :-1, 1:])


def _raise_instability(C: np.ndarray, entries=None):
    bad = ~np.isfinite(C)
    if bad.any():
        b, p, q = np.argwhere(bad)[0]
        entry = entries[b] if entries is not None else None
        raise NumericalInstabilityError(
            f"non-finite PDE coefficient at cell ({p}, {q})"
            + (f" while computing Gram entry {entry}" if entry is not None else ""),
            cell=(int(p), int(q)),
            entry=entry,
        )


def signature_kernel_pairs(X, Y, cfg: SignatureKernel | None = None,
                           workers: int | None = None, entries=None) -> np.ndarray:
    """Vectorized kernel for aligned batches of equal-shape paths.

    X is (B, N, d) and Y is (B, M, d); pair i is (X[i], Y[i]). Returns (B,)
    kernel values. ``entries`` optionally carries (r, s) labels used in
    instability reports.
    """
    cfg = cfg or SignatureKernel()
    order = check_dyadic_order(cfg.dyadic_order)
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 3 or Y.ndim != 3 or X.shape[0] != Y.shape[0] or X.shape[2] != Y.shape[2]:
        raise ValueError(f"incompatible batch shapes {X.shape} and {Y.shape}")
    if X.shape[1] < 2 or Y.shape[1] < 2:
        raise ValueError("paths need at least two knots")
    C = _coefficients(X, Y, cfg.static(), order)
    _raise_instability(C, entries)
    n_workers = _parallel.worker_count(workers)
    values = _parallel.map_concat(_solve_batch, C, n_workers)
    if not np.isfinite(values).all():
        b = int(np.argwhere(~np.isfinite(values))[0][0])
        raise NumericalInstabilityError(
            "PDE sweep overflowed",
            entry=entries[b] if entries is not None else None,
        )
    return values


def goursat_kernel(path_x, path_y, cfg: SignatureKernel | None = None) -> float:
    """Signature kernel of two streams (values only; stamps are ignored here)."""
    vx = _as_values(path_x)
    vy = _as_values(path_y)
    if vx.shape[1] != vy.shape[1]:
        raise ValueError(f"path dimensions differ: {vx.shape[1]} vs {vy.shape[1]}")
    if vx.shape[0] < 2 or vy.shape[0] < 2:
        raise ValueError("paths need at least two knots")
    return float(signature_kernel_pairs(vx[None], vy[None], cfg)[0])


def gram(paths_a, paths_b=None, cfg: SignatureKernel | None = None,
         workers: int | None = None) -> GramMatrix:
    """Pairwise kernel matrix between two path families.

    When paths_b is omitted (or is the same sequence), only the upper
    triangle is solved and mirrored. Pairs are grouped by knot-count shape so
    each group runs as one batched sweep; a worker pool splits large batches.
    """
    cfg = cfg or SignatureKernel()
    values_a = [_as_values(p) for p in paths_a]
    if not values_a:
        raise ValueError("empty path family")
    symmetric = paths_b is None or paths_b is paths_a
    values_b = values_a if symmetric else [_as_values(p) for p in paths_b]
    if not values_b:
        raise ValueError("empty path family")
    dim = values_a[0].shape[1]
    for v in values_a + values_b:
        if v.shape[1] != dim:
            raise ValueError("all paths must share one dimension")

    if symmetric:
        index_pairs = [(r, s) for r in range(len(values_a)) for s in range(r, len(values_a))]
    else:
        index_pairs = [(r, s) for r in range(len(values_a)) for s in range(len(values_b))]

    out = np.empty((len(values_a), len(values_b)))
    groups: dict = {}
    for r, s in index_pairs:
        groups.setdefault((values_a[r].shape[0], values_b[s].shape[0]), []).append((r, s))
    for (na, nb), pairs in groups.items():
        X = np.stack([values_a[r] for r, _ in pairs])
        Y = np.stack([values_b[s] for _, s in pairs])
        vals = signature_kernel_pairs(X, Y, cfg, workers=workers, entries=pairs)
        for (r, s), v in zip(pairs, vals):
            out[r, s] = v
            if symmetric:
                out[s, r] = v
    return GramMatrix(entries=out, symmetric=symmetric)
