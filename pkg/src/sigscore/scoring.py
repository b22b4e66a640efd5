"""Kernel scores over ensembles, latitude-weighted aggregation, and the
prequential sliding-window objective.

The ensemble score is the unbiased empirical form

    score(X, y) = (1/(m(m-1))) * sum_{r != s} K(X^r, X^s) - (2/m) * sum_r K(X^r, y),

lower is better. Member and observation paths always pass through the same
augmentation pipeline (default: basepoint + time coordinate) so both live in
one feature space. Reductions over members use exact summation, making the
score invariant under member permutation to the last bit.

The prequential objective slides a window of k observations along a series,
generates m member paths of length l from each window through an abstract
one-step generator, and sums the kernel score against the realized future.
Toy generator families (persistence plus noise, AR(1)) are fit by grid
search over that objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.model_selection import ParameterGrid

from ._validation import check_float_array
from .kernel import SignatureKernel, signature_kernel_pairs
from .metrics import LatWeights
from .paths import DataStream, PathAugmenter

__all__ = [
    "EnsemblePaths",
    "GeneratorContract",
    "PersistenceGenerator",
    "Ar1Generator",
    "LatentPlan",
    "PatchSpec",
    "GeneratorFit",
    "ToyGeneratorSearch",
    "kernel_score",
    "kernel_distance",
    "lat_weighted_sig_score",
    "generate_sliding",
    "prequential_objective",
    "fit_toy_generator",
]


@dataclass(frozen=True)
class EnsemblePaths:
    """A finite ensemble: m member streams sharing dimension and knot times."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) < 1:
            raise ValueError("ensemble needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.dim != first.dim:
                raise ValueError("ensemble members must share one dimension")
            if not np.array_equal(m.times, first.times):
                raise ValueError("ensemble members must share knot times")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def times(self) -> np.ndarray:
        return self.members[0].times

    def as_array(self) -> np.ndarray:
        """Stack member values into (m, N, d)."""
        return np.stack([m.values for m in self.members])


class GeneratorContract:
    """One-step conditional generator interface.

    Subclasses implement step(window, latent) -> next state, deterministic
    given its arguments; window is the (window_size, d) tensor of the most
    recent states and latent is a d-vector.
    """

    window_size: int = 1

    def step(self, window: np.ndarray, latent: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class PersistenceGenerator(GeneratorContract):
    """Repeats the last state plus scaled noise."""

    def __init__(self, noise_scale: float, window_size: int = 1):
        self.noise_scale = float(noise_scale)
        self.window_size = int(window_size)

    def step(self, window, latent):
        return window[-1] + self.noise_scale * latent


class Ar1Generator(GeneratorContract):
    """First-order autoregression on the last state: a * x + noise * z."""

    def __init__(self, coefficient: float, noise_scale: float, window_size: int = 1):
        self.coefficient = float(coefficient)
        self.noise_scale = float(noise_scale)
        self.window_size = int(window_size)

    def step(self, window, latent):
        return self.coefficient * window[-1] + self.noise_scale * latent


@dataclass(frozen=True)
class LatentPlan:
    """Pre-drawn latent vectors indexed (member, path position); static across
    initialisation times so every window sees the same randomness."""

    latents: np.ndarray

    def __post_init__(self):
        lat = check_float_array(self.latents, "latents", ndim=3)
        object.__setattr__(self, "latents", lat)

    @property
    def n_members(self) -> int:
        return self.latents.shape[0]

    @property
    def path_len(self) -> int:
        return self.latents.shape[1]


@dataclass(frozen=True)
class PatchSpec:
    """Spatial patches for the patched objective: each (lat_start, lon_start)
    anchors an h x w window, longitude wrapping, flattened latitude-major."""

    height: int
    width: int
    lat_starts: tuple
    lon_starts: tuple

    def flat_indices(self, n_lat: int, n_lon: int) -> list[np.ndarray]:
        if self.height > n_lat:
            raise ValueError(f"patch height {self.height} exceeds {n_lat} latitude rows")
        out = []
        for ls in self.lat_starts:
            ls = int(ls)
            if ls < 0 or ls + self.height > n_lat:
                raise ValueError(
                    f"latitude patch [{ls}, {ls + self.height}) out of bounds for {n_lat} rows"
                )
            rows = np.arange(ls, ls + self.height)
            for lo in self.lon_starts:
                cols = (int(lo) + np.arange(self.width)) % n_lon
                out.append((rows[:, None] * n_lon + cols[None, :]).reshape(-1))
        return out


def _default_pipeline(pre_scale: float = 1.0) -> PathAugmenter:
    # scoring default: basepoint + time coordinate, no lead-lag
    return PathAugmenter(basepoint=True, time_coord=True, pre_scale=pre_scale)


def _augment_batch(values: np.ndarray, times: np.ndarray, aug: PathAugmenter):
    """Vectorized PathAugmenter over a (B, N, d) batch sharing one stamp vector.

    Mirrors PathAugmenter._one exactly (order pre_scale -> lead_lag -> time
    -> basepoint); equality is pinned by tests.
    """
    b, n, d = values.shape
    v = values * aug.pre_scale
    t = times
    if aug.lead_lag:
        rows = np.arange(2 * n - 1)
        v = np.concatenate([v[:, (rows + 1) // 2, :], v[:, rows // 2, :]], axis=2)
        tt = np.empty(2 * n - 1)
        tt[0::2] = t
        if n > 1:
            tt[1::2] = 0.5 * (t[:-1] + t[1:])
        t = tt
    if aug.time_coord:
        stamps = np.broadcast_to(t[None, :, None], (b, v.shape[1], 1))
        v = np.concatenate([v, stamps], axis=2)
    if aug.basepoint:
        delta = float(np.median(np.diff(t))) if len(t) > 1 else 1.0
        v = np.concatenate([np.zeros((b, 1, v.shape[2])), v], axis=1)
        t = np.concatenate([[t[0] - delta], t])
    return v, t


def _score_batch(members: np.ndarray, obs: np.ndarray, times: np.ndarray,
                 cfg: SignatureKernel | None, pipeline: PathAugmenter | None,
                 workers=None) -> np.ndarray:
    """Unbiased kernel scores for a batch of cases.

    members: (n, m, N, d); obs: (n, N, d); shared stamp vector. One batched
    PDE sweep covers every Gram term of every case.
    """
    n, m, n_pts, d = members.shape
    if m < 2:
        raise ValueError(f"the unbiased score needs at least 2 members, got {m}")
    pipeline = pipeline if pipeline is not None else _default_pipeline()
    mem_a, _ = _augment_batch(members.reshape(n * m, n_pts, d), times, pipeline)
    obs_a, _ = _augment_batch(obs, times, pipeline)
    mem_a = mem_a.reshape(n, m, mem_a.shape[1], mem_a.shape[2])

    iu, ju = np.triu_indices(m, k=1)
    n_pairs = len(iu)
    pair_x = mem_a[:, iu].reshape(n * n_pairs, mem_a.shape[2], mem_a.shape[3])
    pair_y = mem_a[:, ju].reshape(n * n_pairs, mem_a.shape[2], mem_a.shape[3])
    cross_x = mem_a.reshape(n * m, mem_a.shape[2], mem_a.shape[3])
    cross_y = np.repeat(obs_a[:, None], m, axis=1).reshape(n * m, obs_a.shape[1], obs_a.shape[2])

    flat_x = np.concatenate([pair_x, cross_x], axis=0)
    flat_y = np.concatenate([pair_y, cross_y], axis=0)
    vals = signature_kernel_pairs(flat_x, flat_y, cfg, workers=workers)
    spread = vals[: n * n_pairs].reshape(n, n_pairs)
    cross = vals[n * n_pairs:].reshape(n, m)

    out = np.empty(n)
    for i in range(n):
        # fsum: correctly rounded, hence member-permutation invariant
        out[i] = (2.0 * math.fsum(spread[i]) / (m * (m - 1))
                  - 2.0 * math.fsum(cross[i]) / m)
    return out


def kernel_score(forecast: EnsemblePaths, obs: DataStream,
                 cfg: SignatureKernel | None = None,
                 pipeline: PathAugmenter | None = None) -> float:
    """Unbiased ensemble kernel score (lower is better)."""
    if forecast.size < 2:
        raise ValueError(f"the unbiased score needs at least 2 members, got {forecast.size}")
    if obs.dim != forecast.dim:
        raise ValueError(f"observation dimension {obs.dim} != member dimension {forecast.dim}")
    members = forecast.as_array()[None]
    return float(_score_batch(members, obs.values[None], forecast.times, cfg, pipeline)[0])


def kernel_distance(forecast: DataStream, obs: DataStream,
                    cfg: SignatureKernel | None = None,
                    pipeline: PathAugmenter | None = None) -> float:
    """Squared kernel distance K(X,X) + K(Y,Y) - 2 K(X,Y); zero on identical paths."""
    if forecast.dim != obs.dim:
        raise ValueError(f"path dimensions differ: {forecast.dim} vs {obs.dim}")
    pipeline = pipeline if pipeline is not None else _default_pipeline()
    fx = pipeline.fit(None).transform(forecast)
    fy = pipeline.transform(obs)
    X = np.stack([fx.values, fy.values, fx.values])
    Y = np.stack([fx.values, fy.values, fy.values])
    kxx, kyy, kxy = signature_kernel_pairs(X, Y, cfg)
    return float(kxx + kyy - 2.0 * kxy)


def _weights_vector(weights, n_lat: int) -> np.ndarray:
    if isinstance(weights, LatWeights):
        weights = weights.weights
    w = check_float_array(weights, "weights", ndim=1)
    if len(w) != n_lat:
        raise ValueError(f"got {len(w)} weights for {n_lat} latitude slices")
    return w


def lat_weighted_sig_score(forecast, obs, weights, mode: str = "score",
                           cfg: SignatureKernel | None = None,
                           pipeline: PathAugmenter | None = None,
                           times: np.ndarray | None = None,
                           workers=None) -> float:
    """Latitude-sliced aggregate: sum_j w_j sum_t (slice score or distance).

    obs is (L, J, I) for a single initialisation or (n_init, L, J, I);
    forecast adds a member axis in score mode ((m, L, J, I) or
    (n_init, m, L, J, I)) and matches obs in distance mode. Paths run along
    the lead axis with dimension I per latitude slice; default stamps 1..L.
    """
    obs = np.asarray(obs, dtype=np.float64)
    forecast = np.asarray(forecast, dtype=np.float64)
    if obs.ndim == 3:
        obs = obs[None]
        forecast = forecast[None]
    if obs.ndim != 4:
        raise ValueError(f"obs must have 3 or 4 axes, got shape {obs.shape}")
    n_init, n_lead, n_lat, n_lon = obs.shape
    w = _weights_vector(weights, n_lat)
    if times is None:
        times = np.arange(1, n_lead + 1, dtype=np.float64)

    if mode == "score":
        if forecast.ndim != 5 or forecast.shape[0] != n_init or forecast.shape[2:] != (n_lead, n_lat, n_lon):
            raise ValueError(f"forecast shape {forecast.shape} misaligned with obs {obs.shape}")
        m = forecast.shape[1]
        # slices share a shape: fold (lat, init) into one batch
        mem = forecast.transpose(3, 0, 1, 2, 4).reshape(n_lat * n_init, m, n_lead, n_lon)
        ob = obs.transpose(2, 0, 1, 3).reshape(n_lat * n_init, n_lead, n_lon)
        per_case = _score_batch(mem, ob, times, cfg, pipeline, workers=workers)
    elif mode == "distance":
        if forecast.shape != obs.shape:
            raise ValueError(f"forecast shape {forecast.shape} != obs shape {obs.shape}")
        pl = pipeline if pipeline is not None else _default_pipeline()
        fa, _ = _augment_batch(forecast.transpose(2, 0, 1, 3).reshape(n_lat * n_init, n_lead, n_lon), times, pl)
        oa, _ = _augment_batch(obs.transpose(2, 0, 1, 3).reshape(n_lat * n_init, n_lead, n_lon), times, pl)
        X = np.concatenate([fa, oa, fa], axis=0)
        Y = np.concatenate([fa, oa, oa], axis=0)
        vals = signature_kernel_pairs(X, Y, cfg, workers=workers)
        b = n_lat * n_init
        per_case = vals[:b] + vals[b:2 * b] - 2.0 * vals[2 * b:]
    else:
        raise ValueError(f"mode must be 'score' or 'distance', got {mode!r}")
    per_slice = per_case.reshape(n_lat, n_init).sum(axis=1)
    return float(w @ per_slice)


def generate_sliding(gen: GeneratorContract, initial_window: np.ndarray,
                     path_len: int, latents) -> EnsemblePaths:
    """Roll the generator forward: at each step the conditioning window is the
    most recent window_size entries of (initial_window || generated prefix).
    Member paths carry stamps 1..path_len."""
    window0 = check_float_array(initial_window, "initial_window", ndim=2)
    if path_len < 1:
        raise ValueError("path_len must be >= 1")
    if not isinstance(latents, LatentPlan):
        latents = LatentPlan(np.asarray(latents, dtype=np.float64))
    if latents.n_members < 1 or latents.path_len < path_len:
        raise ValueError(
            f"latent plan covers {latents.n_members} members x {latents.path_len} steps, "
            f"need path_len {path_len}"
        )
    k = window0.shape[0]
    times = np.arange(1, path_len + 1, dtype=np.float64)
    members = []
    for e in range(latents.n_members):
        window = window0
        states = []
        for u in range(path_len):
            x = np.asarray(gen.step(window, latents.latents[e, u]), dtype=np.float64)
            states.append(x)
            window = np.concatenate([window[1:], x[None]], axis=0) if k > 1 else x[None]
        members.append(DataStream(times=times, values=np.stack(states)))
    return EnsemblePaths(members=tuple(members))


def _preq_latents(latents, m, path_len, d, seed):
    if latents is None:
        rng = np.random.default_rng(seed)
        return LatentPlan(rng.normal(size=(m, path_len, d)))
    if not isinstance(latents, LatentPlan):
        latents = LatentPlan(np.asarray(latents, dtype=np.float64))
    if latents.n_members != m or latents.path_len < path_len or latents.latents.shape[2] != d:
        raise ValueError(
            f"latent plan shape {latents.latents.shape} incompatible with "
            f"(m={m}, path_len={path_len}, d={d})"
        )
    return latents


def prequential_objective(gen: GeneratorContract, observations, k: int, l: int, m: int,
                          cfg: SignatureKernel | None = None,
                          patching: PatchSpec | None = None,
                          latents=None, seed: int = 0,
                          pipeline: PathAugmenter | None = None) -> float:
    """Sliding-window sum of kernel scores over all initialisation windows.

    observations is (T, d), or (T, n_lat, n_lon) when ``patching`` is given,
    in which case the generator runs on the latitude-major flattened grid and
    the inner score is summed over patch-restricted paths. Latents default to
    a deterministic draw from ``seed`` and are reused across windows.
    """
    obs = check_float_array(observations, "observations",
                            ndim=3 if patching is not None else 2)
    if patching is not None:
        n_lat, n_lon = obs.shape[1], obs.shape[2]
        obs = obs.reshape(obs.shape[0], n_lat * n_lon)
    big_t, d = obs.shape
    if m < 2:
        raise ValueError(f"the unbiased score needs at least 2 members, got {m}")
    if big_t < k + l:
        raise ValueError(f"need at least k+l={k + l} observations, got {big_t}")
    latents = _preq_latents(latents, m, l, d, seed)

    starts = range(k, big_t - l + 1)
    member_paths = np.empty((len(starts), m, l, d))
    targets = np.empty((len(starts), l, d))
    for idx, t in enumerate(starts):
        ens = generate_sliding(gen, obs[t - k:t], l, latents)
        member_paths[idx] = ens.as_array()
        targets[idx] = obs[t:t + l]
    times = np.arange(1, l + 1, dtype=np.float64)

    if patching is None:
        scores = _score_batch(member_paths, targets, times, cfg, pipeline)
        return float(math.fsum(scores))
    total = 0.0
    for cols in patching.flat_indices(n_lat, n_lon):
        scores = _score_batch(member_paths[..., cols], targets[..., cols], times, cfg, pipeline)
        total += math.fsum(scores)
    return float(total)


_FAMILIES = {
    "persistence": lambda params, k: PersistenceGenerator(
        noise_scale=params["noise_scale"], window_size=k),
    "ar1": lambda params, k: Ar1Generator(
        coefficient=params["coefficient"], noise_scale=params["noise_scale"], window_size=k),
}


@dataclass(frozen=True)
class GeneratorFit:
    """Grid-search result: argmin parameters plus the full objective trace."""

    family: str
    best_params: dict
    best_objective: float
    trace: tuple = field(default=())


def fit_toy_generator(family: str, observations, k: int, l: int, m: int,
                      cfg: SignatureKernel | None = None,
                      parameter_grid: dict | None = None,
                      seed: int = 0,
                      patching: PatchSpec | None = None,
                      pipeline: PathAugmenter | None = None) -> GeneratorFit:
    """Fit a toy generator family by exhaustive search over the objective.

    One latent plan (drawn from ``seed``) is shared by every candidate so the
    surface is compared under common randomness. The default pipeline scales
    values by 1/sqrt(d) before the kernel, keeping high-dimensional grids in
    the RBF kernel's sensitive range.
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown generator family {family!r}; pick from {sorted(_FAMILIES)}")
    if not parameter_grid:
        raise ValueError("parameter_grid must be a nonempty mapping of lists")
    obs = check_float_array(observations, "observations",
                            ndim=3 if patching is not None else 2)
    d = obs.shape[1] * obs.shape[2] if patching is not None else obs.shape[1]
    latents = _preq_latents(None, m, l, d, seed)
    if pipeline is None:
        pipeline = _default_pipeline(pre_scale=1.0 / np.sqrt(d))

    trace = []
    best_idx, best_val = 0, np.inf
    candidates = list(ParameterGrid(parameter_grid))
    for i, params in enumerate(candidates):
        gen = _FAMILIES[family](params, k)
        val = prequential_objective(gen, observations, k, l, m, cfg=cfg,
                                    patching=patching, latents=latents,
                                    pipeline=pipeline)
        trace.append({**params, "objective": val})
        if val < best_val:
            best_idx, best_val = i, val
    return GeneratorFit(family=family, best_params=dict(candidates[best_idx]),
                        best_objective=float(best_val), trace=tuple(trace))


class ToyGeneratorSearch(BaseEstimator):
    """Estimator wrapper around fit_toy_generator.

    fit(X) takes the observation array ((T, d), or (T, n_lat, n_lon) with
    ``patching``) and exposes ``best_params_``, ``best_objective_`` and
    ``objective_trace_``.
    """

    def __init__(self, family="ar1", window_size=10, path_len=5, n_members=3,
                 param_grid=None, seed=0, kernel="rbf", sigma=1.0, dyadic_order=1,
                 patching=None):
        self.family = family
        self.window_size = window_size
        self.path_len = path_len
        self.n_members = n_members
        self.param_grid = param_grid
        self.seed = seed
        self.kernel = kernel
        self.sigma = sigma
        self.dyadic_order = dyadic_order
        self.patching = patching

    def fit(self, X, y=None):
        cfg = SignatureKernel(kernel=self.kernel, sigma=self.sigma,
                              dyadic_order=self.dyadic_order)
        result = fit_toy_generator(self.family, X, self.window_size, self.path_len,
                                   self.n_members, cfg=cfg,
                                   parameter_grid=self.param_grid, seed=self.seed,
                                   patching=self.patching)
        self.best_params_ = result.best_params
        self.best_objective_ = result.best_objective
        self.objective_trace_ = result.trace
        self.generator_ = _FAMILIES[self.family](result.best_params, self.window_size)
        return self
