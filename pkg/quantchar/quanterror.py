# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""The L^p quantization error function e_{N,p}(mu, x) and Lloyd's algorithm.

Evaluation paths:

  - discrete measures: exact weighted sum over atoms;
  - analytic 1D laws: cells delimited by midpoints of the sorted distinct
    grid, closed forms through partial moments for p in {1, 2}, adaptive
    quadrature per cell for even p >= 4;
  - anything: Monte Carlo on a seeded sample pool.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (AnalyticPathUnavailable, DimensionMismatchError,
        QuantcharError, UnsupportedMeasureError)
from .geometry import EUCLIDEAN, Grid, as_grid, nearest_distances
from .measures import Analytic1D, DiscreteMeasure, as_seed


logger = logging.getLogger(__name__)

LLOYD_RELATIVE_TOLERANCE = 1e-12
REDUCTION_CHUNK = 1 << 16
DEFAULT_MC_SAMPLES = 100000


@dataclass(frozen=True, eq=False)
class QErrorQuery:
    mu: object
    grid: Grid
    p: float = 2.0
    norm: object = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "grid", as_grid(self.grid))
        if self.grid.dimension != self.mu.dimension:
            raise DimensionMismatchError("grid of dimension %d for a measure of dimension %d"
                    % (self.grid.dimension, self.mu.dimension))
        if not (math.isfinite(self.p) and self.p >= 1.0):
            raise QuantcharError("p must be finite and >= 1, got %r" % (self.p,))


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate of e_{N,p}.

    `power_value` and `power_std_error` describe the sample mean of
    min_i |xi - x_i|**p; `value` is its p-th root and `std_error` the
    delta-method conversion power_std_error / (p * value**(p - 1)).
    """

    value: float
    std_error: float
    samples: int
    seed: int
    power_value: float = 0.0
    power_std_error: float = 0.0


@dataclass(frozen=True)
class QErrorResult:
    value: float
    method: str
    std_error: Optional[float] = None

    def to_dict(self):
        out = {"value": self.value, "method": self.method}
        if self.std_error is not None:
            out["std_error"] = self.std_error
        return out


def _pth_root(power, p):
    return max(power, 0.0) ** (1.0 / p)


def _pairwise_mean(values, weights=None):
    # Fixed-size chunks reduced in order: the result does not depend on how
    # the caller split the work.
    total = 0.0
    for start in range(0, values.shape[0], REDUCTION_CHUNK):
        chunk = values[start:start + REDUCTION_CHUNK]
        if weights is None:
            total += float(np.sum(chunk))
        else:
            total += float(np.dot(weights[start:start + REDUCTION_CHUNK], chunk))
    return total if weights is not None else total / values.shape[0]


##
## Exact and analytic evaluation
##

def discrete_power(mu, grid, p, norm=EUCLIDEAN):
    """Return sum_k w_k min_i |a_k - x_i|**p for a discrete measure."""
    nearest = nearest_distances(mu.atoms, grid, norm)
    return _pairwise_mean(nearest ** p, mu.weights)


def qerr_discrete(q):
    if not isinstance(q.mu, DiscreteMeasure):
        raise UnsupportedMeasureError("qerr_discrete needs a discrete measure")
    return _pth_root(discrete_power(q.mu, q.grid, q.p, q.norm), q.p)


def _cells_1d(grid):
    """Distinct sorted grid values and the (lo, hi] bounds of their cells."""
    values = np.unique(grid.points[:, 0])
    mids = 0.5 * (values[1:] + values[:-1])
    lo = np.concatenate(([-np.inf], mids))
    hi = np.concatenate((mids, [np.inf]))
    return values, lo, hi


def analytic_power_1d(mu, grid, p):
    """Return e^p_{N,p}(mu, grid) for a 1D law with partial moments."""
    values, lo, hi = _cells_1d(grid)
    if p == 2:
        return float(np.sum(mu.centered_partial_moments(lo, hi, values)[2]))
    if p == 1:
        # Split every cell at its own grid point.
        left = -mu.centered_partial_moments(lo, values, values)[1]
        right = mu.centered_partial_moments(values, hi, values)[1]
        return float(np.sum(left) + np.sum(right))
    if p == int(p) and int(p) % 2 == 0:
        total = 0.0
        for x, l, h in zip(values, lo, hi):
            total += mu.expect(lambda xi, x=x: (xi - x) ** p, l, h, growth=p)
        return total
    raise AnalyticPathUnavailable("no analytic rule for p=%r; use Monte Carlo" % (p,))


def qerr_analytic_1d(q):
    """Exact e_{N,p} for a 1D analytic law (p in {1, 2}, or even p by quadrature)."""
    if not isinstance(q.mu, (Analytic1D, DiscreteMeasure)) or q.mu.dimension != 1:
        raise UnsupportedMeasureError("qerr_analytic_1d needs a 1D analytic or discrete law")
    return _pth_root(analytic_power_1d(q.mu, q.grid, q.p), q.p)


##
## Monte Carlo
##

def pool_power(pool, grid, p, norm=EUCLIDEAN):
    """Return (mean, standard error) of min_i |xi - x_i|**p over the rows of `pool`."""
    y = nearest_distances(pool, grid, norm) ** p
    mean = _pairwise_mean(y)
    if y.shape[0] < 2:
        return mean, 0.0
    return mean, float(np.std(y, ddof=1) / math.sqrt(y.shape[0]))


def qerr_mc(q, samples, seed):
    if samples < 2:
        raise QuantcharError("Monte Carlo needs at least 2 samples, got %r" % (samples,))
    seed = as_seed(seed)
    pool = q.mu.sample(samples, seed)
    power, power_se = pool_power(pool, q.grid, q.p, q.norm)
    value = _pth_root(power, q.p)
    if power_se == 0.0 or value == 0.0:
        std_error = 0.0
    else:
        std_error = power_se / (q.p * value ** (q.p - 1.0))
    return McEstimate(value, std_error, samples, seed, power, power_se)


def evaluate_qerr(q, mc_samples=None, seed=None):
    """Evaluate `q` by the most exact path available.

    Discrete measures are summed exactly and 1D analytic laws use closed
    forms or quadrature, unless `mc_samples` asks for Monte Carlo.  An
    analytic query with no analytic rule (odd p > 1) falls back to Monte
    Carlo, which needs `mc_samples` and `seed`, and is reported as
    "monte_carlo_fallback".
    """
    if mc_samples is None:
        if isinstance(q.mu, DiscreteMeasure):
            return QErrorResult(qerr_discrete(q), "discrete")
        if isinstance(q.mu, Analytic1D):
            try:
                power = analytic_power_1d(q.mu, q.grid, q.p)
            except AnalyticPathUnavailable:
                pass
            else:
                method = "closed_form" if q.p in (1, 2) else "quadrature"
                return QErrorResult(_pth_root(power, q.p), method)
            logger.warning("no analytic rule for p=%g; falling back to Monte Carlo", q.p)
            method = "monte_carlo_fallback"
        else:
            method = "monte_carlo"
        if seed is None:
            raise QuantcharError("%s evaluation needs --mc-samples and --seed" % method)
        mc_samples = DEFAULT_MC_SAMPLES
        logger.info("%s: no sample count given, using %d samples (seed %r)", method,
                mc_samples, seed)
    else:
        method = "monte_carlo"
    estimate = qerr_mc(q, mc_samples, 0 if seed is None else seed)
    return QErrorResult(estimate.value, method, estimate.std_error)


##
## Error-function handles
##

class EFunctionHandle(object):
    """An evaluator x -> e_{N,p}(mu, x) that hides the measure.

    Discrete measures are evaluated exactly, 1D analytic laws by closed
    forms or quadrature; everything else through one fixed Monte Carlo pool
    (common random numbers), so the handle is a deterministic function.
    When `level` is set, shorter grids are padded with duplicates of their
    first point, which leaves e unchanged.
    """

    def __init__(self, power_fn, p, dimension, method, level=None):
        self._power_fn = power_fn
        self.p = p
        self.dimension = dimension
        self.method = method
        self.level = level

    @classmethod
    def for_measure(cls, mu, p, norm=EUCLIDEAN, mc_samples=None, seed=0, level=None):
        if isinstance(mu, DiscreteMeasure):
            fn = lambda grid: discrete_power(mu, grid, p, norm)
            method = "discrete"
        elif isinstance(mu, Analytic1D) and (p in (1, 2) or (p == int(p) and int(p) % 2 == 0)):
            fn = lambda grid: analytic_power_1d(mu, grid, p)
            method = "closed_form" if p in (1, 2) else "quadrature"
        else:
            if mc_samples is None:
                mc_samples = DEFAULT_MC_SAMPLES
                logger.info("error handle: no sample count given, using a pool of %d samples"
                        " (seed %r)", mc_samples, seed)
            pool = mu.sample(mc_samples, seed)
            fn = lambda grid: pool_power(pool, grid, p, norm)[0]
            method = "monte_carlo"
        return cls(fn, p, mu.dimension, method, level)

    def _grid(self, grid):
        grid = as_grid(grid)
        if grid.dimension != self.dimension:
            raise DimensionMismatchError("grid of dimension %d for an error function on R^%d"
                    % (grid.dimension, self.dimension))
        if self.level is not None:
            if grid.size > self.level:
                raise QuantcharError("grid of %d points exceeds the handle level %d"
                        % (grid.size, self.level))
            grid = grid.padded(self.level)
        return grid

    def power(self, grid):
        """Return e^p_{N,p}(mu, grid)."""
        return self._power_fn(self._grid(grid))

    def value(self, grid):
        return _pth_root(self.power(grid), self.p)

    __call__ = value


##
## Lloyd's algorithm
##

@dataclass(frozen=True, eq=False)
class LloydResult:
    grid: Grid
    distortion_history: list = field(default_factory=list)
    effective_size: int = 0
    iterations: int = 0

    @property
    def distortion(self):
        return self.distortion_history[-1]


def _distinct_pool_init(pool, n, seed):
    """N distinct pool points, taken in a seeded random order."""
    rng = np.random.default_rng(np.random.SeedSequence([as_seed(seed), 0x6c6c]))
    distinct = np.unique(pool, axis=0)
    if distinct.shape[0] < n:
        raise QuantcharError("pool has %d distinct points, fewer than N=%d"
                % (distinct.shape[0], n))
    picked, seen = [], set()
    for index in rng.permutation(pool.shape[0]):
        key = pool[index].tobytes()
        if key not in seen:
            seen.add(key)
            picked.append(pool[index])
            if len(picked) == n:
                break
    return np.array(picked)


def _assign_sorted_1d(sorted_pool, centers):
    # Ties at a midpoint go to the left (lower) center.
    order = np.argsort(centers, kind="stable")
    ordered = centers[order]
    mids = 0.5 * (ordered[1:] + ordered[:-1])
    bounds = np.searchsorted(sorted_pool, mids, side="right")
    return order, np.concatenate(([0], bounds, [sorted_pool.shape[0]]))


def _lloyd_step_1d(sorted_pool, weights, centers):
    """One 1D step on a sorted pool: (distortion of `centers`, counts, centroids)."""
    order, bounds = _assign_sorted_1d(sorted_pool, centers)
    ordered = centers[order]
    n = ordered.shape[0]
    labels = np.repeat(np.arange(n), np.diff(bounds))
    residual = sorted_pool - ordered[labels]
    distortion = _pairwise_mean(residual * residual, weights)
    counts = np.zeros(n)
    sums = np.zeros(n)
    nonempty = np.diff(bounds) > 0
    starts = bounds[:-1][nonempty]
    if starts.size:
        counts[nonempty] = np.add.reduceat(weights, starts)
        sums[nonempty] = np.add.reduceat(weights * sorted_pool, starts)
    centroids = ordered.copy()
    filled = counts > 0
    centroids[filled] = sums[filled] / counts[filled]
    out_counts = np.empty(n)
    out_centroids = np.empty(n)
    out_counts[order] = counts
    out_centroids[order] = centroids
    return distortion, out_counts, out_centroids


def _lloyd_step(pool, weights, centers):
    n, d = centers.shape
    labels = np.empty(pool.shape[0], dtype=np.intp)
    nearest = np.empty(pool.shape[0])
    for start in range(0, pool.shape[0], REDUCTION_CHUNK):
        chunk = pool[start:start + REDUCTION_CHUNK]
        diff = chunk[:, None, :] - centers[None, :, :]
        sq = np.einsum("mnd,mnd->mn", diff, diff)
        labels[start:start + chunk.shape[0]] = np.argmin(sq, axis=1)
        nearest[start:start + chunk.shape[0]] = sq.min(axis=1)
    distortion = _pairwise_mean(nearest, weights)
    counts = np.zeros(n)
    sums = np.zeros((n, d))
    for start in range(0, pool.shape[0], REDUCTION_CHUNK):
        lab = labels[start:start + REDUCTION_CHUNK]
        w = weights[start:start + REDUCTION_CHUNK]
        counts += np.bincount(lab, weights=w, minlength=n)
        for k in range(d):
            sums[:, k] += np.bincount(lab, weights=w * pool[start:start + REDUCTION_CHUNK, k],
                    minlength=n)
    centroids = centers.copy()
    filled = counts > 0
    centroids[filled] = sums[filled] / counts[filled][:, None]
    return distortion, counts, centroids


def _reseed_empty(pool, centers, counts):
    empty = np.flatnonzero(counts == 0)
    for index in empty:
        others = np.delete(centers, index, axis=0)
        far = int(np.argmax(nearest_distances(pool, Grid(others))))
        logger.debug("lloyd: re-seeding empty cell %d at pool sample %d", index, far)
        centers[index] = pool[far]
    return centers


def lloyd(mu, n, iters=100, init=None, seed=0, pool_size=100000, p=2, norm=EUCLIDEAN):
    """Lloyd iteration for the quadratic Euclidean quantizer of `mu`.

    Discrete measures are used as a weighted pool; other measures through
    a pool of `pool_size` samples drawn once from `seed`.  `init` is an
    explicit starting grid; by default N distinct pool points are chosen
    at random.  Each history entry is the distortion E min_i |xi - x_i|**2
    of the grid at the start of an iteration, the last one is the final
    grid's.
    """
    if p != 2 or norm != EUCLIDEAN:
        raise QuantcharError("Lloyd's centroid step is only exact for p=2 and the Euclidean norm")
    if n < 1:
        raise QuantcharError("N must be at least 1, got %r" % (n,))

    if isinstance(mu, DiscreteMeasure):
        support = mu.distinct_support()
        if n >= support.shape[0]:
            return LloydResult(Grid(support), [0.0], support.shape[0], 0)
        pool, weights = mu.atoms, mu.weights
    else:
        pool = mu.sample(pool_size, seed)
        weights = np.full(pool_size, 1.0 / pool_size)

    if init is not None:
        centers = np.array(as_grid(init).points, dtype=float)
        if centers.shape != (n, pool.shape[1]):
            raise DimensionMismatchError("init grid has shape %r, expected (%d, %d)"
                    % (centers.shape, n, pool.shape[1]))
    else:
        centers = _distinct_pool_init(pool, n, seed)

    if pool.shape[1] == 1:
        order = np.argsort(pool[:, 0], kind="stable")
        sorted_pool, sorted_weights = pool[order, 0], weights[order]

        def step(centers):
            distortion, counts, centroids = _lloyd_step_1d(sorted_pool, sorted_weights,
                    centers[:, 0])
            return distortion, counts, centroids[:, None]
    else:
        step = lambda centers: _lloyd_step(pool, weights, centers)

    history = []
    iteration = 0
    for iteration in range(1, iters + 1):
        distortion, counts, centroids = step(centers)
        if history and history[-1] - distortion <= LLOYD_RELATIVE_TOLERANCE * history[-1]:
            history.append(distortion)
            logger.debug("lloyd: converged after %d iterations, distortion %.12g",
                    iteration, distortion)
            break
        history.append(distortion)
        centers = _reseed_empty(pool, centroids, counts)
    else:
        history.append(step(centers)[0])

    grid = Grid(centers)
    return LloydResult(grid, history, grid.distinct_count(), iteration)
