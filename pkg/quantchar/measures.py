# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""Probability measures: discrete, analytic 1D families and seeded samplers.

All closed forms go through `gaussian_cdf` (scipy's `ndtr`), the single
source of truth for the normal distribution function.  Measure values are
immutable after construction.

Sampling is counter-based: indices are grouped in blocks of
`SAMPLE_BLOCK_SIZE`, block `b` is drawn from `SeedSequence([seed, b])`, so
sample `i` depends only on `(seed, i)` and disjoint index ranges can be
drawn independently.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import (DimensionMismatchError, MomentDivergenceError,
        QuantcharError, UnsupportedMeasureError)


logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-12
SAMPLE_BLOCK_SIZE = 4096
SEED_LIMIT = 2 ** 64

# Standardized-space cut-off for quadrature; the Gaussian tail beyond it is
# below double precision.
Z_CUTOFF = 40.0
QUAD_OPTIONS = dict(epsabs=1e-15, epsrel=1e-12, limit=200)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gaussian_cdf(x):
    return special.ndtr(x)


def gaussian_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def _gaussian_mass(alpha, beta):
    """Return Phi(beta) - Phi(alpha), evaluated on the side of the smaller tail."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    upper = special.ndtr(-alpha) - special.ndtr(-beta)
    lower = special.ndtr(beta) - special.ndtr(alpha)
    return np.where(alpha > 0.0, upper, lower)


def _z_times_pdf(z):
    # z * phi(z), with the limit 0 at infinite z.
    z = np.asarray(z, dtype=float)
    finite = np.isfinite(z)
    safe = np.where(finite, z, 0.0)
    return np.where(finite, safe * gaussian_pdf(safe), 0.0)


def _safe_log(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0.0, np.log(np.where(x > 0.0, x, 1.0)), -np.inf)


def as_point(coords, dimension=None):
    """Return `coords` as a finite 1-D float array."""
    point = np.atleast_1d(np.asarray(coords, dtype=float))
    if point.ndim != 1:
        raise DimensionMismatchError("a point must be a flat vector, got shape %r"
                % (point.shape,))
    if not np.all(np.isfinite(point)):
        raise QuantcharError("point has nonfinite coordinates: %r" % (point.tolist(),))
    if dimension is not None and point.shape[0] != dimension:
        raise DimensionMismatchError("point of dimension %d where %d was expected"
                % (point.shape[0], dimension))
    return point


def as_seed(value):
    seed = int(value)
    if not 0 <= seed < SEED_LIMIT:
        raise QuantcharError("seed must be a 64-bit unsigned integer: %r" % (value,))
    return seed


def draw_indexed(draw_block, dimension, seed, start, n):
    seed = as_seed(seed)
    if n < 1:
        raise QuantcharError("sample count must be at least 1: %r" % (n,))
    if start < 0:
        raise QuantcharError("sample start index must be nonnegative: %r" % (start,))
    out = np.empty((n, dimension))
    stop = start + n
    filled = 0
    for block in range(start // SAMPLE_BLOCK_SIZE, (stop - 1) // SAMPLE_BLOCK_SIZE + 1):
        block_start = block * SAMPLE_BLOCK_SIZE
        rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
        values = np.asarray(draw_block(rng, SAMPLE_BLOCK_SIZE), dtype=float)
        values = values.reshape(SAMPLE_BLOCK_SIZE, dimension)
        lo = max(start, block_start) - block_start
        hi = min(stop, block_start + SAMPLE_BLOCK_SIZE) - block_start
        out[filled:filled + hi - lo] = values[lo:hi]
        filled += hi - lo
    return out


class Measure(object):
    """Base class of the three measure representations."""

    dimension = 1

    def sample(self, n, seed, start=0):
        """Return samples `start .. start+n-1` of the stream `seed`, shape (n, d)."""
        return draw_indexed(self._draw_block, self.dimension, seed, start, n)

    def _draw_block(self, rng, count):
        raise NotImplementedError


##
## Analytic 1D families
##

class Analytic1D(Measure):
    """A one-dimensional law with closed-form CDF, quantile and partial moments."""

    family = None
    dimension = 1

    @property
    def params(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    def centered_partial_moments(self, lo, hi, center):
        """Return (M0, M1, M2) with Mk = integral over (lo, hi] of (xi - center)**k.

        `lo`, `hi` and `center` broadcast against each other; infinite
        bounds are allowed.
        """
        m0, m1, m2 = self._raw_partial_moments(lo, hi)
        c = np.asarray(center, dtype=float)
        return m0, m1 - c * m0, m2 - 2.0 * c * m1 + c * c * m0

    def _raw_partial_moments(self, lo, hi):
        raise NotImplementedError

    def expect(self, func, lo=-np.inf, hi=np.inf, growth=0.0):
        """Integrate scalar `func` against the measure over (lo, hi].

        `growth` is the polynomial degree of `func` at infinity; it tells the
        heavy-tailed families where the integrand's mass sits.
        """
        raise NotImplementedError

    def support_box(self, tail=1e-3):
        return float(self.quantile(tail)), float(self.quantile(1.0 - tail))

    def quantile_z(self, z):
        """Quantile at level Phi(z)."""
        return self.quantile(gaussian_cdf(z))


def _quad_standardized(integrand, z_lo, z_hi, landmarks):
    if not z_hi > z_lo:
        return 0.0
    points = sorted(z for z in landmarks if z_lo < z < z_hi)
    value, _ = integrate.quad(integrand, z_lo, z_hi, points=points or None, **QUAD_OPTIONS)
    return value


@dataclass(frozen=True)
class Dirac(Analytic1D):
    c: float
    family = "dirac"

    def __post_init__(self):
        as_point(self.c)

    def cdf(self, t):
        return np.where(np.asarray(t, dtype=float) >= self.c, 1.0, 0.0)

    def quantile(self, q):
        return np.full_like(np.asarray(q, dtype=float), self.c)

    def mean(self):
        return float(self.c)

    def centered_partial_moments(self, lo, hi, center):
        inside = ((np.asarray(lo) < self.c) & (self.c <= np.asarray(hi))).astype(float)
        offset = self.c - np.asarray(center, dtype=float)
        return inside, inside * offset, inside * offset * offset

    def _raw_partial_moments(self, lo, hi):
        return self.centered_partial_moments(lo, hi, 0.0)

    def expect(self, func, lo=-np.inf, hi=np.inf, growth=0.0):
        return float(func(self.c)) if lo < self.c <= hi else 0.0

    def abs_moment(self, p, center):
        return abs(self.c - center) ** p

    def call_price(self, strike):
        return max(self.c - strike, 0.0)

    def support_box(self, tail=1e-3):
        return float(self.c), float(self.c)

    def _draw_block(self, rng, count):
        return np.full((count, 1), self.c)


@dataclass(frozen=True)
class Uniform(Analytic1D):
    a: float
    b: float
    family = "uniform"

    def __post_init__(self):
        as_point([self.a, self.b])
        if not self.a < self.b:
            raise QuantcharError("Uniform(a, b) requires a < b, got a=%r, b=%r" % (self.a, self.b))

    @property
    def width(self):
        return self.b - self.a

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.a) / self.width, 0.0, 1.0)

    def quantile(self, q):
        return self.a + np.asarray(q, dtype=float) * self.width

    def mean(self):
        return 0.5 * (self.a + self.b)

    def centered_partial_moments(self, lo, hi, center):
        # Integrate (xi - c)**k directly: no cancellation between raw moments.
        l = np.clip(np.asarray(lo, dtype=float), self.a, self.b)
        h = np.clip(np.asarray(hi, dtype=float), self.a, self.b)
        u = h - np.asarray(center, dtype=float)
        v = l - np.asarray(center, dtype=float)
        w = self.width
        span = h - l
        return (span / w,
                span * (u + v) / (2.0 * w),
                span * (u * u + u * v + v * v) / (3.0 * w))

    def _raw_partial_moments(self, lo, hi):
        return self.centered_partial_moments(lo, hi, 0.0)

    def expect(self, func, lo=-np.inf, hi=np.inf, growth=0.0):
        l, h = max(lo, self.a), min(hi, self.b)
        if not h > l:
            return 0.0
        value, _ = integrate.quad(func, l, h, **QUAD_OPTIONS)
        return value / self.width

    def abs_moment(self, p, center):
        u, v = self.b - center, self.a - center
        if v >= 0.0:
            total = u ** (p + 1) - v ** (p + 1)
        elif u <= 0.0:
            total = (-v) ** (p + 1) - (-u) ** (p + 1)
        else:
            total = u ** (p + 1) + (-v) ** (p + 1)
        return total / ((p + 1) * self.width)

    def call_price(self, strike):
        if strike <= self.a:
            return self.mean() - strike
        if strike >= self.b:
            return 0.0
        return (self.b - strike) ** 2 / (2.0 * self.width)

    def support_box(self, tail=1e-3):
        return float(self.a), float(self.b)

    def _draw_block(self, rng, count):
        return self.a + self.width * rng.random((count, 1))


@dataclass(frozen=True)
class Normal(Analytic1D):
    m: float
    s: float
    family = "normal"

    def __post_init__(self):
        as_point([self.m, self.s])
        if not self.s > 0.0:
            raise QuantcharError("Normal(m, s) requires s > 0, got s=%r" % (self.s,))

    def _z(self, t):
        return (np.asarray(t, dtype=float) - self.m) / self.s

    def cdf(self, t):
        return gaussian_cdf(self._z(t))

    def quantile(self, q):
        return self.m + self.s * special.ndtri(q)

    def quantile_z(self, z):
        return self.m + self.s * np.asarray(z, dtype=float)

    def mean(self):
        return float(self.m)

    def centered_partial_moments(self, lo, hi, center):
        alpha, beta = self._z(lo), self._z(hi)
        z0 = _gaussian_mass(alpha, beta)
        z1 = gaussian_pdf(alpha) - gaussian_pdf(beta)
        z2 = z0 + _z_times_pdf(alpha) - _z_times_pdf(beta)
        delta = self.m - np.asarray(center, dtype=float)
        s = self.s
        return (z0,
                delta * z0 + s * z1,
                delta * delta * z0 + 2.0 * delta * s * z1 + s * s * z2)

    def _raw_partial_moments(self, lo, hi):
        return self.centered_partial_moments(lo, hi, 0.0)

    def expect(self, func, lo=-np.inf, hi=np.inf, growth=0.0):
        z_lo = max(float(self._z(lo)), -Z_CUTOFF)
        z_hi = min(float(self._z(hi)), Z_CUTOFF)
        integrand = lambda z: func(self.m + self.s * z) * math.exp(-0.5 * z * z) / _SQRT_2PI
        return _quad_standardized(integrand, z_lo, z_hi, (-8.0, -4.0, 0.0, 4.0, 8.0))

    def abs_moment(self, p, center):
        if center == self.m:
            return (self.s ** p * 2.0 ** (0.5 * p) * special.gamma(0.5 * (p + 1))
                    / math.sqrt(math.pi))
        if p == 2:
            return self.s ** 2 + (self.m - center) ** 2
        kink = float(self._z(center))
        integrand = lambda z: abs(self.m + self.s * z - center) ** p * math.exp(-0.5 * z * z) / _SQRT_2PI
        return _quad_standardized(integrand, -Z_CUTOFF, Z_CUTOFF, (-8.0, 0.0, 8.0, kink))

    def call_price(self, strike):
        d = (self.m - strike) / self.s
        return float((self.m - strike) * gaussian_cdf(d) + self.s * gaussian_pdf(d))

    def _draw_block(self, rng, count):
        return self.m + self.s * rng.standard_normal((count, 1))


@dataclass(frozen=True)
class LogNormal(Analytic1D):
    """Law of exp(s*Z + m) for a standard normal Z."""

    m: float
    s: float
    family = "lognormal"

    def __post_init__(self):
        as_point([self.m, self.s])
        if not self.s > 0.0:
            raise QuantcharError("LogNormal(m, s) requires s > 0, got s=%r" % (self.s,))

    def _z(self, t):
        return (_safe_log(t) - self.m) / self.s

    def raw_moment(self, k):
        return math.exp(k * self.m + 0.5 * k * k * self.s * self.s)

    def cdf(self, t):
        return gaussian_cdf(self._z(t))

    def quantile(self, q):
        return np.exp(self.m + self.s * special.ndtri(q))

    def quantile_z(self, z):
        return np.exp(self.m + self.s * np.asarray(z, dtype=float))

    def mean(self):
        return self.raw_moment(1)

    def _raw_partial_moments(self, lo, hi):
        alpha, beta = self._z(lo), self._z(hi)
        s = self.s
        return (_gaussian_mass(alpha, beta),
                self.raw_moment(1) * _gaussian_mass(alpha - s, beta - s),
                self.raw_moment(2) * _gaussian_mass(alpha - 2.0 * s, beta - 2.0 * s))

    def expect(self, func, lo=-np.inf, hi=np.inf, growth=0.0):
        peak = growth * self.s
        z_lo = max(float(self._z(lo)), -Z_CUTOFF)
        z_hi = min(float(self._z(hi)), max(Z_CUTOFF, peak + Z_CUTOFF))
        integrand = lambda z: (func(math.exp(self.m + self.s * z))
                * math.exp(-0.5 * z * z) / _SQRT_2PI)
        return _quad_standardized(integrand, z_lo, z_hi,
                (-8.0, 0.0, peak - 4.0, peak, peak + 4.0))

    def abs_moment(self, p, center):
        if center == 0.0:
            return self.raw_moment(p)
        return self.expect(lambda xi: abs(xi - center) ** p, growth=p)

    def call_price(self, strike):
        if strike <= 0.0:
            return self.mean() - strike
        d1 = (self.m + self.s * self.s - math.log(strike)) / self.s
        return float(self.mean() * gaussian_cdf(d1) - strike * gaussian_cdf(d1 - self.s))

    def _draw_block(self, rng, count):
        return np.exp(self.m + self.s * rng.standard_normal((count, 1)))


ANALYTIC_FAMILIES = {cls.family: cls for cls in (Dirac, Uniform, Normal, LogNormal)}


##
## Discrete and sampled measures
##

@dataclass(frozen=True, eq=False)
class DiscreteMeasure(Measure):
    """Finitely many atoms (rows of `atoms`) with nonnegative weights summing to 1."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise QuantcharError("a discrete measure needs at least one atom")
        if weights.shape[0] != atoms.shape[0]:
            raise DimensionMismatchError("%d atoms but %d weights"
                    % (atoms.shape[0], weights.shape[0]))
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise QuantcharError("atoms and weights must be finite")
        if np.any(weights < 0.0):
            raise QuantcharError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise QuantcharError("weights sum to %r, not 1" % (weights.sum(),))
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, atoms):
        atoms = np.asarray(atoms, dtype=float)
        return cls(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))

    @property
    def dimension(self):
        return self.atoms.shape[1]

    @property
    def size(self):
        return self.atoms.shape[0]

    def distinct_support(self):
        """Return the distinct atoms carrying positive weight, in sorted order."""
        return np.unique(self.atoms[self.weights > 0.0], axis=0)

    def _values_1d(self):
        if self.dimension != 1:
            raise DimensionMismatchError("operation needs a 1-dimensional measure, got d=%d"
                    % self.dimension)
        return self.atoms[:, 0]

    def cdf(self, t):
        values = self._values_1d()
        t = np.asarray(t, dtype=float)
        return np.sum(self.weights * (values <= t[..., None]), axis=-1)

    def quantile(self, q):
        values = self._values_1d()
        order = np.argsort(values, kind="stable")
        cumulative = np.cumsum(self.weights[order])
        index = np.searchsorted(cumulative, np.asarray(q, dtype=float) - 1e-15, side="left")
        return values[order][np.minimum(index, values.shape[0] - 1)]

    def mean(self):
        return self.weights @ self.atoms

    def centered_partial_moments(self, lo, hi, center):
        values = self._values_1d()
        lo = np.asarray(lo, dtype=float)[..., None]
        hi = np.asarray(hi, dtype=float)[..., None]
        mask = (lo < values) & (values <= hi)
        shifted = values - np.asarray(center, dtype=float)[..., None]
        w = self.weights * mask
        return w.sum(axis=-1), (w * shifted).sum(axis=-1), (w * shifted * shifted).sum(axis=-1)

    def expect(self, func, lo=-np.inf, hi=np.inf, growth=0.0):
        values = self._values_1d()
        mask = (lo < values) & (values <= hi)
        return float(sum(w * func(v) for v, w in zip(values[mask], self.weights[mask])))

    def call_price(self, strike):
        return float(self.weights @ np.maximum(self._values_1d() - strike, 0.0))

    def support_box(self, tail=None):
        return self.atoms.min(axis=0), self.atoms.max(axis=0)

    def _draw_block(self, rng, count):
        cumulative = np.cumsum(self.weights)
        index = np.searchsorted(cumulative, rng.random(count) * cumulative[-1], side="right")
        return self.atoms[np.minimum(index, self.size - 1)]


@dataclass(frozen=True, eq=False)
class SampledMeasure(Measure):
    """A measure known only through a seeded sampler.

    `sampler(rng, count)` must return `count` points (shape (count, d)) drawn
    from the numpy Generator `rng` and nothing else.
    """

    sampler: Callable
    dimension: int
    name: str = field(default="sampled")

    def _draw_block(self, rng, count):
        return self.sampler(rng, count)

    def support_box(self, tail=1e-3, samples=4096, seed=0):
        pool = self.sample(samples, seed)
        return np.quantile(pool, tail, axis=0), np.quantile(pool, 1.0 - tail, axis=0)


def gaussian_sampler(mean, cov):
    """Return a SampledMeasure for the multivariate normal N(mean, cov)."""
    mean = as_point(mean)
    factor = np.linalg.cholesky(np.asarray(cov, dtype=float))
    dimension = mean.shape[0]

    def draw(rng, count):
        return mean + rng.standard_normal((count, dimension)) @ factor.T
    return SampledMeasure(draw, dimension, name="gaussian")


##
## Operations
##

def _require_1d(mu, operation):
    if mu.dimension != 1:
        raise DimensionMismatchError("%s needs a 1-dimensional measure, got d=%d"
                % (operation, mu.dimension))
    if isinstance(mu, SampledMeasure):
        raise UnsupportedMeasureError(
                "%s is not available for sampler-backed measures; "
                "estimate it from empirical_measure(mu, n, seed) instead" % operation)


def sample(mu, n, seed, start=0):
    return mu.sample(n, seed, start)


def moment(mu, p, center=None, norm=None, samples=None, seed=None):
    """Return the integral of |xi - center|**p against `mu`.

    `norm` defaults to the Euclidean norm; it only matters for d > 1.
    Sampler-backed measures need an explicit Monte Carlo `samples` count
    and `seed`.
    """
    if not p >= 1:
        raise QuantcharError("moment order must be >= 1, got %r" % (p,))
    center = np.zeros(mu.dimension) if center is None else as_point(center)
    if center.shape[0] != mu.dimension:
        raise DimensionMismatchError("center of dimension %d for a measure of dimension %d"
                % (center.shape[0], mu.dimension))

    if isinstance(mu, Analytic1D):
        value = float(mu.abs_moment(p, float(center[0])))
    else:
        if isinstance(mu, DiscreteMeasure):
            points, weights = mu.atoms, mu.weights
        elif samples is None or seed is None:
            raise QuantcharError("Monte Carlo moment needs explicit samples and seed")
        else:
            points = mu.sample(samples, seed)
            weights = np.full(samples, 1.0 / samples)
        from .geometry import EUCLIDEAN
        distances = (norm or EUCLIDEAN).length(points - center)
        value = float(weights @ distances ** p)

    if not math.isfinite(value):
        raise MomentDivergenceError("moment of order %r is not finite (got %r)" % (p, value))
    return value


def cdf_1d(mu, t):
    _require_1d(mu, "cdf_1d")
    return float(mu.cdf(t))


def quantile(mu, q):
    _require_1d(mu, "quantile")
    if not 0.0 < q < 1.0:
        raise QuantcharError("quantile level must lie in (0, 1), got %r" % (q,))
    return float(mu.quantile(q))


def empirical_cdf_1d(mu, t, samples, seed):
    if mu.dimension != 1:
        raise DimensionMismatchError("empirical_cdf_1d needs a 1-dimensional measure")
    pool = mu.sample(samples, seed)[:, 0]
    return float(np.count_nonzero(pool <= t)) / samples


def empirical_measure(mu, n, seed):
    """Return the uniform discrete measure on `n` samples of `mu`."""
    return DiscreteMeasure.uniform(mu.sample(n, seed))


def call_price(mu, strike):
    """Return E(X - strike)_+ for a one-dimensional measure."""
    _require_1d(mu, "call_price")
    return float(mu.call_price(strike))


def partial_moments_1d(mu, lo, hi, center):
    _require_1d(mu, "partial moments")
    return mu.centered_partial_moments(lo, hi, center)


def partial_second_moment_1d(mu, a, b):
    """Split E|xi - nearest(a, b)|**2 at the midpoint; the midpoint goes left."""
    if a > b:
        raise QuantcharError("partial_second_moment_1d needs a <= b, got a=%r, b=%r" % (a, b))
    _require_1d(mu, "partial_second_moment_1d")
    mid = 0.5 * (a + b)
    left = mu.centered_partial_moments(-np.inf, mid, a)[2]
    right = mu.centered_partial_moments(mid, np.inf, b)[2]
    return float(left), float(right)


##
## Measure specification files
##

def measure_from_spec(spec):
    """Build a measure from its JSON-decoded specification dict."""
    kind = spec.get("kind")
    if kind == "discrete":
        return DiscreteMeasure(spec["atoms"], spec["weights"])
    if kind not in ANALYTIC_FAMILIES:
        raise UnsupportedMeasureError("unknown measure kind: %r" % (kind,))
    params = spec.get("params", {})
    try:
        return ANALYTIC_FAMILIES[kind](**{k: float(v) for k, v in params.items()})
    except TypeError:
        raise QuantcharError("bad parameters for %s measure: %r" % (kind, params))


def measure_to_spec(mu):
    if isinstance(mu, DiscreteMeasure):
        return {"kind": "discrete", "atoms": mu.atoms.tolist(), "weights": mu.weights.tolist()}
    if isinstance(mu, Analytic1D):
        return {"kind": mu.family, "params": mu.params}
    raise UnsupportedMeasureError("sampler-backed measures have no file representation")


def load_measure(path):
    with open(path) as f:
        return measure_from_spec(json.load(f))
