# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""l_r norms, Voronoi assignment, bounded cells and sphere coverings."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatchError, EmptyGridError,
        NoConstructionKnownError, OffSphereError, QuantcharError)
from .measures import as_point, as_seed, draw_indexed


logger = logging.getLogger(__name__)

UNBOUNDED = math.inf

SPHERE_TOLERANCE = 1e-9
COVERING_SLACK = 1e-9
BISECTION_STEPS = 64
# Relative margin a point needs to count as strictly closer; exact ties
# (positive-area regions under l_1 and l_inf) round either way.
TIE_TOLERANCE = 1e-12
ASSIGNMENT_CHUNK = 1 << 15


@dataclass(frozen=True)
class NormSpec:
    """The l_r norm on R^d; `r = math.inf` is the max norm."""

    r: float = 2.0

    def __post_init__(self):
        if math.isnan(self.r) or self.r < 1.0:
            raise QuantcharError("an l_r norm needs r >= 1, got %r" % (self.r,))

    @classmethod
    def parse(cls, text):
        text = str(text).strip().lower()
        if text in ("inf", "infinity", "max"):
            return cls(math.inf)
        return cls(float(text))

    @property
    def is_strictly_convex(self):
        return 1.0 < self.r < math.inf

    def length(self, vectors):
        """Norm of each vector along the last axis."""
        vectors = np.asarray(vectors, dtype=float)
        if self.r == 2.0:
            return np.sqrt(np.einsum("...i,...i->...", vectors, vectors))
        return np.linalg.norm(vectors, ord=self.r, axis=-1)

    def __str__(self):
        return "inf" if math.isinf(self.r) else "%g" % self.r


EUCLIDEAN = NormSpec(2.0)


@dataclass(frozen=True, eq=False)
class Grid:
    """An ordered N-tuple of points of R^d, duplicates allowed.

    A flat sequence of numbers is read as N points on the real line.
    """

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] == 0:
            raise EmptyGridError("a grid needs at least one point")
        if not np.all(np.isfinite(points)):
            raise QuantcharError("grid points must be finite")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]

    def __len__(self):
        return self.size

    def distinct_count(self):
        return np.unique(self.points, axis=0).shape[0]

    def appended(self, point):
        point = as_point(point, self.dimension)
        return Grid(np.vstack([self.points, point]))

    def padded(self, size):
        """Return the grid lengthened to `size` points by repeating its first point."""
        if size <= self.size:
            return self
        extra = np.repeat(self.points[:1], size - self.size, axis=0)
        return Grid(np.vstack([self.points, extra]))

    def tolist(self):
        if self.dimension == 1:
            return self.points[:, 0].tolist()
        return self.points.tolist()


def as_grid(value):
    return value if isinstance(value, Grid) else Grid(value)


def norm(xi, spec=EUCLIDEAN):
    return float(spec.length(as_point(xi)))


def _check_dimension(points, grid):
    if points.shape[-1] != grid.dimension:
        raise DimensionMismatchError("points of dimension %d against a grid of dimension %d"
                % (points.shape[-1], grid.dimension))


def distances(xis, grid, spec=EUCLIDEAN):
    """Return the (M, N) matrix of distances from each row of `xis` to each grid point."""
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    _check_dimension(xis, grid)
    return spec.length(xis[:, None, :] - grid.points[None, :, :])


def nearest_distances(xis, grid, spec=EUCLIDEAN):
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    out = np.empty(xis.shape[0])
    for start in range(0, xis.shape[0], ASSIGNMENT_CHUNK):
        chunk = xis[start:start + ASSIGNMENT_CHUNK]
        out[start:start + chunk.shape[0]] = distances(chunk, grid, spec).min(axis=1)
    return out


def nearest_indices(xis, grid, spec=EUCLIDEAN):
    """Vectorised `nearest_index`: ties go to the lowest index."""
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    out = np.empty(xis.shape[0], dtype=np.intp)
    for start in range(0, xis.shape[0], ASSIGNMENT_CHUNK):
        chunk = xis[start:start + ASSIGNMENT_CHUNK]
        out[start:start + chunk.shape[0]] = np.argmin(distances(chunk, grid, spec), axis=1)
    return out


def nearest_index(xi, grid, spec=EUCLIDEAN):
    grid = as_grid(grid)
    return int(nearest_indices(as_point(xi, grid.dimension)[None, :], grid, spec)[0])


def _open_cell_mask(xis, grid, i, spec):
    dist = distances(xis, grid, spec)
    if grid.size == 1:
        return np.ones(dist.shape[0], dtype=bool)
    others = np.delete(dist, i, axis=1).min(axis=1)
    return dist[:, i] < others - TIE_TOLERANCE * np.maximum(1.0, others)


def in_open_cell(xi, grid, i, spec=EUCLIDEAN):
    """True iff `xi` is strictly closer to point `i` than to every other grid point.

    Distances that agree to within a relative `TIE_TOLERANCE` count as a tie.
    """
    grid = as_grid(grid)
    if not 0 <= i < grid.size:
        raise QuantcharError("grid index %d out of range for %d points" % (i, grid.size))
    return bool(_open_cell_mask(as_point(xi, grid.dimension)[None, :], grid, i, spec)[0])


def grid_diameter(grid, spec=EUCLIDEAN):
    return float(distances(grid.points, grid, spec).max())


##
## Sphere coverings
##

@dataclass(frozen=True, eq=False)
class CoveringCertificate:
    centers: Grid
    norm: NormSpec
    max_min_distance: float
    sample_count: int
    seed: int

    @property
    def valid(self):
        return self.max_min_distance <= 1.0 + COVERING_SLACK

    def to_dict(self):
        return {
            "centers": self.centers.points.tolist(),
            "r": str(self.norm) if math.isinf(self.norm.r) else self.norm.r,
            "max_min_distance": self.max_min_distance,
            "valid": self.valid,
        }


def covering_grid(d, spec=EUCLIDEAN):
    """Return an explicit set of unit-sphere centers whose closed unit balls cover the sphere."""
    if d < 1:
        raise QuantcharError("dimension must be at least 1, got %r" % (d,))
    r = spec.r
    if d == 1:
        points = [[-1.0], [1.0]]
    elif math.isinf(r):
        points = np.zeros((2, d))
        points[:, 0] = (-1.0, 1.0)
    elif d == 2 and r == 1.0:
        points = [[-0.5, 0.5], [0.5, -0.5]]
    elif d == 2:
        c = (1.0 - 2.0 ** -r) ** (1.0 / r)
        points = [[0.0, 1.0], [c, -0.5], [-c, -0.5]]
    elif 2.0 ** r >= d:
        eye = np.eye(d)
        points = np.empty((2 * d, d))
        points[0::2] = eye
        points[1::2] = -eye
    else:
        raise NoConstructionKnownError("no covering construction known for d=%d, r=%s"
                % (d, spec))
    return Grid(points)


def sample_sphere(d, spec, count, seed):
    """Gaussian directions normalised under `spec`: full support on its unit sphere."""
    def draw(rng, n):
        directions = rng.standard_normal((n, d))
        return directions / spec.length(directions)[:, None]
    return draw_indexed(draw, d, seed, 0, count)


def verify_covering(grid, spec, samples, seed):
    grid = as_grid(grid)
    off = np.abs(spec.length(grid.points) - 1.0)
    if off.max() > SPHERE_TOLERANCE:
        raise OffSphereError("center %r is not on the unit sphere of l_%s"
                % (grid.points[int(off.argmax())].tolist(), spec))
    sphere = sample_sphere(grid.dimension, spec, samples, seed)
    worst = float(nearest_distances(sphere, grid, spec).max())
    logger.debug("covering check: %d centers, %d samples, max distance %.12g",
            grid.size, samples, worst)
    return CoveringCertificate(grid, spec, worst, samples, as_seed(seed))


def bounded_cell_grid_euclidean(d, scale=1.0):
    """Return {0} and the vertices of a regular simplex of circumradius `scale`.

    The simplex is the standard one (basis vectors of R^{d+1}) centred at
    its barycenter and written in a Helmert basis of the hyperplane
    orthogonal to (1, ..., 1).
    """
    if d < 1:
        raise QuantcharError("dimension must be at least 1, got %r" % (d,))
    if not scale > 0.0:
        raise QuantcharError("scale must be positive, got %r" % (scale,))
    helmert = np.zeros((d, d + 1))
    for k in range(1, d + 1):
        helmert[k - 1, :k] = 1.0
        helmert[k - 1, k] = -float(k)
        helmert[k - 1] /= math.sqrt(k * (k + 1.0))
    vertices = (np.eye(d + 1) - 1.0 / (d + 1)) @ helmert.T
    vertices *= scale / math.sqrt(d / (d + 1.0))
    return Grid(np.vstack([np.zeros(d), vertices]))


def cell_radius(grid, i, spec=EUCLIDEAN, directions=2000, seed=0, t_max=None):
    """Largest distance from point `i` to the boundary of its open cell.

    Along each sampled ray the open cell is an interval starting at the
    point (cells are star-shaped), so its end is found by bisection.
    Returns `UNBOUNDED` when some ray is still inside at `t_max`.
    """
    grid = as_grid(grid)
    if not 0 <= i < grid.size:
        raise QuantcharError("grid index %d out of range for %d points" % (i, grid.size))
    if grid.size == 1:
        return UNBOUNDED
    if t_max is None:
        t_max = 1e3 * (grid_diameter(grid, spec) + 1.0)
    if not t_max > 0.0:
        raise QuantcharError("search horizon must be positive, got %r" % (t_max,))

    rays = sample_sphere(grid.dimension, spec, directions, seed)
    origin = grid.points[i]

    def inside(t):
        return _open_cell_mask(origin + t[:, None] * rays, grid, i, spec)

    hi = np.full(directions, float(t_max))
    if inside(hi).any():
        return UNBOUNDED
    lo = np.zeros(directions)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok = inside(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return float(hi.max())
