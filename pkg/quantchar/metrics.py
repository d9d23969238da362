# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""Wasserstein distances and the quantization distance Q_{N,p}.

Q_{N,p}(mu, nu) is the sup-norm distance between the two error functions
at level N.  `qdist` only ever reports a lower bound: the best value found
by a lattice scan of a search box followed by Nelder-Mead polish.  Since
the difference of error functions is 1-Lipschitz in every grid point, the
lattice maximum is within N * pitch of the box maximum.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import (DegenerateBoxError, DimensionMismatchError, QuantcharError,
        UnsupportedMeasureError)
from .geometry import EUCLIDEAN, Grid
from .measures import (Dirac, DiscreteMeasure, LogNormal,
        SampledMeasure, Z_CUTOFF, as_point)
from .quanterror import EFunctionHandle


logger = logging.getLogger(__name__)

ASSIGNMENT_LIMIT = 2000
QUANTILE_QUAD_OPTIONS = dict(epsabs=1e-14, epsrel=1e-12, limit=200)


@dataclass(frozen=True)
class TransportPlanValue:
    """Optimal transport cost W_p**p and the kind of coupling that attains it."""

    cost: float
    plan_kind: str

    def distance(self, p):
        return max(self.cost, 0.0) ** (1.0 / p)


##
## Wasserstein distances
##

def _atoms_1d(mu):
    if isinstance(mu, Dirac):
        return np.array([mu.c]), np.array([1.0])
    if isinstance(mu, DiscreteMeasure):
        if mu.dimension != 1:
            raise DimensionMismatchError("wasserstein_1d needs 1D measures, got d=%d"
                    % mu.dimension)
        order = np.argsort(mu.atoms[:, 0], kind="stable")
        return mu.atoms[order, 0], mu.weights[order]
    return None


def _merge_breakpoints(*cumulatives):
    breaks = np.unique(np.clip(np.concatenate([[0.0, 1.0]] + list(cumulatives)), 0.0, 1.0))
    return breaks


def _discrete_quantile(values, cumulative, q):
    index = np.searchsorted(cumulative, q, side="left")
    return values[np.minimum(index, values.shape[0] - 1)]


def quantile_transport(mu, nu, p):
    """Cost of the monotone (quantile) coupling of two 1D measures."""
    for m in (mu, nu):
        if isinstance(m, SampledMeasure):
            raise UnsupportedMeasureError(
                    "wasserstein_1d needs explicit empirical conversion of sampler-backed "
                    "measures: use measures.empirical_measure(mu, n, seed)")
        if m.dimension != 1:
            raise DimensionMismatchError("wasserstein_1d needs 1D measures, got d=%d"
                    % m.dimension)
    if not p >= 1:
        raise QuantcharError("p must be >= 1, got %r" % (p,))

    atoms_mu, atoms_nu = _atoms_1d(mu), _atoms_1d(nu)
    cumulatives = [np.cumsum(w) for _, w in (a for a in (atoms_mu, atoms_nu) if a is not None)]
    breaks = _merge_breakpoints(*cumulatives)

    if atoms_mu is not None and atoms_nu is not None:
        mids = 0.5 * (breaks[1:] + breaks[:-1])
        qu = _discrete_quantile(atoms_mu[0], np.cumsum(atoms_mu[1]), mids)
        qv = _discrete_quantile(atoms_nu[0], np.cumsum(atoms_nu[1]), mids)
        cost = float(np.sum(np.diff(breaks) * np.abs(qu - qv) ** p))
        return TransportPlanValue(cost, "quantile_1d")

    def quantile_of_z(m, atoms):
        if atoms is None:
            return m.quantile_z
        cumulative = np.cumsum(atoms[1])
        return lambda z: _discrete_quantile(atoms[0], cumulative, special.ndtr(z))
    qmu, qnu = quantile_of_z(mu, atoms_mu), quantile_of_z(nu, atoms_nu)

    # Integrate over q = Phi(z): the quantile singularities at 0 and 1
    # become Gaussian tails.
    heavy = max([m.s for m in (mu, nu) if isinstance(m, LogNormal)] + [0.0])
    z_breaks = special.ndtri(breaks)
    z_breaks[0] = -Z_CUTOFF
    z_breaks[-1] = Z_CUTOFF + p * heavy

    def integrand(z):
        gap = abs(float(qmu(z)) - float(qnu(z)))
        return gap ** p * math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    cost = 0.0
    for z_lo, z_hi in zip(z_breaks[:-1], z_breaks[1:]):
        if z_hi > z_lo:
            cost += integrate.quad(integrand, z_lo, z_hi, **QUANTILE_QUAD_OPTIONS)[0]
    return TransportPlanValue(cost, "quantile_1d")


def wasserstein_1d(mu, nu, p=1):
    return quantile_transport(mu, nu, p).distance(p)


def _as_rows(points):
    points = np.asarray(points, dtype=float)
    return points[:, None] if points.ndim == 1 else points


def assignment_transport(xs, ys, p=1, norm=EUCLIDEAN):
    xs, ys = _as_rows(xs), _as_rows(ys)
    if xs.shape[0] != ys.shape[0]:
        raise DimensionMismatchError("assignment needs equal sizes, got %d and %d"
                % (xs.shape[0], ys.shape[0]))
    if xs.shape[1] != ys.shape[1]:
        raise DimensionMismatchError("points of dimension %d and %d" % (xs.shape[1], ys.shape[1]))
    if xs.shape[0] > ASSIGNMENT_LIMIT:
        raise QuantcharError("assignment is limited to %d points, got %d"
                % (ASSIGNMENT_LIMIT, xs.shape[0]))
    cost = norm.length(xs[:, None, :] - ys[None, :, :]) ** p
    rows, cols = optimize.linear_sum_assignment(cost)
    return TransportPlanValue(float(cost[rows, cols].mean()), "assignment")


def wasserstein_assignment(xs, ys, p=1, norm=EUCLIDEAN):
    """W_p between the uniform empirical measures on `xs` and `ys`."""
    return assignment_transport(xs, ys, p, norm).distance(p)


##
## Quantization distance
##

@dataclass(frozen=True, eq=False)
class QDistReport:
    lower_bound: float
    argmax_grid: Grid
    evaluations: int
    search_box: tuple
    converged_restarts: int
    lattice_pitch: float

    def to_dict(self):
        return {
            "lower_bound": self.lower_bound,
            "argmax_grid": self.argmax_grid.tolist(),
            "evaluations": self.evaluations,
            "search_box": [np.asarray(b).tolist() for b in self.search_box],
            "converged_restarts": self.converged_restarts,
            "lattice_pitch": self.lattice_pitch,
        }


def default_search_box(mu, nu, tail=1e-3, inflate=2.0):
    """Joint support bounding box of `mu` and `nu`, inflated about its center.

    Analytic laws contribute their (tail, 1 - tail) quantile range; a
    coordinate of zero width is widened to 1.
    """
    boxes = [m.support_box(tail) for m in (mu, nu)]
    lo = np.minimum(*[np.atleast_1d(np.asarray(b[0], dtype=float)) for b in boxes])
    hi = np.maximum(*[np.atleast_1d(np.asarray(b[1], dtype=float)) for b in boxes])
    center = 0.5 * (lo + hi)
    half = 0.5 * inflate * (hi - lo)
    half = np.where(half > 0.0, half, 0.5)
    return center - half, center + half


def _lattice_axis_count(budget, coordinates):
    count = int(math.floor(budget ** (1.0 / coordinates) + 1e-9))
    if count % 2 == 0:
        count -= 1
    return max(count, 1)


def initial_simplex(x0, step, lo, hi):
    simplex = [x0]
    for j in range(x0.shape[0]):
        vertex = x0.copy()
        vertex[j] = x0[j] + step[j] if x0[j] + step[j] <= hi[j] else x0[j] - step[j]
        simplex.append(vertex)
    return np.array(simplex)


def qdist(mu, nu, n, p=1, norm=EUCLIDEAN, box=None, restarts=5, seed=0,
        lattice_budget=4096, polish_budget=1000, mc_samples=100000):
    """Lower bound on Q_{N,p}(mu, nu) by lattice scan and Nelder-Mead polish.

    `box` is a pair (lo, hi) of points of R^d (scalars are broadcast); every
    grid point is searched inside it.  Sampler-backed measures are
    evaluated on one fixed pool of `mc_samples` points each.
    """
    if mu.dimension != nu.dimension:
        raise DimensionMismatchError("measures of dimension %d and %d"
                % (mu.dimension, nu.dimension))
    if n < 1:
        raise QuantcharError("N must be at least 1, got %r" % (n,))
    d = mu.dimension
    if box is None:
        lo, hi = default_search_box(mu, nu)
    else:
        lo = np.broadcast_to(as_point(box[0]), (d,)).astype(float)
        hi = np.broadcast_to(as_point(box[1]), (d,)).astype(float)
    if not np.all(hi > lo):
        raise DegenerateBoxError("search box is degenerate: lo=%r, hi=%r"
                % (lo.tolist(), hi.tolist()))

    e_mu = EFunctionHandle.for_measure(mu, p, norm, mc_samples, seed)
    e_nu = EFunctionHandle.for_measure(nu, p, norm, mc_samples, seed)
    flat_lo, flat_hi = np.tile(lo, n), np.tile(hi, n)
    evaluations = [0]

    def gap(flat):
        evaluations[0] += 1
        grid = Grid(np.clip(flat, flat_lo, flat_hi).reshape(n, d))
        return abs(e_mu.value(grid) - e_nu.value(grid))

    coordinates = n * d
    per_axis = _lattice_axis_count(lattice_budget, coordinates)
    if per_axis > 1:
        axes = [np.linspace(flat_lo[j], flat_hi[j], per_axis) for j in range(coordinates)]
        steps = (flat_hi - flat_lo) / (per_axis - 1)
    else:
        axes = [np.array([0.5 * (flat_lo[j] + flat_hi[j])]) for j in range(coordinates)]
        steps = flat_hi - flat_lo
    pitch = float(steps.max())

    lattice = [np.array(point) for point in itertools.product(*axes)]
    values = [gap(point) for point in lattice]
    ranked = sorted(range(len(lattice)), key=lambda j: (-values[j], tuple(lattice[j])))
    candidates = [(values[j], lattice[j]) for j in ranked[:1]]

    converged = 0
    for j in ranked[:max(restarts, 0)]:
        result = optimize.minimize(lambda z: -gap(z), lattice[j], method="Nelder-Mead",
                bounds=list(zip(flat_lo, flat_hi)),
                options=dict(maxfev=polish_budget, xatol=1e-9, fatol=1e-12,
                    initial_simplex=initial_simplex(lattice[j], 0.5 * steps, flat_lo, flat_hi)))
        converged += int(result.success)
        polished = np.clip(result.x, flat_lo, flat_hi)
        candidates.append((gap(polished), polished))

    best_value, best = max(candidates, key=lambda c: (c[0], tuple(-c[1])))
    logger.debug("qdist: N=%d p=%g lattice %d^%d pitch %.3g, best %.12g after %d evaluations",
            n, p, per_axis, coordinates, pitch, best_value, evaluations[0])
    return QDistReport(best_value, Grid(best.reshape(n, d)), evaluations[0],
            (lo, hi), converged, pitch)
