# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""Reconstruction of a measure from its quantization error function.

Every operator here sees the measure only through an `EFunctionHandle`:
it may evaluate e_{N,p}(mu, x) at grids of its choosing and nothing else.
Derivatives become finite differences, forward where a one-sided
derivative is meant, central for second derivatives.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, special

from .errors import (DimensionMismatchError, EvaluatorInconsistencyError,
        QuantcharError, UnboundedCellError)
from .geometry import (EUCLIDEAN, Grid, bounded_cell_grid_euclidean, cell_radius,
        covering_grid, distances)
from .measures import as_point, draw_indexed
from .quanterror import EFunctionHandle


__all__ = [
    "EFunctionHandle", "MollifierSpec", "base_grid", "kernel_phi", "make_mollifier",
    "mollified_density", "cdf_from_e11", "directional_excess_from_e22",
    "survival_from_e22", "reduce_even_p", "mean_from_e11_tail", "moments_from_e1p",
]

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-9
C_PHI_EPSREL = 1e-8
C_PHI_EPSABS = 1e-10
QUAD_LIMIT = 200
NEGATIVE_DENSITY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class MollifierSpec:
    """Kernel phi built from a grid whose origin cell is bounded.

    `base_grid` holds the origin first, then a_1, ..., a_{N-1}; `c_phi` is
    the Lebesgue integral of phi, `radius` the origin-cell radius that
    bounds phi's support.
    """

    base_grid: Grid
    p: float
    norm: object
    c_phi: float
    epsilon: float
    radius: float
    c_phi_std_error: float = 0.0

    @property
    def dimension(self):
        return self.base_grid.dimension

    @property
    def level(self):
        return self.base_grid.size

    def with_epsilon(self, epsilon):
        if not epsilon > 0.0:
            raise QuantcharError("epsilon must be positive, got %r" % (epsilon,))
        return replace(self, epsilon=float(epsilon))


def base_grid(d, norm=EUCLIDEAN):
    """Return {0, a_1, ..., a_{N-1}} with a bounded open origin cell.

    Euclidean norms use the regular simplex (N = d + 2); other norms use a
    sphere covering together with the origin.
    """
    if norm == EUCLIDEAN:
        return bounded_cell_grid_euclidean(d, 1.0)
    centers = covering_grid(d, norm)
    return Grid(np.vstack([np.zeros(d), centers.points]))


def kernel_phi(xis, grid, p, norm=EUCLIDEAN):
    """phi(xi) = min over a != 0 of |xi - a|**p minus min over all a of |xi - a|**p."""
    dist = distances(np.atleast_2d(np.asarray(xis, dtype=float)), grid, norm) ** p
    return dist[:, 1:].min(axis=1) - dist.min(axis=1)


def _simplex_cell_mass(grid, p):
    """C_phi for {0} plus a regular triangle under the Euclidean norm.

    The origin cell is the dual triangle; the part facing a_j is the
    triangle (0, v_k, v_l), on which phi = |xi - a_j|**p - |xi|**p is smooth.
    Each piece is integrated over the unit square via
    xi = s * ((1 - t) v_k + t v_l), with Jacobian s * |det(v_k, v_l)|.
    """
    a = grid.points[1:]
    half = 0.5 * np.sum(a * a, axis=1)
    # corners[l] lies on the two edges j != l.
    corners = [np.linalg.solve(a[[k, j]], half[[k, j]]) for k, j in ((1, 2), (0, 2), (0, 1))]
    mass = 0.0
    for j in range(3):
        k, l = [m for m in range(3) if m != j]
        u, w = corners[k], corners[l]
        jacobian = abs(u[0] * w[1] - u[1] * w[0])

        def integrand(t, s):
            xi = s * ((1.0 - t) * u + t * w)
            return s * (math.hypot(*(xi - a[j])) ** p - math.hypot(*xi) ** p)

        piece, _ = integrate.dblquad(integrand, 0.0, 1.0, 0.0, 1.0,
                epsabs=C_PHI_EPSABS, epsrel=C_PHI_EPSREL)
        mass += jacobian * piece
    return mass


def _planar_breakpoints(points, x, radius):
    # Candidate kinks of phi along a vertical line: the grid ordinates and
    # the diagonals |y - a_y| = |x - a_x| where l_1 and l_inf distances bend.
    candidates = set()
    for ax, ay in points:
        candidates.update((ay, ay + abs(x - ax), ay - abs(x - ax)))
    return sorted(c for c in candidates if -radius < c < radius) or None


def _planar_mass(grid, phi, radius):
    points = grid.points
    xs = set(points[:, 0])
    xs.update(0.5 * (a + b) for a, b in itertools.combinations(points[:, 0], 2))
    outer = dict(points=sorted(x for x in xs if -radius < x < radius) or None, limit=QUAD_LIMIT,
            epsabs=C_PHI_EPSABS, epsrel=C_PHI_EPSREL)

    def inner(x):
        return dict(points=_planar_breakpoints(points, x, radius), limit=QUAD_LIMIT,
                epsabs=0.1 * C_PHI_EPSABS, epsrel=0.1 * C_PHI_EPSREL)

    mass, _ = integrate.nquad(lambda y, x: phi(x, y), [(-radius, radius)] * 2,
            opts=[inner, outer])
    return mass


def _kernel_mass(grid, p, norm, radius, mc_samples, seed):
    d = grid.dimension
    phi = lambda *coords: float(kernel_phi(np.array(coords)[None, :], grid, p, norm)[0])
    if d == 1:
        values = np.sort(grid.points[:, 0])
        candidates = np.concatenate([values, 0.5 * (values[1:] + values[:-1])])
        kinks = sorted(k for k in candidates if -radius < k < radius)
        mass, _ = integrate.quad(phi, -radius, radius, points=kinks or None,
                epsabs=C_PHI_EPSABS, epsrel=C_PHI_EPSREL, limit=200)
        return mass, 0.0
    if d == 2 and norm == EUCLIDEAN:
        return _simplex_cell_mass(grid, p), 0.0
    if d == 2:
        return _planar_mass(grid, phi, radius), 0.0
    box = draw_indexed(lambda rng, n: rng.uniform(-radius, radius, (n, d)), d, seed, 0,
            mc_samples)
    values = kernel_phi(box, grid, p, norm)
    volume = (2.0 * radius) ** d
    return (volume * float(values.mean()),
            volume * float(values.std(ddof=1)) / math.sqrt(mc_samples))


def make_mollifier(d, p, norm=EUCLIDEAN, epsilon=0.1, seed=0, directions=2000,
        mc_samples=200000):
    """Build the kernel spec: base grid, origin-cell radius and C_phi."""
    if not epsilon > 0.0:
        raise QuantcharError("epsilon must be positive, got %r" % (epsilon,))
    grid = base_grid(d, norm)
    radius = cell_radius(grid, 0, norm, directions, seed)
    if math.isinf(radius):
        raise UnboundedCellError("origin cell of the base grid is unbounded for d=%d, r=%s"
                % (d, norm))
    # phi vanishes outside the origin cell, which lies in the l_inf box of
    # this radius; sampled rays may miss the cell's corners, hence the margin.
    margin = 1.0 + 1e-6 if d == 1 else 1.25
    c_phi, c_phi_se = _kernel_mass(grid, p, norm, radius * margin, mc_samples, seed)
    if not c_phi > 0.0:
        raise EvaluatorInconsistencyError("kernel mass came out nonpositive: %r" % (c_phi,))
    logger.debug("mollifier d=%d p=%g r=%s: %d grid points, radius %.6g, C_phi %.10g",
            d, p, norm, grid.size, radius, c_phi)
    return MollifierSpec(grid, float(p), norm, c_phi, float(epsilon), radius, c_phi_se)


def _check_handle(handle, p=None, dimension=None, what="operation"):
    if p is not None and handle.p != p:
        raise QuantcharError("%s needs an error function with p=%g, got p=%g"
                % (what, p, handle.p))
    if dimension is not None and handle.dimension != dimension:
        raise DimensionMismatchError("%s needs an error function on R^%d, got R^%d"
                % (what, dimension, handle.dimension))


def _clamp_probability(raw, what):
    clamped = min(max(raw, 0.0), 1.0)
    if clamped != raw:
        level = logging.WARNING if abs(clamped - raw) > 1e-9 else logging.DEBUG
        logger.log(level, "%s estimate %.12g clamped to %g", what, raw, clamped)
    return clamped


def mollified_density(handle, spec, x):
    """Return phi_eps * mu (x) from two evaluations of e^p at level |Gamma|."""
    _check_handle(handle, spec.p, spec.dimension, "mollified_density")
    x = as_point(x, spec.dimension)
    shifts = spec.epsilon * spec.base_grid.points[1:]
    shifted = x - shifts
    tilde = np.vstack([shifted[:1], shifted])
    tilde0 = np.vstack([x, shifted])
    scale = spec.c_phi * spec.epsilon ** (spec.dimension + spec.p)
    upper, lower = handle.power(tilde), handle.power(tilde0)
    density = (upper - lower) / scale
    if density < 0.0:
        tolerance = NEGATIVE_DENSITY_TOLERANCE * max(1.0, abs(upper)) / scale
        if density < -tolerance:
            raise EvaluatorInconsistencyError(
                    "negative mollified density %.6g at x=%r" % (density, x.tolist()))
        logger.debug("mollified density %.3g at x=%r set to 0", density, x.tolist())
        density = 0.0
    return density


def cdf_from_e11(handle, x, h=None):
    """Forward-difference estimate of the CDF: (1 + d/dx e_{1,1}(mu, x)) / 2."""
    _check_handle(handle, 1, 1, "cdf_from_e11")
    if h is None:
        h = 1e-5 * (1.0 + abs(x))
    slope = (handle.value([x + h]) - handle.value([x])) / h
    return _clamp_probability(0.5 * (1.0 + slope), "cdf")


def _unit_direction(u, dimension):
    u = as_point(u, dimension)
    if abs(float(np.linalg.norm(u)) - 1.0) > UNIT_TOLERANCE:
        raise QuantcharError("direction must be a Euclidean unit vector, got %r" % (u.tolist(),))
    return u


def directional_excess_from_e22(handle, u, lam, lam_prime):
    """Estimate of E((xi|u) - (lam + lam_prime)/2)_+ from two e_{2,2} values."""
    _check_handle(handle, 2, what="directional_excess_from_e22")
    if not lam_prime > lam:
        raise QuantcharError("need lam < lam_prime, got %r and %r" % (lam, lam_prime))
    u = _unit_direction(u, handle.dimension)
    a, b = lam * u, lam_prime * u
    return (handle.power([a, a]) - handle.power([a, b])) / (2.0 * (lam_prime - lam))


def survival_from_e22(handle, u, lam, h=None):
    """Estimate of mu((xi|u) > lam + h/2) by differencing the directional excess."""
    _check_handle(handle, 2, what="survival_from_e22")
    u = _unit_direction(u, handle.dimension)
    if h is None:
        h = 1e-4 * (1.0 + abs(lam))
    near = directional_excess_from_e22(handle, u, lam, lam + h)
    far = directional_excess_from_e22(handle, u, lam + h, lam + 2.0 * h)
    return _clamp_probability(-(far - near) / h, "survival")


def reduce_even_p(handle, p, a, b, h=1e-3):
    """Estimate e^{p-2}_{2,p-2}(mu, (a, b)) from e^p_{2,p}.

    Uses the second difference along (1, -1), which keeps the midpoint of
    (a, b) fixed, divided by p(p - 1).
    """
    if not a < b:
        raise QuantcharError("reduce_even_p needs a < b, got a=%r, b=%r" % (a, b))
    if not a < b - 2.0 * h:
        raise QuantcharError("step h=%r too large for a=%r, b=%r" % (h, a, b))
    if p != int(p) or int(p) % 2 or p < 4:
        raise QuantcharError("reduce_even_p needs an even p >= 4, got %r" % (p,))
    _check_handle(handle, p, 1, "reduce_even_p")
    inner = handle.power([a + h, b - h])
    center = handle.power([a, b])
    outer = handle.power([a - h, b + h])
    return (inner - 2.0 * center + outer) / (h * h) / (p * (p - 1.0))


def mean_from_e11_tail(handle, a=1e6):
    """Return (e_{1,1}(mu, -a) - a, e_{1,1}(mu, a) - a); they tend to (mean, -mean)."""
    _check_handle(handle, 1, 1, "mean_from_e11_tail")
    return handle.value([-a]) - a, handle.value([a]) - a


def moments_from_e1p(handle, p):
    """Recover the moments m_1..m_p from e^p_{1,p} for even p.

    e^p_{1,p}(mu, x) = sum_k C(p, k) m_{p-k} (-x)**k is a polynomial of
    degree p, interpolated here at p + 1 integer nodes.
    """
    if p != int(p) or int(p) % 2 or p < 2:
        raise QuantcharError("moments_from_e1p needs an even p >= 2, got %r" % (p,))
    p = int(p)
    _check_handle(handle, p, 1, "moments_from_e1p")
    nodes = np.arange(p + 1, dtype=float) - 0.5 * p
    values = np.array([handle.power([x]) for x in nodes])
    coefficients = np.polynomial.polynomial.polyfit(nodes, values, p)
    return [float(coefficients[p - j] / (special.comb(p, p - j) * (-1.0) ** (p - j)))
            for j in range(1, p + 1)]
