# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""Experiment runners, their internal assertions and report writing.

  - counterexample: the lognormal sequence that is Cauchy for the
    quantization distance at level N but keeps W_2(mu_n, delta_0) = 1;
  - grid_law: empirical law of Lloyd grids against the h**(1/(1+p)) limit;
  - equivalence: lattice sup of |e(mu_n) - e(mu_inf)| against W_p.

Each runner returns a list of row dataclasses in ascending order; the
matching `check_*` function returns the failed assertions as messages.
"""

import csv
import itertools
import json
import logging
import math
from dataclasses import astuple, dataclass, fields

import numpy as np
from scipy import optimize, special

from .errors import ConfigError, QuantcharError
from .measures import Dirac, LogNormal, Normal, Uniform, moment
from .metrics import initial_simplex, qdist, wasserstein_1d
from .quanterror import EFunctionHandle, lloyd


logger = logging.getLogger(__name__)

DOMINATION_SLACK = 1e-9
MONOTONE_SLACK = 1.05
UNIT_MOMENT_TOLERANCE = 1e-12
LEMMA_RHO = 0.25


@dataclass(frozen=True)
class CounterexampleRow:
    n: int
    sup_discrepancy_diag: float
    sup_discrepancy_grid: float
    supK_call: float
    w2_to_limit_sq: float
    q22_lower_to_prev: float


@dataclass(frozen=True)
class GridLawRow:
    seed: int
    N: int
    kolmogorov_distance: float
    distortion: float
    iterations: int
    effective_size: int


@dataclass(frozen=True)
class EquivalenceRow:
    n: int
    sup_lattice_gap: float
    wasserstein: float


ROW_TYPES = {
    "counterexample": CounterexampleRow,
    "grid_law": GridLawRow,
    "equivalence": EquivalenceRow,
}


##
## Lattice search over sorted grids
##

def sorted_lattice(n, half_width, pitch, budget=None):
    """Axis of [-half_width, half_width] at `pitch`, coarsened until the
    number of nondecreasing n-tuples fits `budget`.

    Returns (axis, pitch actually used).
    """
    if not (half_width > 0.0 and pitch > 0.0):
        raise QuantcharError("lattice needs positive half-width and pitch, got %r and %r"
                % (half_width, pitch))
    count = int(round(2.0 * half_width / pitch)) + 1
    if budget is not None:
        while count > 2 and special.comb(count + n - 1, n, exact=True) > budget:
            count = max(2, int(count * 0.8))
        if count != int(round(2.0 * half_width / pitch)) + 1:
            logger.info("lattice coarsened to %d points per axis to fit %d grids", count, budget)
    axis = np.linspace(-half_width, half_width, count)
    return axis, float(axis[1] - axis[0]) if count > 1 else 2.0 * half_width


def lattice_sup(gap, n, half_width, pitch, budget=None, polish=0, polish_budget=400):
    """Max of `gap` over sorted lattice tuples, then Nelder-Mead from the best `polish`.

    `gap` must be symmetric in the grid points; it receives a float array of length n.
    """
    axis, pitch = sorted_lattice(n, half_width, pitch, budget)
    scored = [(gap(np.array(t)), t) for t in itertools.combinations_with_replacement(axis, n)]
    scored.sort(key=lambda item: (-item[0], item[1]))
    best = scored[0][0]
    lo, hi = np.full(n, -half_width), np.full(n, half_width)
    for _, start in scored[:polish]:
        start = np.array(start)
        result = optimize.minimize(lambda z: -gap(np.clip(z, lo, hi)), start,
                method="Nelder-Mead", bounds=list(zip(lo, hi)),
                options=dict(maxfev=polish_budget, xatol=1e-9, fatol=1e-12,
                    initial_simplex=initial_simplex(start, np.full(n, 0.5 * pitch), lo, hi)))
        best = max(best, gap(np.clip(result.x, lo, hi)))
    return best, pitch


##
## Counterexample: Q-Cauchy but not W_2-Cauchy
##

def counterexample_measure(n):
    """Law of exp((n/2) Z - n**2/4): mean exp(-n**2/8), second moment 1."""
    return LogNormal(-0.25 * n * n, 0.5 * n)


def limit_target(points):
    """Pointwise limit of e_{N,2}(mu_n, x): sqrt(min_i x_i**2 + 1)."""
    return math.sqrt(float(np.min(np.square(points))) + 1.0)


def sup_strike_call(mu, scan=2001, span=None):
    """sup over K > 0 of K * E(X - K)_+, scanned in u = ln K then refined."""
    if span is None:
        span = max(10.0, 4.0 * mu.s * mu.s)
    us = np.linspace(-span, span, scan)
    weighted = lambda u: math.exp(u) * mu.call_price(math.exp(u))
    values = np.array([weighted(u) for u in us])
    j = int(np.argmax(values))
    bracket = (us[max(j - 1, 0)], us[min(j + 1, scan - 1)])
    refined = optimize.minimize_scalar(lambda u: -weighted(u), bounds=bracket,
            method="bounded", options=dict(xatol=1e-10))
    return max(float(values[j]), weighted(refined.x))


def call_lemma_bound(n, rho=LEMMA_RHO):
    root = math.sqrt(2.0 * math.pi)
    return max(1.0 / (n * root), 2.0 / (n * (1.0 + rho) * rho * root),
            math.exp((rho - 0.5) * n * n / 4.0))


def diagonal_bound(n):
    """Upper bound on sup_a |e_2(mu_n, (a, a)) - sqrt(1 + a**2)| over all real a.

    With eps = E X_n the gap is sqrt(1 + a**2) * (1 - sqrt(1 - u)) for
    u = 2 a eps / (1 + a**2) <= eps, hence at most 2 eps / (1 + sqrt(1 - eps)).
    This tends to eps but exceeds it for small n.
    """
    eps = math.exp(-n * n / 8.0)
    return 2.0 * eps / (1.0 + math.sqrt(1.0 - eps))


def run_counterexample(N=2, n_max=8, grid_budget=20000, half_width=10.0, pitch=0.25,
        polish=5, q22_lattice_budget=1024, seed=0):
    if N < 2:
        raise QuantcharError("counterexample needs N >= 2, got %r" % (N,))
    diagonal = np.linspace(-half_width, half_width, int(round(2.0 * half_width / pitch)) + 1)
    rows = []
    previous = None
    for n in range(1, n_max + 1):
        mu = counterexample_measure(n)
        e2 = EFunctionHandle.for_measure(mu, 2)
        diag = max(abs(e2.value([a, a]) - math.sqrt(a * a + 1.0)) for a in diagonal)
        grid_gap = lambda x: abs(e2.value(x) - limit_target(x))
        grid_sup, used_pitch = lattice_sup(grid_gap, N, half_width, pitch, grid_budget, polish)

        q22 = 0.0
        if previous is not None:
            q22 = qdist(mu, previous, 2, p=2, box=(-half_width, half_width), restarts=3,
                    seed=seed, lattice_budget=q22_lattice_budget,
                    polish_budget=200).lower_bound

        row = CounterexampleRow(n, diag, grid_sup, sup_strike_call(mu), moment(mu, 2), q22)
        logger.info("counterexample n=%d: diag %.6g, grid %.6g (pitch %g), supK %.6g, q22 %.6g",
                n, diag, grid_sup, used_pitch, row.supK_call, q22)
        rows.append(row)
        previous = mu
    return rows


def check_counterexample(rows):
    failures = []
    for row in rows:
        if min(astuple(row)[1:]) < 0.0:
            failures.append("n=%d: negative entry in %r" % (row.n, row))
        bound = diagonal_bound(row.n)
        if row.sup_discrepancy_diag > bound + 1e-12:
            failures.append("n=%d: diagonal discrepancy %.12g above its bound %.12g"
                    % (row.n, row.sup_discrepancy_diag, bound))
        if abs(row.w2_to_limit_sq - 1.0) > UNIT_MOMENT_TOLERANCE:
            failures.append("n=%d: second moment %.15g is not 1" % (row.n, row.w2_to_limit_sq))
        if row.n >= 3 and row.supK_call > call_lemma_bound(row.n):
            failures.append("n=%d: sup_K K*call %.6g above the lemma bound %.6g"
                    % (row.n, row.supK_call, call_lemma_bound(row.n)))
    tail = [row for row in rows if row.n >= 3]
    for before, after in zip(tail, tail[1:]):
        if after.sup_discrepancy_grid > MONOTONE_SLACK * before.sup_discrepancy_grid:
            failures.append("n=%d: grid discrepancy %.6g rose above %.2f x %.6g"
                    % (after.n, after.sup_discrepancy_grid, MONOTONE_SLACK,
                        before.sup_discrepancy_grid))
        if not after.supK_call < before.supK_call:
            failures.append("n=%d: sup_K K*call %.6g is not below %.6g"
                    % (after.n, after.supK_call, before.supK_call))
    for message in failures:
        logger.error("counterexample: %s", message)
    return failures


##
## Grid law of optimal quantizers
##

GRID_LAW_FAMILIES = {
    "normal": lambda: Normal(0.0, 1.0),
    "uniform": lambda: Uniform(0.0, 1.0),
    "lognormal": lambda: LogNormal(0.0, 0.5),
}


def limit_law(mu, p, d=1):
    """Law with density proportional to h**(d/(d+p)) for the density h of `mu`."""
    if d != 1:
        raise QuantcharError("limit_law is implemented for d=1, got d=%r" % (d,))
    stretch = math.sqrt(1.0 + p)
    if isinstance(mu, Normal):
        return Normal(mu.m, mu.s * stretch)
    if isinstance(mu, Uniform):
        return mu
    if isinstance(mu, LogNormal):
        return LogNormal(mu.m + p * mu.s * mu.s, mu.s * stretch)
    raise QuantcharError("no density limit law for %r" % (mu,))


def kolmogorov_distance(points, law):
    """sup_t |F_N(t) - G(t)| for the uniform empirical law of `points`."""
    x = np.sort(np.asarray(points, dtype=float).ravel())
    n = x.shape[0]
    g = np.asarray(law.cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - g), np.max(g - (i - 1) / n)))


def stretch_grid(points, size):
    """Resample a sorted 1D grid to `size` points by quantile interpolation.

    Positions outside the old range are extrapolated linearly from the
    two outermost points.
    """
    old = np.sort(np.asarray(points, dtype=float).ravel())
    m = old.shape[0]
    if m < 2:
        raise QuantcharError("need at least two points to stretch a grid")
    position = (np.arange(size) + 0.5) * m / size - 0.5
    new = np.interp(position, np.arange(m), old)
    low, high = position < 0.0, position > m - 1
    new[low] = old[0] + position[low] * (old[1] - old[0])
    new[high] = old[-1] + (position[high] - (m - 1)) * (old[-1] - old[-2])
    return new


def run_grid_law(family="normal", p=2, N_list=(10, 25, 50, 100), lloyd_iters=2000,
        pool_size=200000, seed=0, replicates=1):
    if family not in GRID_LAW_FAMILIES:
        raise ConfigError("unknown grid-law family %r (known: %s)"
                % (family, ", ".join(sorted(GRID_LAW_FAMILIES))))
    if p != 2:
        raise QuantcharError("grid law runs use Lloyd grids, which need p=2; got p=%r" % (p,))
    mu = GRID_LAW_FAMILIES[family]()
    law = limit_law(mu, p)
    rows = []
    for run_seed in range(seed, seed + replicates):
        grid = None
        for n in sorted(N_list):
            init = None if grid is None or grid.size < 2 else stretch_grid(grid.points, n)
            result = lloyd(mu, n, lloyd_iters, init, run_seed, pool_size)
            grid = result.grid
            row = GridLawRow(run_seed, n, kolmogorov_distance(grid.points, law),
                    result.distortion, result.iterations, result.effective_size)
            logger.info("grid law %s seed=%d N=%d: Kolmogorov %.6g after %d iterations",
                    family, run_seed, n, row.kolmogorov_distance, row.iterations)
            rows.append(row)
    return rows


def check_grid_law(rows):
    failures = []
    for seed in sorted({row.seed for row in rows}):
        series = sorted((row for row in rows if row.seed == seed), key=lambda row: row.N)
        for before, after in zip(series, series[1:]):
            if not after.kolmogorov_distance < before.kolmogorov_distance:
                failures.append("seed=%d: Kolmogorov distance %.6g at N=%d is not below %.6g at N=%d"
                        % (seed, after.kolmogorov_distance, after.N,
                            before.kolmogorov_distance, before.N))
    for message in failures:
        logger.error("grid law: %s", message)
    return failures


##
## Equivalence of Q_{N,p} and W_p along converging sequences
##

EQUIVALENCE_FAMILIES = {
    "shrinking-dirac": lambda n: (Dirac(1.0 / n), Dirac(0.0)),
    "widening-uniform": lambda n: (Uniform(0.0, 1.0 + 1.0 / n), Uniform(0.0, 1.0)),
    "normal-variance": lambda n: (Normal(0.0, math.sqrt(1.0 + 1.0 / n)), Normal(0.0, 1.0)),
}


def run_equivalence(family="shrinking-dirac", N=2, p=1, n_list=(1, 2, 4, 8, 16),
        half_width=4.0, pitch=0.25, grid_budget=20000):
    if family not in EQUIVALENCE_FAMILIES:
        raise ConfigError("unknown equivalence family %r (known: %s)"
                % (family, ", ".join(sorted(EQUIVALENCE_FAMILIES))))
    rows = []
    for n in sorted(n_list):
        mu_n, mu_inf = EQUIVALENCE_FAMILIES[family](n)
        e_n = EFunctionHandle.for_measure(mu_n, p)
        e_inf = EFunctionHandle.for_measure(mu_inf, p)
        gap = lambda x: abs(e_n.value(x) - e_inf.value(x))
        sup_gap, _ = lattice_sup(gap, N, half_width, pitch, grid_budget)
        row = EquivalenceRow(n, sup_gap, wasserstein_1d(mu_n, mu_inf, p))
        logger.info("equivalence %s n=%d: lattice sup %.9g, W_%g %.9g",
                family, n, sup_gap, p, row.wasserstein)
        rows.append(row)
    return rows


def check_equivalence(rows):
    failures = []
    for row in rows:
        if row.sup_lattice_gap > row.wasserstein + DOMINATION_SLACK:
            failures.append("n=%d: lattice sup %.12g exceeds W_p %.12g"
                    % (row.n, row.sup_lattice_gap, row.wasserstein))
    for before, after in zip(rows, rows[1:]):
        if after.wasserstein > before.wasserstein + DOMINATION_SLACK:
            failures.append("n=%d: W_p %.12g rose from %.12g" % (after.n, after.wasserstein,
                before.wasserstein))
        if after.sup_lattice_gap > before.sup_lattice_gap + DOMINATION_SLACK:
            failures.append("n=%d: lattice sup %.12g rose from %.12g"
                    % (after.n, after.sup_lattice_gap, before.sup_lattice_gap))
    for message in failures:
        logger.error("equivalence: %s", message)
    return failures


##
## Dispatch and reports
##

RUNNERS = {
    "counterexample": (run_counterexample, check_counterexample),
    "grid_law": (run_grid_law, check_grid_law),
    "equivalence": (run_equivalence, check_equivalence),
}

SEEDED = ("counterexample", "grid_law")


def run_experiment(config):
    """Run a validated `ExperimentConfig`; return (rows, failures)."""
    runner, check = RUNNERS[config.experiment]
    parameters = dict(config.parameters)
    if config.experiment in SEEDED:
        parameters["seed"] = config.seed
    rows = runner(**parameters)
    return rows, check(rows)


def write_report(rows, path, config, failures=()):
    """Write `rows` as CSV and the run's configuration to `<path>.json`."""
    columns = [f.name for f in fields(ROW_TYPES[config.experiment])]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(row)])
    sidecar = {
        "experiment": config.experiment,
        "parameters": config.parameters,
        "seed": config.seed,
        "columns": columns,
        "failures": list(failures),
    }
    with open(path + ".json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
    logger.info("wrote %d rows to %s", len(rows), path)
    return path
