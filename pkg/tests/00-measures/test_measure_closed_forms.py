import math

import numpy
import pytest

import measure_utils
from quantchar import measures
from quantchar.errors import (DimensionMismatchError, MomentDivergenceError,
        QuantcharError, UnsupportedMeasureError)
from quantchar.measures import (Dirac, DiscreteMeasure, LogNormal, Normal, Uniform,
        SampledMeasure, gaussian_sampler)


# moment

@pytest.mark.parametrize("n", range(1, 9))
def test_counterexample_sequence_moments(n):
    mu = LogNormal(-n * n / 4.0, n / 2.0)
    assert measures.moment(mu, 1) == pytest.approx(math.exp(-n * n / 8.0), rel=1e-12)
    assert measures.moment(mu, 2) == pytest.approx(1.0, rel=1e-12)


def test_lognormal_first_moment_at_n_2():
    assert measures.moment(LogNormal(-1.0, 1.0), 1, [0.0]) == pytest.approx(0.60653066, abs=1e-8)


def test_moment_of_dirac_at_its_atom_is_zero():
    assert measures.moment(Dirac(0.0), 2, [0.0]) == 0.0


def test_uniform_second_moment():
    assert measures.moment(Uniform(0.0, 1.0), 2, [0.0]) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_uniform_moment_about_interior_center():
    # integral over [0, 1] of |x - 0.25|**3 = (0.25**4 + 0.75**4) / 4
    expected = (0.25 ** 4 + 0.75 ** 4) / 4.0
    assert measures.moment(Uniform(0.0, 1.0), 3, [0.25]) == pytest.approx(expected, rel=1e-13)


def test_normal_moments():
    mu = Normal(0.5, 2.0)
    assert measures.moment(mu, 2, [1.5]) == pytest.approx(4.0 + 1.0, rel=1e-13)
    assert measures.moment(mu, 1, [0.5]) == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), rel=1e-13)
    assert measures.moment(mu, 4, [0.5]) == pytest.approx(3.0 * 16.0, rel=1e-12)
    # Off-center odd moment by quadrature against a closed form for p = 1:
    # E|X - c| = s * (2 phi(d) + d (2 Phi(d) - 1)), d = (c - m) / s.
    d = (1.5 - 0.5) / 2.0
    phi = math.exp(-0.5 * d * d) / math.sqrt(2.0 * math.pi)
    Phi = 0.5 * (1.0 + math.erf(d / math.sqrt(2.0)))
    expected = 2.0 * (2.0 * phi + d * (2.0 * Phi - 1.0))
    assert measures.moment(mu, 1, [1.5]) == pytest.approx(expected, rel=1e-10)


def test_discrete_moment_is_a_weighted_sum():
    mu = DiscreteMeasure([[0.0, 0.0], [3.0, 4.0]], [0.75, 0.25])
    assert measures.moment(mu, 2) == pytest.approx(0.25 * 25.0, rel=1e-15)
    assert measures.moment(mu, 1, [3.0, 0.0]) == pytest.approx(0.75 * 3.0 + 0.25 * 4.0)


def test_discrete_moment_under_max_norm():
    from quantchar.geometry import NormSpec
    mu = DiscreteMeasure([[1.0, -2.0]], [1.0])
    assert measures.moment(mu, 1, norm=NormSpec(math.inf)) == 2.0
    assert measures.moment(mu, 1, norm=NormSpec(1.0)) == 3.0


def test_moment_center_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        measures.moment(Uniform(0.0, 1.0), 2, [0.0, 0.0])


def test_sampled_moment_needs_samples_and_seed():
    mu = gaussian_sampler([0.0, 0.0], numpy.eye(2))
    with pytest.raises(QuantcharError):
        measures.moment(mu, 2)
    # E|xi|^2 = 2 for the standard 2D normal.
    assert measures.moment(mu, 2, samples=20000, seed=7) == pytest.approx(2.0, abs=0.1)


def test_sampled_moment_divergence():
    def overflowing(rng, count):
        with numpy.errstate(over="ignore"):
            return 10.0 ** (400.0 * rng.random((count, 1)))
    mu = SampledMeasure(overflowing, 1, "overflowing")
    with numpy.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(MomentDivergenceError):
            measures.moment(mu, 2, samples=1000, seed=1)


# cdf and quantile

def test_cdf_1d_examples():
    assert measures.cdf_1d(Normal(0.0, 1.0), 0.0) == pytest.approx(0.5, abs=1e-15)
    assert measures.cdf_1d(Uniform(0.0, 1.0), 0.3) == pytest.approx(0.3, abs=1e-15)
    assert measures.cdf_1d(Dirac(2.0), 2.0) == 1.0
    assert measures.cdf_1d(Dirac(2.0), 1.999) == 0.0
    mu = DiscreteMeasure([0.0, 1.0, 2.0], [0.25, 0.5, 0.25])
    assert measures.cdf_1d(mu, 1.0) == pytest.approx(0.75)
    assert measures.cdf_1d(mu, 0.5) == pytest.approx(0.25)


def test_cdf_1d_refuses_sampled_measures():
    mu = gaussian_sampler([0.0], [[1.0]])
    with pytest.raises(UnsupportedMeasureError):
        measures.cdf_1d(mu, 0.0)
    assert measures.empirical_cdf_1d(mu, 0.0, 20000, seed=3) == pytest.approx(0.5, abs=0.02)


def test_cdf_1d_refuses_2d_measures():
    mu = DiscreteMeasure([[0.0, 0.0]], [1.0])
    with pytest.raises(DimensionMismatchError):
        measures.cdf_1d(mu, 0.0)


def test_quantile_examples():
    assert measures.quantile(Normal(0.0, 1.0), 0.975) == pytest.approx(1.959963985, abs=1e-8)
    assert measures.quantile(LogNormal(0.0, 1.0), 0.5) == pytest.approx(1.0, rel=1e-14)
    mu = DiscreteMeasure([2.0, 0.0, 1.0], [0.25, 0.25, 0.5])
    assert measures.quantile(mu, 0.25) == 0.0
    assert measures.quantile(mu, 0.3) == 1.0
    assert measures.quantile(mu, 0.75) == 1.0
    assert measures.quantile(mu, 0.8) == 2.0


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5])
def test_quantile_level_out_of_range(q):
    with pytest.raises(QuantcharError):
        measures.quantile(Normal(0.0, 1.0), q)


@pytest.mark.parametrize("mu", measure_utils.analytic_measures[1:],
        ids=measure_utils.analytic_measure_ids[1:])
def test_quantile_inverts_cdf(mu):
    for q in (0.01, 0.3, 0.5, 0.9, 0.999):
        assert measures.cdf_1d(mu, measures.quantile(mu, q)) == pytest.approx(q, abs=1e-12)


# call prices and partial moments

def test_call_price_closed_forms():
    assert measures.call_price(Uniform(0.0, 1.0), 0.5) == pytest.approx(0.125, rel=1e-15)
    assert measures.call_price(Uniform(0.0, 1.0), -1.0) == pytest.approx(1.5)
    assert measures.call_price(Normal(1.0, 2.0), 1.0) == pytest.approx(2.0 / math.sqrt(2.0 * math.pi))
    assert measures.call_price(Dirac(3.0), 1.0) == 2.0


@pytest.mark.parametrize("strike", [0.2, 1.0, 3.0])
def test_lognormal_call_price_matches_quadrature(strike):
    mu = LogNormal(-0.5, 1.0)
    direct = mu.expect(lambda x: max(x - strike, 0.0), strike, numpy.inf, growth=1)
    assert measures.call_price(mu, strike) == pytest.approx(direct, rel=1e-9)


def test_partial_second_moment_of_optimal_uniform_pair():
    left, right = measures.partial_second_moment_1d(Uniform(0.0, 1.0), 0.25, 0.75)
    assert left == pytest.approx(1.0 / 96.0, rel=1e-14)
    assert right == pytest.approx(1.0 / 96.0, rel=1e-14)


def test_partial_second_moment_midpoint_goes_left():
    left, right = measures.partial_second_moment_1d(Dirac(0.5), 0.0, 1.0)
    assert (left, right) == (0.25, 0.0)


def test_partial_second_moment_needs_ordered_pair():
    with pytest.raises(QuantcharError):
        measures.partial_second_moment_1d(Uniform(0.0, 1.0), 0.75, 0.25)


@pytest.mark.parametrize("mu", measure_utils.analytic_measures,
        ids=measure_utils.analytic_measure_ids)
def test_partial_moments_agree_with_quadrature(mu):
    lo, hi, center = 0.2, 1.7, 0.9
    m0, m1, m2 = measures.partial_moments_1d(mu, lo, hi, center)
    for k, value in enumerate((m0, m1, m2)):
        direct = mu.expect(lambda x, k=k: (x - center) ** k, lo, hi, growth=k)
        assert float(value) == pytest.approx(direct, rel=1e-9, abs=1e-14)


# validation

@pytest.mark.parametrize("atoms, weights", [
        ([0.0, 1.0], [0.5, 0.6]),
        ([0.0, 1.0], [1.5, -0.5]),
        ([0.0, 1.0], [1.0]),
        ([], []),
        ([0.0, numpy.nan], [0.5, 0.5]),
])
def test_discrete_measure_validation(atoms, weights):
    with pytest.raises(QuantcharError):
        DiscreteMeasure(atoms, weights)


@pytest.mark.parametrize("factory", [
        lambda: Uniform(1.0, 1.0),
        lambda: Normal(0.0, 0.0),
        lambda: LogNormal(0.0, -1.0),
        lambda: Dirac(numpy.inf),
])
def test_analytic_parameter_validation(factory):
    with pytest.raises(QuantcharError):
        factory()


def test_random_discrete_measures_are_valid(rng):
    for dimension in (1, 2, 3):
        mu = measure_utils.get_random_discrete_measure(rng, dimension)
        assert mu.dimension == dimension
        assert abs(mu.weights.sum() - 1.0) <= 1e-12
