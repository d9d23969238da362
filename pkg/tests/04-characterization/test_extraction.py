import math

import numpy
import pytest

import measure_utils
from quantchar import characterization, measures
from quantchar.characterization import EFunctionHandle
from quantchar.errors import QuantcharError
from quantchar.measures import Dirac, DiscreteMeasure, LogNormal, Normal, Uniform, gaussian_sampler


def e11(mu):
    return EFunctionHandle.for_measure(mu, 1)


# cdf_from_e11

@pytest.mark.parametrize("mu, x, expected, tolerance", [
        (Uniform(0.0, 1.0), 0.3, 0.3, 1e-4),
        (Normal(0.0, 1.0), 0.0, 0.5, 1e-4),
        (Dirac(0.0), 0.5, 1.0, 1e-9),
        (Dirac(0.0), -0.5, 0.0, 1e-9),
])
def test_cdf_examples(mu, x, expected, tolerance):
    assert characterization.cdf_from_e11(e11(mu), x) == pytest.approx(expected, abs=tolerance)


@pytest.mark.parametrize("mu", measure_utils.analytic_measures[1:],
        ids=measure_utils.analytic_measure_ids[1:])
def test_cdf_at_percentiles(mu):
    handle = e11(mu)
    for q in numpy.linspace(0.01, 0.99, 99):
        x = measures.quantile(mu, q)
        assert characterization.cdf_from_e11(handle, x) == pytest.approx(q, abs=1e-4)


def test_cdf_is_nondecreasing():
    handle = e11(LogNormal(-1.0, 1.0))
    estimates = [characterization.cdf_from_e11(handle, x) for x in numpy.linspace(-1.0, 6.0, 141)]
    assert all(b >= a - 2e-4 for a, b in zip(estimates, estimates[1:]))
    assert estimates[0] == pytest.approx(0.0, abs=1e-9)


def test_cdf_of_a_discrete_measure_counts_atoms_up_to_x():
    mu = DiscreteMeasure([0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
    handle = e11(mu)
    # Right derivative: an atom at x itself is included.
    assert characterization.cdf_from_e11(handle, 1.0) == pytest.approx(0.5, abs=1e-9)
    assert characterization.cdf_from_e11(handle, 1.5) == pytest.approx(0.5, abs=1e-9)
    assert characterization.cdf_from_e11(handle, 2.5) == pytest.approx(1.0, abs=1e-9)


def test_cdf_needs_the_p1_line_error():
    with pytest.raises(QuantcharError):
        characterization.cdf_from_e11(EFunctionHandle.for_measure(Normal(0.0, 1.0), 2), 0.0)


def test_mean_from_the_tails():
    left, right = characterization.mean_from_e11_tail(e11(Normal(-0.5, 1.0)))
    assert left == pytest.approx(-0.5, abs=1e-5)
    assert right == pytest.approx(0.5, abs=1e-5)
    left, right = characterization.mean_from_e11_tail(e11(Uniform(0.0, 1.0)))
    assert (left, right) == (pytest.approx(0.5, abs=1e-5), pytest.approx(-0.5, abs=1e-5))


# survival_from_e22

def test_directional_excess_of_a_planar_dirac():
    handle = EFunctionHandle.for_measure(DiscreteMeasure([[1.0, 0.0]], [1.0]), 2)
    excess = characterization.directional_excess_from_e22(handle, [1.0, 0.0], 0.0, 0.2)
    assert excess == pytest.approx(0.9, rel=1e-12)


def test_uniform_survival():
    handle = EFunctionHandle.for_measure(Uniform(0.0, 1.0), 2)
    assert characterization.survival_from_e22(handle, [1.0], 0.3) == pytest.approx(0.7, abs=1e-3)
    assert characterization.survival_from_e22(handle, [-1.0], -0.3) == pytest.approx(0.3, abs=1e-3)
    levels = numpy.linspace(-0.2, 1.2, 29)
    estimates = [characterization.survival_from_e22(handle, [1.0], lam) for lam in levels]
    assert all(b <= a + 2e-4 for a, b in zip(estimates, estimates[1:]))


def test_gaussian_survival_in_the_plane():
    handle = EFunctionHandle.for_measure(gaussian_sampler([0.0, 0.0], numpy.eye(2)), 2,
            mc_samples=200000, seed=12)
    for angle in numpy.linspace(0.0, math.pi, 5):
        u = [math.cos(angle), math.sin(angle)]
        for lam in numpy.linspace(-2.0, 2.0, 9):
            expected = 1.0 - measures.gaussian_cdf(lam)
            estimate = characterization.survival_from_e22(handle, u, lam)
            assert estimate == pytest.approx(expected, abs=1e-2)


def test_survival_needs_a_unit_direction():
    handle = EFunctionHandle.for_measure(DiscreteMeasure([[1.0, 0.0]], [1.0]), 2)
    with pytest.raises(QuantcharError):
        characterization.survival_from_e22(handle, [1.0, 1.0], 0.0)
    with pytest.raises(QuantcharError):
        characterization.directional_excess_from_e22(handle, [1.0, 0.0], 0.2, 0.2)


# reduce_even_p

@pytest.mark.parametrize("mu, a, b", [
        (Uniform(0.0, 1.0), 0.3, 0.7),
        (Normal(0.0, 1.0), -0.1, 0.1),
])
def test_reduction_examples(mu, a, b):
    e24 = EFunctionHandle.for_measure(mu, 4)
    e22 = EFunctionHandle.for_measure(mu, 2)
    reduced = characterization.reduce_even_p(e24, 4, a, b, h=1e-3)
    assert reduced == pytest.approx(e22.power([a, b]), rel=1e-4)


@pytest.mark.parametrize("mu", [Uniform(0.0, 1.0), Normal(0.0, 1.0), Normal(0.5, 0.3)],
        ids=repr)
def test_reduction_at_random_pairs(rng, mu):
    e24 = EFunctionHandle.for_measure(mu, 4)
    e22 = EFunctionHandle.for_measure(mu, 2)
    checked = 0
    while checked < 20:
        a, b = sorted(rng.uniform(0.05, 0.95, 2))
        if b - a < 0.1:
            continue
        reduced = characterization.reduce_even_p(e24, 4, a, b)
        assert reduced == pytest.approx(e22.power([a, b]), rel=1e-3)
        checked += 1


def test_reduction_is_symmetric_for_symmetric_laws():
    e24 = EFunctionHandle.for_measure(Normal(0.0, 1.0), 4)
    for a, b in [(-0.1, 0.1), (0.2, 0.9), (-1.5, 0.3)]:
        assert characterization.reduce_even_p(e24, 4, a, b) == \
                pytest.approx(characterization.reduce_even_p(e24, 4, -b, -a), rel=1e-7)


def test_reduction_from_p6_to_p4():
    mu = Normal(0.0, 1.0)
    reduced = characterization.reduce_even_p(EFunctionHandle.for_measure(mu, 6), 6, -0.4, 0.6)
    assert reduced == pytest.approx(EFunctionHandle.for_measure(mu, 4).power([-0.4, 0.6]), rel=1e-3)


def test_reduction_argument_checks():
    e24 = EFunctionHandle.for_measure(Uniform(0.0, 1.0), 4)
    with pytest.raises(QuantcharError):
        characterization.reduce_even_p(e24, 4, 0.7, 0.3)
    with pytest.raises(QuantcharError):
        characterization.reduce_even_p(e24, 4, 0.5, 0.5)
    with pytest.raises(QuantcharError):
        characterization.reduce_even_p(e24, 4, 0.3, 0.305, h=1e-2)
    with pytest.raises(QuantcharError):
        characterization.reduce_even_p(e24, 3, 0.3, 0.7)
    with pytest.raises(QuantcharError):
        characterization.reduce_even_p(e24, 6, 0.3, 0.7)


# moments_from_e1p

@pytest.mark.parametrize("mu, p, expected", [
        (Normal(1.0, 2.0), 2, [1.0, 5.0]),
        (Normal(0.0, 1.0), 4, [0.0, 1.0, 0.0, 3.0]),
        (Uniform(0.0, 1.0), 4, [1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0, 1.0 / 5.0]),
        (DiscreteMeasure([-1.0, 2.0], [0.5, 0.5]), 2, [0.5, 2.5]),
])
def test_moments_from_the_polynomial(mu, p, expected):
    moments = characterization.moments_from_e1p(EFunctionHandle.for_measure(mu, p), p)
    assert moments == pytest.approx(expected, abs=1e-7)


def test_two_moments_do_not_determine_the_measure():
    # N(0, 1) and U(-sqrt 3, sqrt 3) share their first two moments, hence
    # their whole e_{1,2}, but not their fourth moment.
    normal, uniform = Normal(0.0, 1.0), Uniform(-math.sqrt(3.0), math.sqrt(3.0))
    e_normal = EFunctionHandle.for_measure(normal, 2)
    e_uniform = EFunctionHandle.for_measure(uniform, 2)
    for x in (-2.0, -0.3, 0.0, 1.1, 4.0):
        assert e_normal.power([x]) == pytest.approx(e_uniform.power([x]), rel=1e-12)
    fourth_normal = characterization.moments_from_e1p(EFunctionHandle.for_measure(normal, 4), 4)
    fourth_uniform = characterization.moments_from_e1p(EFunctionHandle.for_measure(uniform, 4), 4)
    assert fourth_normal[3] == pytest.approx(3.0, abs=1e-7)
    assert fourth_uniform[3] == pytest.approx(9.0 / 5.0, abs=1e-7)


def test_moments_need_an_even_order():
    with pytest.raises(QuantcharError):
        characterization.moments_from_e1p(EFunctionHandle.for_measure(Normal(0.0, 1.0), 1), 1)
    with pytest.raises(QuantcharError):
        characterization.moments_from_e1p(EFunctionHandle.for_measure(Normal(0.0, 1.0), 2), 4)
