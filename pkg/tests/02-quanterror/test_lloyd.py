import numpy
import pytest

from quantchar import quanterror
from quantchar.errors import DimensionMismatchError, QuantcharError
from quantchar.geometry import NormSpec
from quantchar.measures import (Dirac, DiscreteMeasure, Normal, Uniform,
        gaussian_sampler)
from quantchar.quanterror import QErrorQuery


def test_discrete_measure_with_enough_points_returns_its_support():
    mu = DiscreteMeasure([1.0, 0.0], [0.5, 0.5])
    for n in (2, 3):
        result = quanterror.lloyd(mu, n)
        assert sorted(result.grid.tolist()) == [0.0, 1.0]
        assert result.distortion == 0.0
        assert (result.effective_size, result.iterations) == (2, 0)


def test_zero_weight_atoms_do_not_count_as_support():
    mu = DiscreteMeasure([0.0, 1.0, 2.0], [0.5, 0.0, 0.5])
    result = quanterror.lloyd(mu, 2)
    assert sorted(result.grid.tolist()) == [0.0, 2.0]


@pytest.mark.parametrize("seed", range(5))
def test_uniform_pair_converges_to_the_quartiles(seed):
    result = quanterror.lloyd(Uniform(0.0, 1.0), 2, iters=200, seed=seed, pool_size=200000)
    assert sorted(result.grid.tolist()) == pytest.approx([0.25, 0.75], abs=0.01)
    assert result.distortion == pytest.approx(1.0 / 48.0, rel=0.05)


def test_single_point_is_the_mean():
    result = quanterror.lloyd(Normal(0.0, 1.0), 1, iters=10, seed=3)
    assert result.grid.tolist() == pytest.approx([0.0], abs=0.01)


def test_distortion_history_is_nonincreasing():
    mu = gaussian_sampler([0.0, 0.0], [[1.0, 0.4], [0.4, 2.0]])
    result = quanterror.lloyd(mu, 6, iters=60, seed=8, pool_size=20000)
    history = result.distortion_history
    assert len(history) >= 2
    for before, after in zip(history, history[1:]):
        assert after <= before * (1.0 + 1e-12)


def test_weighted_discrete_pool(rng):
    atoms = rng.normal(size=(300, 1))
    weights = rng.random(300)
    weights /= weights.sum()
    weights[0] += 1.0 - weights.sum()
    mu = DiscreteMeasure(atoms, weights)
    result = quanterror.lloyd(mu, 4, iters=100, seed=1)
    history = result.distortion_history
    assert all(b <= a * (1.0 + 1e-12) for a, b in zip(history, history[1:]))
    exact = quanterror.qerr_discrete(QErrorQuery(mu, result.grid, 2)) ** 2
    assert result.distortion == pytest.approx(exact, rel=1e-10)


def test_lloyd_is_reproducible():
    first = quanterror.lloyd(Normal(0.0, 1.0), 5, iters=30, seed=11, pool_size=10000)
    second = quanterror.lloyd(Normal(0.0, 1.0), 5, iters=30, seed=11, pool_size=10000)
    assert numpy.array_equal(first.grid.points, second.grid.points)
    assert first.distortion_history == second.distortion_history


def test_explicit_init_grid():
    result = quanterror.lloyd(Uniform(0.0, 1.0), 2, iters=100, init=[0.1, 0.2],
            pool_size=100000)
    assert sorted(result.grid.tolist()) == pytest.approx([0.25, 0.75], abs=0.01)
    assert result.effective_size == 2
    with pytest.raises(DimensionMismatchError):
        quanterror.lloyd(Uniform(0.0, 1.0), 3, init=[0.1, 0.2])


def test_lloyd_needs_quadratic_euclidean_error():
    with pytest.raises(QuantcharError):
        quanterror.lloyd(Uniform(0.0, 1.0), 2, p=1)
    with pytest.raises(QuantcharError):
        quanterror.lloyd(Uniform(0.0, 1.0), 2, norm=NormSpec(1.0))
    with pytest.raises(QuantcharError):
        quanterror.lloyd(Uniform(0.0, 1.0), 0)


def test_pool_needs_enough_distinct_points():
    with pytest.raises(QuantcharError):
        quanterror.lloyd(Dirac(0.3), 2, pool_size=100)
