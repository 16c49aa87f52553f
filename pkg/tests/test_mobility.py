import numpy
import pytest

from lrbmsflow import DgField, FineGrid, MobilityBasis
from lrbmsflow.MobilityBasis import (clamp_saturation, fit_theta, linear_mobilities, parametrized_mobilities,
                                     profiles_from_snapshots, profiles_from_tof)
from lrbmsflow.exceptions import ConfigurationError

def random_saturations(grid, count, rng):
    saturations = []
    for k in range(count):
        c = numpy.zeros((grid.ncells, 3))
        c[:, 0] = rng.uniform(0.2, 0.8, grid.ncells)
        c[:, 1:] = rng.uniform(-0.1, 0.1, (grid.ncells, 2))
        saturations.append(DgField(grid, c))
    return saturations

def test_clamp_saturation():
    grid = FineGrid(3, 1, 3, 1)
    s = DgField(grid, [[1.2, 0.0, 0.0], [0.5, 1.0, 0.6], [-0.1, 0.2, 0.0]])

    clamped = clamp_saturation(s)
    assert clamped.means == pytest.approx([1.0, 0.5, 0.0])
    assert clamped.coefficients[1, 1:] == pytest.approx([0.625, 0.375])
    assert clamped.coefficients[2, 1:] == pytest.approx([0, 0])

    corners = clamped.corner_values()
    assert numpy.all(corners >= -1e-12)
    assert numpy.all(corners <= 1 + 1e-12)

    # The input is left alone
    assert s.means[0] == 1.2

def test_linear_mobilities():
    grid = FineGrid(2, 1, 2, 1)
    s = DgField.from_cell_values(grid, [0.25, 1.5])

    lambda_w, lambda_n, lambda_t = linear_mobilities(s, 1.0, 2.0)
    assert lambda_w.means == pytest.approx([0.25, 1.0])
    assert lambda_n.means == pytest.approx([0.375, 0.0])
    assert lambda_t.means == pytest.approx([0.625, 1.0])

def test_profiles_from_tof():
    grid = FineGrid(5, 1, 5, 1)
    tof = DgField.from_cell_values(grid, [0.0, 1.0, 2.0, 3.0, 10.0])
    mu_w = 0.5
    mu_n = 4.0

    basis = profiles_from_tof(tof, 4, 4.0, mu_w, mu_n)
    assert basis.M == 4

    flooded = [[0, 0, 0, 0, 0], [1, 1, 1, 0, 0], [1, 1, 1, 1, 0], [1, 1, 1, 1, 1]]
    for q in range(4):
        lambda_w, lambda_n, lambda_t = basis.profile(q)
        f = numpy.array(flooded[q])
        assert lambda_w.means == pytest.approx(f / mu_w)
        assert lambda_n.means == pytest.approx((1 - f) / mu_n)
        assert lambda_t.means == pytest.approx(f / mu_w + (1 - f) / mu_n)
        assert lambda_t.slopes == pytest.approx(0)

def test_profiles_from_snapshots():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(4, 2, 4, 2)
    saturations = random_saturations(grid, 3, rng)
    basis = profiles_from_snapshots(saturations, 1e-3, 8e-3)

    assert basis.M == 3
    assert not basis.rank_deficient
    for q, s in enumerate(saturations):
        lambda_w, lambda_n, _ = basis.profile(q)
        assert lambda_w.vector == pytest.approx(s.vector / 1e-3)
        assert lambda_n.vector == pytest.approx((1 - s).vector / 8e-3)

def test_fit_reproduces_combinations():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(4, 2, 4, 2)
    basis = profiles_from_snapshots(random_saturations(grid, 4, rng), 1e-3, 8e-3)

    theta = numpy.array([0.1, 0.4, 0.2, 0.3])
    lambda_w, lambda_n, lambda_t = parametrized_mobilities(theta, basis)
    assert lambda_w.vector == pytest.approx(theta @ basis.wetting)
    assert lambda_t.vector == pytest.approx((lambda_w + lambda_n).vector)

    assert basis.fit(lambda_t) == pytest.approx(theta)
    assert basis.residual(lambda_t, theta) == pytest.approx(0, abs=1e-8)

    # A saturation outside the span has a positive residual
    s = random_saturations(grid, 1, rng)[0]
    fitted = fit_theta(s, basis)
    lambda_t = linear_mobilities(s, 1e-3, 8e-3)[2]
    assert basis.residual(lambda_t, fitted) > 0
    assert basis.residual(lambda_t, fitted) <= basis.residual(lambda_t, theta)

def test_fit_with_dependent_profiles():
    # The first and last time-of-flight profiles are both constant
    grid = FineGrid(4, 1, 4, 1)
    tof = DgField.from_cell_values(grid, [0.0, 1.0, 2.0, 3.0])
    basis = profiles_from_tof(tof, 4, 3.0, 1.0, 2.0)
    assert basis.rank_deficient

    lambda_t = basis.combine([0.2, 0.3, 0.5, 0.0])[2]
    theta = basis.fit(lambda_t)
    assert basis.residual(lambda_t, theta) == pytest.approx(0, abs=1e-10)

def test_permuted():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(2, 1, 2, 1)
    basis = profiles_from_snapshots(random_saturations(grid, 3, rng), 1.0, 2.0)

    reversed_basis = basis.permuted([2, 1, 0])
    assert reversed_basis.profile(0)[2].vector == pytest.approx(basis.profile(2)[2].vector)
    assert reversed_basis.mu_w == basis.mu_w

def test_too_few_profiles():
    grid = FineGrid(2, 1, 2, 1)
    tof = DgField.from_cell_values(grid, [0.0, 1.0])

    with pytest.raises(ConfigurationError):
        profiles_from_tof(tof, 1, 1.0, 1.0, 1.0)

    with pytest.raises(ConfigurationError):
        MobilityBasis(grid, numpy.ones((1, 6)), numpy.ones((1, 6)))
