import numpy
import pytest

from lrbmsflow import DgField, FaceFluxField, FineGrid, PressureDiscretization, SaturationTransport
from lrbmsflow.FaceFluxField import reconstruct_velocity
from lrbmsflow.SaturationTransport import (bound_scales, fractional_flow, gradient_scales, initial_saturation,
                                           limit, shock_detector)
from lrbmsflow.MobilityBasis import linear_mobilities
from lrbmsflow.Scenario import Fluids
from lrbmsflow.exceptions import ConfigurationError, DomainError

def transport(grid, phi=0.2, dt=1.0, degree=1, c_base=30.0, q2=0.0, gravity=(0.0, 0.0), K=None):
    if K is None:
        K = numpy.full(grid.ncells, 1e-8)
    d = PressureDiscretization(grid, K, Fluids(), degree=degree, c_base=c_base, gravity=gravity)
    return SaturationTransport(d, phi, dt, q2)

def random_saturation(grid, rng, slope=0.1):
    c = numpy.zeros((grid.ncells, 3))
    c[:, 0] = rng.uniform(0.1, 0.9, grid.ncells)
    c[:, 1:] = rng.uniform(-slope, slope, (grid.ncells, 2))
    return DgField(grid, c)

def test_fractional_flow():
    assert fractional_flow(0.0, 1.0, 2.0) == 0
    assert fractional_flow(1.0, 1.0, 2.0) == 1
    assert fractional_flow(0.5, 1.0, 2.0) == pytest.approx(2 / 3)

    # Clamped to [0, 1]
    assert fractional_flow(-0.5, 1.0, 2.0) == 0
    assert fractional_flow(1.5, 1.0, 2.0) == 1

    s = numpy.linspace(0, 1, 5)
    assert fractional_flow(s, 1.0, 1.0) == pytest.approx(s)

def test_finite_volume_limit():
    # Degree zero without penalty is the first order upwind finite volume scheme
    grid = FineGrid(5, 1, 5, 1)
    phi = 0.5
    dt = 0.2
    v = 1.0
    t = transport(grid, phi, dt, degree=0, c_base=0.0)
    fluids = t.fluids
    u = FaceFluxField.uniform(grid, (v, 0.0))

    s = DgField.constant(grid, 0.0, 0)
    expected = numpy.zeros(grid.ncells)
    for n in range(6):
        s = t.step(s, u)

        upstream = numpy.concatenate([[1.0], expected[:-1]])
        expected = expected + dt * v / (phi * grid.hx) * (
            fractional_flow(upstream, fluids.mu_w, fluids.mu_n)
            - fractional_flow(expected, fluids.mu_w, fluids.mu_n))

        assert s.means == pytest.approx(expected)

    assert expected[0] > 0
    assert expected[-1] > 0

def test_first_step_enters_first_column():
    grid = FineGrid(4, 2, 4, 2)
    t = transport(grid, phi=0.25, dt=0.1, degree=0, c_base=0.0)
    u = FaceFluxField.uniform(grid, (1.0, 0.0))

    s = t.step(DgField.constant(grid, 0.0, 0), u)
    first = grid.cell_i == 0
    assert s.means[first] == pytest.approx(0.1 / (0.25 * grid.hx))
    assert s.means[~first] == pytest.approx(0)

@pytest.mark.parametrize('gravity', [(0.0, 0.0), (0.0, -9.81)])
def test_mass_balance(gravity):
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(300, 60, 6, 3)
    K = 10 ** rng.uniform(-9, -8, grid.ncells)
    q2 = rng.uniform(0, 1e-7, grid.ncells)
    t = transport(grid, phi=rng.uniform(0.1, 0.3, grid.ncells), dt=100.0, q2=q2, gravity=gravity, K=K)

    s = random_saturation(grid, rng)
    u = FaceFluxField(grid, rng.uniform(-1e-5, 1e-5, grid.nfaces))

    new = t.step(s, u)
    change = t.wetting_mass(new) - t.wetting_mass(s)
    expected = t.dt * (t.boundary_inflow(s, u) + numpy.sum(q2 * grid.cell_area))
    assert change == pytest.approx(expected, rel=1e-10, abs=1e-12 * t.wetting_mass(s))

@pytest.mark.parametrize('gravity', [(0.0, 0.0), (0.0, -9.81)])
def test_saturated_state_is_steady(gravity):
    grid = FineGrid(300, 60, 6, 3)
    t = transport(grid, dt=1e4, gravity=gravity)
    d = t.discretization

    s = DgField.constant(grid, 1.0)
    lambda_w, lambda_n, _ = linear_mobilities(s, d.fluids.mu_w, d.fluids.mu_n)
    u = reconstruct_velocity(d, d.solve_pressure(lambda_w, lambda_n, solver='direct'), s)

    new = t.step(s, u)
    assert new.means == pytest.approx(1, abs=1e-8)
    assert new.slopes == pytest.approx(0, abs=1e-8)

def test_cfl_number():
    grid = FineGrid(2, 1, 2, 2)
    t = transport(grid, phi=0.5, dt=0.1)

    u = FaceFluxField.uniform(grid, (2.0, 0.0))
    assert t.cfl_number(u) == pytest.approx(2 * 0.1 / (0.5 * 0.5))

def test_invalid_parameters():
    grid = FineGrid(2, 1, 2, 1)

    with pytest.raises(ConfigurationError):
        transport(grid, dt=0.0)

    with pytest.raises(ConfigurationError):
        transport(grid, phi=[0.2, 0.0])

    t = transport(grid)
    with pytest.raises(DomainError):
        t.step(DgField.constant(grid, 0.0, 0), FaceFluxField(grid))

def test_shock_detector():
    grid = FineGrid(2, 1, 2, 1)
    s = DgField.from_cell_values(grid, [1.0, 0.0])
    u = FaceFluxField.uniform(grid, (1.0, 0.0))

    detector = shock_detector(s, u)
    # The first cell matches the inflow saturation
    assert detector[0] == pytest.approx(0)
    assert detector[1] == pytest.approx(1 / (0.16 * numpy.sqrt(grid.cell_diameter) * grid.cell_area))

    # Without flow there are no upstream faces
    assert shock_detector(s, FaceFluxField(grid)) == pytest.approx(0)

def test_gradient_scales():
    grid = FineGrid(3, 1, 3, 1)
    s = DgField(grid, [[0.0, 0.0, 0.0], [0.5, 2.0, 0.0], [1.0, 0.0, 0.0]])

    m = gradient_scales(s)
    assert m[1] == pytest.approx(0.25)
    assert m[0] == pytest.approx(1)

    # A gradient against the mean differences is removed
    s = DgField(grid, [[0.0, 0.0, 0.0], [0.5, -0.2, 0.0], [1.0, 0.0, 0.0]])
    assert gradient_scales(s)[1] == pytest.approx(0)

def test_bound_scales():
    grid = FineGrid(4, 1, 4, 1)
    s = DgField(grid, [[0.1, 0.6, 0.0], [0.5, 0.2, 0.2], [-0.01, 0.0, 0.0], [0.9, 0.2, 0.1]])

    scales = bound_scales(s)
    assert scales[0] == pytest.approx(1 / 3)
    assert scales[1] == 1
    assert scales[2] == 0
    assert scales[3] == pytest.approx(2 / 3)

def test_limiter_bounds_corners():
    grid = FineGrid(3, 1, 3, 1)
    s = DgField(grid, [[0.1, 0.6, 0.0], [0.5, 0.0, 0.0], [0.9, 0.0, 0.0]])

    # The neighbor means alone allow a slope of 0.4, which undershoots at the inflow side
    assert gradient_scales(s)[0] == pytest.approx(0.4 / 0.6)

    limited = limit(s, FaceFluxField(grid))
    assert limited.means == pytest.approx(s.means, rel=0, abs=1e-15)
    assert limited.coefficients[0, 1] == pytest.approx(0.2)
    assert limited.corner_values().min() >= -1e-15

def test_limiter_preserves_means():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(4, 3, 8, 6)
    s = random_saturation(grid, rng, slope=1.0)
    u = FaceFluxField.uniform(grid, (1.0, 0.5))

    limited = limit(s, u)
    assert limited.means == pytest.approx(s.means)
    assert numpy.all(numpy.abs(limited.slopes) <= numpy.abs(s.slopes) + 1e-15)
    assert numpy.any(numpy.abs(limited.slopes) < numpy.abs(s.slopes))

def test_limiter_keeps_smooth_profile():
    grid = FineGrid(4, 2, 8, 4)
    s = initial_saturation(grid, lambda x, y: 0.2 + 0.1 * x + 0.05 * y)

    limited = limit(s, FaceFluxField(grid))
    assert limited.coefficients == pytest.approx(s.coefficients)

    with pytest.raises(DomainError):
        limit(DgField.constant(grid, 0.5, 0), FaceFluxField(grid))

def test_initial_saturation():
    grid = FineGrid(2, 1, 2, 1)

    s = initial_saturation(grid, 0.3)
    assert s.means == pytest.approx(0.3)
    assert s.slopes == pytest.approx(0)

    s = initial_saturation(grid, lambda x, y: x, 0)
    assert s.means == pytest.approx([0.5, 1.5])
