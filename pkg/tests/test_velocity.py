import numpy
import pytest

from lrbmsflow import CoarseGrid, DgField, FaceFluxField, FineGrid, PressureDiscretization
from lrbmsflow.FaceFluxField import coarse_mass_balance, divergence_defect, mass_loss, reconstruct_velocity
from lrbmsflow.MobilityBasis import linear_mobilities
from lrbmsflow.Scenario import Fluids

def random_saturation(grid, rng):
    c = numpy.zeros((grid.ncells, 3))
    c[:, 0] = rng.uniform(0.2, 0.8, grid.ncells)
    c[:, 1:] = rng.uniform(-0.1, 0.1, (grid.ncells, 2))
    return DgField(grid, c)

@pytest.mark.parametrize('seed', range(10))
def test_local_conservation(seed):
    rng = numpy.random.default_rng(seed)

    grid = FineGrid(300, 60, 10, 4)
    K = 10 ** rng.uniform(-11, -8, grid.ncells)
    gravity = (0.0, -9.81) if seed % 2 else (0.0, 0.0)
    q1 = rng.uniform(-1e-6, 1e-6) if seed % 3 == 0 else 0.0
    fluids = Fluids()
    d = PressureDiscretization(grid, K, fluids, q1=q1, gravity=gravity)

    s = random_saturation(grid, rng)
    lambda_w, lambda_n, _ = linear_mobilities(s, fluids.mu_w, fluids.mu_n)
    p = d.solve_pressure(lambda_w, lambda_n, solver='direct')
    u = reconstruct_velocity(d, p, s)

    scale = numpy.abs(u.fluxes()).max()
    assert scale > 0
    assert numpy.abs(divergence_defect(u, q1)).max() <= 1e-10 * scale

def test_neumann_faces_take_boundary_data():
    grid = FineGrid(300, 60, 6, 2)
    d = PressureDiscretization(grid, numpy.full(grid.ncells, 1e-8), Fluids())

    s = DgField.constant(grid, 0.0)
    lambda_w, lambda_n, _ = linear_mobilities(s, d.fluids.mu_w, d.fluids.mu_n)
    u = reconstruct_velocity(d, d.solve_pressure(lambda_w, lambda_n, solver='direct'), s)

    right = grid.face_side == 1
    top = grid.face_side == 3
    assert u.values[right] == pytest.approx(3e-4)
    assert u.values[top] == pytest.approx(0)

    # What leaves on the right enters on the left
    left = grid.face_side == 0
    assert numpy.sum(u.fluxes()[left]) == pytest.approx(-numpy.sum(u.fluxes()[right]))

def test_uniform_field():
    grid = FineGrid(2, 2, 2, 2)
    u = FaceFluxField.uniform(grid, (2.0, -1.0))

    assert u.center_velocity() == pytest.approx(numpy.tile([2.0, -1.0], (4, 1)))
    assert u.quadrature_velocity() == pytest.approx(numpy.tile([2.0, -1.0], (4, 4, 1)))
    assert divergence_defect(u) == pytest.approx(0)
    assert u.outward()[:, 1] == pytest.approx(2)
    assert u.outward()[:, 0] == pytest.approx(-2)
    assert u.face_speeds() == pytest.approx(numpy.sqrt(5))

def test_linear_velocity():
    grid = FineGrid(1, 1, 1, 1)
    u = FaceFluxField.from_components(grid, grid.face_centers[:, 0], numpy.zeros(grid.nfaces))

    # u = (x, 0) is reproduced exactly
    v = u.cell_velocity(numpy.array([[[0.25, 0.0], [-0.5, 0.3]]]))
    assert v[0, 0] == pytest.approx([0.75, 0])
    assert v[0, 1] == pytest.approx([0.0, 0])
    assert divergence_defect(u) == pytest.approx([1.0])

def test_mass_loss():
    grid = FineGrid(2, 1, 2, 1)
    u = FaceFluxField(grid)
    u.values[grid.cell_faces[0, 1]] = 1.0

    zeta = mass_loss(u)
    assert zeta[0] == pytest.approx(1.0)
    assert zeta[1] == pytest.approx(1.0)

    assert mass_loss(FaceFluxField(grid)) == pytest.approx(0)
    assert mass_loss(FaceFluxField(grid, u.values * 1e-16)) == pytest.approx(0)

def test_coarse_mass_balance():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(4, 2, 4, 2)
    coarse = CoarseGrid(grid, 2, 1)
    u = FaceFluxField(grid, rng.standard_normal(grid.nfaces))

    balance = coarse_mass_balance(u, coarse)
    defect = divergence_defect(u)
    for E in range(coarse.ncells):
        assert balance[E] == pytest.approx(numpy.sum(defect[coarse.cells[E]]))

    # Coarse balance from the fluxes over the coarse boundary
    for E in range(coarse.ncells):
        outflow = 0.0
        for F, faces in enumerate(coarse.faces):
            E1, E2 = coarse.face_cells[F]
            if E == E1:
                outflow += numpy.sum(u.fluxes()[faces])
            elif E == E2:
                outflow -= numpy.sum(u.fluxes()[faces])
        assert balance[E] == pytest.approx(outflow)
