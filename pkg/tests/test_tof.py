import numpy
import pytest

from lrbmsflow import FaceFluxField, FineGrid, TimeOfFlight
from lrbmsflow.TimeOfFlight import solve_tof
from lrbmsflow.exceptions import DegenerateFlowError

def swirling_flow(grid, rng, c=3.0):
    '''Perturbed flow from left to right with a counterclockwise circulation
    around a random interior node.'''
    r = rng.uniform(0, 1, grid.ncells)

    values = grid.face_normals[:, 0].copy()
    faces = grid.interior_faces
    cells = grid.face_cells[faces]
    scale = numpy.where(faces < grid.nxf, 1.0, grid.hx / grid.hy)
    values[faces] += 0.3 * scale * (r[cells[:, 0]] - r[cells[:, 1]])

    nx = grid.nx
    i0 = rng.integers(1, grid.nx)
    j0 = rng.integers(1, grid.ny)
    values[i0 + (j0 - 1) * (nx + 1)] += c
    values[i0 + j0 * (nx + 1)] -= c
    values[grid.nxf + i0 - 1 + j0 * nx] -= c
    values[grid.nxf + i0 + j0 * nx] += c

    loop = [i0 - 1 + (j0 - 1) * nx, i0 + (j0 - 1) * nx, i0 + j0 * nx, i0 - 1 + j0 * nx]
    return FaceFluxField(grid, values), loop

def vortex(grid):
    '''Translation plus rotation around the center of [0, 2]^2.'''
    x = grid.face_centers[:, 0]
    y = grid.face_centers[:, 1]
    return FaceFluxField.from_components(grid, 1 - 3 * (y - 1), 3 * (x - 1))

def test_uniform_flow():
    grid = FineGrid(4, 2, 4, 2)
    u = FaceFluxField.uniform(grid, (2.0, 0.0))

    tau = solve_tof(u, 0.3)
    assert tau.means == pytest.approx(0.3 * grid.cell_centers[:, 0] / 2, rel=1e-10)
    assert tau.slopes[:, 0] == pytest.approx(0.15, rel=1e-10)
    assert tau.slopes[:, 1] == pytest.approx(0, abs=1e-12)

    levels = TimeOfFlight(u, 0.3).components()
    assert len(levels) == grid.nx
    for i, level in enumerate(levels):
        cells = numpy.sort(numpy.concatenate(level))
        assert numpy.all(grid.cell_i[cells] == i)

def test_zero_porosity():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(8, 6, 8, 6)
    u, _ = swirling_flow(grid, rng)

    assert numpy.all(solve_tof(u, 0.0).vector == 0)

def test_doubled_velocity():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(8, 6, 8, 6)
    u, _ = swirling_flow(grid, rng)
    phi = rng.uniform(0.1, 0.3, grid.ncells)

    tau = solve_tof(u, phi)
    fast = solve_tof(FaceFluxField(grid, 2 * u.values), phi)
    numpy.testing.assert_allclose(fast.vector, tau.vector / 2, rtol=1e-10,
                                  atol=1e-10 * numpy.abs(tau.vector).max())

def test_uniform_flow_degree_zero():
    grid = FineGrid(4, 1, 4, 1)
    u = FaceFluxField.uniform(grid, (2.0, 0.0))

    tau = solve_tof(u, 0.3, degree=0)
    assert tau.means == pytest.approx(0.3 * grid.hx * numpy.arange(1, 5) / 2, rel=1e-10)

def test_vortex_component():
    grid = FineGrid(2, 2, 2, 2)
    u = vortex(grid)
    tof = TimeOfFlight(u, 0.2)

    levels = tof.components()
    assert len(levels) == 1
    assert len(levels[0]) == 1
    assert sorted(levels[0][0]) == [0, 1, 2, 3]

    reordered = tof.solve_reordered()
    monolithic = tof.solve_monolithic()
    numpy.testing.assert_allclose(reordered.vector, monolithic.vector, rtol=1e-10,
                                  atol=1e-10 * numpy.abs(monolithic.vector).max())

@pytest.mark.parametrize('seed', range(10))
def test_reordered_solve(seed):
    rng = numpy.random.default_rng(seed)

    grid = FineGrid(8, 6, 8, 6)
    u, loop = swirling_flow(grid, rng)
    phi = rng.uniform(0.1, 0.3, grid.ncells)
    tof = TimeOfFlight(u, phi)

    # The circulation ends up in a single component
    components = [cells for level in tof.components() for cells in level]
    assert sum(len(cells) for cells in components) == grid.ncells
    assert any(set(loop) <= set(cells) for cells in components)

    reordered = tof.solve_reordered()
    monolithic = tof.solve_monolithic()
    numpy.testing.assert_allclose(reordered.vector, monolithic.vector, rtol=1e-10,
                                  atol=1e-10 * numpy.abs(monolithic.vector).max())

    tau = solve_tof(u, phi, reordered=False)
    assert tau.vector == pytest.approx(monolithic.vector)

def test_levels_follow_the_flow():
    rng = numpy.random.default_rng(1234)

    grid = FineGrid(8, 6, 8, 6)
    u, _ = swirling_flow(grid, rng)
    tof = TimeOfFlight(u, 0.2)

    level = numpy.zeros(grid.ncells, dtype=int)
    component = numpy.zeros(grid.ncells, dtype=int)
    k = 0
    for n, components in enumerate(tof.components()):
        for cells in components:
            level[cells] = n
            component[cells] = k
            k += 1

    graph = tof.dependency_graph().tocoo()
    for i, j in zip(graph.row, graph.col):
        assert component[i] == component[j] or level[i] > level[j]

def test_degenerate_flow():
    grid = FineGrid(2, 1, 4, 2)

    with pytest.raises(DegenerateFlowError):
        TimeOfFlight(FaceFluxField(grid), 0.2)

    # The flow stagnates at x = 1.5
    x = grid.face_centers[:, 0]
    u = FaceFluxField.from_components(grid, 1.5 - x, numpy.zeros(grid.nfaces))
    with pytest.raises(DegenerateFlowError):
        solve_tof(u, 0.2)
