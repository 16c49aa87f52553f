import numpy
import pytest

from lrbmsflow import DgField, FineGrid
from lrbmsflow.DgField import FaceWeights, broken_norms, inner, jump_and_mean, l2_project
from lrbmsflow.exceptions import DomainError

def linear(x, y):
    return 1 + 2 * x - 3 * y

def test_projection_of_linear_function():
    grid = FineGrid(2, 1, 4, 2)
    f = l2_project(grid, linear)

    for c in range(grid.ncells):
        x, y = grid.cell_centers[c]
        assert f.means[c] == pytest.approx(linear(x, y))
        assert f.slopes[c] == pytest.approx([2, -3])
        assert f.evaluate(c, (x + 0.2 * grid.hx, y - 0.1 * grid.hy)) == pytest.approx(
            linear(x + 0.2 * grid.hx, y - 0.1 * grid.hy))

def test_projection_degree_zero():
    grid = FineGrid(2, 1, 4, 2)
    f = l2_project(grid, linear, 0)

    assert f.nb == 1
    for c in range(grid.ncells):
        assert f.means[c] == pytest.approx(linear(*grid.cell_centers[c]))
        assert f.slopes[c] == pytest.approx([0, 0])

def test_evaluate_outside():
    grid = FineGrid(2, 1, 2, 1)
    f = DgField.constant(grid, 1.0)

    with pytest.raises(DomainError):
        f.evaluate(0, (1.5, 0.5))

def test_wrong_size():
    grid = FineGrid(2, 1, 2, 1)

    with pytest.raises(DomainError):
        DgField(grid, numpy.zeros(5))

    with pytest.raises(DomainError):
        DgField(grid, degree=2)

def test_traces():
    grid = FineGrid(2, 1, 2, 1)
    f = l2_project(grid, linear)

    faces = grid.interior_faces
    points = grid.face_quadrature_points(faces)
    expected = linear(points[..., 0], points[..., 1])

    assert f.traces(faces, 0) == pytest.approx(expected)
    assert f.traces(faces, 1) == pytest.approx(expected)

def test_corner_values():
    grid = FineGrid(1, 1, 1, 1)
    f = l2_project(grid, linear)

    assert f.corner_values()[0] == pytest.approx([linear(0, 0), linear(1, 0), linear(0, 1), linear(1, 1)])

def test_jump_and_mean():
    grid = FineGrid(2, 1, 2, 1)
    weights = FaceWeights(grid, [1.0, 3.0])

    f = DgField.from_cell_values(grid, [2.0, 6.0])
    face = grid.interior_faces[0]

    jump, mean = jump_and_mean(f, face, weights, (1.0, 0.5))
    assert jump == pytest.approx(-4)
    assert mean == pytest.approx(0.25 * 2 + 0.75 * 6)

    assert weights.harmonic[face] == pytest.approx(1.5)
    omega1, omega2 = weights.flux_weights
    assert omega1[face] * 1.0 == pytest.approx(weights.harmonic[face] / 2)
    assert omega2[face] * 3.0 == pytest.approx(weights.harmonic[face] / 2)

    with pytest.raises(DomainError):
        jump_and_mean(f, grid.boundary_faces[0], weights, (0.0, 0.5))

def test_hand_norms():
    grid = FineGrid(2, 1, 2, 1)
    f = DgField(grid, [[1.0, 1.0, 0.0], [-1.0, 0.0, 2.0]])

    # int_T (c0 + c1 xi + c2 eta)^2 = c0^2 + (c1^2 + c2^2) / 12 on unit cells
    l2 = numpy.sqrt(1 + 1 / 12 + 1 + 4 / 12)
    h1 = numpy.sqrt(l2 ** 2 + 1 + 4)
    assert broken_norms(f) == pytest.approx((l2, h1))
    assert inner(f, f) == pytest.approx(l2 ** 2)

def test_arithmetic():
    grid = FineGrid(2, 1, 2, 1)
    f = l2_project(grid, linear)
    g = DgField.from_cell_values(grid, [1.0, 2.0], 0)

    h = f - g
    assert h.degree == 1
    assert h.means == pytest.approx(f.means - [1, 2])
    assert h.slopes == pytest.approx(f.slopes)

    assert (1 - f).means == pytest.approx(1 - f.means)
    assert (2 * f).vector == pytest.approx(2 * f.vector)
    assert (f / 2).vector == pytest.approx(f.vector / 2)
    assert (f + 1).means == pytest.approx(f.means + 1)
