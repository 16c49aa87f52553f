import os

import numpy
import pytest

from lrbmsflow import DgField, FineGrid
from lrbmsflow.Scenario import FieldGenerator, Layer, Lens, validate_scenario
from lrbmsflow.exceptions import ConfigurationError, FieldIOError
from lrbmsflow.fields import generate_fields, read_raster, write_raster
from lrbmsflow.vtk_utils import emit_vtk

def layered(**kwargs):
    layers = [Layer(start_row=0, permeability=1e-8, porosity=0.2),
              Layer(start_row=2, permeability=4e-8, porosity=0.3)]
    return FieldGenerator(layers=layers, **kwargs)

def test_raster(tmp_path):
    values = numpy.arange(6.0) / 7

    path = tmp_path / 'K.txt'
    write_raster(path, values, 3, 2)
    assert path.read_text().splitlines()[0] == '3 2'
    assert read_raster(path, 3, 2) == pytest.approx(values)

    with pytest.raises(ConfigurationError):
        read_raster(path, 2, 3)

    path.write_text('3 2\n1 2 3\n4 5\n')
    with pytest.raises(FieldIOError):
        read_raster(path)

    path.write_text('3 2\n1 2 3\n4 5 x\n')
    with pytest.raises(FieldIOError):
        read_raster(path)

    with pytest.raises(FieldIOError):
        read_raster(tmp_path / 'missing.txt')

def test_constant_fields():
    grid = FineGrid(4, 2, 4, 2)
    K, phi = generate_fields(FieldGenerator(kind='constant', permeability=3e-9, porosity=0.1), grid)

    assert K == pytest.approx(numpy.full(8, 3e-9))
    assert phi == pytest.approx(numpy.full(8, 0.1))

def test_layered_fields():
    grid = FineGrid(2, 4, 2, 4)
    K, phi = generate_fields(layered(kind='layered'), grid)

    assert K == pytest.approx([1e-8] * 4 + [4e-8] * 4)
    assert phi == pytest.approx([0.2] * 4 + [0.3] * 4)

def test_lens_fields():
    grid = FineGrid(2, 4, 2, 4)
    lens = Lens(box=(0.0, 1.0, 2.0, 3.0), multiplier=1e-2, porosity=0.1)
    K, phi = generate_fields(layered(kind='lens', lenses=[lens]), grid)

    # Only the cell centered at (0.5, 2.5) lies in the lens
    assert K == pytest.approx([1e-8] * 4 + [4e-10, 4e-8, 4e-8, 4e-8])
    assert phi == pytest.approx([0.2] * 4 + [0.1, 0.3, 0.3, 0.3])

def test_noise():
    grid = FineGrid(4, 4, 4, 4)

    K, _ = generate_fields(layered(kind='layered', noise=0.5, seed=3), grid)
    K2, _ = generate_fields(layered(kind='layered', noise=0.5, seed=3), grid)
    assert K == pytest.approx(K2)
    assert numpy.all(K > 0)
    assert not numpy.allclose(K, generate_fields(layered(kind='layered'), grid)[0])

def test_file_fields(tmp_path):
    grid = FineGrid(3, 2, 3, 2)
    write_raster(tmp_path / 'K.txt', numpy.linspace(1e-9, 6e-9, 6), 3, 2)
    write_raster(tmp_path / 'phi.txt', numpy.full(6, 0.25), 3, 2)

    gen = FieldGenerator(kind='file', permeability_file=str(tmp_path / 'K.txt'),
                         porosity_file=str(tmp_path / 'phi.txt'))
    K, phi = generate_fields(gen, grid)
    assert K == pytest.approx(numpy.linspace(1e-9, 6e-9, 6))
    assert phi == pytest.approx(0.25)

    write_raster(tmp_path / 'phi.txt', numpy.full(6, 1.5), 3, 2)
    with pytest.raises(ConfigurationError):
        generate_fields(gen, grid)

    with pytest.raises(ConfigurationError):
        generate_fields(gen, FineGrid(2, 2, 2, 2))

    with pytest.raises(ConfigurationError):
        validate_scenario({'fields': {'kind': 'file'}})

def test_unsorted_layers():
    grid = FineGrid(2, 4, 2, 4)
    layers = [Layer(start_row=2, permeability=1e-8), Layer(start_row=0, permeability=1e-8)]

    with pytest.raises(ConfigurationError):
        generate_fields(FieldGenerator(kind='layered', layers=layers), grid)

def test_vtk(tmp_path):
    grid = FineGrid(2, 1, 1, 1)

    path = tmp_path / 'single_cell.vtk'
    emit_vtk({'saturation': DgField.constant(grid, 0.5), 'porosity': [0.25]}, grid, path, title='one cell')

    with open(os.path.join(os.path.dirname(__file__), 'single_cell.vtk')) as f:
        assert path.read_text() == f.read()

def test_vtk_refuses_invalid_fields(tmp_path):
    grid = FineGrid(2, 1, 2, 1)

    with pytest.raises(FieldIOError):
        emit_vtk({'pressure': [1.0, numpy.nan]}, grid, tmp_path / 'nan.vtk')

    with pytest.raises(FieldIOError):
        emit_vtk({'pressure': [1.0]}, grid, tmp_path / 'short.vtk')

    assert not (tmp_path / 'nan.vtk').exists()
