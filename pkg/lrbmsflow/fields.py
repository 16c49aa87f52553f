import logging

import numpy

from lrbmsflow.exceptions import ConfigurationError, FieldIOError

logger = logging.getLogger(__name__)


def write_raster(path, values, nx, ny):
    '''Write cell values as text: a header line "nx ny" followed by one row
    of nx values per grid row, starting at the bottom.'''
    values = numpy.asarray(values, dtype=float).reshape(ny, nx)
    try:
        with open(path, 'w') as f:
            f.write('%d %d\n' % (nx, ny))
            for row in values:
                f.write(' '.join('%.17g' % v for v in row) + '\n')
    except OSError as e:
        raise FieldIOError('Could not write raster %s: %s' % (path, e)) from e


def read_raster(path, nx=None, ny=None):
    '''Read a raster written by write_raster(). If nx and ny are given they
    have to match the header.'''
    try:
        with open(path) as f:
            header = f.readline().split()
            values = numpy.array(f.read().split(), dtype=float)
    except OSError as e:
        raise FieldIOError('Could not read raster %s: %s' % (path, e)) from e
    except ValueError as e:
        raise FieldIOError('Raster %s contains invalid values: %s' % (path, e)) from e

    if len(header) != 2:
        raise FieldIOError('Raster %s has an invalid header' % path)

    rx, ry = int(header[0]), int(header[1])
    if (nx is not None and rx != nx) or (ny is not None and ry != ny):
        raise ConfigurationError('Raster %s has %d x %d cells, expected %s x %s' % (path, rx, ry, nx, ny))

    if len(values) != rx * ry:
        raise FieldIOError('Raster %s has %d values, expected %d' % (path, len(values), rx * ry))

    return values


def _bands(gen, grid):
    '''Layer index of every cell.'''
    starts = numpy.array([layer.start_row for layer in gen.layers])
    if numpy.any(numpy.diff(starts) <= 0) or starts[0] != 0:
        raise ConfigurationError('Layers have to start at row 0 and be sorted by start row')

    return numpy.searchsorted(starts, grid.cell_j, side='right') - 1


def generate_fields(gen, grid):
    '''Permeability and porosity per fine cell from a field generator
    description. Returns (K, phi).'''
    if gen.kind == 'file':
        K = read_raster(gen.permeability_file, grid.nx, grid.ny)
        phi = read_raster(gen.porosity_file, grid.nx, grid.ny)
    elif gen.kind == 'constant':
        K = numpy.full(grid.ncells, gen.permeability)
        phi = numpy.full(grid.ncells, gen.porosity)
    else:
        band = _bands(gen, grid)
        K = numpy.array([layer.permeability for layer in gen.layers])[band]
        phi = numpy.array([layer.porosity for layer in gen.layers])[band]

    if gen.kind == 'lens':
        x = grid.cell_centers[:, 0]
        y = grid.cell_centers[:, 1]
        for lens in gen.lenses:
            x0, x1, y0, y1 = lens.box
            inside = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
            K[inside] *= lens.multiplier
            if lens.porosity is not None:
                phi[inside] = lens.porosity

    if gen.kind != 'file' and gen.noise > 0:
        rng = numpy.random.default_rng(gen.seed)
        K = K * numpy.exp(gen.noise * rng.standard_normal(grid.ncells))

    if numpy.any(K <= 0) or not numpy.all(numpy.isfinite(K)):
        raise ConfigurationError('The permeability has to be positive and finite')

    if numpy.any(phi <= 0) or numpy.any(phi > 1):
        raise ConfigurationError('The porosity has to lie in (0, 1]')

    logger.debug('Generated %s fields, permeability in [%e, %e]', gen.kind, K.min(), K.max())
    return K, phi
