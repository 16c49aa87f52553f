import numpy

from lrbmsflow.DgField import DgField
from lrbmsflow.exceptions import FieldIOError


def _cell_values(field):
    if isinstance(field, DgField):
        return field.means

    return numpy.asarray(field, dtype=float).ravel()


def emit_vtk(fields, grid, path, title='lrbmsflow output'):
    '''Write cell fields (DgFields contribute their cell means) to a legacy
    ASCII VTK rectilinear grid file. Fields containing NaN or infinite
    values are refused.'''
    cell_data = {}
    for name, field in fields.items():
        values = _cell_values(field)
        if len(values) != grid.ncells:
            raise FieldIOError('Field %s has %d values, expected %d' % (name, len(values), grid.ncells))
        if not numpy.all(numpy.isfinite(values)):
            bad = numpy.flatnonzero(~numpy.isfinite(values))
            raise FieldIOError('Field %s has %d non-finite values, the first in cell %d'
                               % (name, len(bad), bad[0]))
        cell_data[name] = values

    x = numpy.linspace(0, grid.Lx, grid.nx + 1)
    y = numpy.linspace(0, grid.Ly, grid.ny + 1)

    lines = ['# vtk DataFile Version 3.0', title, 'ASCII', 'DATASET RECTILINEAR_GRID',
             'DIMENSIONS %d %d 1' % (grid.nx + 1, grid.ny + 1)]
    lines.append('X_COORDINATES %d double' % len(x))
    lines.append(' '.join('%.17g' % v for v in x))
    lines.append('Y_COORDINATES %d double' % len(y))
    lines.append(' '.join('%.17g' % v for v in y))
    lines.append('Z_COORDINATES 1 double')
    lines.append('0')

    if cell_data:
        lines.append('CELL_DATA %d' % grid.ncells)
        for name, values in cell_data.items():
            lines.append('SCALARS %s double 1' % name)
            lines.append('LOOKUP_TABLE default')
            lines.extend('%.17g' % v for v in values)

    try:
        with open(path, 'w') as f:
            f.write('\n'.join(lines) + '\n')
    except OSError as e:
        raise FieldIOError('Could not write %s: %s' % (path, e)) from e
