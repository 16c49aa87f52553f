import hashlib
import json

import numpy

from lrbmsflow.DgField import GAUSS_POINTS
from lrbmsflow.exceptions import ConfigurationError

SIDES = ('left', 'right', 'bottom', 'top')

_PRESSURE_TYPES = ('dirichlet', 'neumann')


def default_boundary():
    '''Boundary layout of the displacement benchmark: water is pushed in through
    the left side, the right side is an outflow with a fixed rate and top and
    bottom are closed.'''
    return {
        'left': {'pressure': 'dirichlet', 'value': 10.0, 'saturation': 1.0},
        'right': {'pressure': 'neumann', 'value': 3e-4},
        'bottom': {'pressure': 'neumann', 'value': 0.0},
        'top': {'pressure': 'neumann', 'value': 0.0},
    }


class FineGrid:
    '''Structured rectangular grid on [0, Lx] x [0, Ly].

    Cells are numbered row-major, cell (i, j) has index i + j * nx. Faces
    normal to the x-axis come first, face (i, j) with 0 <= i <= nx has index
    i + j * (nx + 1). They are followed by the faces normal to the y-axis,
    face (i, j) with 0 <= j <= ny has index nxf + i + j * nx.

    Every face stores up to two adjacent cells. On interior faces the normal
    points from the first to the second cell, on boundary faces it points
    outward and the second cell is -1.

    Parameters
    ----------
    Lx, Ly : float
        Extents of the domain.
    nx, ny : int
        Number of cells in x- and y-direction.
    boundary : dict, optional
        Maps each side ('left', 'right', 'bottom', 'top') to a dict with
        keys 'pressure' ('dirichlet' or 'neumann'), 'value' (the Dirichlet
        pressure or the prescribed outward normal flux) and optionally
        'saturation' (the inflow saturation, which makes the side a
        saturation-Dirichlet boundary).

    '''

    def __init__(self, Lx, Ly, nx, ny, boundary=None):
        if not (Lx > 0 and Ly > 0):
            raise ConfigurationError('Domain extents must be positive, got Lx=%g, Ly=%g' % (Lx, Ly))

        if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
            raise ConfigurationError('Cell counts must be positive integers, got nx=%s, ny=%s' % (nx, ny))

        self.Lx = float(Lx)
        self.Ly = float(Ly)
        self.nx = int(nx)
        self.ny = int(ny)

        self.hx = self.Lx / self.nx
        self.hy = self.Ly / self.ny
        self.h = max(self.hx, self.hy)
        self.cell_area = self.hx * self.hy
        self.cell_diameter = numpy.hypot(self.hx, self.hy)

        self.ncells = self.nx * self.ny
        self.nxf = (self.nx + 1) * self.ny
        self.nfaces = self.nxf + self.nx * (self.ny + 1)

        self.boundary = self._check_boundary(boundary if boundary is not None else default_boundary())

        self._build_cells()
        self._build_faces()
        self._tag_faces()

    @staticmethod
    def _check_boundary(boundary):
        sides = {}
        for side in SIDES:
            if side not in boundary:
                raise ConfigurationError('No boundary condition given for the %s side' % side)

            condition = dict(boundary[side])
            if condition.get('pressure') not in _PRESSURE_TYPES:
                raise ConfigurationError('Invalid pressure boundary type %s on the %s side'
                                         % (condition.get('pressure'), side))

            condition['value'] = float(condition.get('value', 0.0))
            if condition.get('saturation') is not None:
                condition['saturation'] = float(condition['saturation'])
            else:
                condition['saturation'] = None

            sides[side] = condition

        unknown = set(boundary) - set(SIDES)
        if unknown:
            raise ConfigurationError('Unknown boundary sides %s' % sorted(unknown))

        return sides

    def _build_cells(self):
        i, j = numpy.meshgrid(numpy.arange(self.nx), numpy.arange(self.ny))
        i = i.ravel()
        j = j.ravel()

        self.cell_i = i
        self.cell_j = j
        self.cell_centers = numpy.stack([(i + 0.5) * self.hx, (j + 0.5) * self.hy], axis=1)

        # Faces of every cell in the order left, right, bottom, top
        self.cell_faces = numpy.stack([
            i + j * (self.nx + 1),
            i + 1 + j * (self.nx + 1),
            self.nxf + i + j * self.nx,
            self.nxf + i + (j + 1) * self.nx], axis=1)

        neighbors = -numpy.ones((self.ncells, 4), dtype=int)
        cells = numpy.arange(self.ncells)
        neighbors[i > 0, 0] = cells[i > 0] - 1
        neighbors[i < self.nx - 1, 1] = cells[i < self.nx - 1] + 1
        neighbors[j > 0, 2] = cells[j > 0] - self.nx
        neighbors[j < self.ny - 1, 3] = cells[j < self.ny - 1] + self.nx
        self.cell_neighbors = neighbors

    def _build_faces(self):
        nx = self.nx
        ny = self.ny

        face_cells = -numpy.ones((self.nfaces, 2), dtype=int)
        normals = numpy.zeros((self.nfaces, 2))
        centers = numpy.zeros((self.nfaces, 2))
        lengths = numpy.zeros(self.nfaces)
        side = -numpy.ones(self.nfaces, dtype=int)

        # x-faces
        i, j = numpy.meshgrid(numpy.arange(nx + 1), numpy.arange(ny))
        i = i.ravel()
        j = j.ravel()
        f = i + j * (nx + 1)
        left = i - 1 + j * nx
        right = i + j * nx

        face_cells[f, 0] = numpy.where(i > 0, left, right)
        face_cells[f, 1] = numpy.where((i > 0) & (i < nx), right, -1)
        normals[f, 0] = numpy.where(i == 0, -1.0, 1.0)
        centers[f, 0] = i * self.hx
        centers[f, 1] = (j + 0.5) * self.hy
        lengths[f] = self.hy
        side[f[i == 0]] = 0
        side[f[i == nx]] = 1

        # y-faces
        i, j = numpy.meshgrid(numpy.arange(nx), numpy.arange(ny + 1))
        i = i.ravel()
        j = j.ravel()
        f = self.nxf + i + j * nx
        below = i + (j - 1) * nx
        above = i + j * nx

        face_cells[f, 0] = numpy.where(j > 0, below, above)
        face_cells[f, 1] = numpy.where((j > 0) & (j < ny), above, -1)
        normals[f, 1] = numpy.where(j == 0, -1.0, 1.0)
        centers[f, 0] = (i + 0.5) * self.hx
        centers[f, 1] = j * self.hy
        lengths[f] = self.hx
        side[f[j == 0]] = 2
        side[f[j == ny]] = 3

        self.face_cells = face_cells
        self.face_normals = normals
        self.face_centers = centers
        self.face_lengths = lengths
        self.face_side = side

        self.interior = face_cells[:, 1] >= 0
        self.boundary_faces = numpy.flatnonzero(~self.interior)
        self.interior_faces = numpy.flatnonzero(self.interior)

        # Unit tangent along which the face is parametrized
        self.face_tangents = numpy.abs(normals[:, ::-1])

    def _tag_faces(self):
        n = self.nfaces
        self.pressure_dirichlet = numpy.zeros(n, dtype=bool)
        self.neumann = numpy.zeros(n, dtype=bool)
        self.saturation_dirichlet = numpy.zeros(n, dtype=bool)
        self.dirichlet_pressure = numpy.zeros(n)
        self.neumann_flux = numpy.zeros(n)
        self.dirichlet_saturation = numpy.zeros(n)

        for k, name in enumerate(SIDES):
            faces = self.face_side == k
            condition = self.boundary[name]
            if condition['pressure'] == 'dirichlet':
                self.pressure_dirichlet[faces] = True
                self.dirichlet_pressure[faces] = condition['value']
            else:
                self.neumann[faces] = True
                self.neumann_flux[faces] = condition['value']

            if condition['saturation'] is not None:
                self.saturation_dirichlet[faces] = True
                self.dirichlet_saturation[faces] = condition['saturation']

    def boundary_tags(self, face):
        '''Tags of a face: a subset of 'pressure-dirichlet', 'pressure-neumann-inflow-rate',
        'pressure-neumann-noflow' and 'saturation-dirichlet'. Interior faces have no tags.'''
        tags = []
        if self.pressure_dirichlet[face]:
            tags.append('pressure-dirichlet')
        elif self.neumann[face] and self.neumann_flux[face] != 0:
            tags.append('pressure-neumann-inflow-rate')
        elif self.neumann[face]:
            tags.append('pressure-neumann-noflow')

        if self.saturation_dirichlet[face]:
            tags.append('saturation-dirichlet')

        return tags

    def face_quadrature_points(self, faces=None):
        '''Physical coordinates of the two Gauss points of every face, shape (nfaces, 2, 2).'''
        if faces is None:
            faces = numpy.arange(self.nfaces)

        extent = self.face_lengths[faces, None, None] * self.face_tangents[faces, None, :]
        return self.face_centers[faces, None, :] + GAUSS_POINTS[None, :, None] * extent

    def local_coordinates(self, cells, points):
        '''Scaled coordinates ((x - b_x) / hx, (y - b_y) / hy) of points with respect
        to the barycenters of the given cells.'''
        return (points - self.cell_centers[cells]) / numpy.array([self.hx, self.hy])

    def cell_of_point(self, point):
        i = min(int(point[0] / self.hx), self.nx - 1)
        j = min(int(point[1] / self.hy), self.ny - 1)
        return i + j * self.nx

    def checksum(self):
        '''Digest of the geometry and boundary data, used to match stored models to grids.'''
        data = {'Lx': self.Lx, 'Ly': self.Ly, 'nx': self.nx, 'ny': self.ny,
                'boundary': self.boundary}
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()

    def __repr__(self):
        return 'FineGrid(%g x %g, %d x %d cells)' % (self.Lx, self.Ly, self.nx, self.ny)


def build_fine_grid(Lx, Ly, nx, ny, boundary_spec=None):
    return FineGrid(Lx, Ly, nx, ny, boundary_spec)
