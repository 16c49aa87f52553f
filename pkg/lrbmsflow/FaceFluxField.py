import numpy

from lrbmsflow.DgField import CELL_POINTS, GAUSS_WEIGHTS
from lrbmsflow.MobilityBasis import linear_mobilities

# Outward unit normals of the left, right, bottom and top faces of a cell
CELL_NORMALS = numpy.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])


class FaceFluxField:
    '''Lowest order Raviart-Thomas velocity on a FineGrid.

    values holds the mean normal velocity u . n of every face with respect to
    the normal stored in the grid. Inside a cell the x-component is linear in
    x and interpolates the values on the left and right faces, the
    y-component likewise.'''

    def __init__(self, grid, values=None):
        self.grid = grid
        if values is None:
            values = numpy.zeros(grid.nfaces)

        self.values = numpy.array(values, dtype=float)

    @classmethod
    def from_components(cls, grid, ux, uy):
        '''Normal velocities from velocity components given per face.'''
        return cls(grid, ux * grid.face_normals[:, 0] + uy * grid.face_normals[:, 1])

    @classmethod
    def uniform(cls, grid, velocity):
        return cls(grid, grid.face_normals @ numpy.asarray(velocity, dtype=float))

    def copy(self):
        return FaceFluxField(self.grid, self.values.copy())

    def fluxes(self):
        '''Total flux through every face.'''
        return self.values * self.grid.face_lengths

    def orientation(self):
        '''+1 where the stored normal of a face is the outward normal of the
        cell, -1 otherwise, shape (ncells, 4).'''
        grid = self.grid
        normals = grid.face_normals[grid.cell_faces]
        return numpy.einsum('cfk,fk->cf', normals, CELL_NORMALS)

    def outward(self):
        '''Outward normal velocity on the four faces of every cell.'''
        return self.values[self.grid.cell_faces] * self.orientation()

    def components(self):
        '''x-components on the left and right and y-components on the bottom
        and top faces of every cell, shape (ncells, 4).'''
        return self.outward() * CELL_NORMALS.sum(axis=1)

    def cell_velocity(self, local):
        '''Velocity at local coordinates of shape (ncells, ..., 2) in every cell.'''
        c = self.components()
        local = numpy.asarray(local, dtype=float)
        shape = (self.grid.ncells,) + (1,) * (local.ndim - 2)
        c = c.reshape(shape + (4,))

        xi = local[..., 0]
        eta = local[..., 1]
        ux = (0.5 - xi) * c[..., 0] + (0.5 + xi) * c[..., 1]
        uy = (0.5 - eta) * c[..., 2] + (0.5 + eta) * c[..., 3]
        return numpy.stack([ux, uy], axis=-1)

    def quadrature_velocity(self):
        '''Velocity at the four Gauss points of every cell, shape (ncells, 4, 2).'''
        local = numpy.broadcast_to(CELL_POINTS, (self.grid.ncells,) + CELL_POINTS.shape)
        return self.cell_velocity(local)

    def center_velocity(self):
        c = self.components()
        return numpy.stack([(c[:, 0] + c[:, 1]) / 2, (c[:, 2] + c[:, 3]) / 2], axis=1)

    def face_speeds(self):
        '''Euclidean norm of the velocity at the centers of the four faces of
        every cell, evaluated from inside the cell.'''
        c = self.components()
        center = self.center_velocity()
        tangential = numpy.stack([center[:, 1], center[:, 1], center[:, 0], center[:, 0]], axis=1)
        return numpy.hypot(c, tangential)

    def __neg__(self):
        return FaceFluxField(self.grid, -self.values)

    def __repr__(self):
        return 'FaceFluxField(nfaces=%d)' % self.grid.nfaces


def reconstruct_velocity_from_mobilities(discretization, p, lambda_w, lambda_n):
    '''Total velocity from a pressure and given phase mobilities.

    On interior and pressure-Dirichlet faces the mean normal velocity is the
    face average of

        -{lambda_t K grad p . n} + {K (lambda_w rho_w + lambda_n rho_n) G . n} + sigma / h [p]*

    with the same weighted means as in the pressure discretization, so that
    the result is locally conservative whenever p solves the discrete
    pressure equation for these mobilities. Neumann faces take the
    prescribed outward flux.'''
    grid = discretization.grid
    K = discretization.K
    lambda_t = lambda_w + lambda_n
    values = numpy.zeros(grid.nfaces)
    gradients = p.slopes

    gravity = discretization.has_gravity()
    if gravity:
        g = discretization.gravity_density(lambda_w, lambda_n)

    omega1, omega2 = discretization.weights.flux_weights
    ratio = discretization.sigma / grid.face_lengths

    faces = discretization.interior_faces
    if len(faces):
        cells = grid.face_cells[faces]
        n = grid.face_normals[faces]
        k1 = omega1[faces, None] * K[cells[:, 0], None]
        k2 = omega2[faces, None] * K[cells[:, 1], None]

        dn1 = numpy.sum(gradients[cells[:, 0]] * n, axis=1)[:, None]
        dn2 = numpy.sum(gradients[cells[:, 1]] * n, axis=1)[:, None]
        flux = -(k1 * lambda_t.traces(faces, 0) * dn1 + k2 * lambda_t.traces(faces, 1) * dn2)
        if gravity:
            Gn = (n @ discretization.gravity)[:, None]
            flux += (k1 * g.traces(faces, 0) + k2 * g.traces(faces, 1)) * Gn

        flux += ratio[faces, None] * (p.traces(faces, 0) - p.traces(faces, 1))
        values[faces] = flux @ GAUSS_WEIGHTS

    faces = discretization.dirichlet_faces
    if len(faces):
        cells = grid.face_cells[faces, 0]
        n = grid.face_normals[faces]
        k1 = K[cells, None]

        dn1 = numpy.sum(gradients[cells] * n, axis=1)[:, None]
        flux = -k1 * lambda_t.traces(faces, 0) * dn1
        if gravity:
            Gn = (n @ discretization.gravity)[:, None]
            flux += k1 * g.traces(faces, 0) * Gn

        flux += ratio[faces, None] * (p.traces(faces, 0) - grid.dirichlet_pressure[faces, None])
        values[faces] = flux @ GAUSS_WEIGHTS

    faces = discretization.neumann_faces
    values[faces] = grid.neumann_flux[faces]

    return FaceFluxField(grid, values)


def reconstruct_velocity(discretization, p, s):
    '''Total velocity from a pressure p with the mobilities of the saturation s.'''
    fluids = discretization.fluids
    lambda_w, lambda_n, _ = linear_mobilities(s, fluids.mu_w, fluids.mu_n)
    return reconstruct_velocity_from_mobilities(discretization, p, lambda_w, lambda_n)


def _cell_source(grid, q1):
    return numpy.broadcast_to(numpy.asarray(q1, dtype=float), (grid.ncells,)) * grid.cell_area


def divergence_defect(u, q1=0.0):
    '''Outflow minus source of every cell.'''
    grid = u.grid
    outflow = numpy.sum(u.outward() * grid.face_lengths[grid.cell_faces], axis=1)
    return outflow - _cell_source(grid, q1)


def coarse_mass_balance(u, coarse, q1=0.0):
    '''Outflow minus source of every coarse cell. Fluxes over fine faces inside
    a coarse cell cancel, so this is the sum of the fine cell defects.'''
    return numpy.bincount(coarse.fine_to_coarse, weights=divergence_defect(u, q1),
                          minlength=coarse.ncells)


def mass_loss(u, q1=0.0, threshold=1e-14):
    '''Relative mass loss per cell: the absolute divergence defect divided by
    the largest velocity on the boundary of the cell. Cells where that
    velocity is below threshold have no mass loss.'''
    speed = u.face_speeds().max(axis=1)
    defect = numpy.abs(divergence_defect(u, q1))
    return numpy.where(speed > threshold, defect / numpy.where(speed > threshold, speed, 1.0), 0.0)
