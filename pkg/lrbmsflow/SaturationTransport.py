import logging

import numpy

from lrbmsflow.DgField import (BASIS_MASS, CELL_WEIGHTS, GAUSS_WEIGHTS, DgField, basis_gradients, face_basis,
                               l2_project)
from lrbmsflow.MobilityBasis import linear_mobilities
from lrbmsflow.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

# Threshold below which gradient and mean differences are ignored by the limiter
LIMITER_EPS = 1e-8

# Scaling constant of the shock detector
DETECTOR_CONSTANT = 0.08


def fractional_flow(s, mu_w, mu_n):
    '''Fractional flow of the wetting phase for linear relative
    permeabilities. s is clamped to [0, 1].'''
    s = numpy.clip(s, 0.0, 1.0)
    lambda_w = s / mu_w
    return lambda_w / (lambda_w + (1.0 - s) / mu_n)


class SaturationTransport:
    '''Explicit Euler upwind DG discretization of the saturation equation

        phi ds/dt + div(f(s) (u + lambda_n(s) (rho_w - rho_n) K G)) = q2

    with a jump penalty on interior and saturation-Dirichlet faces that uses
    the penalty parameters of the pressure discretization.

    Parameters
    ----------
    discretization : PressureDiscretization
        Provides the grid, the permeability, the fluids, gravity, the face
        weights and the penalty parameters.
    phi : float or array_like
        Porosity, constant or per fine cell.
    dt : float
        Time step.
    q2 : float or array_like
        Source of the wetting phase, constant or per fine cell.

    '''

    def __init__(self, discretization, phi, dt, q2=0.0):
        if not dt > 0:
            raise ConfigurationError('The time step must be positive, got %g' % dt)

        self.discretization = discretization
        self.grid = discretization.grid
        self.degree = discretization.degree
        self.nb = discretization.nb
        self.fluids = discretization.fluids
        self.dt = dt

        ncells = self.grid.ncells
        self.phi = numpy.broadcast_to(numpy.asarray(phi, dtype=float), (ncells,)).copy()
        if numpy.any(self.phi <= 0):
            raise ConfigurationError('The porosity must be positive')

        self.q2 = numpy.broadcast_to(numpy.asarray(q2, dtype=float), (ncells,)).copy()

        self._gradients = basis_gradients(self.grid, self.degree)

    def mass(self):
        '''Diagonal of the porosity weighted mass matrix, shape (ncells, nb).'''
        return (self.phi * self.grid.cell_area)[:, None] * BASIS_MASS[None, :self.nb]

    def _gravity_speed(self, lambda_n):
        '''lambda_n (rho_w - rho_n) K as a DG function, or None without gravity.'''
        d = self.discretization
        if not d.has_gravity():
            return None

        return lambda_n * (self.fluids.rho_w - self.fluids.rho_n) * d.K[:, None]

    def _upwind(self, s, u, faces):
        '''Upwind traces of s at the Gauss points of the given faces.'''
        grid = self.grid
        un = u.values[faces]
        inner = s.traces(faces, 0)

        outer = numpy.empty_like(inner)
        interior = grid.interior[faces]
        outer[interior] = s.traces(faces[interior], 1)

        boundary = faces[~interior]
        outer[~interior] = numpy.where(grid.saturation_dirichlet[boundary, None],
                                       grid.dirichlet_saturation[boundary, None],
                                       inner[~interior])

        return numpy.where((un >= 0)[:, None], inner, outer)

    def _normal_speed(self, u, lambda_n, faces):
        '''Mean normal transport speed {u + lambda_n (rho_w - rho_n) K G} . n
        at the Gauss points of the given faces.'''
        speed = numpy.repeat(u.values[faces, None], 2, axis=1)
        gravity = self._gravity_speed(lambda_n)
        if gravity is None:
            return speed

        grid = self.grid
        d = self.discretization
        omega1, omega2 = d.weights.flux_weights
        Gn = (grid.face_normals[faces] @ d.gravity)[:, None]

        mean = omega1[faces, None] * gravity.traces(faces, 0)
        interior = grid.interior[faces]
        mean[interior] += omega2[faces[interior], None] * gravity.traces(faces[interior], 1)
        return speed + mean * Gn

    def _penalty_jumps(self, s, faces):
        '''[s]* at the Gauss points: the jump on interior faces and s - s_D on
        saturation-Dirichlet faces. Other faces have no penalty.'''
        grid = self.grid
        jumps = numpy.zeros((len(faces), 2))
        interior = grid.interior[faces]
        jumps[interior] = s.traces(faces[interior], 0) - s.traces(faces[interior], 1)

        dirichlet = ~interior & grid.saturation_dirichlet[faces]
        jumps[dirichlet] = (s.traces(faces[dirichlet], 0)
                            - grid.dirichlet_saturation[faces[dirichlet], None])
        return jumps

    def face_fluxes(self, s, u):
        '''Numerical wetting phase flux at the Gauss points of every face in
        the direction of the stored normal, including the penalty term,
        shape (nfaces, 2).'''
        grid = self.grid
        d = self.discretization
        faces = numpy.arange(grid.nfaces)

        lambda_n = linear_mobilities(s, self.fluids.mu_w, self.fluids.mu_n)[1]
        speed = self._normal_speed(u, lambda_n, faces)
        flux = speed * fractional_flow(self._upwind(s, u, faces), self.fluids.mu_w, self.fluids.mu_n)

        flux += (d.sigma / grid.face_lengths)[:, None] * self._penalty_jumps(s, faces)

        return flux

    def rhs(self, s, u):
        '''Right-hand side of the saturation update without the previous
        state, one entry per degree of freedom, shape (ncells, nb).'''
        grid = self.grid
        fluids = self.fluids
        b = numpy.zeros((grid.ncells, self.nb))

        b[:, 0] += self.q2 * grid.cell_area

        # Volume term int f(s) (u + lambda_n (rho_w - rho_n) K G) . grad v
        if self.degree > 0:
            values = s.quadrature_values()
            velocity = u.quadrature_velocity()
            gravity = self._gravity_speed(linear_mobilities(s, fluids.mu_w, fluids.mu_n)[1])
            if gravity is not None:
                velocity = velocity + gravity.quadrature_values()[:, :, None] * self.discretization.gravity

            flux = fractional_flow(values, fluids.mu_w, fluids.mu_n)[:, :, None] * velocity
            b += grid.cell_area * numpy.einsum('q,cqk,ak->ca', CELL_WEIGHTS, flux, self._gradients)

        # Face term -int F [v]
        flux = self.face_fluxes(s, u) * (GAUSS_WEIGHTS * grid.face_lengths[:, None])
        faces = numpy.arange(grid.nfaces)
        psi1 = face_basis(grid, faces, 0, self.degree)
        numpy.add.at(b, grid.face_cells[:, 0], -numpy.einsum('fq,fqa->fa', flux, psi1))

        faces = grid.interior_faces
        psi2 = face_basis(grid, faces, 1, self.degree)
        numpy.add.at(b, grid.face_cells[faces, 1], numpy.einsum('fq,fqa->fa', flux[faces], psi2))

        return b

    def step(self, s, u):
        '''One explicit Euler step; returns the unlimited new saturation.'''
        if s.degree != self.degree:
            raise DomainError('Saturation of degree %d on a degree %d discretization' % (s.degree, self.degree))

        c = s.coefficients + self.dt * self.rhs(s, u) / self.mass()
        return DgField(self.grid, c, self.degree)

    def boundary_inflow(self, s, u):
        '''Net wetting phase flux into the domain through the boundary,
        including the penalty contribution of saturation-Dirichlet faces.'''
        grid = self.grid
        flux = self.face_fluxes(s, u)[grid.boundary_faces] @ GAUSS_WEIGHTS
        return -numpy.sum(flux * grid.face_lengths[grid.boundary_faces])

    def wetting_mass(self, s):
        '''Total wetting phase volume sum_T int_T phi s.'''
        return wetting_mass(s, self.phi)

    def cfl_number(self, u):
        '''Largest max |u . n| dt / (phi h) over all cells.'''
        grid = self.grid
        speed = numpy.abs(u.outward()).max(axis=1)
        return float(numpy.max(speed * self.dt / (self.phi * min(grid.hx, grid.hy))))


def saturation_step(s, u, transport):
    '''One explicit Euler step of the transport equation, without limiting.'''
    return transport.step(s, u)


def shock_detector(s, u):
    '''Shock detector per cell: the sum over the upstream faces of the
    absolute integrated jump, scaled by 1 / (0.08 d sqrt(h_T) |T|) with d = 2.
    Upstream faces of saturation-Dirichlet boundaries jump to the prescribed
    saturation, other boundary faces do not contribute.'''
    grid = s.grid
    faces = grid.cell_faces
    inflow = u.outward() < 0

    inner = numpy.zeros((grid.ncells, 4))
    outer = numpy.zeros((grid.ncells, 4))
    for k in range(4):
        f = faces[:, k]
        # Local coordinates of the Gauss points on face k of every cell
        local = grid.local_coordinates(numpy.arange(grid.ncells)[:, None], grid.face_quadrature_points(f))
        inner[:, k] = s.local_values(numpy.arange(grid.ncells), local) @ GAUSS_WEIGHTS

        neighbors = grid.cell_neighbors[:, k]
        has = neighbors >= 0
        local = grid.local_coordinates(neighbors[has, None], grid.face_quadrature_points(f[has]))
        outer[has, k] = s.local_values(neighbors[has], local) @ GAUSS_WEIGHTS

        dirichlet = ~has & grid.saturation_dirichlet[f]
        outer[dirichlet, k] = grid.dirichlet_saturation[f[dirichlet]]

        ignored = ~has & ~grid.saturation_dirichlet[f]
        outer[ignored, k] = inner[ignored, k]

    jumps = numpy.abs(inner - outer) * grid.face_lengths[faces]
    scale = DETECTOR_CONSTANT * 2 * numpy.sqrt(grid.cell_diameter) * grid.cell_area
    return numpy.sum(numpy.where(inflow, jumps, 0.0), axis=1) / scale


def gradient_scales(s):
    '''Smallest gradient scale min_i m_i of every cell, computed from the
    neighbors i over the four faces.'''
    grid = s.grid
    c = s.coefficients
    means = s.means

    # grad s . (b_i - b_T) for the left, right, bottom and top neighbor
    g = numpy.stack([-c[:, 1], c[:, 1], -c[:, 2], c[:, 2]], axis=1)

    neighbors = grid.cell_neighbors
    has = neighbors >= 0
    d = numpy.where(has, means[numpy.maximum(neighbors, 0)] - means[:, None], 0.0)

    significant = has & (numpy.abs(g) > LIMITER_EPS) & (numpy.abs(d) > LIMITER_EPS)
    m = numpy.ones_like(g)
    m[significant & (g * d < 0)] = 0.0

    shrink = significant & (g * d > 0) & (numpy.abs(g) > numpy.abs(d))
    m[shrink] = d[shrink] / g[shrink]

    return m.min(axis=1)


def bound_scales(s, lower=0.0, upper=1.0):
    '''Largest factor in [0, 1] for the slopes of every cell that keeps all
    corner values, and with them the whole linear function, in [lower, upper].
    Cells whose mean lies outside the bounds lose their slopes.'''
    c = s.coefficients
    deviation = 0.5 * (numpy.abs(c[:, 1]) + numpy.abs(c[:, 2]))
    room = numpy.minimum(c[:, 0] - lower, upper - c[:, 0])

    scales = numpy.ones(s.grid.ncells)
    exceed = deviation > room
    scales[exceed] = numpy.clip(room[exceed] / numpy.where(deviation[exceed] > 0, deviation[exceed], 1.0), 0.0, 1.0)
    return scales


def flag_cells(s, u):
    '''Cells where the shock detector exceeds one or a corner value lies
    outside [0, 1].'''
    corners = s.corner_values()
    outside = numpy.any((corners < 0) | (corners > 1), axis=1)
    return (shock_detector(s, u) > 1) | outside


def limit(s, u):
    '''Scale the gradient of every flagged cell with its smallest gradient
    scale, then further where a corner value still lies outside [0, 1].
    Cell means are never changed.'''
    if s.degree != 1:
        raise DomainError('The limiter needs a piecewise linear saturation')

    flagged = flag_cells(s, u)
    scales = numpy.where(flagged, gradient_scales(s), 1.0)
    scales = numpy.minimum(scales, bound_scales(s))

    limited = s.copy()
    limited.coefficients[:, 1:] *= scales[:, None]

    logger.debug('Limited %d of %d cells', numpy.count_nonzero(scales < 1), s.grid.ncells)
    return limited


def initial_saturation(grid, s0, degree=1):
    '''L2 projection of the initial saturation, a constant or a function of (x, y).'''
    if callable(s0):
        return l2_project(grid, s0, degree)

    return DgField.constant(grid, s0, degree)


def wetting_mass(s, phi):
    '''Wetting phase volume sum_T int_T phi s.'''
    phi = numpy.broadcast_to(numpy.asarray(phi, dtype=float), (s.grid.ncells,))
    return float(numpy.sum(phi * s.grid.cell_area * s.means))
