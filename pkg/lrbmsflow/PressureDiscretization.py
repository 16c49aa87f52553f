import logging

import numpy

from lrbmsflow import solvers
from lrbmsflow.CrsMatrix import CrsMatrix
from lrbmsflow.DgField import (DgField, FaceWeights, GAUSS_WEIGHTS, basis_gradients, block_size,
                               face_basis)
from lrbmsflow.exceptions import AssemblyError

logger = logging.getLogger(__name__)


def penalty(weights, c_base, mu_w, mu_n):
    '''Penalty parameter of every face: c_base / max(mu_w, mu_n) times the
    harmonic mean of the permeabilities of the adjacent cells.'''
    return c_base / max(mu_w, mu_n) * weights.harmonic


class PressureDiscretization:
    '''Symmetric weighted interior penalty discretization of the pressure
    equation

        -div(lambda_t K grad p - K (lambda_w rho_w + lambda_n rho_n) G) = q1

    on a FineGrid with the boundary data stored in the grid. The bilinear form
    is split into a part that is linear in the total mobility (volume and
    consistency terms) and the mobility independent penalty part:

        a(v, w; lambda) = diffusion(lambda)[v, w] + penalty[v, w].

    The right-hand side is split likewise into a mobility dependent part
    (gravity and Dirichlet consistency) and a fixed part (source, Dirichlet
    penalty and Neumann data). The Neumann value is the prescribed outward
    normal total flux.

    Parameters
    ----------
    grid : FineGrid
    K : array_like
        Permeability per fine cell.
    fluids : object
        Provides rho_w, rho_n, mu_w and mu_n.
    degree : int
        Polynomial degree of the DG space.
    c_base : float
        Base penalty constant.
    q1 : float or array_like
        Source, constant or per fine cell.
    gravity : tuple
        Gravity vector G.

    '''

    def __init__(self, grid, K, fluids, degree=1, c_base=30.0, q1=0.0, gravity=(0.0, 0.0)):
        self.grid = grid
        self.K = numpy.asarray(K, dtype=float).ravel()
        self.fluids = fluids
        self.degree = degree
        self.nb = block_size(degree)
        self.ndofs = grid.ncells * self.nb
        self.c_base = c_base
        self.q1 = numpy.broadcast_to(numpy.asarray(q1, dtype=float), (grid.ncells,)).copy()
        self.gravity = numpy.asarray(gravity, dtype=float)

        self.weights = FaceWeights(grid, self.K)
        self.sigma = penalty(self.weights, c_base, fluids.mu_w, fluids.mu_n)

        self.interior_faces = grid.interior_faces
        self.dirichlet_faces = numpy.flatnonzero(grid.pressure_dirichlet)
        self.neumann_faces = numpy.flatnonzero(grid.neumann)

        self._gradients = basis_gradients(grid, degree)
        self._penalty_matrix = None
        self._fixed_rhs = None

        logger.debug('Penalty parameters in [%e, %e] on %d faces', self.sigma.min(), self.sigma.max(), grid.nfaces)

    def has_gravity(self):
        return bool(numpy.any(self.gravity != 0))

    def dofs(self, cells):
        cells = numpy.asarray(cells)
        return cells[..., None] * self.nb + numpy.arange(self.nb)

    def _quadrature_weights(self, faces):
        return GAUSS_WEIGHTS[None, :] * self.grid.face_lengths[faces, None]

    def _normal_gradients(self, faces):
        '''grad psi . n for every basis function, shape (len(faces), nb).'''
        return self.grid.face_normals[faces] @ self._gradients.T

    def _interior_jumps(self, faces):
        psi1 = face_basis(self.grid, faces, 0, self.degree)
        psi2 = face_basis(self.grid, faces, 1, self.degree)
        return numpy.concatenate([psi1, -psi2], axis=2)

    def _interior_rows(self, faces):
        cells = self.grid.face_cells[faces]
        return numpy.concatenate([self.dofs(cells[:, 0]), self.dofs(cells[:, 1])], axis=1)

    def _interior_fluxes(self, faces, lambda_t):
        '''Weighted mean of lambda K grad psi . n at the face Gauss points for the
        basis functions of both adjacent cells, shape (len(faces), 2, 2 nb).'''
        cells = self.grid.face_cells[faces]
        omega1, omega2 = self.weights.flux_weights
        dn = self._normal_gradients(faces)

        lambda1 = lambda_t.traces(faces, 0)
        lambda2 = lambda_t.traces(faces, 1)

        k1 = (omega1[faces] * self.K[cells[:, 0]])[:, None, None]
        k2 = (omega2[faces] * self.K[cells[:, 1]])[:, None, None]
        return numpy.concatenate([k1 * lambda1[:, :, None] * dn[:, None, :],
                                  k2 * lambda2[:, :, None] * dn[:, None, :]], axis=2)

    def _dirichlet_fluxes(self, faces, lambda_t):
        cells = self.grid.face_cells[faces, 0]
        dn = self._normal_gradients(faces)
        lambda1 = lambda_t.traces(faces, 0)
        return self.K[cells][:, None, None] * lambda1[:, :, None] * dn[:, None, :]

    def penalty_matrix(self):
        '''Mobility independent penalty part sum_F sigma_F / h_F int_F [v][w].'''
        if self._penalty_matrix is not None:
            return self._penalty_matrix

        A = CrsMatrix(m=self.ndofs, n=self.ndofs)

        faces = self.interior_faces
        J = self._interior_jumps(faces)
        w = self._quadrature_weights(faces) * (self.sigma[faces] / self.grid.face_lengths[faces])[:, None]
        A.add_blocks(self._interior_rows(faces), self._interior_rows(faces),
                     numpy.einsum('fq,fqa,fqb->fab', w, J, J))

        faces = self.dirichlet_faces
        if len(faces):
            J = face_basis(self.grid, faces, 0, self.degree)
            w = self._quadrature_weights(faces) * (self.sigma[faces] / self.grid.face_lengths[faces])[:, None]
            rows = self.dofs(self.grid.face_cells[faces, 0])
            A.add_blocks(rows, rows, numpy.einsum('fq,fqa,fqb->fab', w, J, J))

        # Make sure every diagonal block exists
        diagonal = self.dofs(numpy.arange(self.grid.ncells))
        A.add_blocks(diagonal, diagonal, numpy.zeros((self.grid.ncells, self.nb, self.nb)))

        A.assemble()
        self._penalty_matrix = A
        return A

    def diffusion_matrix(self, lambda_t):
        '''Part of the bilinear form that is linear in the total mobility: the
        volume term and both symmetric consistency terms.'''
        grid = self.grid
        A = CrsMatrix(m=self.ndofs, n=self.ndofs)

        # Gradients are constant per cell, so only the mean mobility enters
        cells = numpy.arange(grid.ncells)
        G = self._gradients @ self._gradients.T
        scale = lambda_t.means * self.K * grid.cell_area
        A.add_blocks(self.dofs(cells), self.dofs(cells), scale[:, None, None] * G[None, :, :])

        faces = self.interior_faces
        if self.degree > 0 and len(faces):
            J = self._interior_jumps(faces)
            M = self._interior_fluxes(faces, lambda_t)
            w = self._quadrature_weights(faces)
            blocks = numpy.einsum('fq,fqa,fqb->fab', w, M, J)
            rows = self._interior_rows(faces)
            A.add_blocks(rows, rows, -blocks - blocks.transpose(0, 2, 1))

        faces = self.dirichlet_faces
        if self.degree > 0 and len(faces):
            J = face_basis(grid, faces, 0, self.degree)
            M = self._dirichlet_fluxes(faces, lambda_t)
            w = self._quadrature_weights(faces)
            blocks = numpy.einsum('fq,fqa,fqb->fab', w, M, J)
            rows = self.dofs(grid.face_cells[faces, 0])
            A.add_blocks(rows, rows, -blocks - blocks.transpose(0, 2, 1))

        A.assemble()
        return A

    def assemble_bilinear(self, lambda_t):
        return self.diffusion_matrix(lambda_t) + self.penalty_matrix()

    def source_vector(self):
        b = numpy.zeros((self.grid.ncells, self.nb))
        b[:, 0] = self.q1 * self.grid.cell_area
        return b.ravel()

    def dirichlet_penalty_vector(self):
        grid = self.grid
        b = numpy.zeros(self.ndofs)
        faces = self.dirichlet_faces
        if len(faces):
            psi = face_basis(grid, faces, 0, self.degree)
            w = self._quadrature_weights(faces) * (self.sigma[faces] / grid.face_lengths[faces]
                                                   * grid.dirichlet_pressure[faces])[:, None]
            numpy.add.at(b, self.dofs(grid.face_cells[faces, 0]), numpy.einsum('fq,fqa->fa', w, psi))
        return b

    def neumann_vector(self):
        grid = self.grid
        b = numpy.zeros(self.ndofs)
        faces = self.neumann_faces
        if len(faces):
            psi = face_basis(grid, faces, 0, self.degree)
            w = self._quadrature_weights(faces) * grid.neumann_flux[faces, None]
            numpy.add.at(b, self.dofs(grid.face_cells[faces, 0]), -numpy.einsum('fq,fqa->fa', w, psi))
        return b

    def dirichlet_consistency_vector(self, lambda_t):
        grid = self.grid
        b = numpy.zeros(self.ndofs)
        faces = self.dirichlet_faces
        if self.degree > 0 and len(faces):
            M = self._dirichlet_fluxes(faces, lambda_t)
            w = self._quadrature_weights(faces) * grid.dirichlet_pressure[faces, None]
            numpy.add.at(b, self.dofs(grid.face_cells[faces, 0]), -numpy.einsum('fq,fqa->fa', w, M))
        return b

    def gravity_density(self, lambda_w, lambda_n):
        '''lambda_w rho_w + lambda_n rho_n as a DG function.'''
        return lambda_w * self.fluids.rho_w + lambda_n * self.fluids.rho_n

    def gravity_vector(self, lambda_w, lambda_n):
        '''Gravity terms sum_T int_T g K G . grad w - sum_F int_F {g K G . n}[w]
        with g = lambda_w rho_w + lambda_n rho_n.'''
        grid = self.grid
        b = numpy.zeros(self.ndofs)
        if not self.has_gravity():
            return b

        g = self.gravity_density(lambda_w, lambda_n)

        volume = (g.means * self.K * grid.cell_area)[:, None] * (self._gradients @ self.gravity)[None, :]
        b += volume.ravel()

        omega1, omega2 = self.weights.flux_weights
        faces = self.interior_faces
        cells = grid.face_cells[faces]
        Gn = grid.face_normals[faces] @ self.gravity
        mean = (omega1[faces, None] * self.K[cells[:, 0], None] * g.traces(faces, 0)
                + omega2[faces, None] * self.K[cells[:, 1], None] * g.traces(faces, 1)) * Gn[:, None]
        J = self._interior_jumps(faces)
        w = self._quadrature_weights(faces)
        numpy.add.at(b, self._interior_rows(faces), -numpy.einsum('fq,fqa->fa', w * mean, J))

        faces = self.dirichlet_faces
        if len(faces):
            cells = grid.face_cells[faces, 0]
            Gn = grid.face_normals[faces] @ self.gravity
            mean = self.K[cells, None] * g.traces(faces, 0) * Gn[:, None]
            psi = face_basis(grid, faces, 0, self.degree)
            w = self._quadrature_weights(faces)
            numpy.add.at(b, self.dofs(cells), -numpy.einsum('fq,fqa->fa', w * mean, psi))

        return b

    def fixed_rhs(self):
        '''Mobility independent part of the right-hand side: source, Dirichlet
        penalty and Neumann terms.'''
        if self._fixed_rhs is None:
            self._fixed_rhs = self.source_vector() + self.dirichlet_penalty_vector() + self.neumann_vector()

        return self._fixed_rhs

    def mobility_rhs(self, lambda_w, lambda_n):
        '''Part of the right-hand side that is linear in the mobilities: gravity
        and Dirichlet consistency terms.'''
        return self.gravity_vector(lambda_w, lambda_n) + self.dirichlet_consistency_vector(lambda_w + lambda_n)

    def assemble_rhs(self, lambda_w, lambda_n):
        return self.fixed_rhs() + self.mobility_rhs(lambda_w, lambda_n)

    def solve_system(self, A, b, solver='cg', tol=1e-10, max_iter=None):
        if solver == 'direct':
            x = solvers.direct_solve(A, b)
        else:
            x = solvers.cg_solve(A, b, tol=tol, max_iter=max_iter, nb=self.nb)

        return DgField(self.grid, x, self.degree)

    def solve_pressure(self, lambda_w, lambda_n, solver='cg', tol=1e-10, max_iter=None):
        '''High-dimensional pressure for the given phase mobilities.'''
        A = self.assemble_bilinear(lambda_w + lambda_n)
        b = self.assemble_rhs(lambda_w, lambda_n)
        return self.solve_system(A, b, solver, tol, max_iter)

    def energy_norm(self, e, lambda_bar, A=None):
        '''sqrt(a(e, e; lambda_bar)). A may hold a precomputed bilinear form at
        lambda_bar. e may be a DgField, a coefficient vector or a matrix whose
        columns are coefficient vectors.'''
        if A is None:
            A = self.assemble_bilinear(lambda_bar)

        x = e.vector if isinstance(e, DgField) else numpy.asarray(e, dtype=float)
        values = numpy.sum(x * (A @ x), axis=0)

        scale = numpy.sum(x * x, axis=0) * abs(A.coA).max() if A.nnz else 0
        if numpy.any(values < -1e-12 * numpy.maximum(scale, 1e-300)):
            raise AssemblyError('Negative energy %e: the bilinear form is not positive definite'
                                % numpy.min(values))

        return numpy.sqrt(numpy.maximum(values, 0))
