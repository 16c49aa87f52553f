import logging

import numpy

from scipy import sparse
from scipy.sparse import csgraph

from lrbmsflow import solvers
from lrbmsflow.CrsMatrix import CrsMatrix
from lrbmsflow.DgField import CELL_POINTS, CELL_WEIGHTS, GAUSS_WEIGHTS, DgField, basis_gradients, basis_values, \
    block_size, face_basis
from lrbmsflow.exceptions import DegenerateFlowError

logger = logging.getLogger(__name__)


class TimeOfFlight:
    '''Upwind DG discretization of the time-of-flight equation u . grad tau = phi
    with tau = 0 on the inflow boundary.

    Every cell only depends on its upstream neighbors, so after permuting the
    cells along the flow the system is block lower triangular. Cycles in the
    flow show up as strongly connected components of the cell dependency
    graph and are solved together.

    Parameters
    ----------
    u : FaceFluxField
    phi : float or array_like
        Porosity, constant or per fine cell.
    degree : int

    '''

    def __init__(self, u, phi, degree=1):
        self.u = u
        self.grid = u.grid
        self.degree = degree
        self.nb = block_size(degree)
        self.phi = numpy.broadcast_to(numpy.asarray(phi, dtype=float), (self.grid.ncells,)).copy()

        self._check_flow()

        self._matrix = None
        self._components = None

    def _check_flow(self):
        if not numpy.any(self.u.values):
            raise DegenerateFlowError('The time-of-flight is undefined for a zero velocity field')

        outflow = self.u.outward().max(axis=1)
        stagnant = numpy.flatnonzero(outflow <= 0)
        if len(stagnant):
            raise DegenerateFlowError('%d cells have no outflow, for instance cell %d'
                                      % (len(stagnant), stagnant[0]))

    def dofs(self, cells):
        cells = numpy.asarray(cells)
        return cells[..., None] * self.nb + numpy.arange(self.nb)

    def matrix(self):
        if self._matrix is not None:
            return self._matrix

        grid = self.grid
        nb = self.nb
        cells = numpy.arange(grid.ncells)
        A = CrsMatrix(m=grid.ncells * nb, n=grid.ncells * nb)

        # Volume term -int tau u . grad psi
        psi = basis_values(self.degree, CELL_POINTS)
        gradients = basis_gradients(grid, self.degree)
        U = self.u.quadrature_velocity()
        V = grid.cell_area * numpy.einsum('q,qb,cqk,ak->cab', CELL_WEIGHTS, psi, U, gradients)
        A.add_blocks(self.dofs(cells), self.dofs(cells), -V)

        # Face terms int tau^up (u . n) psi
        un = self.u.values
        w = GAUSS_WEIGHTS[None, :] * grid.face_lengths[:, None]
        faces = numpy.arange(grid.nfaces)
        psi1 = face_basis(grid, faces, 0, self.degree)

        out1 = un > 0
        f = faces[out1]
        rows = self.dofs(grid.face_cells[f, 0])
        A.add_blocks(rows, rows, numpy.einsum('fq,fqa,fqb->fab', w[f] * un[f, None], psi1[f], psi1[f]))

        interior = grid.interior_faces
        psi2 = numpy.zeros_like(psi1)
        psi2[interior] = face_basis(grid, interior, 1, self.degree)

        # Flow from the first into the second cell
        f = interior[un[interior] > 0]
        rows = self.dofs(grid.face_cells[f, 1])
        cols = self.dofs(grid.face_cells[f, 0])
        A.add_blocks(rows, cols, numpy.einsum('fq,fqa,fqb->fab', -w[f] * un[f, None], psi2[f], psi1[f]))

        # Flow from the second into the first cell
        f = interior[un[interior] < 0]
        rows = self.dofs(grid.face_cells[f, 1])
        A.add_blocks(rows, rows, numpy.einsum('fq,fqa,fqb->fab', -w[f] * un[f, None], psi2[f], psi2[f]))
        rows = self.dofs(grid.face_cells[f, 0])
        cols = self.dofs(grid.face_cells[f, 1])
        A.add_blocks(rows, cols, numpy.einsum('fq,fqa,fqb->fab', w[f] * un[f, None], psi1[f], psi2[f]))

        diagonal = self.dofs(cells)
        A.add_blocks(diagonal, diagonal, numpy.zeros((grid.ncells, nb, nb)))

        A.assemble()
        self._matrix = A
        return A

    def rhs(self):
        b = numpy.zeros((self.grid.ncells, self.nb))
        b[:, 0] = self.phi * self.grid.cell_area
        return b.ravel()

    def dependency_graph(self):
        '''Sparse matrix with a nonzero entry (i, j) if cell i depends on the
        upstream cell j.'''
        grid = self.grid
        un = self.u.values
        faces = grid.interior_faces
        c = grid.face_cells[faces]
        forward = un[faces] > 0
        backward = un[faces] < 0

        rows = numpy.concatenate([c[forward, 1], c[backward, 0]])
        cols = numpy.concatenate([c[forward, 0], c[backward, 1]])
        return sparse.csr_matrix((numpy.ones(len(rows)), (rows, cols)), shape=(grid.ncells, grid.ncells))

    def components(self):
        '''Strongly connected components of the dependency graph grouped in
        levels. Components in the same level do not depend on each other and
        only depend on components in earlier levels.

        Returns a list of levels, each a list of arrays of cells.'''
        if self._components is not None:
            return self._components

        graph = self.dependency_graph()
        count, labels = csgraph.connected_components(graph, directed=True, connection='strong')

        # Edges of the condensed graph from upstream to downstream component
        coo = graph.tocoo()
        upstream = labels[coo.col]
        downstream = labels[coo.row]
        between = upstream != downstream
        condensed = sparse.csr_matrix((numpy.ones(numpy.count_nonzero(between)),
                                       (upstream[between], downstream[between])), shape=(count, count))
        condensed.sum_duplicates()
        condensed.data[:] = 1

        indegree = numpy.asarray(condensed.sum(axis=0)).ravel()
        order = numpy.argsort(labels, kind='stable')
        members = numpy.split(order, numpy.cumsum(numpy.bincount(labels, minlength=count))[:-1])

        levels = []
        frontier = numpy.flatnonzero(indegree == 0)
        visited = 0
        while len(frontier):
            levels.append([members[k] for k in frontier])
            visited += len(frontier)

            indegree -= numpy.asarray(condensed[frontier].sum(axis=0)).ravel().astype(indegree.dtype)
            indegree[frontier] = -1
            frontier = numpy.flatnonzero(indegree == 0)

        assert visited == count

        largest = max(len(m) for m in members)
        logger.debug('Time-of-flight ordering: %d components in %d levels, largest component has %d cells',
                     count, len(levels), largest)

        self._components = levels
        return levels

    def solve_monolithic(self):
        '''Solve the whole system with a sparse direct solver.'''
        x = solvers.direct_solve(self.matrix(), self.rhs())
        return DgField(self.grid, x, self.degree)

    def solve_reordered(self):
        '''Solve the system cell by cell in flow order, using dense solves for
        the diagonal blocks and for strongly connected components.'''
        A = self.matrix()
        S = A.to_scipy()
        blocks = A.diagonal_blocks(self.nb)
        b = self.rhs()
        tau = numpy.zeros(len(b))

        for level in self.components():
            singles = numpy.array([c[0] for c in level if len(c) == 1], dtype=int)
            if len(singles):
                rows = self.dofs(singles).ravel()
                r = (b[rows] - S[rows] @ tau).reshape(-1, self.nb, 1)
                try:
                    tau[rows] = numpy.linalg.solve(blocks[singles], r).ravel()
                except numpy.linalg.LinAlgError as e:
                    raise DegenerateFlowError('Singular time-of-flight block: %s' % e) from e

            for cells in level:
                if len(cells) == 1:
                    continue

                rows = self.dofs(cells).ravel()
                r = b[rows] - S[rows] @ tau
                tau[rows] = solvers.dense_solve(S[rows][:, rows].toarray(), r)

        return DgField(self.grid, tau, self.degree)


def solve_tof(u, phi, degree=1, reordered=True):
    '''Time-of-flight of the velocity u.'''
    tof = TimeOfFlight(u, phi, degree)
    if reordered:
        return tof.solve_reordered()

    return tof.solve_monolithic()
