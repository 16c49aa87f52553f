import numpy

from lrbmsflow.exceptions import DomainError

# Two-point Gauss rule on the reference interval [-1/2, 1/2]
GAUSS_POINTS = numpy.array([-0.5, 0.5]) / numpy.sqrt(3.0)
GAUSS_WEIGHTS = numpy.array([0.5, 0.5])

# Tensor rule on the reference cell [-1/2, 1/2]^2
CELL_POINTS = numpy.array([[xi, eta] for eta in GAUSS_POINTS for xi in GAUSS_POINTS])
CELL_WEIGHTS = numpy.full(4, 0.25)

CORNERS = numpy.array([[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]])

# Integrals of the squared basis functions over the reference cell
BASIS_MASS = numpy.array([1.0, 1.0 / 12.0, 1.0 / 12.0])


def block_size(degree):
    if degree not in (0, 1):
        raise DomainError('Only polynomial degrees 0 and 1 are supported, got %s' % degree)

    return 1 if degree == 0 else 3


def basis_values(degree, local):
    '''Values of the scaled monomials 1, xi, eta at local coordinates of
    shape (..., 2). Returns an array of shape (..., block size).'''
    local = numpy.asarray(local, dtype=float)
    if degree == 0:
        return numpy.ones(local.shape[:-1] + (1,))

    return numpy.concatenate([numpy.ones(local.shape[:-1] + (1,)), local], axis=-1)


def basis_gradients(grid, degree):
    '''Constant physical gradients of the local basis, shape (block size, 2).'''
    if degree == 0:
        return numpy.zeros((1, 2))

    return numpy.array([[0.0, 0.0], [1.0 / grid.hx, 0.0], [0.0, 1.0 / grid.hy]])


class DgField:
    '''Discontinuous piecewise polynomial on a FineGrid.

    On cell T the function is c0 + c1 (x - b_x) / hx + c2 (y - b_y) / hy for
    degree 1 and c0 for degree 0, with b the barycenter of T. Since the basis
    is centered, c0 is the cell mean and the local mass matrix is diagonal.

    Parameters
    ----------
    grid : FineGrid
    coefficients : array_like, optional
        Either a flat vector of length ncells * block size or an array of
        shape (ncells, block size). Zero if omitted.
    degree : int
        Polynomial degree, 0 or 1.

    '''

    def __init__(self, grid, coefficients=None, degree=1):
        self.grid = grid
        self.degree = degree
        self.nb = block_size(degree)

        if coefficients is None:
            coefficients = numpy.zeros((grid.ncells, self.nb))

        coefficients = numpy.array(coefficients, dtype=float)
        if coefficients.size != grid.ncells * self.nb:
            raise DomainError('Expected %d coefficients, got %d' % (grid.ncells * self.nb, coefficients.size))

        self.coefficients = coefficients.reshape(grid.ncells, self.nb)

    @classmethod
    def constant(cls, grid, value, degree=1):
        f = cls(grid, degree=degree)
        f.coefficients[:, 0] = value
        return f

    @classmethod
    def from_cell_values(cls, grid, values, degree=1):
        f = cls(grid, degree=degree)
        f.coefficients[:, 0] = values
        return f

    def copy(self):
        return DgField(self.grid, self.coefficients.copy(), self.degree)

    @property
    def vector(self):
        return self.coefficients.ravel()

    @property
    def means(self):
        return self.coefficients[:, 0]

    @property
    def slopes(self):
        '''Gradient of the field per cell, shape (ncells, 2).'''
        if self.degree == 0:
            return numpy.zeros((self.grid.ncells, 2))

        return self.coefficients[:, 1:] / numpy.array([self.grid.hx, self.grid.hy])

    def to_degree(self, degree):
        f = DgField(self.grid, degree=degree)
        n = min(self.nb, f.nb)
        f.coefficients[:, :n] = self.coefficients[:, :n]
        return f

    def local_values(self, cells, local):
        '''Values in the given cells at local coordinates; local has shape
        (len(cells), ..., 2).'''
        psi = basis_values(self.degree, local)
        coefficients = self.coefficients[cells]
        coefficients = coefficients.reshape(coefficients.shape[:1] + (1,) * (psi.ndim - 2) + (self.nb,))
        return numpy.sum(psi * coefficients, axis=-1)

    def evaluate(self, cell, point):
        local = self.grid.local_coordinates(cell, numpy.asarray(point, dtype=float))
        if numpy.any(numpy.abs(local) > 0.5 + 1e-12):
            raise DomainError('Point %s is not inside cell %d' % (tuple(point), cell))

        return float(basis_values(self.degree, local) @ self.coefficients[cell])

    def quadrature_values(self):
        '''Values at the four Gauss points of every cell, shape (ncells, 4).'''
        return self.coefficients @ basis_values(self.degree, CELL_POINTS).T

    def corner_values(self):
        return self.coefficients @ basis_values(self.degree, CORNERS).T

    def traces(self, faces, side):
        '''Values at the two Gauss points of the faces, seen from the adjacent
        cell with index side (0 or 1). Returns an array of shape (len(faces), 2).'''
        grid = self.grid
        cells = grid.face_cells[faces, side]
        points = grid.face_quadrature_points(faces)
        local = grid.local_coordinates(cells[:, None], points)
        return self.local_values(cells, local)

    def mass_weights(self):
        '''Diagonal of the mass matrix, one entry per coefficient.'''
        return numpy.tile(self.grid.cell_area * BASIS_MASS[:self.nb], self.grid.ncells)

    def __add__(self, other):
        if isinstance(other, DgField):
            degree = max(self.degree, other.degree)
            a = self.to_degree(degree)
            a.coefficients += other.to_degree(degree).coefficients
            return a

        a = self.copy()
        a.coefficients[:, 0] += other
        return a

    __radd__ = __add__

    def __neg__(self):
        return DgField(self.grid, -self.coefficients, self.degree)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, x):
        return DgField(self.grid, self.coefficients * x, self.degree)

    __rmul__ = __mul__

    def __truediv__(self, x):
        return self * (1 / x)

    def __repr__(self):
        return 'DgField(degree=%d, ncells=%d)' % (self.degree, self.grid.ncells)


class FaceWeights:
    '''Weights of the weighted means on all faces, computed from the cellwise
    constant permeability K.

    tau1 = a1 / (a1 + a2) and tau2 = a2 / (a1 + a2) with a_l the value of K in
    the adjacent cell l. On boundary faces tau1 = 1 and a2 = a1.'''

    def __init__(self, grid, K):
        K = numpy.asarray(K, dtype=float).ravel()
        cells = grid.face_cells

        self.interior = grid.interior
        self.a1 = K[cells[:, 0]]
        self.a2 = numpy.where(grid.interior, K[numpy.maximum(cells[:, 1], 0)], self.a1)

        self.tau1 = numpy.where(grid.interior, self.a1 / (self.a1 + self.a2), 1.0)
        self.tau2 = 1.0 - self.tau1

    @property
    def harmonic(self):
        return 2 * self.a1 * self.a2 / (self.a1 + self.a2)

    @property
    def flux_weights(self):
        '''Weights of the mean of diffusive fluxes K grad v . n. Each side is
        weighted with the diffusivity of the opposite side, so that both
        weighted diffusivities equal half the harmonic mean.'''
        omega1 = numpy.where(self.interior, self.tau2, 1.0)
        return omega1, 1.0 - omega1


def jump_and_mean(f, face, weights, point):
    '''Jump and weighted mean of f at a point on an interior face.'''
    grid = f.grid
    if not grid.interior[face]:
        raise DomainError('Face %d is a boundary face' % face)

    c1, c2 = grid.face_cells[face]
    trace1 = f.evaluate(c1, point)
    trace2 = f.evaluate(c2, point)
    return (trace1 - trace2,
            weights.tau1[face] * trace1 + weights.tau2[face] * trace2)


def l2_project(grid, g, degree=1):
    '''L2 projection of a pointwise function g(x, y) onto the DG space, using
    the tensor two-point Gauss rule on every cell.'''
    nb = block_size(degree)
    points = grid.cell_centers[:, None, :] + CELL_POINTS[None, :, :] * numpy.array([grid.hx, grid.hy])
    values = numpy.asarray(g(points[..., 0], points[..., 1]), dtype=float)
    values = numpy.broadcast_to(values, points.shape[:2])

    psi = basis_values(degree, CELL_POINTS)
    moments = (values * CELL_WEIGHTS) @ psi
    return DgField(grid, moments / BASIS_MASS[:nb], degree)


def broken_norms(f):
    '''L2 norm and broken H1 norm of a DG function.'''
    weights = f.mass_weights()
    l2 = numpy.dot(weights * f.vector, f.vector)
    gradient = f.grid.cell_area * numpy.sum(f.slopes ** 2)
    return numpy.sqrt(l2), numpy.sqrt(l2 + gradient)


def inner(f, g):
    '''L2 inner product of two DG functions.'''
    degree = max(f.degree, g.degree)
    f = f.to_degree(degree)
    g = g.to_degree(degree)
    return numpy.dot(f.mass_weights() * f.vector, g.vector)


def face_basis(grid, faces, side, degree):
    '''Basis values at the face Gauss points seen from adjacent cell side,
    shape (len(faces), 2, block size).'''
    cells = grid.face_cells[faces, side]
    local = grid.local_coordinates(cells[:, None], grid.face_quadrature_points(faces))
    return basis_values(degree, local)
