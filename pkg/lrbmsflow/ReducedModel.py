import hashlib
import json
import logging

import numpy

from scipy import linalg as dense
from scipy import sparse

from lrbmsflow import solvers
from lrbmsflow.CoarseGrid import CoarseGrid
from lrbmsflow.DgField import DgField, block_size
from lrbmsflow.MobilityBasis import MobilityBasis
from lrbmsflow.exceptions import ConfigurationError, FieldIOError, ReducedSolveError, SingularMatrixError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def problem_checksum(discretization, coarse):
    '''Digest of everything the offline operators depend on: the fine grid,
    the permeability, the fluids, the sources, the penalty and the coarse
    partition.'''
    digest = hashlib.sha256()
    digest.update(discretization.grid.checksum().encode())
    digest.update(numpy.ascontiguousarray(discretization.K, dtype='<f8').tobytes())
    fluids = discretization.fluids
    physics = [discretization.c_base, fluids.mu_w, fluids.mu_n, fluids.rho_w, fluids.rho_n]
    physics.extend(discretization.gravity)
    digest.update(numpy.array(physics, dtype='<f8').tobytes())
    digest.update(numpy.ascontiguousarray(discretization.q1, dtype='<f8').tobytes())
    digest.update(('%dx%d:%d' % (coarse.Nx, coarse.Ny, discretization.degree)).encode())
    return digest.hexdigest()


def global_basis(local_bases, coarse, nb):
    '''Sparse matrix whose columns are the local basis vectors of all coarse
    cells extended by zero, ordered by coarse cell.'''
    rows = []
    cols = []
    vals = []
    offset = 0
    for E, local in enumerate(local_bases):
        local = numpy.asarray(local, dtype=float).reshape(len(coarse.dofs(E, nb)), -1)
        n = local.shape[1]
        if n == 0:
            continue

        dofs = coarse.dofs(E, nb)
        rows.append(numpy.repeat(dofs, n))
        cols.append(numpy.tile(numpy.arange(offset, offset + n), len(dofs)))
        vals.append(local.ravel())
        offset += n

    ndofs = coarse.fine.ncells * nb
    if offset == 0:
        return sparse.csc_matrix((ndofs, 0))

    return sparse.csc_matrix((numpy.concatenate(vals), (numpy.concatenate(rows), numpy.concatenate(cols))),
                             shape=(ndofs, offset))


class ReducedModel:
    '''Localized reduced model of the pressure equation.

    For mobility coefficients theta the reduced system is

        (c + sum_q theta_q b_q) p_N = e + sum_q theta_q d_q

    and the fine pressure is approximated by Phi p_N, where the columns of
    Phi are the local basis functions of all coarse cells.

    Parameters
    ----------
    coarse : CoarseGrid
    mobility : MobilityBasis
    local_bases : list of ndarray
        Basis vectors of every coarse cell as columns, in the local degrees
        of freedom of the coarse cell.
    b, c, d, e : ndarray
        Reduced operators, shapes (M, N, N), (N, N), (M, N) and (N,).
    checksum : str
        Digest of the problem the model was built for.
    report : dict, optional
        Bookkeeping of the offline phase.

    '''

    def __init__(self, coarse, mobility, local_bases, b, c, d, e, checksum, report=None):
        self.coarse = coarse
        self.grid = coarse.fine
        self.mobility = mobility
        self.degree = mobility.degree
        self.nb = block_size(self.degree)
        self.local_bases = [numpy.asarray(v, dtype=float).reshape(len(coarse.dofs(E, self.nb)), -1)
                            for E, v in enumerate(local_bases)]

        self.b = numpy.asarray(b, dtype=float)
        self.c = numpy.asarray(c, dtype=float)
        self.d = numpy.asarray(d, dtype=float)
        self.e = numpy.asarray(e, dtype=float)
        self.checksum = checksum
        self.report = report if report is not None else {}

        self.Phi = global_basis(self.local_bases, coarse, self.nb)

    @property
    def N(self):
        return self.Phi.shape[1]

    @property
    def M(self):
        return self.mobility.M

    @property
    def local_sizes(self):
        return [v.shape[1] for v in self.local_bases]

    def system(self, theta):
        theta = numpy.asarray(theta, dtype=float)
        A = self.c + numpy.tensordot(theta, self.b, axes=1)
        f = self.e + theta @ self.d
        return A, f

    def reduced_solve(self, theta, method='cholesky'):
        '''Solve the reduced system. With method 'cholesky' an indefinite
        matrix is an error, with 'lu' only a singular one.'''
        A, f = self.system(theta)
        if self.N == 0:
            return numpy.zeros(0)

        if method == 'lu':
            try:
                return solvers.dense_solve(A, f)
            except SingularMatrixError as e:
                raise ReducedSolveError('Reduced system is singular for theta=%s' % numpy.array2string(
                    numpy.asarray(theta), precision=4), theta=theta) from e

        try:
            factor = dense.cho_factor(A)
        except dense.LinAlgError as e:
            raise ReducedSolveError('Reduced system is not positive definite for theta=%s' % numpy.array2string(
                numpy.asarray(theta), precision=4), theta=theta) from e

        return dense.cho_solve(factor, f)

    def reconstruct(self, p_N):
        p_N = numpy.asarray(p_N, dtype=float)
        if len(p_N) != self.N:
            raise ConfigurationError('Expected %d reduced coefficients, got %d' % (self.N, len(p_N)))

        return DgField(self.grid, self.Phi @ p_N, self.degree)

    def project(self, p):
        '''Coefficients of the L2 projection of p onto the span of the basis.'''
        weights = p.mass_weights()
        return self.Phi.T @ (weights * p.vector)

    def save(self, path):
        '''Write the model to a compressed npz container.'''
        mobility = self.mobility
        data = {
            'version': numpy.array(FORMAT_VERSION),
            'checksum': numpy.array(self.checksum),
            'coarse': numpy.array([self.coarse.Nx, self.coarse.Ny]),
            'degree': numpy.array(self.degree),
            'local_sizes': numpy.array(self.local_sizes, dtype=int),
            'basis': numpy.concatenate([v.T.ravel() for v in self.local_bases]) if self.N else numpy.zeros(0),
            'b': self.b, 'c': self.c, 'd': self.d, 'e': self.e,
            'wetting': mobility.wetting,
            'nonwetting': mobility.nonwetting,
            'viscosities': numpy.array([numpy.nan if mobility.mu_w is None else mobility.mu_w,
                                        numpy.nan if mobility.mu_n is None else mobility.mu_n]),
            'report': numpy.array(json.dumps(self.report, sort_keys=True)),
        }
        try:
            with open(path, 'wb') as f:
                numpy.savez_compressed(f, **data)
        except OSError as e:
            raise FieldIOError('Could not write the reduced model to %s: %s' % (path, e)) from e

        logger.info('Wrote a reduced model with N=%d to %s', self.N, path)

    @classmethod
    def load(cls, path, grid, checksum=None):
        '''Read a model written by save() for the given fine grid. If checksum
        is given it has to match the stored one.'''
        try:
            with numpy.load(path) as f:
                data = {key: f[key] for key in f.files}
        except (OSError, ValueError) as e:
            raise FieldIOError('Could not read a reduced model from %s: %s' % (path, e)) from e

        if int(data['version']) != FORMAT_VERSION:
            raise ConfigurationError('Unsupported reduced model version %d' % int(data['version']))

        if checksum is not None and str(data['checksum']) != checksum:
            raise ConfigurationError('The reduced model in %s was built for a different problem' % path)

        Nx, Ny = (int(v) for v in data['coarse'])
        coarse = CoarseGrid(grid, Nx, Ny)
        degree = int(data['degree'])
        nb = block_size(degree)

        local_bases = []
        offset = 0
        for E, n in enumerate(data['local_sizes']):
            size = len(coarse.dofs(E, nb))
            local_bases.append(data['basis'][offset:offset + n * size].reshape(n, size).T)
            offset += n * size

        mu_w, mu_n = (None if numpy.isnan(v) else float(v) for v in data['viscosities'])
        mobility = MobilityBasis(grid, data['wetting'], data['nonwetting'], degree, mu_w, mu_n)

        return cls(coarse, mobility, local_bases, data['b'], data['c'], data['d'], data['e'],
                   str(data['checksum']), json.loads(str(data['report'])))

    def __repr__(self):
        return 'ReducedModel(N=%d, M=%d, %r)' % (self.N, self.M, self.coarse)


def reduced_solve(model, theta):
    return model.reduced_solve(theta)


def reconstruct(model, p_N):
    return model.reconstruct(p_N)
