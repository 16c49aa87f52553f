import logging
import time

import numpy

from lrbmsflow import solvers
from lrbmsflow.CrsMatrix import CrsMatrix
from lrbmsflow.DgField import DgField
from lrbmsflow.ReducedModel import ReducedModel, global_basis, problem_checksum
from lrbmsflow.exceptions import ConfigurationError, ReducedSolveError

logger = logging.getLogger(__name__)

# Smallest entry of a training parameter
PARAMETER_MINIMUM = 1e-4


def sample_training_set(M, count, seed=None):
    '''Parameters that are uniformly distributed on the simplex scaled to
    entries of at least 1e-4 that sum to one. Returns an array of shape
    (count, M).'''
    if count < 1:
        raise ConfigurationError('The training set needs at least one parameter, got %d' % count)

    if M * PARAMETER_MINIMUM > 1:
        raise ConfigurationError('Too many mobility profiles for the parameter range: M=%d' % M)

    rng = numpy.random.default_rng(seed)
    w = rng.standard_exponential((count, M))
    w /= w.sum(axis=1, keepdims=True)
    return PARAMETER_MINIMUM + (1 - M * PARAMETER_MINIMUM) * w


def local_inner_products(grid, coarse, degree):
    '''L2 inner product on every coarse cell, acting on local coefficient vectors.'''
    weights = DgField(grid, degree=degree).mass_weights()
    nb = DgField(grid, degree=degree).nb
    products = []
    for E in range(coarse.ncells):
        w = weights[coarse.dofs(E, nb)]
        products.append(lambda x, y, w=w: numpy.dot(w * x, y))
    return products


def _as_columns(vectors, size):
    if len(vectors) == 0:
        return numpy.zeros((size, 0))

    return numpy.array(vectors).T


def add_unit_functions(local_bases, coarse, degree=1):
    '''Prepend the normalized indicator function of every coarse cell to its
    local basis and orthonormalize the remaining vectors against it.'''
    grid = coarse.fine
    nb = DgField(grid, degree=degree).nb
    products = local_inner_products(grid, coarse, degree)

    result = []
    for E in range(coarse.ncells):
        size = len(coarse.dofs(E, nb))
        indicator = numpy.zeros((size // nb, nb))
        indicator[:, 0] = 1.0
        indicator = indicator.ravel() / numpy.sqrt(coarse.area(E))

        vectors = [indicator]
        local = numpy.asarray(local_bases[E], dtype=float).reshape(size, -1)
        for v in local.T:
            w = solvers.gram_schmidt_step(v, vectors, products[E])
            if w is not solvers.REJECTED:
                vectors.append(w)

        result.append(_as_columns(vectors, size))

    return result


def pca_compress(snapshots, coarse, eps_pca=1e-6, degree=1):
    '''Local bases from the principal components of the restrictions of the
    raw snapshots to every coarse cell.

    The singular value decomposition is done in the L2 inner product of the
    coarse cell. The smallest number of modes is kept such that the discarded
    squared singular values sum to at most eps_pca^2 times their total. With
    eps_pca = 0 all modes above the numerical rank tolerance are kept.'''
    grid = coarse.fine
    nb = DgField(grid, degree=degree).nb
    weights = DgField(grid, degree=degree).mass_weights()
    snapshots = _as_columns(snapshots, grid.ncells * nb)

    result = []
    for E in range(coarse.ncells):
        dofs = coarse.dofs(E, nb)
        root = numpy.sqrt(weights[dofs])
        S = root[:, None] * snapshots[dofs]
        if S.shape[1] == 0 or not numpy.any(S):
            result.append(numpy.zeros((len(dofs), 0)))
            continue

        U, sigma, _ = solvers.thin_svd(S)
        energy = sigma ** 2
        rank = numpy.count_nonzero(sigma > max(S.shape) * numpy.finfo(float).eps * sigma[0])
        if eps_pca > 0:
            # tail[r] is the energy of the modes r, r + 1, ...
            tail = numpy.concatenate([numpy.cumsum(energy[::-1])[::-1], [0.0]])
            r = int(numpy.argmax(tail <= eps_pca ** 2 * energy.sum()))
            rank = min(rank, max(r, 1))

        result.append(U[:, :rank] / root[:, None])

    return result


def precompute_offline(local_bases, discretization, mobility, coarse, report=None):
    '''Project the affine parts of the fine pressure discretization onto the
    reduced basis.'''
    Phi = global_basis(local_bases, coarse, discretization.nb)

    def project(A):
        return numpy.asarray(A.project(Phi))

    M = mobility.M
    N = Phi.shape[1]
    b = numpy.zeros((M, N, N))
    d = numpy.zeros((M, N))
    for q in range(M):
        lambda_w, lambda_n, lambda_t = mobility.profile(q)
        b[q] = project(discretization.diffusion_matrix(lambda_t))
        d[q] = Phi.T @ discretization.mobility_rhs(lambda_w, lambda_n)

    c = project(discretization.penalty_matrix())
    e = Phi.T @ discretization.fixed_rhs()

    return ReducedModel(coarse, mobility, local_bases, b, c, d, e,
                        problem_checksum(discretization, coarse), report)


class AffineOperators:
    '''Fine pressure operators for parameters mu, assembled as
    C + sum_q mu_q B_q and r + sum_q mu_q r_q from the mobility profiles.'''

    def __init__(self, discretization, mobility):
        self.discretization = discretization
        self.mobility = mobility

        self.C = discretization.penalty_matrix()
        self.r = discretization.fixed_rhs()
        self.B = []
        self.R = []
        for q in range(mobility.M):
            lambda_w, lambda_n, lambda_t = mobility.profile(q)
            self.B.append(discretization.diffusion_matrix(lambda_t))
            self.R.append(discretization.mobility_rhs(lambda_w, lambda_n))

    def matrix(self, mu):
        A = self.C
        for mu_q, B_q in zip(mu, self.B):
            A = A + CrsMatrix.from_scipy(B_q.to_scipy() * mu_q)
        return A

    def rhs(self, mu):
        return self.r + numpy.asarray(mu) @ numpy.array(self.R)


class BasisConstruction:
    '''Greedy construction of localized reduced bases.

    Parameters
    ----------
    discretization : PressureDiscretization
    mobility : MobilityBasis
    coarse : CoarseGrid
    parameters : dict
        'Greedy Tolerance', 'Maximum Basis Size', 'Training Solver',
        'Convergence Tolerance', 'Maximum Iterations', 'Use PCA',
        'PCA Tolerance', 'Unit Basis Functions' and 'Verbose'.

    '''

    def __init__(self, discretization, mobility, coarse, parameters=None):
        self.discretization = discretization
        self.mobility = mobility
        self.coarse = coarse
        self.parameters = parameters if parameters is not None else {}

        self.degree = discretization.degree
        self.nb = discretization.nb
        self.products = local_inner_products(discretization.grid, coarse, self.degree)
        self.operators = AffineOperators(discretization, mobility)

        mu_bar = numpy.full(mobility.M, 1.0 / mobility.M)
        self.energy_matrix = self.operators.matrix(mu_bar)

        self.timings = {}

    def solve_fine(self, mu):
        solver = self.parameters.get('Training Solver', 'cg')
        tol = self.parameters.get('Convergence Tolerance', 1e-10)
        maxit = self.parameters.get('Maximum Iterations', None)
        x = self.discretization.solve_system(self.operators.matrix(mu), self.operators.rhs(mu),
                                             solver, tol, maxit)
        return x.vector

    def training_snapshots(self, training_set):
        '''Fine solutions for all training parameters as columns.'''
        start = time.perf_counter()
        P = numpy.array([self.solve_fine(mu) for mu in training_set]).T
        self.timings['training'] = time.perf_counter() - start
        logger.info('Computed %d fine training solutions in %.2f s', len(training_set), self.timings['training'])
        return P

    def errors(self, model, training_set, P):
        '''Energy norm errors of the reduced solutions of all training parameters.'''
        if model is None or model.N == 0:
            return self.discretization.energy_norm(P, None, A=self.energy_matrix)

        X = numpy.zeros((model.N, len(training_set)))
        failed = numpy.zeros(len(training_set), dtype=bool)
        for i, mu in enumerate(training_set):
            try:
                X[:, i] = model.reduced_solve(mu)
            except ReducedSolveError as e:
                logger.warning('%s, setting its error to infinity', e)
                failed[i] = True

        errors = self.discretization.energy_norm(P - model.Phi @ X, None, A=self.energy_matrix)
        errors[failed] = numpy.inf
        return errors

    def extend(self, local_bases, snapshot):
        '''Orthonormalize the restrictions of a snapshot into the local bases.
        Returns the number of added vectors.'''
        added = 0
        for E in range(self.coarse.ncells):
            v = snapshot[self.coarse.dofs(E, self.nb)]
            w = solvers.gram_schmidt_step(v, local_bases[E], self.products[E])
            if w is not solvers.REJECTED:
                local_bases[E].append(w)
                added += 1
        return added

    def greedy(self, training_set, P=None):
        '''Greedy basis construction. Returns the local bases, the selected
        snapshots, the error history and the selected training indices.'''
        verbose = self.parameters.get('Verbose', False)
        eps_tol = self.parameters.get('Greedy Tolerance', 1e-4)
        N_max = self.parameters.get('Maximum Basis Size', 500)

        if len(training_set) == 0:
            raise ConfigurationError('The training set is empty')

        if P is None:
            P = self.training_snapshots(training_set)

        start = time.perf_counter()

        local_bases = [[] for _ in range(self.coarse.ncells)]
        if self.parameters.get('Unit Basis Functions', False):
            local_bases = [list(v.T) for v in add_unit_functions(local_bases, self.coarse, self.degree)]

        snapshots = []
        history = []
        selected = []
        model = self._model(local_bases) if any(local_bases) else None

        while True:
            errors = self.errors(model, training_set, P)
            i = int(numpy.argmax(errors))
            history.append(float(errors[i]))

            size = sum(len(v) for v in local_bases)
            if verbose:
                logger.info('Greedy iteration %d: N=%d, maximum error %e at parameter %d',
                            len(history) - 1, size, errors[i], i)

            if errors[i] <= eps_tol:
                logger.info('Greedy converged with %d snapshots, N=%d', len(snapshots), size)
                break

            if i in selected:
                logger.warning('Greedy selected parameter %d twice, stopping with error %e', i, errors[i])
                break

            if size >= N_max:
                logger.warning('Greedy reached the maximum basis size %d with error %e', N_max, errors[i])
                break

            if not self.extend(local_bases, P[:, i]):
                logger.warning('Snapshot %d did not extend any local basis, stopping', i)
                break

            selected.append(i)
            snapshots.append(P[:, i])
            model = self._model(local_bases)

        self.timings['greedy'] = time.perf_counter() - start

        sizes = [len(self.coarse.dofs(E, self.nb)) for E in range(self.coarse.ncells)]
        return ([_as_columns(v, n) for v, n in zip(local_bases, sizes)],
                snapshots, history, selected)

    def _model(self, local_bases):
        sizes = [len(self.coarse.dofs(E, self.nb)) for E in range(self.coarse.ncells)]
        return precompute_offline([_as_columns(v, n) for v, n in zip(local_bases, sizes)],
                                  self.discretization, self.mobility, self.coarse)

    def build(self, training_set):
        '''Complete offline phase: greedy, optional PCA and unit functions,
        and the reduced operators. Returns the ReducedModel.'''
        use_pca = self.parameters.get('Use PCA', False)
        unit = self.parameters.get('Unit Basis Functions', False)

        P = self.training_snapshots(training_set)
        local_bases, snapshots, history, selected = self.greedy(training_set, P)
        greedy_sizes = [v.shape[1] for v in local_bases]

        if use_pca and snapshots:
            start = time.perf_counter()
            local_bases = pca_compress(snapshots, self.coarse, self.parameters.get('PCA Tolerance', 1e-6),
                                       self.degree)
            if unit:
                local_bases = add_unit_functions(local_bases, self.coarse, self.degree)
            self.timings['pca'] = time.perf_counter() - start

        start = time.perf_counter()
        report = {
            'coarse': [self.coarse.Nx, self.coarse.Ny],
            'snapshots': len(snapshots),
            'selected': selected,
            'error_history': history,
            'local_sizes_greedy': greedy_sizes,
            'local_sizes': [v.shape[1] for v in local_bases],
            'N': int(sum(v.shape[1] for v in local_bases)),
            'use_pca': bool(use_pca),
            'unit_basis': bool(unit),
        }
        model = precompute_offline(local_bases, self.discretization, self.mobility, self.coarse, report)
        self.timings['operators'] = time.perf_counter() - start

        report['timings'] = dict(self.timings)
        logger.info('Built a reduced model with %d snapshots and N=%d', len(snapshots), model.N)
        return model


def greedy_build(discretization, mobility, coarse, training_set, eps_tol, N_max=500, parameters=None):
    parameters = dict(parameters or {})
    parameters['Greedy Tolerance'] = eps_tol
    parameters['Maximum Basis Size'] = N_max
    return BasisConstruction(discretization, mobility, coarse, parameters).greedy(training_set)
