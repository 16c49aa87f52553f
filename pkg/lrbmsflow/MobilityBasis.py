import logging

import numpy

from lrbmsflow import solvers
from lrbmsflow.DgField import DgField
from lrbmsflow.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


def clamp_saturation(s):
    '''Limit a saturation to [0, 1]: the cell means are clipped and the slopes
    are scaled down until all corner values lie in [0, 1].'''
    s = s.copy()
    c = s.coefficients
    c[:, 0] = numpy.clip(c[:, 0], 0.0, 1.0)
    if s.degree > 0:
        deviation = 0.5 * (numpy.abs(c[:, 1]) + numpy.abs(c[:, 2]))
        room = numpy.minimum(c[:, 0], 1.0 - c[:, 0])
        scale = numpy.where(deviation > room, room / numpy.where(deviation > 0, deviation, 1.0), 1.0)
        c[:, 1:] *= scale[:, None]
    return s


def linear_mobilities(s, mu_w, mu_n):
    '''Wetting, non-wetting and total mobility for linear relative
    permeabilities k_rw(s) = s and k_rn(s) = 1 - s.'''
    s = clamp_saturation(s)
    lambda_w = s / mu_w
    lambda_n = (1.0 - s) / mu_n
    return lambda_w, lambda_n, lambda_w + lambda_n


class MobilityBasis:
    '''M saturation independent mobility profiles. The parametrized mobilities
    are sum_q theta_q lambda_{w,q} and sum_q theta_q lambda_{n,q}, with the
    same theta for both phases.

    The least-squares fit of the total mobility is done in the L2 norm of the
    DG functions, which is the Euclidean norm of the coefficients weighted with
    the square root of the (diagonal) mass matrix.

    Parameters
    ----------
    grid : FineGrid
    wetting, nonwetting : ndarray
        Coefficients of the profiles, shape (M, ncells * block size).
    degree : int
    mu_w, mu_n : float, optional
        Viscosities used to evaluate the mobilities of a saturation in fits.

    '''

    def __init__(self, grid, wetting, nonwetting, degree=1, mu_w=None, mu_n=None):
        self.grid = grid
        self.mu_w = mu_w
        self.mu_n = mu_n
        self.degree = degree
        self.wetting = numpy.array(wetting, dtype=float)
        self.nonwetting = numpy.array(nonwetting, dtype=float)
        self.total = self.wetting + self.nonwetting
        self.M = self.total.shape[0]

        if self.M < 2:
            raise ConfigurationError('At least two mobility profiles are needed, got M=%d' % self.M)

        self._sqrt_mass = numpy.sqrt(DgField(grid, degree=degree).mass_weights())
        self.fit_matrix = (self.total * self._sqrt_mass).T
        self.gram = self.fit_matrix.T @ self.fit_matrix

        self.rank_deficient = numpy.linalg.matrix_rank(self.gram) < self.M
        if self.rank_deficient:
            logger.warning('The %d mobility profiles are linearly dependent', self.M)

    def profile(self, q):
        '''Wetting, non-wetting and total mobility of profile q (0-based).'''
        return (DgField(self.grid, self.wetting[q], self.degree),
                DgField(self.grid, self.nonwetting[q], self.degree),
                DgField(self.grid, self.total[q], self.degree))

    def fit(self, lambda_t):
        y = self._sqrt_mass * lambda_t.to_degree(self.degree).vector
        return solvers.least_squares(self.fit_matrix, y, gram=self.gram, warn=not self.rank_deficient)

    def residual(self, lambda_t, theta):
        '''L2 norm of lambda_t - sum_q theta_q lambda_{t,q}.'''
        y = self._sqrt_mass * lambda_t.to_degree(self.degree).vector
        return numpy.linalg.norm(y - self.fit_matrix @ theta)

    def combine(self, theta):
        theta = numpy.asarray(theta, dtype=float)
        if not numpy.any(theta):
            logger.warning('All mobility coefficients are zero, the pressure operator is singular')

        lambda_w = DgField(self.grid, theta @ self.wetting, self.degree)
        lambda_n = DgField(self.grid, theta @ self.nonwetting, self.degree)
        return lambda_w, lambda_n, lambda_w + lambda_n

    def permuted(self, order):
        return MobilityBasis(self.grid, self.wetting[order], self.nonwetting[order], self.degree,
                             self.mu_w, self.mu_n)


def profiles_from_tof(tof, M, T, mu_w, mu_n, degree=1):
    '''Mobility profiles from a time-of-flight field. The first profile is the
    mobility of the non-wetting phase only, the last one of the wetting phase
    only. Profile q in between is flooded with water wherever the
    time-of-flight at the cell barycenter is at most (q - 1) T / (M - 2).'''
    if M < 2:
        raise ConfigurationError('At least two mobility profiles are needed, got M=%d' % M)

    grid = tof.grid
    ncells = grid.ncells
    nb = DgField(grid, degree=degree).nb

    flooded = numpy.zeros((M, ncells), dtype=bool)
    flooded[M - 1] = True
    for q in range(2, M):
        flooded[q - 1] = tof.means <= (q - 1) * T / (M - 2)

    wetting = numpy.zeros((M, ncells, nb))
    nonwetting = numpy.zeros((M, ncells, nb))
    wetting[:, :, 0] = numpy.where(flooded, 1.0 / mu_w, 0.0)
    nonwetting[:, :, 0] = numpy.where(flooded, 0.0, 1.0 / mu_n)

    return MobilityBasis(grid, wetting.reshape(M, -1), nonwetting.reshape(M, -1), degree, mu_w, mu_n)


def profiles_from_snapshots(saturations, mu_w, mu_n):
    '''Mobility profiles from M saturation fields.'''
    mobilities = [linear_mobilities(s, mu_w, mu_n) for s in saturations]
    grid = saturations[0].grid
    degree = saturations[0].degree
    return MobilityBasis(grid,
                         [m[0].vector for m in mobilities],
                         [m[1].vector for m in mobilities], degree, mu_w, mu_n)


def fit_theta(s, basis):
    '''Coefficients theta minimizing the L2 distance between lambda_t(s) and
    the span of the total mobility profiles.'''
    lambda_t = linear_mobilities(s, basis.mu_w, basis.mu_n)[2]
    return basis.fit(lambda_t)


def parametrized_mobilities(theta, basis):
    return basis.combine(theta)
