import logging
import warnings

import numpy

from scipy import linalg as dense
from scipy import sparse
from scipy.sparse import linalg

from lrbmsflow.CrsMatrix import CrsMatrix
from lrbmsflow.exceptions import ConvergenceError, SingularMatrixError

logger = logging.getLogger(__name__)

REJECTED = None


def _as_scipy(A):
    if isinstance(A, CrsMatrix):
        return A.to_scipy()

    return sparse.csr_matrix(A)


def block_jacobi(A, nb):
    '''Preconditioner that applies the inverses of the diagonal blocks of A.'''
    if isinstance(A, CrsMatrix):
        blocks = A.diagonal_blocks(nb)
    else:
        blocks = CrsMatrix.from_scipy(A).diagonal_blocks(nb)

    inverse = numpy.linalg.inv(blocks)
    n = blocks.shape[0] * nb

    def apply(x):
        x = x.reshape(-1, nb)
        return numpy.einsum('kij,kj->ki', inverse, x).ravel()

    return linalg.LinearOperator((n, n), matvec=apply, dtype=float)


def cg_solve(A, b, tol=1e-10, max_iter=None, nb=1, x0=None):
    '''Preconditioned conjugate gradients for a symmetric positive definite A.

    Stops when ||A x - b|| <= tol ||b||. The preconditioner is block Jacobi
    with blocks of size nb. Raises a ConvergenceError carrying the final
    residual if max_iter iterations do not suffice.
    '''
    b = numpy.asarray(b, dtype=float)
    if not numpy.any(b):
        return numpy.zeros_like(b)

    A = _as_scipy(A)
    n = A.shape[0]
    if max_iter is None:
        max_iter = 10 * n

    prec = block_jacobi(A, nb)

    iterations = 0

    def callback(_xk):
        nonlocal iterations
        iterations += 1

    try:
        x, info = linalg.cg(A, b, x0=x0, rtol=tol, atol=0, maxiter=max_iter, M=prec, callback=callback)
    except TypeError:
        # Compatibility with SciPy <= 1.11
        x, info = linalg.cg(A, b, x0=x0, tol=tol, atol=0, maxiter=max_iter, M=prec, callback=callback)

    residual = numpy.linalg.norm(A @ x - b) / numpy.linalg.norm(b)
    if info != 0 or not numpy.isfinite(residual):
        raise ConvergenceError('CG did not converge in %d iterations, relative residual %e'
                               % (iterations, residual), residual=residual, iterations=iterations)

    logger.debug('CG converged in %d iterations with relative residual %e', iterations, residual)

    return x


def direct_solve(A, b):
    '''Sparse LU solve.'''
    A = _as_scipy(A).tocsc()
    try:
        return linalg.splu(A).solve(numpy.asarray(b, dtype=float))
    except RuntimeError as e:
        raise SingularMatrixError('Sparse LU failed: %s' % e) from e


def dense_solve(A, b):
    '''LU solve with partial pivoting of a dense system.'''
    A = numpy.asarray(A, dtype=float)
    b = numpy.asarray(b, dtype=float)

    if A.shape[0] == 0:
        return numpy.zeros(0)

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', dense.LinAlgWarning)
        lu, piv = dense.lu_factor(A, check_finite=True)

    pivots = numpy.abs(numpy.diag(lu))
    if pivots.min() <= A.shape[0] * numpy.finfo(float).eps * max(pivots.max(), numpy.finfo(float).tiny):
        raise SingularMatrixError('Matrix is singular to machine precision')

    return dense.lu_solve((lu, piv), b)


def thin_svd(A):
    '''Thin singular value decomposition A = U diag(sigma) V^T with
    non-increasing singular values.'''
    A = numpy.asarray(A, dtype=float)
    U, sigma, Vt = dense.svd(A, full_matrices=False, lapack_driver='gesvd')
    return U, sigma, Vt.T


def least_squares(B, y, gram=None, warn=True):
    '''Minimize ||y - B theta|| through the normal equations.

    gram may hold a precomputed B^T B. A rank-deficient Gram matrix falls back
    to the minimal-norm solution computed from the singular value
    decomposition of B.
    '''
    B = numpy.asarray(B, dtype=float)
    y = numpy.asarray(y, dtype=float)

    if gram is None:
        gram = B.T @ B

    rhs = B.T @ y

    try:
        factor = dense.cho_factor(gram)
        diagonal = numpy.diag(factor[0]) ** 2
        if diagonal.min() > numpy.finfo(float).eps * 1e3 * diagonal.max():
            return dense.cho_solve(factor, rhs)
    except dense.LinAlgError:
        pass

    if warn:
        logger.warning('Gram matrix of the least-squares problem is rank deficient, '
                       'using the minimal-norm solution')

    U, sigma, V = thin_svd(B)
    cutoff = max(B.shape) * numpy.finfo(float).eps * (sigma[0] if len(sigma) else 0)
    inverse = numpy.where(sigma > cutoff, 1 / numpy.where(sigma > cutoff, sigma, 1), 0)
    return V @ (inverse * (U.T @ y))


def gram_schmidt_step(v, basis, inner=None, reject_tol=1e-10):
    '''Orthonormalize v against an orthonormal basis (a list of vectors) with
    two projection passes. Returns the new basis vector or REJECTED if the
    part of v outside the span is smaller than reject_tol times its norm.

    inner is the inner product, by default the Euclidean one.'''
    if inner is None:
        inner = numpy.dot

    v = numpy.array(v, dtype=float)
    norm = numpy.sqrt(max(inner(v, v), 0))
    if norm == 0:
        return REJECTED

    w = v
    for _ in range(2):
        for phi in basis:
            w = w - inner(phi, w) * phi

    residual = numpy.sqrt(max(inner(w, w), 0))
    if residual < reject_tol * norm:
        return REJECTED

    return w / residual
