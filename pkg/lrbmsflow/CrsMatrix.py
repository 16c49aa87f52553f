import numpy

from scipy import sparse


class CrsMatrix:
    '''Sparse matrix in compressed row storage.

    coA holds the values, jcoA the column indices and begA the row pointers.
    Matrices are built by adding dense blocks with add_blocks() and calling
    assemble() afterwards, which sums duplicate entries. Products are
    delegated to scipy.sparse.

    '''

    def __init__(self, coA=None, jcoA=None, begA=None, m=None, n=None):
        self.coA = coA
        self.jcoA = jcoA
        self.begA = begA

        self._tmp = None
        self._csr = None

        self._m = m
        self._n = n

    @classmethod
    def from_scipy(cls, A):
        A = sparse.csr_matrix(A)
        return cls(A.data, A.indices, A.indptr, m=A.shape[0], n=A.shape[1])

    def _get_m(self):
        if self._m is not None:
            return self._m

        return len(self.begA) - 1

    m = property(_get_m)

    def _get_n(self):
        if self._n is not None:
            return self._n

        return self.m

    n = property(_get_n)

    def _get_shape(self):
        return (self.m, self.n)

    shape = property(_get_shape)

    def _get_nnz(self):
        return self.begA[-1]

    nnz = property(_get_nnz)

    def _set_csr(self, A):
        self.coA = A.data
        self.jcoA = A.indices
        self.begA = A.indptr
        self._csr = A

    def to_scipy(self):
        if self._csr is None:
            self._csr = sparse.csr_matrix((self.coA, self.jcoA, self.begA), shape=self.shape)

        return self._csr

    def __add__(self, B):
        return CrsMatrix.from_scipy(self.to_scipy() + B.to_scipy())

    def matvec(self, x):
        return self.to_scipy() @ x

    def __matmul__(self, x):
        return self.matvec(x)

    def to_coo(self):
        icoA = numpy.repeat(numpy.arange(self.m), numpy.diff(self.begA))
        return self.coA.copy(), icoA, self.jcoA.copy()

    def to_dense(self):
        return self.to_scipy().toarray()

    def diagonal_blocks(self, nb):
        '''Dense diagonal blocks of size nb, shape (m // nb, nb, nb).'''
        vals, i, j = self.to_coo()
        diagonal = i // nb == j // nb

        blocks = numpy.zeros((self.m // nb, nb, nb))
        numpy.add.at(blocks, (i[diagonal] // nb, i[diagonal] % nb, j[diagonal] % nb), vals[diagonal])
        return blocks

    def symmetry_defect(self):
        '''Largest entry of A - A^T relative to the largest entry of A.'''
        A = self.to_scipy()
        scale = abs(A).max()
        if scale == 0:
            return 0.0

        return abs(A - A.T).max() / scale

    def project(self, V, W=None):
        '''Galerkin projection W^T A V, where V and W hold basis vectors as columns.'''
        if W is None:
            W = V

        AV = self.to_scipy() @ V
        result = W.T @ AV
        if sparse.issparse(result):
            result = result.toarray()

        return numpy.asarray(result)

    def add_blocks(self, rows, cols, blocks):
        '''Queue dense blocks for assembly. rows and cols have shapes (nblocks, r)
        and (nblocks, c), blocks has shape (nblocks, r, c).'''
        if self._tmp is None:
            self._tmp = []

        rows = numpy.asarray(rows, dtype=int)
        cols = numpy.asarray(cols, dtype=int)
        blocks = numpy.asarray(blocks, dtype=float)

        iidx = numpy.broadcast_to(rows[:, :, None], blocks.shape)
        jidx = numpy.broadcast_to(cols[:, None, :], blocks.shape)
        self._tmp.append((iidx.ravel(), jidx.ravel(), blocks.ravel()))

    def assemble(self):
        '''Sum the queued blocks into the compressed arrays, dropping entries
        that are exactly zero.'''
        assert self._tmp

        iidx = numpy.concatenate([i[0] for i in self._tmp])
        jidx = numpy.concatenate([i[1] for i in self._tmp])
        vals = numpy.concatenate([i[2] for i in self._tmp])

        self._tmp = None

        A = sparse.coo_matrix((vals, (iidx, jidx)), shape=self.shape).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        self._set_csr(A)
