import numpy

from lrbmsflow.DgField import broken_norms


def create_cell_mtx(values, grid):
    '''Helper to create an (nx, ny) dimensional array out of a vector with one
    value per cell, so that cell (i, j) is at [i, j].'''
    return numpy.asarray(values).reshape(grid.ny, grid.nx).T


def relative_discrepancy(reference, other):
    '''Relative L2 and broken H1 norms of reference - other. If the reference
    vanishes the absolute norms are returned.'''
    l2, h1 = broken_norms(reference - other)
    ref_l2, ref_h1 = broken_norms(reference)
    return (l2 / ref_l2 if ref_l2 > 0 else l2,
            h1 / ref_h1 if ref_h1 > 0 else h1)
