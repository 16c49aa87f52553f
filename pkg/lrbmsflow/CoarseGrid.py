import numpy

from lrbmsflow.exceptions import ConfigurationError


class CoarseGrid:
    '''Coarse partition of a FineGrid into Nx x Ny rectangles.

    Both grids are matching: every coarse cell is a block of mx x my fine
    cells and every coarse face is a union of fine faces. Coarse cells and
    faces are numbered like the fine ones (row-major cells, x-faces first).

    Attributes
    ----------
    fine_to_coarse : ndarray
        Coarse cell of every fine cell.
    cells : list of ndarray
        Sorted fine cells of every coarse cell.
    faces : list of ndarray
        Fine faces making up every coarse face.
    face_cells : ndarray
        Adjacent coarse cells of every coarse face, -1 on the boundary.
    fine_face_to_coarse : ndarray
        Coarse face containing a fine face, or -1 if the fine face lies inside
        a coarse cell.

    '''

    def __init__(self, fine, Nx, Ny):
        if int(Nx) != Nx or int(Ny) != Ny or Nx < 1 or Ny < 1:
            raise ConfigurationError('Coarse cell counts must be positive integers, got Nx=%s, Ny=%s' % (Nx, Ny))

        if fine.nx % Nx != 0:
            raise ConfigurationError('Nx=%d does not divide the fine cell count nx=%d' % (Nx, fine.nx))

        if fine.ny % Ny != 0:
            raise ConfigurationError('Ny=%d does not divide the fine cell count ny=%d' % (Ny, fine.ny))

        self.fine = fine
        self.Nx = int(Nx)
        self.Ny = int(Ny)
        self.mx = fine.nx // self.Nx
        self.my = fine.ny // self.Ny
        self.ncells = self.Nx * self.Ny

        I = fine.cell_i // self.mx
        J = fine.cell_j // self.my
        self.fine_to_coarse = I + J * self.Nx
        self.cells = [numpy.flatnonzero(self.fine_to_coarse == E) for E in range(self.ncells)]

        self._build_faces()

    def _build_faces(self):
        fine = self.fine
        Nx = self.Nx
        Ny = self.Ny

        faces = []
        face_cells = []

        # Coarse faces normal to x
        for J in range(Ny):
            for I in range(Nx + 1):
                i = I * self.mx
                j = numpy.arange(J * self.my, (J + 1) * self.my)
                faces.append(i + j * (fine.nx + 1))
                if I == 0:
                    face_cells.append((I + J * Nx, -1))
                elif I == Nx:
                    face_cells.append((I - 1 + J * Nx, -1))
                else:
                    face_cells.append((I - 1 + J * Nx, I + J * Nx))

        # Coarse faces normal to y
        for J in range(Ny + 1):
            for I in range(Nx):
                i = numpy.arange(I * self.mx, (I + 1) * self.mx)
                j = J * self.my
                faces.append(fine.nxf + i + j * fine.nx)
                if J == 0:
                    face_cells.append((I + J * Nx, -1))
                elif J == Ny:
                    face_cells.append((I + (J - 1) * Nx, -1))
                else:
                    face_cells.append((I + (J - 1) * Nx, I + J * Nx))

        self.faces = faces
        self.face_cells = numpy.array(face_cells, dtype=int)
        self.nfaces = len(faces)
        self.interior = self.face_cells[:, 1] >= 0

        self.fine_face_to_coarse = -numpy.ones(fine.nfaces, dtype=int)
        for F, fine_faces in enumerate(faces):
            self.fine_face_to_coarse[fine_faces] = F

    def dofs(self, E, nb):
        '''Fine DG degrees of freedom supported on coarse cell E.'''
        return (self.cells[E][:, None] * nb + numpy.arange(nb)).ravel()

    def area(self, E):
        return len(self.cells[E]) * self.fine.cell_area

    def checksum(self):
        return '%s:%dx%d' % (self.fine.checksum(), self.Nx, self.Ny)

    def __repr__(self):
        return 'CoarseGrid(%d x %d cells on %r)' % (self.Nx, self.Ny, self.fine)


def build_coarse_grid(fine, Nx, Ny):
    return CoarseGrid(fine, Nx, Ny)
