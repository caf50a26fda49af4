"""Uniform spatial grids and symmetric finite-difference Laplacians.

Grids store only the degrees of freedom that enter the semi-discrete
system: interior points for homogeneous Dirichlet boundaries, one period
of points (with wraparound indexing) for periodic boundaries.  In two
dimensions nodes are ordered row-major with x running fastest, so a field
``u`` reshapes as ``u.reshape(ny, nx)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

DIRICHLET = "dirichlet"
PERIODIC = "periodic"


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform tensor-product grid on an interval or rectangle.

    Parameters
    ----------
    dim : int
        1 or 2.
    n_x, n_y : int
        Number of stored points per axis (n_y ignored when dim == 1).
        Dirichlet grids store interior points only, periodic grids store
        one period.
    bounds_x, bounds_y : tuple of float
        Domain endpoints per axis.
    boundary : str
        ``"dirichlet"`` (homogeneous) or ``"periodic"``.
    """

    dim: int
    n_x: int
    bounds_x: tuple[float, float]
    n_y: int = 0
    bounds_y: tuple[float, float] = (0.0, 0.0)
    boundary: str = PERIODIC
    h_x: float = field(init=False)
    h_y: float = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.boundary not in (DIRICHLET, PERIODIC):
            raise ValueError(f"unknown boundary kind {self.boundary!r}")
        if self.n_x < 3:
            raise ValueError(f"n_x must be >= 3, got {self.n_x}")
        if self.dim == 2 and self.n_y < 3:
            raise ValueError(f"n_y must be >= 3, got {self.n_y}")
        object.__setattr__(self, "h_x", self._spacing(self.n_x, self.bounds_x))
        if self.dim == 2:
            object.__setattr__(self, "h_y", self._spacing(self.n_y, self.bounds_y))
        else:
            object.__setattr__(self, "h_y", 0.0)

    def _spacing(self, n: int, bounds: tuple[float, float]) -> float:
        length = bounds[1] - bounds[0]
        if length <= 0.0:
            raise ValueError(f"domain length must be positive, got {length}")
        # Dirichlet drops both boundary nodes, periodic identifies the ends.
        divisor = n + 1 if self.boundary == DIRICHLET else n
        return length / divisor

    @property
    def n_points(self) -> int:
        return self.n_x * self.n_y if self.dim == 2 else self.n_x

    def axis_points(self, axis: int = 0) -> np.ndarray:
        """Stored coordinates along one axis."""
        if axis == 0:
            n, (a, _), h = self.n_x, self.bounds_x, self.h_x
        else:
            n, (a, _), h = self.n_y, self.bounds_y, self.h_y
        offset = h if self.boundary == DIRICHLET else 0.0
        return a + offset + h * np.arange(n)

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Node coordinates flattened in storage order (x fastest)."""
        if self.dim == 1:
            return (self.axis_points(0),)
        X, Y = np.meshgrid(self.axis_points(0), self.axis_points(1))
        return X.ravel(), Y.ravel()


def _laplacian_1d(n: int, h: float, boundary: str) -> sp.csr_matrix:
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    D = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if boundary == PERIODIC:
        D[0, n - 1] = 1.0
        D[n - 1, 0] = 1.0
    # Dirichlet: implicit zero ghost values, nothing to add.
    return (D.tocsr() / h**2).tocsr()


def build_laplacian(grid: SpatialGrid) -> sp.csr_matrix:
    """Assemble the second-order central-difference Laplacian.

    The matrix is symmetric by construction: the 1D stencil is
    (1, -2, 1)/h^2 and the 2D operator is the Kronecker sum of the two
    1D operators (5-point stencil).  Dirichlet rows use implicit zero
    ghost values; periodic rows wrap around, so constants lie in the
    kernel.
    """
    Dx = _laplacian_1d(grid.n_x, grid.h_x, grid.boundary)
    if grid.dim == 1:
        return Dx
    Dy = _laplacian_1d(grid.n_y, grid.h_y, grid.boundary)
    # x runs fastest: Laplacian_x acts within a row of the (ny, nx) field.
    D = sp.kron(sp.identity(grid.n_y, format="csr"), Dx) + sp.kron(
        Dy, sp.identity(grid.n_x, format="csr")
    )
    return D.tocsr()
