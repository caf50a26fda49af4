import numpy as np
import pytest
import scipy.linalg as la

from liftrom.grids import DIRICHLET, PERIODIC, SpatialGrid, build_laplacian


def test_periodic_constants_in_kernel():
    grid = SpatialGrid(dim=1, n_x=4, bounds_x=(0.0, 4.0), boundary=PERIODIC)
    D = build_laplacian(grid)
    assert np.allclose(D @ np.ones(4), 0.0)


def test_dirichlet_zero_ghost_values():
    # h = 1 needs domain length n + 1 = 5.
    grid = SpatialGrid(dim=1, n_x=4, bounds_x=(0.0, 5.0), boundary=DIRICHLET)
    assert grid.h_x == pytest.approx(1.0)
    D = build_laplacian(grid)
    np.testing.assert_allclose(D @ np.ones(4), [-1.0, 0.0, 0.0, -1.0])


def test_dirichlet_smallest_eigenvalue_matches_dense_oracle():
    # Oracle: dense symmetric eigendecomposition of the assembled matrix.
    n = 31
    grid = SpatialGrid(dim=1, n_x=n, bounds_x=(0.0, np.pi), boundary=DIRICHLET)
    assert grid.h_x == pytest.approx(np.pi / 32.0)
    D = build_laplacian(grid).toarray()
    eigs = la.eigh(-D, eigvals_only=True)
    lam_min = eigs.min()
    h = grid.h_x
    # Analytic spectrum of the Dirichlet tridiagonal stencil.
    expected = (4.0 / h**2) * np.sin(np.pi / (2 * (n + 1))) ** 2
    assert abs(lam_min - expected) <= 1e-10
    assert np.all(eigs > 0)


def test_laplacian_exactly_symmetric():
    for grid in [
        SpatialGrid(dim=1, n_x=17, bounds_x=(-3.0, 3.0), boundary=PERIODIC),
        SpatialGrid(dim=2, n_x=7, n_y=5, bounds_x=(0.0, 1.0),
                    bounds_y=(0.0, 2.0), boundary=DIRICHLET),
        SpatialGrid(dim=2, n_x=6, n_y=6, bounds_x=(-1.0, 1.0),
                    bounds_y=(-1.0, 1.0), boundary=PERIODIC),
    ]:
        D = build_laplacian(grid)
        assert abs(D - D.T).max() == 0.0


def test_2d_five_point_stencil_row_major_x_fastest():
    grid = SpatialGrid(
        dim=2, n_x=4, n_y=3, bounds_x=(0.0, 4.0), bounds_y=(0.0, 3.0),
        boundary=PERIODIC,
    )
    D = build_laplacian(grid)
    assert np.allclose(D @ np.ones(12), 0.0)
    # u = f(x) only: the y-part of the stencil cancels.
    x = grid.axis_points(0)
    u = np.tile(np.sin(2 * np.pi * x / 4.0), 3)
    expected1d = build_laplacian(
        SpatialGrid(dim=1, n_x=4, bounds_x=(0.0, 4.0), boundary=PERIODIC)
    ) @ np.sin(2 * np.pi * x / 4.0)
    np.testing.assert_allclose(D @ u, np.tile(expected1d, 3), atol=1e-12)


def test_grid_validation_errors():
    with pytest.raises(ValueError):
        SpatialGrid(dim=1, n_x=2, bounds_x=(0.0, 1.0))
    with pytest.raises(ValueError):
        SpatialGrid(dim=1, n_x=5, bounds_x=(1.0, 1.0))
    with pytest.raises(ValueError):
        SpatialGrid(dim=2, n_x=5, n_y=2, bounds_x=(0.0, 1.0), bounds_y=(0.0, 1.0))
    with pytest.raises(ValueError):
        SpatialGrid(dim=1, n_x=5, bounds_x=(0.0, 1.0), boundary="absorbing")
