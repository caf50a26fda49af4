"""Conservative full-order models of nonlinear wave equations.

Every wave model is the spatial discretization of
``phi_tt = Laplacian(phi) - g'(phi)`` written in first-order form

    dq/dt = p,        dp/dt = D q - f_non(q),

with ``f_non = g'`` so the semi-discrete energy

    E(q, p) = p'p/2 - q'Dq/2 + sum_i g(q_i)

is conserved along exact trajectories.  The Klein-Gordon-Zakharov system
is a six-field coupled model with its own (non-canonical) conserved
energy and is handled by dedicated routines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .grids import DIRICHLET, PERIODIC, SpatialGrid, build_laplacian

KGZ_FIELDS = ("q1", "q2", "p1", "p2", "varphi", "phi")


@dataclass(frozen=True)
class NonlinearityDef:
    """Scalar potential density g and its derivatives for one model.

    ``f_non`` must be the derivative of ``g`` and ``df_non`` the second
    derivative (used for analytic Newton Jacobians); ``g`` must be
    nonnegative on the admissible range.
    """

    model: str
    g: Callable[[np.ndarray], np.ndarray]
    f_non: Callable[[np.ndarray], np.ndarray]
    df_non: Callable[[np.ndarray], np.ndarray]
    mu: float | None = None


@dataclass(frozen=True)
class FomState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.q.shape != self.p.shape or self.q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of identical length")

    @property
    def n(self) -> int:
        return self.q.size

    def packed(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @staticmethod
    def from_packed(y: np.ndarray, t: float = 0.0) -> "FomState":
        n = y.size // 2
        return FomState(q=y[:n].copy(), p=y[n:].copy(), t=t)


@dataclass(frozen=True)
class KgzState:
    """Klein-Gordon-Zakharov state; psi = q1 + i*q2 is never stored complex."""

    q1: np.ndarray
    q2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    varphi: np.ndarray
    phi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = self.q1.size
        for name in KGZ_FIELDS:
            f = getattr(self, name)
            if f.ndim != 1 or f.size != n:
                raise ValueError("all KGZ fields must share one length")

    @property
    def n(self) -> int:
        return self.q1.size

    def packed(self) -> np.ndarray:
        return np.concatenate([getattr(self, name) for name in KGZ_FIELDS])

    @staticmethod
    def from_packed(y: np.ndarray, t: float = 0.0) -> "KgzState":
        n = y.size // len(KGZ_FIELDS)
        blocks = {
            name: y[i * n : (i + 1) * n].copy() for i, name in enumerate(KGZ_FIELDS)
        }
        return KgzState(t=t, **blocks)


@dataclass(frozen=True)
class FomModel:
    """Grid, Laplacian and nonlinearity of one conservative wave FOM."""

    model: str
    grid: SpatialGrid
    D: sp.csr_matrix
    nonlin: NonlinearityDef

    @property
    def n(self) -> int:
        return self.grid.n_points

    @property
    def mu(self) -> float | None:
        return self.nonlin.mu

    def packed_rhs(self) -> Callable[[np.ndarray], np.ndarray]:
        """RHS on the stacked vector y = [q, p]."""
        n, D, f_non = self.n, self.D, self.nonlin.f_non

        def rhs(y: np.ndarray) -> np.ndarray:
            q, p = y[:n], y[n:]
            return np.concatenate([p, D @ q - f_non(q)])

        return rhs

    def packed_jacobian(self) -> Callable[[np.ndarray], sp.spmatrix | np.ndarray]:
        """Jacobian of the packed RHS for Newton solves.

        Dense for small systems, sparse (block structure with D minus the
        diagonal nonlinearity derivative) otherwise.
        """
        n, D, df_non = self.n, self.D, self.nonlin.df_non
        if n <= 128:
            base = np.zeros((2 * n, 2 * n))
            base[:n, n:] = np.eye(n)
            base[n:, :n] = D.toarray()
            diag_idx = (np.arange(n, 2 * n), np.arange(n))

            def jac_dense(y: np.ndarray) -> np.ndarray:
                J = base.copy()
                J[diag_idx] -= df_non(y[:n])
                return J

            return jac_dense
        eye = sp.identity(n, format="csr")

        def jac(y: np.ndarray) -> sp.csr_matrix:
            q = y[:n]
            lower = D - sp.diags(df_non(q))
            return sp.bmat([[None, eye], [lower, None]], format="csr")

        return jac


@dataclass(frozen=True)
class KgzModel:
    """Grid and Laplacian of the Klein-Gordon-Zakharov FOM (periodic only)."""

    grid: SpatialGrid
    D: sp.csr_matrix

    model: str = "kgz"

    @property
    def n(self) -> int:
        return self.grid.n_points

    def packed_rhs(self) -> Callable[[np.ndarray], np.ndarray]:
        n, D = self.n, self.D

        def rhs(y: np.ndarray) -> np.ndarray:
            q1, q2, p1, p2, varphi, phi = (
                y[i * n : (i + 1) * n] for i in range(6)
            )
            mod2 = q1 * q1 + q2 * q2
            return np.concatenate(
                [
                    p1,
                    p2,
                    D @ q1 - q1 - phi * q1 - mod2 * q1,
                    D @ q2 - q2 - phi * q2 - mod2 * q2,
                    phi + mod2,
                    D @ varphi,
                ]
            )

        return rhs


def _nonlinearity(model: str, mu: float | None) -> NonlinearityDef:
    if model in ("sine-gordon-1d", "sine-gordon-2d"):
        return NonlinearityDef(
            model=model,
            g=lambda q: 1.0 - np.cos(q),
            f_non=np.sin,
            df_non=np.cos,
        )
    if model == "exp-wave":
        return NonlinearityDef(
            model=model,
            g=lambda q: np.exp(-q),
            f_non=lambda q: -np.exp(-q),
            df_non=lambda q: np.exp(-q),
        )
    if model == "klein-gordon":
        if mu is None:
            raise ValueError("klein-gordon requires the parameter mu")
        return NonlinearityDef(
            model=model,
            g=lambda q, mu=mu: 0.25 * mu * q**4,
            f_non=lambda q, mu=mu: mu * q**3,
            df_non=lambda q, mu=mu: 3.0 * mu * q**2,
            mu=mu,
        )
    raise ValueError(f"unknown model id {model!r}")


def default_grid(model: str, n_x: int, n_y: int | None = None) -> SpatialGrid:
    """Grid with each model's domain and boundary conditions."""
    if model == "exp-wave":
        return SpatialGrid(dim=1, n_x=n_x, bounds_x=(0.0, np.pi), boundary=DIRICHLET)
    if model == "sine-gordon-1d":
        return SpatialGrid(dim=1, n_x=n_x, bounds_x=(-20.0, 20.0), boundary=PERIODIC)
    if model == "sine-gordon-2d":
        return SpatialGrid(
            dim=2, n_x=n_x, n_y=n_y or n_x, bounds_x=(-7.0, 7.0),
            bounds_y=(-7.0, 7.0), boundary=PERIODIC,
        )
    if model == "klein-gordon":
        return SpatialGrid(
            dim=2, n_x=n_x, n_y=n_y or n_x, bounds_x=(-10.0, 10.0),
            bounds_y=(-10.0, 10.0), boundary=PERIODIC,
        )
    if model == "kgz":
        return SpatialGrid(
            dim=2, n_x=n_x, n_y=n_y or n_x, bounds_x=(-20.0, 20.0),
            bounds_y=(-20.0, 20.0), boundary=PERIODIC,
        )
    raise ValueError(f"unknown model id {model!r}")


def make_model(
    model: str, n_x: int, n_y: int | None = None, mu: float | None = None
) -> FomModel | KgzModel:
    """Build a ready-to-integrate FOM for one of the supported models."""
    grid = default_grid(model, n_x, n_y)
    D = build_laplacian(grid)
    if model == "kgz":
        return KgzModel(grid=grid, D=D)
    return FomModel(model=model, grid=grid, D=D, nonlin=_nonlinearity(model, mu))


def with_mu(model: FomModel, mu: float) -> FomModel:
    """Same model with a different nonlinearity parameter."""
    return replace(model, nonlin=_nonlinearity(model.model, mu))


def fom_rhs(model: FomModel, state: FomState) -> FomState:
    """Time derivative (dq, dp) = (p, Dq - f_non(q))."""
    if state.n != model.n:
        raise ValueError(f"state dimension {state.n} != model dimension {model.n}")
    return FomState(
        q=state.p.copy(),
        p=model.D @ state.q - model.nonlin.f_non(state.q),
        t=state.t,
    )


def fom_energy(model: FomModel, state: FomState) -> float:
    """Discrete conserved energy p'p/2 - q'Dq/2 + sum g(q_i)."""
    if state.n != model.n:
        raise ValueError(f"state dimension {state.n} != model dimension {model.n}")
    q, p = state.q, state.p
    return float(0.5 * p @ p - 0.5 * q @ (model.D @ q) + np.sum(model.nonlin.g(q)))


def fom_energy_gradient(model: FomModel, state: FomState) -> np.ndarray:
    """Analytic gradient of fom_energy wrt the packed state [q, p]."""
    gq = -(model.D @ state.q) + model.nonlin.f_non(state.q)
    return np.concatenate([gq, state.p])


def kgz_rhs(state: KgzState, D: sp.csr_matrix) -> KgzState:
    """All six coupled equations of the KGZ full-order model."""
    if D.shape[0] != state.n:
        raise ValueError("state dimension does not match Laplacian")
    mod2 = state.q1**2 + state.q2**2
    return KgzState(
        q1=state.p1.copy(),
        q2=state.p2.copy(),
        p1=D @ state.q1 - state.q1 - state.phi * state.q1 - mod2 * state.q1,
        p2=D @ state.q2 - state.q2 - state.phi * state.q2 - mod2 * state.q2,
        varphi=state.phi + mod2,
        phi=D @ state.varphi,
        t=state.t,
    )


def kgz_energy(state: KgzState, D: sp.csr_matrix) -> float:
    """Discrete conserved KGZ energy (note: no 1/2 on the p'p, q'q terms)."""
    if D.shape[0] != state.n:
        raise ValueError("state dimension does not match Laplacian")
    q1, q2, p1, p2, varphi, phi = (
        state.q1, state.q2, state.p1, state.p2, state.varphi, state.phi,
    )
    mod2 = q1 * q1 + q2 * q2
    return float(
        p1 @ p1
        + p2 @ p2
        + q1 @ q1
        + q2 @ q2
        - q1 @ (D @ q1)
        - q2 @ (D @ q2)
        + phi @ mod2
        - 0.5 * varphi @ (D @ varphi)
        + 0.5 * phi @ phi
        + 0.5 * np.sum(mod2**2)
    )


def _sech(z: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(z)


def initial_condition(
    model: str, grid: SpatialGrid, mu: float | None = None
) -> FomState | KgzState:
    """Closed-form initial data evaluated on the grid nodes.

    All velocity-like fields start at zero; the KGZ auxiliary potential
    varphi starts at zero as well (Laplacian(varphi) = dphi/dt = 0 at
    t = 0, and zero is the unique decaying/zero-mean solution).
    """
    if model == "exp-wave":
        (x,) = grid.meshgrid()
        q = 0.5 * x * (np.pi - x)
        return FomState(q=q, p=np.zeros_like(q))
    if model == "sine-gordon-1d":
        # Central Gaussian hump with two symmetric satellite humps: the
        # collapse forms a breather-like core plus outgoing radiation,
        # which gives the study a transport-rich snapshot spectrum.
        (x,) = grid.meshgrid()
        q = (
            4.5 * np.exp(-(x**2) / (2.0 * 1.2**2))
            + np.exp(-((x - 8.0) ** 2) / 2.0)
            + np.exp(-((x + 8.0) ** 2) / 2.0)
        )
        return FomState(q=q, p=np.zeros_like(q))
    if model == "sine-gordon-2d":
        x, y = grid.meshgrid()
        q = 4.0 * np.arctan(np.exp(3.0 - np.sqrt(x**2 + y**2)))
        return FomState(q=q, p=np.zeros_like(q))
    if model == "klein-gordon":
        x, y = grid.meshgrid()
        # cosh overflows far from the origin; sech of inf is cleanly 0.
        with np.errstate(over="ignore"):
            q = 2.0 * _sech(np.cosh(x**2 + y**2))
        return FomState(q=q, p=np.zeros_like(q))
    if model == "kgz":
        x, y = grid.meshgrid()
        with np.errstate(over="ignore"):
            hump = _sech(-((x - 2.0) ** 2) - y**2) + _sech(-(x**2) - (y - 2.0) ** 2)
        zero = np.zeros_like(hump)
        return KgzState(
            q1=hump, q2=zero.copy(), p1=zero.copy(), p2=zero.copy(),
            varphi=zero.copy(), phi=hump.copy(),
        )
    raise ValueError(f"unknown model id {model!r}")
