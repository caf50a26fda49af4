"""Structure-preserving time steppers.

Two second-order methods:

* implicit midpoint: fully implicit, symplectic, conserves every
  quadratic invariant of the flow exactly (up to the nonlinear-solve
  tolerance).  The per-step system is solved with Newton (analytic or
  finite-difference Jacobian) or plain Picard iteration.
* Kahan's method: linearly implicit, specialized to quadratic vector
  fields dy/dt = A y + B (y kron y); one linear solve per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class IntegrationError(RuntimeError):
    """Nonlinear solve failed or a step matrix was singular."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, horizon and nonlinear-solve controls.

    ``tol`` bounds the infinity norm of the step residual (absolute plus
    the same value relative to the state norm).  ``max_iter`` defaults to
    50 for Newton and 200 for Picard.
    """

    dt: float
    t_end: float
    solver: str = "newton"  # "newton" | "picard"
    tol: float = 1e-12
    max_iter: int | None = None
    stride: int = 1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0.0:
            raise ValueError("horizon must be positive")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.solver not in ("newton", "picard"):
            raise ValueError(f"unknown solver kind {self.solver!r}")
        if self.max_iter is None:
            object.__setattr__(
                self, "max_iter", 50 if self.solver == "newton" else 200
            )

    @property
    def n_steps(self) -> int:
        # Round so horizons that are integer multiples of dt stay exact.
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    """Time stamps and states; ``states[:, k]`` is the state at ``t[k]``."""

    t: np.ndarray
    states_rows: np.ndarray = field(repr=False)  # (n_samples, dim)

    @property
    def states(self) -> np.ndarray:
        return self.states_rows.T

    def __len__(self) -> int:
        return self.t.size

    @property
    def final(self) -> np.ndarray:
        return self.states_rows[-1]


def _fd_jacobian(rhs, y, eps=1e-7):
    n = y.size
    J = np.empty((n, n))
    f0 = rhs(y)
    for j in range(n):
        step = eps * max(1.0, abs(y[j]))
        yp = y.copy()
        yp[j] += step
        J[:, j] = (rhs(yp) - f0) / step
    return J


def _solve_linear(M, b):
    if sp.issparse(M):
        # Sparse-solver overhead dominates on small systems.
        if M.shape[0] <= 256:
            return np.linalg.solve(M.toarray(), b)
        return spla.spsolve(M.tocsc(), b)
    return np.linalg.solve(M, b)


def _midpoint_step_newton(rhs, jac, y, dt, tol, max_iter):
    # Solve G(Y) = Y - y - dt * rhs((Y + y)/2) = 0 for the new state Y.
    # After the tolerance is met one extra correction is applied: Newton's
    # quadratic convergence then leaves the residual near machine epsilon,
    # which the machine-precision conservation claims rely on.
    Y = y + dt * rhs(y)  # explicit Euler predictor
    converged = False
    for _ in range(max_iter):
        mid = 0.5 * (Y + y)
        resid = Y - y - dt * rhs(mid)
        if converged:
            return Y - _solve_linear(_newton_matrix(rhs, jac, mid, dt), resid)
        rnorm = np.linalg.norm(resid, ord=np.inf)
        if not np.isfinite(rnorm):
            return None
        converged = rnorm <= tol * (1.0 + np.linalg.norm(Y, ord=np.inf))
        Y = Y - _solve_linear(_newton_matrix(rhs, jac, mid, dt), resid)
    return Y if converged else None


def _newton_matrix(rhs, jac, mid, dt):
    J = jac(mid) if jac is not None else _fd_jacobian(rhs, mid)
    if sp.issparse(J):
        return sp.identity(mid.size, format="csr") - (0.5 * dt) * J
    return np.eye(mid.size) - (0.5 * dt) * J


def _midpoint_step_picard(rhs, y, dt, tol, max_iter):
    Y = y + dt * rhs(y)
    for _ in range(max_iter):
        Y_new = y + dt * rhs(0.5 * (Y + y))
        delta = np.linalg.norm(Y_new - Y, ord=np.inf)
        if not np.isfinite(delta):
            return None
        Y = Y_new
        if delta <= tol * (1.0 + np.linalg.norm(Y, ord=np.inf)):
            return Y
    return None


def implicit_midpoint(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    config: IntegratorConfig,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> Trajectory:
    """Integrate dy/dt = rhs(y) with the implicit midpoint rule.

    Each step solves ``(Y - y)/dt = rhs((Y + y)/2)`` to the configured
    residual tolerance.  ``jac`` is the Jacobian of ``rhs`` (dense or
    sparse); without it Newton falls back to finite differences.
    ``callback(step, t, y)`` fires at every accepted step regardless of
    the storage stride.
    """
    y0 = np.asarray(y0, dtype=float)
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    n_steps = config.n_steps
    kept = [y0.copy()]
    times = [0.0]
    y = y0.copy()
    for k in range(1, n_steps + 1):
        if config.solver == "newton":
            Y = _midpoint_step_newton(rhs, jac, y, config.dt, config.tol, config.max_iter)
        else:
            Y = _midpoint_step_picard(rhs, y, config.dt, config.tol, config.max_iter)
        if Y is None:
            raise IntegrationError(
                f"midpoint {config.solver} solve did not converge at step {k} "
                f"(t = {k * config.dt:.6g})"
            )
        y = Y
        t = k * config.dt
        if callback is not None:
            callback(k, t, y)
        if k % config.stride == 0 or k == n_steps:
            kept.append(y.copy())
            times.append(t)
    return Trajectory(t=np.array(times), states_rows=np.array(kept))


def quadratic_rhs(A: np.ndarray, B: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """RHS closure for dy/dt = A y + B (y kron y), B of shape (r, r*r)."""
    r = A.shape[0]
    T = B.reshape(r, r, r)

    def rhs(y: np.ndarray) -> np.ndarray:
        return A @ y + (T @ y) @ y

    return rhs


def quadratic_jacobian(A: np.ndarray, B: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Analytic Jacobian A + B (I kron y + y kron I) of a quadratic field."""
    r = A.shape[0]
    T = B.reshape(r, r, r)

    def jac(y: np.ndarray) -> np.ndarray:
        return A + T @ y + np.tensordot(T, y, axes=([1], [0]))

    return jac


class _KahanStepper:
    """Precomputed contraction views for Kahan steps on one system.

    ``B (z kron y) = (T1 @ y reshaped) z`` and ``B (y kron z) = (T2 @ y
    reshaped) z``, each a single GEMV on an (r^2, r) matrix: T1 is a view
    of B's buffer and T2 its (0, 2, 1) transpose copy.
    """

    def __init__(self, A: np.ndarray, B: np.ndarray):
        r = A.shape[0]
        self.r = r
        self.A = A
        self.T1 = B.reshape(r * r, r)
        self.T2 = np.ascontiguousarray(
            B.reshape(r, r, r).transpose(0, 2, 1)
        ).reshape(r * r, r)
        self.base = -0.5 * A  # dt-independent part of the step matrix

    def step(self, y: np.ndarray, dt: float) -> np.ndarray:
        r = self.r
        M = self.base - 0.5 * ((self.T1 @ y + self.T2 @ y).reshape(r, r))
        M.flat[:: r + 1] += 1.0 / dt
        b = y / dt + 0.5 * (self.A @ y)
        try:
            return np.linalg.solve(M, b)
        except np.linalg.LinAlgError as exc:
            raise IntegrationError(
                f"singular Kahan step matrix (try a smaller dt than {dt})"
            ) from exc


def kahan_step(A: np.ndarray, B: np.ndarray, y: np.ndarray, dt: float) -> np.ndarray:
    """One step of Kahan's method for dy/dt = A y + B (y kron y).

    Solves the linearly implicit system

        (y+ - y)/dt = A (y+ + y)/2 + B ((y+ kron y) + (y kron y+))/2

    with exactly one linear solve.
    """
    return _KahanStepper(A, B).step(np.asarray(y, dtype=float), dt)


def integrate_kahan(
    A: np.ndarray,
    B: np.ndarray,
    y0: np.ndarray,
    config: IntegratorConfig,
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> Trajectory:
    """Integrate a quadratic field with Kahan's method."""
    y0 = np.asarray(y0, dtype=float)
    stepper = _KahanStepper(A, B)
    n_steps = config.n_steps
    kept = [y0.copy()]
    times = [0.0]
    y = y0.copy()
    for k in range(1, n_steps + 1):
        try:
            y = stepper.step(y, config.dt)
        except IntegrationError as exc:
            raise IntegrationError(f"{exc} at step {k}") from exc
        t = k * config.dt
        if callback is not None:
            callback(k, t, y)
        if k % config.stride == 0 or k == n_steps:
            kept.append(y.copy())
            times.append(t)
    return Trajectory(t=np.array(times), states_rows=np.array(kept))
