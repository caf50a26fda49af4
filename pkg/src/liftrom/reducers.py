"""scikit-learn style estimators wrapping the reduction pipelines.

Each reducer fits on FOM snapshot data passed the scikit-learn way (one
sample row per time instant, features ``[q, p]``), builds its bases and
reduced operators, and forecasts with ``predict(n_steps)``, returning
reconstructed ``[q, p]`` rows.  They compose with ``get_params`` /
``set_params`` and clone cleanly, so basis sizes can be swept with the
usual tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .basis import build_lifted_basis, cotangent_lift
from .hyperreduction import build_spdeim, spdeim_jacobian, spdeim_rhs
from .integrators import IntegratorConfig, implicit_midpoint, integrate_kahan
from .lifting import build_standard_lifting_sg, lift_fom_model, standard_lifting_sg
from .models import FomModel, FomState
from .rom import build_psd_rom, build_quadratic_rom, reduced_lifted_energy


class _SnapshotReducer(BaseEstimator):
    """Shared fit-side plumbing: split [Q, P] and build the PSD basis."""

    def __init__(self, model: FomModel, n_modes: int = 5, dt: float = 0.01):
        self.model = model
        self.n_modes = n_modes
        self.dt = dt

    def _split(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != 2 * self.model.n:
            raise ValueError(
                f"expected {2 * self.model.n} features ([q, p]), got {X.shape[1]}"
            )
        n = self.model.n
        return X[:, :n].T, X[:, n:].T  # (n, K) snapshot matrices

    def _config(self, n_steps, **kwargs):
        return IntegratorConfig(dt=self.dt, t_end=n_steps * self.dt, **kwargs)


class LiftingRom(_SnapshotReducer):
    """Energy-quadratized lifting ROM (the structure-preserving method).

    Parameters
    ----------
    model : FomModel
        Full-order model providing the Laplacian and the nonlinearity.
    n_modes : int
        Modes r per block; the reduced dimension is (k + 2) r.
    dt : float
        ROM time step.
    integrator : str
        "kahan" (linearly implicit, default) or "midpoint" (conserves the
        reduced lifted energy to solver precision).
    """

    def __init__(self, model, n_modes=5, dt=0.01, integrator="kahan"):
        super().__init__(model, n_modes, dt)
        self.integrator = integrator

    def fit(self, X, y=None):
        Q, P = self._split(X)
        lifting, lifted = lift_fom_model(self.model)
        phi = cotangent_lift(Q, P, self.n_modes)
        basis = build_lifted_basis(phi, lifting.lift_snapshots(Q), self.n_modes)
        self.lifting_ = lifting
        self.lifted_ = lifted
        self.phi_ = phi
        self.basis_ = basis
        self.rom_ = build_quadratic_rom(lifted, basis)
        self.y0_ = basis.project(lifting.lift(FomState(q=Q[:, 0], p=P[:, 0])))
        return self

    def reduce(self, state: FomState) -> np.ndarray:
        check_is_fitted(self, "rom_")
        return self.basis_.project(self.lifting_.lift(state))

    def predict(self, n_steps: int, keep_reduced: bool = False):
        """Forecast n_steps from the training initial state.

        Returns reconstructed [q, p] sample rows; with ``keep_reduced``
        the raw reduced trajectory is returned alongside.
        """
        check_is_fitted(self, "rom_")
        rom = self.rom_
        if self.integrator == "kahan":
            traj = integrate_kahan(rom.Ar, rom.Br, self.y0_, self._config(n_steps))
        else:
            traj = implicit_midpoint(
                rom.rhs(), self.y0_, self._config(n_steps), jac=rom.jacobian()
            )
        off = rom.offsets()
        r = self.n_modes
        Phi = self.phi_.matrix
        Qh = traj.states_rows[:, off["q"] : off["q"] + r]
        Ph = traj.states_rows[:, off["p"] : off["p"] + r]
        X = np.hstack([Qh @ Phi.T, Ph @ Phi.T])
        if keep_reduced:
            return X, traj
        return X

    def lifted_energy_series(self, traj) -> np.ndarray:
        return np.array(
            [reduced_lifted_energy(self.rom_, y) for y in traj.states_rows]
        )


class StandardLiftingRom(LiftingRom):
    """Quadratic ROM from the standard (equation-driven) sine-Gordon lifting."""

    def fit(self, X, y=None):
        Q, P = self._split(X)
        lifting = standard_lifting_sg(self.model.model)
        lifted = build_standard_lifting_sg(self.model.D, self.model.model)
        phi = cotangent_lift(Q, P, self.n_modes)
        basis = build_lifted_basis(phi, lifting.lift_snapshots(Q), self.n_modes)
        self.lifting_ = lifting
        self.lifted_ = lifted
        self.phi_ = phi
        self.basis_ = basis
        self.rom_ = build_quadratic_rom(lifted, basis)
        self.y0_ = basis.project(lifting.lift(FomState(q=Q[:, 0], p=P[:, 0])))
        return self


class PsdRom(_SnapshotReducer):
    """Cotangent-lift PSD ROM, integrated with the implicit midpoint rule."""

    def fit(self, X, y=None):
        Q, P = self._split(X)
        self.phi_ = cotangent_lift(Q, P, self.n_modes)
        self.rom_ = build_psd_rom(self.model, self.phi_)
        self.y0_ = np.concatenate(
            [self.phi_.matrix.T @ Q[:, 0], self.phi_.matrix.T @ P[:, 0]]
        )
        return self

    def predict(self, n_steps: int, keep_reduced: bool = False):
        check_is_fitted(self, "rom_")
        traj = implicit_midpoint(
            self.rom_.rhs(), self.y0_, self._config(n_steps),
            jac=self.rom_.jacobian(),
        )
        r = self.n_modes
        Phi = self.phi_.matrix
        X = np.hstack(
            [traj.states_rows[:, :r] @ Phi.T, traj.states_rows[:, r:] @ Phi.T]
        )
        if keep_reduced:
            return X, traj
        return X


class SpdeimRom(_SnapshotReducer):
    """spDEIM hyper-reduced Hamiltonian ROM.

    ``n_deim`` is the number of DEIM modes m.
    """

    def __init__(self, model, n_modes=5, dt=0.01, n_deim=10):
        super().__init__(model, n_modes, dt)
        self.n_deim = n_deim

    def fit(self, X, y=None):
        Q, P = self._split(X)
        self.phi_ = cotangent_lift(Q, P, self.n_modes)
        self.deim_ = build_spdeim(self.model, self.phi_, Q, self.n_deim)
        self.y0_ = np.concatenate(
            [self.phi_.matrix.T @ Q[:, 0], self.phi_.matrix.T @ P[:, 0]]
        )
        return self

    def predict(self, n_steps: int, keep_reduced: bool = False):
        check_is_fitted(self, "deim_")
        traj = implicit_midpoint(
            spdeim_rhs(self.deim_), self.y0_, self._config(n_steps),
            jac=spdeim_jacobian(self.deim_),
        )
        r = self.n_modes
        Phi = self.phi_.matrix
        X = np.hstack(
            [traj.states_rows[:, :r] @ Phi.T, traj.states_rows[:, r:] @ Phi.T]
        )
        if keep_reduced:
            return X, traj
        return X
