import numpy as np
import pytest
from sklearn.base import clone

from liftrom.basis import build_lifted_basis, cotangent_lift
from liftrom.integrators import IntegratorConfig, implicit_midpoint
from liftrom.lifting import lift_fom_model
from liftrom.models import FomState, initial_condition, make_model
from liftrom.reducers import LiftingRom, PsdRom, SpdeimRom, StandardLiftingRom
from liftrom.rom import build_quadratic_rom


@pytest.fixture(scope="module")
def sg_snapshots():
    m = make_model("sine-gordon-1d", 48)
    ic = initial_condition("sine-gordon-1d", m.grid)
    traj = implicit_midpoint(
        m.packed_rhs(), ic.packed(), IntegratorConfig(dt=0.02, t_end=2.0),
        jac=m.packed_jacobian(),
    )
    return m, traj.states_rows  # samples as rows: [q, p]


def test_estimator_params_and_clone(sg_snapshots):
    m, _ = sg_snapshots
    est = LiftingRom(m, n_modes=4, dt=0.02, integrator="midpoint")
    params = est.get_params()
    assert params["n_modes"] == 4 and params["integrator"] == "midpoint"
    est2 = clone(est).set_params(n_modes=3)
    assert est2.get_params()["n_modes"] == 3


def test_lifting_rom_matches_functional_pipeline(sg_snapshots):
    m, X = sg_snapshots
    est = LiftingRom(m, n_modes=4, dt=0.02, integrator="midpoint").fit(X)

    n = m.n
    Q, P = X[:, :n].T, X[:, n:].T
    lifting, lifted = lift_fom_model(m)
    phi = cotangent_lift(Q, P, 4)
    basis = build_lifted_basis(phi, lifting.lift_snapshots(Q), 4)
    rom = build_quadratic_rom(lifted, basis)
    np.testing.assert_allclose(est.rom_.Ar, rom.Ar, atol=1e-13)
    np.testing.assert_allclose(est.rom_.Br, rom.Br, atol=1e-13)

    y0 = basis.project(lifting.lift(FomState(q=Q[:, 0], p=P[:, 0])))
    traj = implicit_midpoint(
        rom.rhs(), y0, IntegratorConfig(dt=0.02, t_end=1.0), jac=rom.jacobian()
    )
    Xp, traj_est = est.predict(50, keep_reduced=True)
    np.testing.assert_allclose(traj_est.states_rows, traj.states_rows, atol=1e-10)
    assert Xp.shape == (51, 2 * n)

    # Midpoint conserves the reduced lifted energy along the forecast.
    E = est.lifted_energy_series(traj_est)
    assert np.abs(E - E[0]).max() <= 1e-10


def test_lifting_rom_kahan_and_reduce(sg_snapshots):
    m, X = sg_snapshots
    est = LiftingRom(m, n_modes=3, dt=0.02, integrator="kahan").fit(X)
    Xp = est.predict(20)
    assert Xp.shape == (21, 2 * m.n)
    yh = est.reduce(FomState(q=X[0, : m.n], p=X[0, m.n :]))
    assert yh.shape == (est.rom_.rbar,)


def test_standard_lifting_rom(sg_snapshots):
    m, X = sg_snapshots
    est = StandardLiftingRom(m, n_modes=3, dt=0.02, integrator="midpoint").fit(X)
    assert est.rom_.rbar == 4 * 3
    assert est.predict(10).shape == (11, 2 * m.n)


def test_psd_rom_estimator(sg_snapshots):
    m, X = sg_snapshots
    est = PsdRom(m, n_modes=4, dt=0.02).fit(X)
    Xp = est.predict(25)
    assert Xp.shape == (26, 2 * m.n)
    # Row 0 is the reconstruction of the projected initial state.
    phi = est.phi_.matrix
    expected0 = np.concatenate(
        [phi @ (phi.T @ X[0, : m.n]), phi @ (phi.T @ X[0, m.n :])]
    )
    np.testing.assert_allclose(Xp[0], expected0, atol=1e-12)

    with pytest.raises(ValueError):
        PsdRom(m, n_modes=2).fit(X[:, :10])


def test_spdeim_rom_estimator(sg_snapshots):
    m, X = sg_snapshots
    est = SpdeimRom(m, n_modes=3, dt=0.02, n_deim=8).fit(X)
    assert est.deim_.m == 8
    assert est.predict(10).shape == (11, 2 * m.n)
