import numpy as np
import pytest
from scipy.optimize import brentq

from liftrom.integrators import (
    IntegrationError,
    IntegratorConfig,
    implicit_midpoint,
    integrate_kahan,
    kahan_step,
    quadratic_jacobian,
    quadratic_rhs,
)


def test_midpoint_linear_step_is_cayley_map():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 5))
    y0 = rng.normal(size=5)
    dt = 0.1
    cfg = IntegratorConfig(dt=dt, t_end=dt)
    traj = implicit_midpoint(lambda y: A @ y, y0, cfg, jac=lambda y: A)
    expected = np.linalg.solve(np.eye(5) - dt / 2 * A, (np.eye(5) + dt / 2 * A) @ y0)
    assert np.abs(traj.final - expected).max() <= 1e-12


def test_midpoint_conserves_quadratic_invariant():
    # Harmonic oscillator: E = (q^2 + p^2)/2 is exactly conserved.
    cfg = IntegratorConfig(dt=0.05, t_end=500.0)
    assert cfg.n_steps == 10_000
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    traj = implicit_midpoint(lambda y: J @ y, np.array([1.0, 0.0]), cfg,
                             jac=lambda y: J)
    energies = 0.5 * np.sum(traj.states_rows**2, axis=1)
    assert np.abs(energies - energies[0]).max() <= 1e-12


def test_midpoint_second_order_on_sine_gordon():
    # Self-refinement oracle: global error at T=1 vs a fine reference.
    from liftrom.models import initial_condition, make_model

    m = make_model("sine-gordon-1d", 50)
    ic = initial_condition("sine-gordon-1d", m.grid).packed()
    rhs, jac = m.packed_rhs(), m.packed_jacobian()

    def final_state(dt):
        traj = implicit_midpoint(
            rhs, ic, IntegratorConfig(dt=dt, t_end=1.0, stride=10**6), jac=jac
        )
        return traj.final

    ref = final_state(1e-4)
    e1 = np.linalg.norm(final_state(0.01) - ref)
    e2 = np.linalg.norm(final_state(0.005) - ref)
    assert e1 / e2 == pytest.approx(4.0, rel=0.2)


def test_midpoint_picard_matches_newton():
    rng = np.random.default_rng(1)
    A = -np.eye(4) + 0.1 * rng.normal(size=(4, 4))
    y0 = rng.normal(size=4)
    rhs = lambda y: A @ y + 0.05 * y**2
    newton = implicit_midpoint(rhs, y0, IntegratorConfig(dt=0.01, t_end=1.0))
    picard = implicit_midpoint(
        rhs, y0, IntegratorConfig(dt=0.01, t_end=1.0, solver="picard")
    )
    assert np.abs(newton.final - picard.final).max() <= 1e-10


def test_midpoint_nonconvergence_reports_step():
    # Blow-up: dy/dt = y^2 from y = 1 with a huge step; Picard diverges.
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(IntegrationError, match="step"):
            implicit_midpoint(
                lambda y: y**2, np.array([1.0]),
                IntegratorConfig(dt=5.0, t_end=50.0, solver="picard", max_iter=10),
            )


def test_midpoint_rejects_bad_inputs():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=-0.1, t_end=1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.1, t_end=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.1, t_end=1.0, solver="rk4")
    with pytest.raises(ValueError):
        implicit_midpoint(
            lambda y: y, np.array([np.inf]), IntegratorConfig(dt=0.1, t_end=1.0)
        )


def test_kahan_reduces_to_cayley_for_linear_fields():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(4, 4))
    B = np.zeros((4, 16))
    y0 = rng.normal(size=4)
    dt = 0.05
    got = kahan_step(A, B, y0, dt)
    expected = np.linalg.solve(np.eye(4) - dt / 2 * A, (np.eye(4) + dt / 2 * A) @ y0)
    assert np.abs(got - expected).max() <= 1e-13


def test_kahan_logistic_step_against_root_solve_oracle():
    # Oracle: numerically solve the defining step equation
    # (z - y)/dt = (z + y)/2 + B((z kron y) + (y kron z))/2 with A = 1, B = -1.
    A = np.array([[1.0]])
    B = np.array([[-1.0]])
    for y, dt in [(0.2, 0.1), (0.9, 0.05), (1.5, 0.2), (0.5, 0.5)]:
        f = lambda z: (z - y) / dt - 0.5 * (z + y) + z * y
        oracle = brentq(f, -10.0, 10.0, xtol=1e-15)
        got = kahan_step(A, B, np.array([y]), dt)[0]
        assert got == pytest.approx(oracle, abs=1e-12)


def test_kahan_second_order_and_time_symmetric():
    rng = np.random.default_rng(3)
    r = 4
    A = 0.5 * rng.normal(size=(r, r))
    A = A - A.T
    B = 0.1 * rng.normal(size=(r, r * r))
    y0 = rng.normal(size=r)

    def final_state(dt):
        cfg = IntegratorConfig(dt=dt, t_end=1.0, stride=10**6)
        return integrate_kahan(A, B, y0, cfg).final

    rhs, jac = quadratic_rhs(A, B), quadratic_jacobian(A, B)
    ref = implicit_midpoint(
        rhs, y0, IntegratorConfig(dt=1e-4, t_end=1.0, stride=10**6), jac=jac
    ).final
    e1 = np.linalg.norm(final_state(0.02) - ref)
    e2 = np.linalg.norm(final_state(0.01) - ref)
    assert e1 / e2 == pytest.approx(4.0, rel=0.2)

    # Time symmetry: one step forward then one step backward returns y0.
    y1 = kahan_step(A, B, y0, 0.05)
    back = kahan_step(A, B, y1, -0.05)
    assert np.abs(back - y0).max() <= 1e-10


def test_kahan_singular_step_matrix_reports_dt():
    # 1/dt - A/2 - By = 0 at y = 1, A = 0, B = 1, dt = 1.
    A = np.array([[0.0]])
    B = np.array([[1.0]])
    with pytest.raises(IntegrationError, match="dt"):
        kahan_step(A, B, np.array([1.0]), 1.0)


def test_trajectory_stride_and_callback():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    seen = []
    cfg = IntegratorConfig(dt=0.1, t_end=1.0, stride=3)
    traj = implicit_midpoint(
        lambda y: A @ y, np.array([1.0, 0.0]), cfg, jac=lambda y: A,
        callback=lambda k, t, y: seen.append(k),
    )
    assert seen == list(range(1, 11))
    np.testing.assert_allclose(traj.t, [0.0, 0.3, 0.6, 0.9, 1.0])
