import numpy as np
import pytest

from liftrom.basis import truncated_svd
from liftrom.metrics import (
    average_relative_state_error,
    efficacy,
    fom_energy_error,
    relative_state_error,
)
from liftrom.models import make_model


def _basis(rng, n, r):
    return truncated_svd(rng.normal(size=(n, max(r + 2, 4))), r)


def test_relative_state_error_in_span_is_zero():
    rng = np.random.default_rng(0)
    phi = _basis(rng, 10, 3)
    Q = phi.matrix @ rng.normal(size=(3, 5))
    assert relative_state_error(Q, phi, phi.matrix.T @ Q) <= 1e-25


def test_relative_state_error_zero_prediction_is_one():
    rng = np.random.default_rng(1)
    phi = _basis(rng, 10, 3)
    Q = rng.normal(size=(10, 5))
    assert relative_state_error(Q, phi, np.zeros((3, 5))) == pytest.approx(1.0)


def test_relative_state_error_is_squared_frobenius_ratio_and_scale_invariant():
    rng = np.random.default_rng(2)
    phi = _basis(rng, 12, 4)
    Q = rng.normal(size=(12, 6))
    Qh = rng.normal(size=(4, 6))
    e = relative_state_error(Q, phi, Qh)
    oracle = (
        np.linalg.norm(Q - phi.matrix @ Qh, "fro") ** 2
        / np.linalg.norm(Q, "fro") ** 2
    )
    assert e == pytest.approx(oracle, rel=1e-12)
    assert relative_state_error(3.0 * Q, phi, 3.0 * Qh) == pytest.approx(e, rel=1e-12)


def test_relative_state_error_rejects_zero_reference():
    rng = np.random.default_rng(3)
    phi = _basis(rng, 6, 2)
    with pytest.raises(ValueError):
        relative_state_error(np.zeros((6, 3)), phi, np.zeros((2, 3)))


def test_efficacy_arithmetic_and_threshold():
    assert efficacy(0.01, 10.0) == pytest.approx(10.0)
    assert efficacy(0.1, 1.0) == pytest.approx(10.0)
    # Doubling the wall time halves the efficacy at fixed error.
    assert efficacy(0.01, 20.0) == pytest.approx(efficacy(0.01, 10.0) / 2.0)
    assert efficacy(0.2, 1.0) is None  # above the accuracy threshold
    with pytest.raises(ValueError):
        efficacy(0.0, 1.0)
    with pytest.raises(ValueError):
        efficacy(0.01, 0.0)


def test_fom_energy_error_series():
    rng = np.random.default_rng(4)
    m = make_model("sine-gordon-1d", 12)
    phi = _basis(rng, 12, 3)
    # Constant reconstructed trajectory: all zeros, t = 0 entry included.
    Qh = np.tile(rng.normal(size=(3, 1)), (1, 5))
    Ph = np.tile(rng.normal(size=(3, 1)), (1, 5))
    series = fom_energy_error(m, phi, Qh, Ph)
    np.testing.assert_allclose(series, 0.0, atol=1e-12)

    Qh2 = rng.normal(size=(3, 5))
    series2 = fom_energy_error(m, phi, Qh2, Ph)
    assert series2[0] == 0.0
    assert np.all(series2 >= 0.0)


def test_average_relative_state_error():
    assert average_relative_state_error([0.25]) == pytest.approx(0.25)
    assert average_relative_state_error([0.3, 0.3, 0.3]) == pytest.approx(0.3)
    assert average_relative_state_error([0.1, 0.3]) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        average_relative_state_error([])
