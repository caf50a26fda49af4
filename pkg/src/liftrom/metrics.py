"""Error and performance metrics for the ROM studies.

The relative state error is the squared-Frobenius ratio
||Q - Phi Qhat||_F^2 / ||Q||_F^2 (squared, not square-rooted), the
efficacy is 1 / (training error * wall seconds) and is reported only
below an accuracy admission threshold, and the FOM energy error is the
absolute drift of the full nonlinear energy evaluated on reconstructed
states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import OrthonormalBasis
from .models import FomModel, FomState, fom_energy

# Admission threshold for the efficacy metric: trivial (inaccurate) ROM
# solutions are excluded from the cost/accuracy comparison.
EFFICACY_ERROR_THRESHOLD = 1e-1


@dataclass
class RegimeMetrics:
    """Per-regime (train/test) error numbers of one ROM run."""

    rel_err_q: float
    rel_err_p: float | None = None
    max_fom_energy_err: float | None = None
    max_lifted_energy_err: float | None = None


@dataclass
class MetricReport:
    """Everything reported for one (model, method, reduced size) cell."""

    model: str
    method: str
    two_r: int
    reduced_dim: int
    regimes: dict[str, RegimeMetrics] = field(default_factory=dict)
    wall_seconds: float | None = None
    efficacy_value: float | None = None
    mu: float | None = None


def relative_state_error(
    Q: np.ndarray, phi: OrthonormalBasis | np.ndarray, Qhat: np.ndarray
) -> float:
    """Squared-Frobenius error ratio of the reconstructed snapshots."""
    Phi = phi.matrix if isinstance(phi, OrthonormalBasis) else np.asarray(phi)
    if Q.shape[1] != Qhat.shape[1] or Phi.shape != (Q.shape[0], Qhat.shape[0]):
        raise ValueError("snapshot, basis and reduced-trajectory shapes disagree")
    ref = np.linalg.norm(Q, "fro") ** 2
    if ref == 0.0:
        raise ValueError("reference snapshots have zero norm")
    return float(np.linalg.norm(Q - Phi @ Qhat, "fro") ** 2 / ref)


def efficacy(rel_error_train: float, wall_seconds: float) -> float | None:
    """1 / (training error * wall seconds); None above the accuracy threshold."""
    if rel_error_train <= 0.0 or wall_seconds <= 0.0:
        raise ValueError("error and wall time must be positive")
    if rel_error_train > EFFICACY_ERROR_THRESHOLD:
        return None
    return 1.0 / (rel_error_train * wall_seconds)


def fom_energy_error(
    model: FomModel, phi: OrthonormalBasis, Qhat: np.ndarray, Phat: np.ndarray
) -> np.ndarray:
    """|E(Phi qhat(t), Phi phat(t)) - E(Phi qhat(0), Phi phat(0))| per sample.

    Evaluates the full nonlinear FOM energy on reconstructed states; this
    costs O(n) per sample and is an offline diagnostic.
    """
    if Qhat.shape != Phat.shape:
        raise ValueError("reduced q and p trajectories must be conformal")
    Phi = phi.matrix
    Qrec, Prec = Phi @ Qhat, Phi @ Phat
    energies = np.array(
        [
            fom_energy(model, FomState(q=Qrec[:, k], p=Prec[:, k]))
            for k in range(Qrec.shape[1])
        ]
    )
    return np.abs(energies - energies[0])


def average_relative_state_error(errors: list[float]) -> float:
    """Arithmetic mean of per-parameter relative state errors."""
    if len(errors) == 0:
        raise ValueError("empty error list")
    return float(np.mean(errors))
