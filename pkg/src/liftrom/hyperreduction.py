"""Structure-preserving DEIM (spDEIM) for the Hamiltonian ROM baseline.

The reduced nonlinear Hamiltonian decomposes as 1' h(Phi qhat) with
h(x) = [g(x_1), ..., g(x_n)]'.  Its gradient involves the reduced
Jacobian diag(g'(Phi qhat)) Phi, which spDEIM approximates with the
oblique DEIM projector applied from the left:

    diag(g'(Phi qhat)) Phi  ~  V (P'V)^{-1} P' diag(g'(Phi qhat)) Phi.

After precomputation the online gradient touches only the m sampled grid
rows, so the cost is independent of the full dimension n, and the RHS is
exactly J * grad of the hyper-reduced Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as la

from .basis import OrthonormalBasis, truncated_svd
from .models import FomModel


def collect_jacobian_snapshots(
    model: FomModel, phi: OrthonormalBasis, Q: np.ndarray
) -> np.ndarray:
    """Reduced-Jacobian snapshot matrix of shape (n, r*K).

    For each snapshot column q_j the block diag(g'(Phi Phi' q_j)) Phi is
    appended, i.e. the Jacobian of the reduced nonlinear term evaluated
    at the projected snapshot.
    """
    if Q.shape[0] != model.n or phi.n != model.n:
        raise ValueError("snapshots and basis must match the model dimension")
    Phi = phi.matrix
    blocks = []
    Qhat = Phi.T @ Q
    for j in range(Q.shape[1]):
        gprime = model.nonlin.f_non(Phi @ Qhat[:, j])
        blocks.append(gprime[:, None] * Phi)
    return np.hstack(blocks)


def deim_points(v_deim: np.ndarray) -> np.ndarray:
    """Classic greedy DEIM interpolation-point selection.

    The first index maximizes |column 1|; each next index maximizes the
    residual after the interpolatory fit of the next column on the
    already-chosen rows.  Ties break to the lowest index (argmax).
    """
    V = np.asarray(v_deim, dtype=float)
    if V.ndim != 2:
        raise ValueError("DEIM basis must be a matrix")
    m = V.shape[1]
    idx = [int(np.argmax(np.abs(V[:, 0])))]
    for l in range(1, m):
        U = V[:, :l]
        PU = U[idx, :]
        try:
            c = np.linalg.solve(PU, V[idx, l])
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                f"rank-deficient interpolation matrix at DEIM step {l}"
            ) from exc
        resid = V[:, l] - U @ c
        idx.append(int(np.argmax(np.abs(resid))))
    return np.array(idx, dtype=np.intp)


@dataclass(frozen=True)
class DeimModel:
    """Precomputed hyper-reduction data for the spDEIM ROM.

    Everything the online stage touches (``sampled_phi``, ``weights``,
    ``Dhat``) has dimensions in {r, m}; the full-size DEIM basis and the
    interpolation factorization are offline artifacts kept for
    diagnostics and serialization.
    """

    model: FomModel
    v_deim: np.ndarray  # (n, m) orthonormal
    indices: np.ndarray  # m distinct row indices
    sampled_phi: np.ndarray  # (m, r) rows of Phi at the selected points
    lu: tuple  # LU factorization of (P' V_deim)
    ones_proj: np.ndarray  # V_deim' 1
    weights: np.ndarray  # (P' V_deim)^{-T} V_deim' 1, the online vector
    Dhat: np.ndarray  # (r, r) reduced Laplacian
    cond: float  # condition number of (P' V_deim)

    @property
    def m(self) -> int:
        return self.indices.size

    @property
    def r(self) -> int:
        return self.sampled_phi.shape[1]

    def online_arrays(self) -> dict[str, np.ndarray]:
        """Arrays the online RHS is allowed to touch (sizes in {r, m})."""
        return {
            "sampled_phi": self.sampled_phi,
            "weights": self.weights,
            "Dhat": self.Dhat,
        }


def build_spdeim(
    model: FomModel,
    phi: OrthonormalBasis,
    Q: np.ndarray,
    m: int,
    jacobian_snapshots: np.ndarray | None = None,
) -> DeimModel:
    """DEIM basis from reduced-Jacobian snapshots plus greedy points."""
    if jacobian_snapshots is None:
        jacobian_snapshots = collect_jacobian_snapshots(model, phi, Q)
    v = truncated_svd(jacobian_snapshots, m).matrix
    idx = deim_points(v)
    if np.unique(idx).size != idx.size:
        raise ValueError("DEIM selected duplicate interpolation points")
    PV = v[idx, :]
    lu = la.lu_factor(PV)
    ones_proj = v.T @ np.ones(v.shape[0])
    weights = la.lu_solve(lu, ones_proj, trans=1)
    Dhat = phi.matrix.T @ (model.D @ phi.matrix)
    return DeimModel(
        model=model, v_deim=v, indices=idx, sampled_phi=phi.matrix[idx, :],
        lu=lu, ones_proj=ones_proj, weights=weights, Dhat=Dhat,
        cond=float(np.linalg.cond(PV)),
    )


def spdeim_hamiltonian(deim: DeimModel, yhat: np.ndarray) -> float:
    """Hyper-reduced Hamiltonian, assembled from the m sampled rows only."""
    r = deim.r
    qh, ph = yhat[:r], yhat[r:]
    sampled_g = deim.model.nonlin.g(deim.sampled_phi @ qh)
    return float(
        0.5 * ph @ ph - 0.5 * qh @ (deim.Dhat @ qh) + deim.weights @ sampled_g
    )


def spdeim_rhs(deim: DeimModel) -> Callable[[np.ndarray], np.ndarray]:
    """Online RHS J * grad(H_spDEIM); cost independent of n.

    dqhat/dt = phat and dphat/dt = Dhat qhat - Phi_s' (g'(Phi_s qhat) .* u)
    with Phi_s the m sampled rows of Phi and u the precomputed
    (P'V)^{-T} V' 1 weight vector.
    """
    r = deim.r
    phi_s, u, Dhat = deim.sampled_phi, deim.weights, deim.Dhat
    f_non = deim.model.nonlin.f_non

    def f(yhat: np.ndarray) -> np.ndarray:
        if yhat.size != 2 * r:
            raise ValueError("reduced state length does not match ROM")
        qh, ph = yhat[:r], yhat[r:]
        grad_non = phi_s.T @ (f_non(phi_s @ qh) * u)
        return np.concatenate([ph, Dhat @ qh - grad_non])

    return f


def spdeim_jacobian(deim: DeimModel) -> Callable[[np.ndarray], np.ndarray]:
    r = deim.r
    phi_s, u, Dhat = deim.sampled_phi, deim.weights, deim.Dhat
    df_non = deim.model.nonlin.df_non

    def jac(yhat: np.ndarray) -> np.ndarray:
        qh = yhat[:r]
        lower = Dhat - phi_s.T @ ((df_non(phi_s @ qh) * u)[:, None] * phi_s)
        J = np.zeros((2 * r, 2 * r))
        J[:r, r:] = np.eye(r)
        J[r:, :r] = lower
        return J

    return jac
