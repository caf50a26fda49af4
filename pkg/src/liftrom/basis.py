"""POD and cotangent-lift bases from snapshot data.

The functional layer works on snapshot matrices with one column per time
instant (n x K).  On top of it, :class:`PodBasis` and
:class:`CotangentLiftBasis` expose the usual scikit-learn transformer
API (samples as rows) so the bases compose with pipelines and
cross-validation machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted


@dataclass(frozen=True)
class SnapshotSet:
    """Labeled snapshot matrices sharing K time-ordered columns."""

    model: str
    fields: dict[str, np.ndarray]  # label -> (n, K)
    t: np.ndarray
    mu: float | None = None

    def __post_init__(self):
        K = self.t.size
        for label, M in self.fields.items():
            if M.ndim != 2 or M.shape[1] != K:
                raise ValueError(f"snapshot block {label!r} must have {K} columns")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("time stamps must be strictly increasing")

    def __getitem__(self, label: str) -> np.ndarray:
        return self.fields[label]

    @property
    def n_snapshots(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class OrthonormalBasis:
    """Matrix with orthonormal columns plus the full singular spectrum."""

    matrix: np.ndarray  # (n, r)
    singular_values: np.ndarray  # complete, nonincreasing

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def r(self) -> int:
        return self.matrix.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.matrix.T @ x

    def reconstruct(self, xr: np.ndarray) -> np.ndarray:
        return self.matrix @ xr


def _fix_signs(U: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: largest-magnitude entry positive.

    Ties resolve to the lowest row index (argmax returns the first
    maximum), so identical inputs give bit-identical bases.
    """
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def truncated_svd(M: np.ndarray, r: int) -> OrthonormalBasis:
    """Leading r left singular vectors of a snapshot matrix.

    Uses a deterministic dense SVD; the retained singular spectrum is the
    complete one so callers can evaluate tail energies.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("snapshot matrix must be 2-d")
    if not np.all(np.isfinite(M)):
        raise ValueError("snapshot matrix contains non-finite entries")
    if not 1 <= r <= min(M.shape):
        raise ValueError(f"rank r={r} outside [1, min(n, K)={min(M.shape)}]")
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return OrthonormalBasis(matrix=_fix_signs(U[:, :r]).copy(), singular_values=s)


def choose_rank(singular_values: np.ndarray, energy_tol: float = 1e-8) -> int:
    """Smallest r retaining an energy fraction of at least 1 - energy_tol."""
    energy = np.cumsum(singular_values**2)
    total = energy[-1]
    if total == 0.0:
        return 1
    frac = energy / total
    return int(np.searchsorted(frac, 1.0 - energy_tol) + 1)


def cotangent_lift(Q: np.ndarray, P: np.ndarray, r: int) -> OrthonormalBasis:
    """PSD basis Phi from the SVD of the extended snapshot matrix [Q, P].

    The block-diagonal matrix blkdiag(Phi, Phi) is orthonormal and
    symplectic with respect to the canonical structure.
    """
    if Q.shape != P.shape:
        raise ValueError("Q and P snapshot matrices must be conformal")
    return truncated_svd(np.hstack([Q, P]), r)


@dataclass(frozen=True)
class BlockDiagonalBasis:
    """Ordered per-field bases forming blkdiag(B_1, ..., B_m).

    Repeated labels may share one :class:`OrthonormalBasis` object (the
    cotangent lift shares Phi across q and p; the KGZ joint basis shares
    V_joint across varphi, phi and w).
    """

    blocks: tuple[tuple[str, OrthonormalBasis], ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.blocks)

    @property
    def shape(self) -> tuple[int, int]:
        n = sum(b.n for _, b in self.blocks)
        r = sum(b.r for _, b in self.blocks)
        return (n, r)

    def block(self, label: str) -> OrthonormalBasis:
        for lab, b in self.blocks:
            if lab == label:
                return b
        raise KeyError(label)

    def full_offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for label, b in self.blocks:
            out[label] = pos
            pos += b.n
        return out

    def reduced_offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for label, b in self.blocks:
            out[label] = pos
            pos += b.r
        return out

    def matrix(self) -> sp.csr_matrix:
        return sp.block_diag([b.matrix for _, b in self.blocks], format="csr")

    def project(self, ybar: np.ndarray) -> np.ndarray:
        parts, pos = [], 0
        for _, b in self.blocks:
            parts.append(b.matrix.T @ ybar[pos : pos + b.n])
            pos += b.n
        return np.concatenate(parts)

    def reconstruct(self, yhat: np.ndarray) -> np.ndarray:
        parts, pos = [], 0
        for _, b in self.blocks:
            parts.append(b.matrix @ yhat[pos : pos + b.r])
            pos += b.r
        return np.concatenate(parts)

    def reduced_block(self, yhat: np.ndarray, label: str) -> np.ndarray:
        """Slice one labeled block out of a reduced vector or matrix."""
        pos = self.reduced_offsets()[label]
        r = self.block(label).r
        return yhat[pos : pos + r]


def build_lifted_basis(
    phi: OrthonormalBasis, lifted_snapshots: list[np.ndarray], r: int
) -> BlockDiagonalBasis:
    """blkdiag(Phi, Phi, V_1, ..., V_k) with V_i from SVD of W_i."""
    blocks = [("q", phi), ("p", phi)]
    for i, W in enumerate(lifted_snapshots, start=1):
        if W.shape[0] != phi.n:
            raise ValueError("lifted snapshot rows must match Phi")
        blocks.append((f"w{i}", truncated_svd(W, r)))
    return BlockDiagonalBasis(blocks=tuple(blocks))


def build_kgz_basis(
    phi: OrthonormalBasis,
    varphi_snapshots: np.ndarray,
    phi_field_snapshots: np.ndarray,
    w_snapshots: np.ndarray,
    r: int,
    joint: bool = True,
) -> BlockDiagonalBasis:
    """Seven-block KGZ basis.

    With ``joint=True`` (the energy-conserving choice) one basis V_joint
    is computed from the horizontally concatenated phi, varphi and w
    snapshots and shared across those three blocks.  With ``joint=False``
    the varphi/phi blocks share a basis from [varphi, phi] while w gets
    its own POD basis, which breaks exact conservation at the reduced
    level.
    """
    if joint:
        vj = truncated_svd(
            np.hstack([phi_field_snapshots, varphi_snapshots, w_snapshots]), r
        )
        tail = [("varphi", vj), ("phi", vj), ("w", vj)]
    else:
        v = truncated_svd(np.hstack([varphi_snapshots, phi_field_snapshots]), r)
        v1 = truncated_svd(w_snapshots, r)
        tail = [("varphi", v), ("phi", v), ("w", v1)]
    blocks = [("q1", phi), ("q2", phi), ("p1", phi), ("p2", phi)] + tail
    return BlockDiagonalBasis(blocks=tuple(blocks))


def projection_error(basis: OrthonormalBasis, snapshots: np.ndarray) -> np.ndarray:
    """Per-column relative error ||s - Phi Phi' s|| / ||s||.

    Zero-norm columns report 0 when their projection is also zero and
    raise otherwise (that case indicates corrupted data).
    """
    snapshots = np.atleast_2d(np.asarray(snapshots, dtype=float))
    if snapshots.shape[0] != basis.n:
        raise ValueError("snapshot rows must match basis")
    resid = snapshots - basis.matrix @ (basis.matrix.T @ snapshots)
    norms = np.linalg.norm(snapshots, axis=0)
    rnorms = np.linalg.norm(resid, axis=0)
    out = np.zeros_like(norms)
    nz = norms > 0
    out[nz] = rnorms[nz] / norms[nz]
    if np.any(~nz & (rnorms > 0)):
        raise ValueError("zero-norm column with nonzero projection residual")
    return out


class PodBasis(TransformerMixin, BaseEstimator):
    """Proper orthogonal decomposition as a scikit-learn transformer.

    Snapshots are passed with one sample (time instant) per row, matching
    the scikit-learn convention; internally the basis is computed from
    the transposed n x K snapshot matrix.  No centering is applied.

    Parameters
    ----------
    n_modes : int or None
        Number of retained modes.  When None the rank is chosen so the
        retained singular-value energy fraction is at least
        ``1 - energy_tol``.
    energy_tol : float
        Tail-energy tolerance for the automatic rank rule.
    """

    def __init__(self, n_modes: int | None = None, energy_tol: float = 1e-8):
        self.n_modes = n_modes
        self.energy_tol = energy_tol

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        M = X.T
        if self.n_modes is None:
            spectrum = np.linalg.svd(M, compute_uv=False)
            r = choose_rank(spectrum, self.energy_tol)
        else:
            r = self.n_modes
        pod = truncated_svd(M, r)
        self.basis_ = pod
        self.components_ = pod.matrix.T
        self.singular_values_ = pod.singular_values
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X, dtype=float)
        return X @ self.basis_.matrix

    def inverse_transform(self, Xr):
        check_is_fitted(self, "basis_")
        Xr = check_array(Xr, dtype=float)
        return Xr @ self.basis_.matrix.T


class CotangentLiftBasis(TransformerMixin, BaseEstimator):
    """Cotangent-lift PSD basis as a scikit-learn transformer.

    Each sample row stacks [q, p] (2n features).  ``fit`` computes Phi
    from the extended snapshot matrix [Q, P]; ``transform`` returns the
    stacked reduced coordinates [q_hat, p_hat] (2r features).
    """

    def __init__(self, n_modes: int = 1):
        self.n_modes = n_modes

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] % 2:
            raise ValueError("each row must stack [q, p] with equal lengths")
        n = X.shape[1] // 2
        self.basis_ = cotangent_lift(X[:, :n].T, X[:, n:].T, self.n_modes)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X, dtype=float)
        n = X.shape[1] // 2
        phi = self.basis_.matrix
        return np.hstack([X[:, :n] @ phi, X[:, n:] @ phi])

    def inverse_transform(self, Xr):
        check_is_fitted(self, "basis_")
        Xr = check_array(Xr, dtype=float)
        r = Xr.shape[1] // 2
        phi = self.basis_.matrix
        return np.hstack([Xr[:, :r] @ phi.T, Xr[:, r:] @ phi.T])
