"""Galerkin projection of lifted operators and the PSD Hamiltonian baseline.

The quadratic operator is projected by the three-mode contraction
(mode-1, then mode-2, then mode-3), touching only the nonzero columns of
the sparse lifted operator, so the cost scales with nnz(B) and the
reduced dimensions rather than nbar^2.  For block-diagonal bases the
contraction runs group-by-group over the (row-block, i-block, j-block)
combinations present in the triples, which keeps the temporaries at
O(n * r) even for large grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .basis import BlockDiagonalBasis, OrthonormalBasis
from .integrators import quadratic_jacobian, quadratic_rhs
from .lifting import LiftedModel, QuadraticOperator
from .models import FomModel


@dataclass(frozen=True)
class QuadraticRom:
    """Dense reduced quadratic system with its reduced energy form.

    dyhat/dt = Ar yhat + Br (yhat kron yhat), and
    E(yhat) = 0.5 yhat' Hr yhat + lin' yhat + const equals the lifted
    energy of the reconstructed state exactly.
    """

    model: str
    Ar: np.ndarray
    Br: np.ndarray  # (rbar, rbar^2) mode-1 matricization
    Hr: np.ndarray
    lin: np.ndarray
    const: float
    layout: tuple[tuple[str, int], ...]  # reduced block layout

    @property
    def rbar(self) -> int:
        return self.Ar.shape[0]

    def offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for label, r in self.layout:
            out[label] = pos
            pos += r
        return out

    def block(self, yhat: np.ndarray, label: str) -> np.ndarray:
        pos = self.offsets()[label]
        r = dict(self.layout)[label]
        return yhat[pos : pos + r]

    def rhs(self) -> Callable[[np.ndarray], np.ndarray]:
        return quadratic_rhs(self.Ar, self.Br)

    def jacobian(self) -> Callable[[np.ndarray], np.ndarray]:
        return quadratic_jacobian(self.Ar, self.Br)


def _as_projection_matrix(basis) -> sp.csr_matrix:
    if isinstance(basis, BlockDiagonalBasis):
        return basis.matrix()
    if isinstance(basis, OrthonormalBasis):
        return sp.csr_matrix(basis.matrix)
    return sp.csr_matrix(np.asarray(basis, dtype=float))


def project_linear(A: sp.spmatrix, basis) -> np.ndarray:
    """Dense reduced operator V' A V."""
    V = _as_projection_matrix(basis)
    if A.shape[1] != V.shape[0]:
        raise ValueError("operator and basis dimensions do not match")
    return np.asarray((V.T @ (A @ V)).todense())


def _project_triples(
    rows: np.ndarray, ii: np.ndarray, jj: np.ndarray, vals: np.ndarray,
    Vr: np.ndarray, Vi: np.ndarray, Vj: np.ndarray,
) -> np.ndarray:
    """Three-mode contraction of one triple group onto dense basis blocks.

    Returns the dense (r_row, r_i, r_j) core tensor.  Indices are local
    to the respective blocks.
    """
    r_row, r_i, r_j = Vr.shape[1], Vi.shape[1], Vj.shape[1]
    # Mode 1: collapse rows onto the reduced row space, one column per
    # distinct nonzero (i, j) pair.
    pair_key = ii.astype(np.int64) * Vj.shape[0] + jj
    pairs, pair_idx = np.unique(pair_key, return_inverse=True)
    S = sp.coo_matrix(
        (vals, (rows, pair_idx)), shape=(Vr.shape[0], pairs.size)
    ).tocsr()
    C = Vr.T @ S  # (r_row, n_pairs)
    C = np.asarray(C)
    pair_i = (pairs // Vj.shape[0]).astype(np.intp)
    pair_j = (pairs % Vj.shape[0]).astype(np.intp)
    # Mode 2: contract the i index; group pairs by distinct j.
    uj, j_idx = np.unique(pair_j, return_inverse=True)
    B2 = np.zeros((r_row * r_i, uj.size))
    for col, _ in enumerate(uj):
        sel = j_idx == col
        block = C[:, sel] @ Vi[pair_i[sel], :]  # (r_row, r_i)
        B2[:, col] = block.ravel()
    # Mode 3: contract the j index in a single GEMM.
    core = B2 @ Vj[uj, :]  # (r_row * r_i, r_j)
    return core.reshape(r_row, r_i, r_j)


def _project_quadratic_plain(B: QuadraticOperator, V: np.ndarray) -> np.ndarray:
    rbar = V.shape[1]
    core = _project_triples(B.rows, B.ii, B.jj, B.vals, V, V, V)
    return core.reshape(rbar, rbar * rbar)


def _project_quadratic_blockwise(
    B: QuadraticOperator, basis: BlockDiagonalBasis
) -> np.ndarray:
    full_off = basis.full_offsets()
    red_off = basis.reduced_offsets()
    sizes = {label: b.n for label, b in basis.blocks}
    bounds = np.cumsum([0] + [b.n for _, b in basis.blocks])
    labels = basis.labels
    rbar = basis.shape[1]

    def owner(idx: np.ndarray) -> np.ndarray:
        return np.searchsorted(bounds, idx, side="right") - 1

    row_b, i_b, j_b = owner(B.rows), owner(B.ii), owner(B.jj)
    group_key = (row_b * len(labels) + i_b) * len(labels) + j_b
    Br = np.zeros((rbar, rbar * rbar))
    for key in np.unique(group_key):
        sel = group_key == key
        rb, ib, jb = (
            int(key) // len(labels) ** 2,
            (int(key) // len(labels)) % len(labels),
            int(key) % len(labels),
        )
        lab_r, lab_i, lab_j = labels[rb], labels[ib], labels[jb]
        Vr, Vi, Vj = (basis.blocks[k][1].matrix for k in (rb, ib, jb))
        core = _project_triples(
            B.rows[sel] - full_off[lab_r],
            B.ii[sel] - full_off[lab_i],
            B.jj[sel] - full_off[lab_j],
            B.vals[sel], Vr, Vi, Vj,
        )
        oi, oj = red_off[lab_i], red_off[lab_j]
        orow = red_off[lab_r]
        r_r, r_i, r_j = core.shape
        cols = ((oi + np.arange(r_i))[:, None] * rbar + (oj + np.arange(r_j))).ravel()
        Br[orow : orow + r_r, :][:, cols] += core.reshape(r_r, r_i * r_j)
    return Br


def project_quadratic_sparse(B: QuadraticOperator, basis) -> np.ndarray:
    """Reduced quadratic operator V' B (V kron V) without forming V kron V.

    Returns the dense mode-1 matricization of shape (rbar, rbar^2) under
    the package's Kronecker column convention col = i * rbar + j.
    """
    if np.any(B.ii >= B.nbar) or np.any(B.jj >= B.nbar) or np.any(B.rows >= B.nbar):
        raise ValueError("quadratic operator indices out of range")
    if isinstance(basis, BlockDiagonalBasis):
        if basis.shape[0] != B.nbar:
            raise ValueError("basis and operator dimensions do not match")
        return _project_quadratic_blockwise(B, basis)
    V = basis.matrix if isinstance(basis, OrthonormalBasis) else np.asarray(basis, float)
    if V.shape[0] != B.nbar:
        raise ValueError("basis and operator dimensions do not match")
    return _project_quadratic_plain(B, V)


def build_quadratic_rom(model: LiftedModel, basis: BlockDiagonalBasis) -> QuadraticRom:
    """Galerkin projection of a lifted model onto a block-diagonal basis."""
    if basis.labels != model.labels:
        raise ValueError(
            f"basis blocks {basis.labels} do not match lifted layout {model.labels}"
        )
    Ar = project_linear(model.A, basis)
    Br = project_quadratic_sparse(model.B, basis)
    Hr = project_linear(model.H, basis)
    lin = basis.project(model.lin)
    layout = tuple((label, b.r) for label, b in basis.blocks)
    return QuadraticRom(
        model=model.model, Ar=Ar, Br=Br, Hr=Hr, lin=lin,
        const=model.const, layout=layout,
    )


def rom_rhs(rom: QuadraticRom, yhat: np.ndarray) -> np.ndarray:
    """Ar yhat + Br (yhat kron yhat); the Kronecker vector is rbar^2 only."""
    if yhat.size != rom.rbar:
        raise ValueError("reduced state length does not match ROM dimension")
    return rom.Ar @ yhat + rom.Br @ np.kron(yhat, yhat)


def reduced_lifted_energy(rom: QuadraticRom, yhat: np.ndarray) -> float:
    """Reduced energy; equals lifted_energy(Vbar yhat) for orthonormal bases."""
    if yhat.size != rom.rbar:
        raise ValueError("reduced state length does not match ROM dimension")
    return float(0.5 * yhat @ (rom.Hr @ yhat) + rom.lin @ yhat + rom.const)


def energy_rate_residual(rom: QuadraticRom, yhat: np.ndarray) -> float:
    """Instantaneous d/dt of the reduced lifted energy along the ROM flow.

    Zero (to rounding) for the energy-quadratized liftings, whose reduced
    models conserve the lifted energy by construction; generically nonzero
    for the standard lifting and for non-joint KGZ bases.
    """
    grad = rom.Hr @ yhat + rom.lin
    return float(grad @ rom_rhs(rom, yhat))


@dataclass(frozen=True)
class HamiltonianRom:
    """Cotangent-lift PSD ROM; nonlinearity evaluated at full order.

    dqhat/dt = phat, dphat/dt = Dhat qhat - Phi' f_non(Phi qhat): the
    no-hyper-reduction baseline whose online cost still scales with n.
    """

    model: FomModel
    phi: OrthonormalBasis
    Dhat: np.ndarray

    @property
    def r(self) -> int:
        return self.phi.r

    def rhs(self) -> Callable[[np.ndarray], np.ndarray]:
        r, Phi = self.r, self.phi.matrix
        f_non = self.model.nonlin.f_non

        def f(yhat: np.ndarray) -> np.ndarray:
            if yhat.size != 2 * r:
                raise ValueError("reduced state length does not match ROM")
            qh, ph = yhat[:r], yhat[r:]
            return np.concatenate(
                [ph, self.Dhat @ qh - Phi.T @ f_non(Phi @ qh)]
            )

        return f

    def jacobian(self) -> Callable[[np.ndarray], np.ndarray]:
        r, Phi = self.r, self.phi.matrix
        df_non = self.model.nonlin.df_non

        def jac(yhat: np.ndarray) -> np.ndarray:
            qh = yhat[:r]
            lower = self.Dhat - Phi.T @ (df_non(Phi @ qh)[:, None] * Phi)
            J = np.zeros((2 * r, 2 * r))
            J[:r, r:] = np.eye(r)
            J[r:, :r] = lower
            return J

        return jac

    def hamiltonian(self, yhat: np.ndarray) -> float:
        """Hhat(yhat) = H(V yhat), evaluated at full order."""
        r = self.r
        qh, ph = yhat[:r], yhat[r:]
        return float(
            0.5 * ph @ ph
            - 0.5 * qh @ (self.Dhat @ qh)
            + np.sum(self.model.nonlin.g(self.phi.matrix @ qh))
        )


def build_psd_rom(model: FomModel, phi: OrthonormalBasis) -> HamiltonianRom:
    """Symplectic Galerkin ROM from the cotangent-lift basis."""
    if phi.n != model.n:
        raise ValueError("basis rows must match the model dimension")
    Dhat = phi.matrix.T @ (model.D @ phi.matrix)
    return HamiltonianRom(model=model, phi=phi, Dhat=Dhat)
