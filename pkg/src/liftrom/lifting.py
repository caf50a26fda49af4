"""Lifting transformations that quadratize dynamics and energy.

The energy-quadratization recipe defines the first auxiliary variable
through ``w1' w1 = kappa^2 * sum g(q_i)`` so the conserved energy becomes
a quadratic form of the augmented state; when needed, a second variable
``w2 = f_non(q) / (kappa_bar * w1)`` quadratizes the vector field.  The
lifted system is

    dybar/dt = A ybar + B (ybar kron ybar)

with A sparse and B holding O(n) coordinate triples, one per grid node
and Hadamard coupling.  The module also provides the standard
(equation-driven) sine-Gordon lifting w1 = sin(q), w2 = cos(q), whose
lifted energy carries a linear term and whose reduced models fail to
conserve it.

Quadratic operators index the Kronecker vector with ``col = i * nbar + j``
for the product ``ybar_i * ybar_j`` (0-based); every projection and
integrator in the package relies on this one convention.  B is stored as
emitted by construction, without (i, j) symmetrization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .models import FomModel, FomState, KgzModel, KgzState

WAVE_MODELS = ("sine-gordon-1d", "sine-gordon-2d", "exp-wave", "klein-gordon")


@dataclass(frozen=True)
class QuadraticOperator:
    """Sparse quadratic operator stored as coordinate triples.

    Row ``rows[k]`` of the mode-1 matricization receives the contribution
    ``vals[k] * y[ii[k]] * y[jj[k]]``.
    """

    nbar: int
    rows: np.ndarray
    ii: np.ndarray
    jj: np.ndarray
    vals: np.ndarray

    @property
    def nnz(self) -> int:
        return self.vals.size

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Evaluate B (y kron y) without materializing the Kronecker vector."""
        if y.size != self.nbar:
            raise ValueError("vector length does not match operator dimension")
        return np.bincount(
            self.rows, weights=self.vals * y[self.ii] * y[self.jj],
            minlength=self.nbar,
        )

    def matricized(self) -> sp.csr_matrix:
        """Sparse (nbar, nbar^2) mode-1 matricization (small cases only)."""
        cols = self.ii.astype(np.int64) * self.nbar + self.jj
        return sp.coo_matrix(
            (self.vals, (self.rows, cols)), shape=(self.nbar, self.nbar**2)
        ).tocsr()


@dataclass(frozen=True)
class LiftingMap:
    """Closed-form lifting maps and the coefficient tables of the lifted dynamics.

    ``taus[i]`` maps q to the auxiliary variable w_{i+1} entrywise.  The
    auxiliary dynamics are ``dw_j/dt = (alpha_j * q + sum_i alpha_{j,i} w_i)
    (.) p``, encoded per equation as a dict from block label ("q" or
    "w<i>") to coefficient.  ``p_coupling = (left, right, c)`` encodes the
    quadratic term ``c * left (.) right`` in dp/dt.
    """

    model: str
    k: int
    taus: tuple[Callable[[np.ndarray], np.ndarray], ...]
    kappa: float
    kappa_bar: float | None
    aux_coeffs: tuple[dict[str, float], ...]
    p_coupling: tuple[str, str, float] | None
    energy_w1_coeff: float
    # Potential the quadratization targets: w1'w1 = kappa^2 * sum g(q_i).
    # For Klein-Gordon this is the parameter-free q^4/4 (mu scales the
    # energy coefficient instead).
    energy_g: Callable[[np.ndarray], np.ndarray] | None = None
    kind: str = "energy"  # "energy" | "standard" | "kgz"

    def lift(self, state: FomState | KgzState) -> np.ndarray:
        """Augmented state ybar = [q, p, w_1, ..., w_k] (KGZ: all seven blocks)."""
        if self.kind == "kgz":
            assert isinstance(state, KgzState)
            w = state.q1**2 + state.q2**2
            return np.concatenate([state.packed(), w])
        assert isinstance(state, FomState)
        return np.concatenate(
            [state.q, state.p] + [tau(state.q) for tau in self.taus]
        )

    def lift_snapshots(self, Q: np.ndarray, Q2: np.ndarray | None = None) -> list[np.ndarray]:
        """Auxiliary snapshot matrices W_i = tau_i(Q) (KGZ: W = Q1^2 + Q2^2)."""
        if self.kind == "kgz":
            return [Q**2 + Q2**2]
        return [tau(Q) for tau in self.taus]


def lifting_for(
    model: str,
    mu: float | None = None,
    kappa: float | None = None,
    kappa_bar: float | None = None,
) -> LiftingMap:
    """Energy-quadratization lifting for one of the supported models.

    ``kappa`` and ``kappa_bar`` are genuinely free scalars; the defaults
    are the per-model choices that make the auxiliary variables the bare
    half-angle / exponential / square maps.
    """
    if model in ("sine-gordon-1d", "sine-gordon-2d"):
        k1 = 1.0 / np.sqrt(2.0) if kappa is None else kappa
        k2 = 2.0 if kappa_bar is None else kappa_bar
        c1 = k1 * np.sqrt(2.0)
        c2 = np.sqrt(2.0) / (k2 * k1)
        return LiftingMap(
            model=model, k=2,
            taus=(
                lambda q, c=c1: c * np.sin(0.5 * q),
                lambda q, c=c2: c * np.cos(0.5 * q),
            ),
            kappa=k1, kappa_bar=k2,
            aux_coeffs=(
                {"w2": 0.5 * k1**2 * k2},
                {"w1": -1.0 / (2.0 * k2 * k1**2)},
            ),
            p_coupling=("w1", "w2", -k2),
            energy_w1_coeff=1.0 / k1**2,
            energy_g=lambda q: 1.0 - np.cos(q),
        )
    if model == "exp-wave":
        k1 = 1.0 if kappa is None else kappa
        return LiftingMap(
            model=model, k=1,
            taus=(lambda q, c=k1: c * np.exp(-0.5 * q),),
            kappa=k1, kappa_bar=None,
            aux_coeffs=({"w1": -0.5},),
            p_coupling=("w1", "w1", 1.0 / k1**2),
            energy_w1_coeff=1.0 / k1**2,
            energy_g=lambda q: np.exp(-q),
        )
    if model == "klein-gordon":
        if mu is None:
            raise ValueError("klein-gordon lifting requires mu")
        k1 = 2.0 if kappa is None else kappa
        return LiftingMap(
            model=model, k=1,
            taus=(lambda q, c=0.5 * k1: c * q**2,),
            kappa=k1, kappa_bar=None,
            aux_coeffs=({"q": k1},),
            p_coupling=("w1", "q", -2.0 * mu / k1),
            energy_w1_coeff=mu / k1**2,
            energy_g=lambda q: 0.25 * q**4,
        )
    if model == "kgz":
        return LiftingMap(
            model=model, k=1, taus=(), kappa=1.0, kappa_bar=None,
            aux_coeffs=(), p_coupling=None, energy_w1_coeff=0.5, kind="kgz",
        )
    raise ValueError(f"no energy-quadratization lifting for model {model!r}")


def standard_lifting_sg(model: str = "sine-gordon-1d") -> LiftingMap:
    """Equation-driven sine-Gordon lifting w1 = sin(q), w2 = cos(q)."""
    if model not in ("sine-gordon-1d", "sine-gordon-2d"):
        raise ValueError("standard lifting is defined for the sine-Gordon models only")
    return LiftingMap(
        model=model, k=2, taus=(np.sin, np.cos),
        kappa=1.0, kappa_bar=None,
        aux_coeffs=({"w2": 1.0}, {"w1": -1.0}),
        p_coupling=None,  # dp/dt couples to w1 linearly
        energy_w1_coeff=0.0,
        kind="standard",
    )


@dataclass(frozen=True)
class LiftedModel:
    """Sparse lifted operators plus the (affine-)quadratic lifted energy.

    E_lift(ybar) = 0.5 * ybar' H ybar + lin' ybar + const; for the
    energy-quadratized liftings the affine part vanishes.
    """

    model: str
    layout: tuple[tuple[str, int], ...]
    A: sp.csr_matrix
    B: QuadraticOperator
    H: sp.csr_matrix
    lin: np.ndarray
    const: float
    lifting: LiftingMap

    @property
    def nbar(self) -> int:
        return sum(n for _, n in self.layout)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.layout)

    def offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for label, n in self.layout:
            out[label] = pos
            pos += n
        return out


def lift_state(lifting: LiftingMap, state: FomState | KgzState) -> np.ndarray:
    if isinstance(state, KgzState) != (lifting.kind == "kgz"):
        raise ValueError("state type does not match the lifting map")
    return lifting.lift(state)


def _wave_lifted_operators(lifting: LiftingMap, D: sp.csr_matrix) -> LiftedModel:
    n = D.shape[0]
    labels = ["q", "p"] + [f"w{i}" for i in range(1, lifting.k + 1)]
    layout = tuple((label, n) for label in labels)
    off = {label: i * n for i, label in enumerate(labels)}
    nbar = len(labels) * n
    eye = sp.identity(n, format="csr")

    A = sp.lil_matrix((nbar, nbar))
    A[off["p"] : off["p"] + n, off["q"] : off["q"] + n] = D
    A[off["q"] : off["q"] + n, off["p"] : off["p"] + n] = eye

    rows, ii, jj, vals = [], [], [], []
    node = np.arange(n)

    def add(row_label, i_label, j_label, coeff):
        rows.append(off[row_label] + node)
        ii.append(off[i_label] + node)
        jj.append(off[j_label] + node)
        vals.append(np.full(n, coeff))

    if lifting.kind == "standard":
        A[off["p"] : off["p"] + n, off["w1"] : off["w1"] + n] = -eye
    else:
        left, right, coeff = lifting.p_coupling
        add("p", left, right, coeff)
    for j, table in enumerate(lifting.aux_coeffs, start=1):
        for src, coeff in table.items():
            if coeff != 0.0:
                add(f"w{j}", src, "p", coeff)

    B = QuadraticOperator(
        nbar=nbar,
        rows=np.concatenate(rows),
        ii=np.concatenate(ii),
        jj=np.concatenate(jj),
        vals=np.concatenate(vals),
    )

    H = sp.lil_matrix((nbar, nbar))
    H[off["p"] : off["p"] + n, off["p"] : off["p"] + n] = eye
    H[off["q"] : off["q"] + n, off["q"] : off["q"] + n] = -D
    lin = np.zeros(nbar)
    const = 0.0
    if lifting.kind == "standard":
        # E_lift = p'p/2 - q'Dq/2 + sum_i (1 - w2_i): affine in w2.
        lin[off["w2"] : off["w2"] + n] = -1.0
        const = float(n)
    else:
        H[off["w1"] : off["w1"] + n, off["w1"] : off["w1"] + n] = (
            2.0 * lifting.energy_w1_coeff
        ) * eye

    return LiftedModel(
        model=lifting.model, layout=layout, A=A.tocsr(), B=B,
        H=H.tocsr(), lin=lin, const=const, lifting=lifting,
    )


def _kgz_lifted_operators(lifting: LiftingMap, D: sp.csr_matrix) -> LiftedModel:
    n = D.shape[0]
    labels = ["q1", "q2", "p1", "p2", "varphi", "phi", "w"]
    layout = tuple((label, n) for label in labels)
    off = {label: i * n for i, label in enumerate(labels)}
    nbar = 7 * n
    eye = sp.identity(n, format="csr")

    def blk(row, col, M, target):
        target[off[row] : off[row] + n, off[col] : off[col] + n] = M

    A = sp.lil_matrix((nbar, nbar))
    blk("q1", "p1", eye, A)
    blk("q2", "p2", eye, A)
    blk("p1", "q1", D - eye, A)
    blk("p2", "q2", D - eye, A)
    blk("varphi", "phi", eye, A)
    blk("varphi", "w", eye, A)
    blk("phi", "varphi", D, A)

    node = np.arange(n)
    triples = [
        ("p1", "phi", "q1", -1.0),
        ("p1", "w", "q1", -1.0),
        ("p2", "phi", "q2", -1.0),
        ("p2", "w", "q2", -1.0),
        ("w", "q1", "p1", 2.0),
        ("w", "q2", "p2", 2.0),
    ]
    rows = np.concatenate([off[r] + node for r, _, _, _ in triples])
    ii = np.concatenate([off[i] + node for _, i, _, _ in triples])
    jj = np.concatenate([off[j] + node for _, _, j, _ in triples])
    vals = np.concatenate([np.full(n, c) for _, _, _, c in triples])
    B = QuadraticOperator(nbar=nbar, rows=rows, ii=ii, jj=jj, vals=vals)

    H = sp.lil_matrix((nbar, nbar))
    blk("p1", "p1", 2.0 * eye, H)
    blk("p2", "p2", 2.0 * eye, H)
    blk("q1", "q1", 2.0 * (eye - D), H)
    blk("q2", "q2", 2.0 * (eye - D), H)
    blk("varphi", "varphi", -D, H)
    blk("phi", "phi", eye, H)
    blk("w", "w", eye, H)
    blk("phi", "w", eye, H)
    blk("w", "phi", eye, H)

    return LiftedModel(
        model="kgz", layout=layout, A=A.tocsr(), B=B, H=H.tocsr(),
        lin=np.zeros(nbar), const=0.0, lifting=lifting,
    )


def build_lifted_operators(lifting: LiftingMap, D: sp.csr_matrix) -> LiftedModel:
    """Assemble the sparse lifted system and its quadratic energy form."""
    if lifting.kind == "kgz":
        return _kgz_lifted_operators(lifting, D)
    if lifting.model not in WAVE_MODELS:
        raise ValueError(f"unsupported model id {lifting.model!r}")
    return _wave_lifted_operators(lifting, D)


def build_standard_lifting_sg(
    D: sp.csr_matrix, model: str = "sine-gordon-1d"
) -> LiftedModel:
    """Lifted sine-Gordon system for the standard lifting w1 = sin(q)."""
    return _wave_lifted_operators(standard_lifting_sg(model), D)


def lifted_rhs(model: LiftedModel, ybar: np.ndarray) -> np.ndarray:
    """A ybar + B (ybar kron ybar), iterating the coordinate triples."""
    if ybar.size != model.nbar:
        raise ValueError("state length does not match lifted dimension")
    return model.A @ ybar + model.B.apply(ybar)


def lifted_energy(model: LiftedModel, ybar: np.ndarray) -> float:
    """Quadratic(-affine) lifted energy 0.5 y'Hy + lin'y + const."""
    if ybar.size != model.nbar:
        raise ValueError("state length does not match lifted dimension")
    return float(0.5 * ybar @ (model.H @ ybar) + model.lin @ ybar + model.const)


def lifted_jacobian(model: LiftedModel) -> Callable[[np.ndarray], np.ndarray]:
    """Jacobian of the lifted RHS, for Newton midpoint solves.

    Dense for small systems (sparse-assembly overhead dominates there),
    sparse otherwise.
    """
    B = model.B
    if model.nbar <= 512:
        A_dense = model.A.toarray()

        def jac_dense(y: np.ndarray) -> np.ndarray:
            J = A_dense.copy()
            np.add.at(J, (B.rows, B.ii), B.vals * y[B.jj])
            np.add.at(J, (B.rows, B.jj), B.vals * y[B.ii])
            return J

        return jac_dense

    def jac(y: np.ndarray) -> sp.csr_matrix:
        C1 = sp.coo_matrix(
            (B.vals * y[B.jj], (B.rows, B.ii)), shape=(B.nbar, B.nbar)
        )
        C2 = sp.coo_matrix(
            (B.vals * y[B.ii], (B.rows, B.jj)), shape=(B.nbar, B.nbar)
        )
        return (model.A + C1 + C2).tocsr()

    return jac


def lift_fom_model(model: FomModel | KgzModel, **kwargs) -> tuple[LiftingMap, LiftedModel]:
    """Convenience: lifting map plus lifted operators of a built FOM."""
    if isinstance(model, KgzModel):
        lifting = lifting_for("kgz")
    else:
        lifting = lifting_for(model.model, mu=model.mu, **kwargs)
    return lifting, build_lifted_operators(lifting, model.D)
