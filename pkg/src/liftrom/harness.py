"""Configuration-driven experiment runner.

Reproduces the benchmark studies at desk scale (native grids behind
``native_scale=True``): the 1D sine-Gordon lifting comparison, the
exponential-wave method sweep, the 2D sine-Gordon sweep, the parametric
Klein-Gordon study and the Klein-Gordon-Zakharov study.

Pipeline per experiment: (1) simulate the conservative FOM and persist
snapshots, (2) lift the training snapshots through the closed-form maps
(the lifted system is never simulated for data), (3) build bases from
the training window only, (4) project operators, (5) integrate the ROMs
over the full train+test horizon from the projected initial state,
(6) emit metrics, timings and offline-cost accounting.

FOM snapshots are the dominant cost and are reused from disk when
already present with a matching shape; later stages are cheap and are
recomputed deterministically, overwriting their artifacts.

CSV column notes: for KGZ rows, ``rel_err_q`` holds the error in the
complex field psi and ``rel_err_p`` the error in the density field phi.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .basis import (
    BlockDiagonalBasis,
    OrthonormalBasis,
    build_kgz_basis,
    build_lifted_basis,
    cotangent_lift,
)
from .config import ExperimentConfig, MethodSpec
from .hyperreduction import (
    DeimModel,
    build_spdeim,
    collect_jacobian_snapshots,
    spdeim_jacobian,
    spdeim_rhs,
)
from .integrators import IntegratorConfig, implicit_midpoint, integrate_kahan
from .lifting import (
    LiftedModel,
    LiftingMap,
    build_lifted_operators,
    build_standard_lifting_sg,
    lifting_for,
    standard_lifting_sg,
)
from .metrics import (
    MetricReport,
    RegimeMetrics,
    average_relative_state_error,
    efficacy,
    fom_energy_error,
    relative_state_error,
)
from .models import FomModel, FomState, initial_condition, make_model, with_mu
from .rom import (
    QuadraticRom,
    build_psd_rom,
    build_quadratic_rom,
    project_linear,
    project_quadratic_sparse,
    reduced_lifted_energy,
    rom_rhs,
)
from .storage import (
    emit_metrics_csv,
    emit_series_csv,
    emit_timings_csv,
    load_matrix,
    save_linear_operator,
    save_matrix,
    save_quadratic_operator,
)

KGZ_SNAPSHOT_FIELDS = ("q1", "q2", "p1", "p2", "varphi", "phi")


@dataclass
class OfflineCost:
    model: str
    method: str
    two_r: int
    component: str
    seconds: float
    mu: float | None = None


@dataclass
class ExperimentResult:
    reports: list[MetricReport]
    offline_costs: list[OfflineCost]
    fom_wall_seconds: float
    diagnostics: dict = field(default_factory=dict)


def _median_timed(fn, runs: int):
    """Run fn() `runs` times; return (last result, median wall seconds)."""
    times = []
    result = None
    for _ in range(max(1, runs)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, float(np.median(times))


def _train_test_split(t: np.ndarray, train_t_end: float):
    train = t <= train_t_end + 1e-12
    return train, ~train


class ExperimentRunner:
    """Runs one configured experiment; each stage persists its artifacts."""

    def __init__(self, config: ExperimentConfig, native_scale: bool = False):
        self.config = config.at_native_scale() if native_scale else config
        self.out = Path(self.config.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.rng = np.random.default_rng(self.config.seed)
        self._snapshots: dict = {}
        self._phi_cache: dict[int, OrthonormalBasis] = {}
        self._basis_cache: dict[tuple, BlockDiagonalBasis] = {}
        self.fom_wall: float = 0.0

    # ------------------------------------------------------------------
    # stage 1: FOM simulation and snapshot persistence
    # ------------------------------------------------------------------

    def _snapshot_dir(self, mu: float | None) -> Path:
        d = self.out / "snapshots"
        if mu is not None:
            d = d / f"mu_{mu:g}"
        d.mkdir(parents=True, exist_ok=True)
        return d

    def _fom_config(self, solver: str = "newton") -> IntegratorConfig:
        return IntegratorConfig(
            dt=self.config.dt, t_end=self.config.test_t_end, solver=solver,
            stride=self.config.snapshot_stride,
        )

    def _simulate_wave(self, mu: float | None) -> dict:
        cfg = self.config
        model = make_model(cfg.model, cfg.nx, cfg.ny, mu=mu)
        sdir = self._snapshot_dir(mu)
        paths = [sdir / "Q.splm", sdir / "P.splm", sdir / "t.splm"]
        if all(p.exists() for p in paths):
            Q, P, t = (load_matrix(p) for p in paths)
            t = t.ravel()
            if Q.shape[0] == model.n and t.size == Q.shape[1]:
                return {"model": model, "Q": Q, "P": P, "t": t}
        ic = initial_condition(cfg.model, model.grid, mu=mu)
        t0 = time.perf_counter()
        traj = implicit_midpoint(
            model.packed_rhs(), ic.packed(), self._fom_config(),
            jac=model.packed_jacobian(),
        )
        self.fom_wall += time.perf_counter() - t0
        n = model.n
        Q, P = traj.states[:n], traj.states[n:]
        save_matrix(paths[0], Q)
        save_matrix(paths[1], P)
        save_matrix(paths[2], traj.t[None, :])
        return {"model": model, "Q": Q, "P": P, "t": traj.t}

    def _simulate_kgz(self) -> dict:
        cfg = self.config
        model = make_model("kgz", cfg.nx, cfg.ny)
        sdir = self._snapshot_dir(None)
        paths = {lab: sdir / f"{lab.upper()}.splm" for lab in KGZ_SNAPSHOT_FIELDS}
        tpath = sdir / "t.splm"
        if tpath.exists() and all(p.exists() for p in paths.values()):
            blocks = {lab: load_matrix(paths[lab]) for lab in KGZ_SNAPSHOT_FIELDS}
            if blocks["q1"].shape[0] == model.n:
                return {"model": model, "t": load_matrix(tpath).ravel(), **blocks}
        ic = initial_condition("kgz", model.grid)
        t0 = time.perf_counter()
        traj = implicit_midpoint(
            model.packed_rhs(), ic.packed(), self._fom_config(solver="picard")
        )
        self.fom_wall += time.perf_counter() - t0
        n = model.n
        blocks = {
            lab: traj.states[i * n : (i + 1) * n]
            for i, lab in enumerate(KGZ_SNAPSHOT_FIELDS)
        }
        for lab in KGZ_SNAPSHOT_FIELDS:
            save_matrix(paths[lab], blocks[lab])
        save_matrix(tpath, traj.t[None, :])
        return {"model": model, "t": traj.t, **blocks}

    def simulate_fom(self) -> dict:
        """Simulate (or reload) every FOM trajectory of the experiment."""
        if self._snapshots:
            return self._snapshots
        cfg = self.config
        if cfg.model == "kgz":
            self._snapshots = {"kgz": self._simulate_kgz()}
        elif cfg.parametric:
            for mu in cfg.mu_train + cfg.mu_test:
                self._snapshots[mu] = self._simulate_wave(mu)
        else:
            self._snapshots[None] = self._simulate_wave(None)
        return self._snapshots

    # ------------------------------------------------------------------
    # stage 2/3: training-window bases, cached and persisted
    # ------------------------------------------------------------------

    def _persist_basis(self, name: str, b: OrthonormalBasis) -> None:
        d = self.out / "bases"
        d.mkdir(parents=True, exist_ok=True)
        save_matrix(d / f"{name}.splm", b.matrix)
        save_matrix(d / f"{name}_sv.splm", b.singular_values[None, :])

    def _training_qp(self) -> tuple[FomModel, np.ndarray, np.ndarray]:
        """Training-window (Q, P) pooled over parameters where applicable."""
        cfg = self.config
        snaps = self.simulate_fom()
        if cfg.parametric:
            Q = np.hstack([snaps[mu]["Q"] for mu in cfg.mu_train])
            P = np.hstack([snaps[mu]["P"] for mu in cfg.mu_train])
            return snaps[cfg.mu_train[0]]["model"], Q, P
        snap = snaps[None]
        mask, _ = _train_test_split(snap["t"], cfg.train_t_end)
        return snap["model"], snap["Q"][:, mask], snap["P"][:, mask]

    def _phi(self, r: int) -> OrthonormalBasis:
        if r not in self._phi_cache:
            cfg = self.config
            if cfg.model == "kgz":
                snap = self.simulate_fom()["kgz"]
                mask, _ = _train_test_split(snap["t"], cfg.train_t_end)
                phi = cotangent_lift(
                    np.hstack([snap["q1"][:, mask], snap["q2"][:, mask]]),
                    np.hstack([snap["p1"][:, mask], snap["p2"][:, mask]]),
                    r,
                )
            else:
                _, Q, P = self._training_qp()
                phi = cotangent_lift(Q, P, r)
            self._persist_basis(f"phi_2r{2 * r}", phi)
            self._phi_cache[r] = phi
        return self._phi_cache[r]

    def _lifting_basis(
        self, lifting: LiftingMap, r: int, tag: str
    ) -> BlockDiagonalBasis:
        key = (tag, r)
        if key not in self._basis_cache:
            _, Q, _ = self._training_qp()
            basis = build_lifted_basis(self._phi(r), lifting.lift_snapshots(Q), r)
            for label, b in basis.blocks:
                if label.startswith("w"):
                    self._persist_basis(f"{tag}_{label}_2r{2 * r}", b)
            self._basis_cache[key] = basis
        return self._basis_cache[key]

    def _kgz_basis(self, r: int, joint: bool) -> BlockDiagonalBasis:
        key = ("kgz-joint" if joint else "kgz-separate", r)
        if key not in self._basis_cache:
            snap = self.simulate_fom()["kgz"]
            mask, _ = _train_test_split(snap["t"], self.config.train_t_end)
            W = snap["q1"] ** 2 + snap["q2"] ** 2
            basis = build_kgz_basis(
                self._phi(r), snap["varphi"][:, mask], snap["phi"][:, mask],
                W[:, mask], r, joint=joint,
            )
            if joint:
                self._persist_basis(f"vjoint_2r{2 * r}", basis.block("w"))
            self._basis_cache[key] = basis
        return self._basis_cache[key]

    def build_bases(self) -> None:
        """Build and persist every basis the configured methods will use."""
        cfg = self.config
        for two_r in cfg.two_r_list:
            r = two_r // 2
            self._phi(r)
            for spec in cfg.methods:
                if spec.name == "lifting" and cfg.model == "kgz":
                    self._kgz_basis(r, joint=True)
                elif spec.name == "lifting":
                    mu = 1.0 if cfg.parametric else None
                    self._lifting_basis(lifting_for(cfg.model, mu=mu), r, "lifting")
                elif spec.name == "standard-lifting":
                    self._lifting_basis(
                        standard_lifting_sg(cfg.model), r, "standard-lifting"
                    )

    # ------------------------------------------------------------------
    # stage 4: reduced operators, persisted
    # ------------------------------------------------------------------

    def _persist_lifted(self, lifted: LiftedModel) -> None:
        d = self.out / "operators"
        d.mkdir(parents=True, exist_ok=True)
        save_linear_operator(d / f"{lifted.model}_A.spso", lifted.A)
        save_quadratic_operator(d / f"{lifted.model}_B.spso", lifted.B)

    def _persist_rom(self, rom: QuadraticRom, label: str, two_r: int, mu=None):
        d = self.out / "roms" / (
            f"{label}_2r{two_r}" + ("" if mu is None else f"_mu{mu:g}")
        )
        d.mkdir(parents=True, exist_ok=True)
        save_matrix(d / "Ar.splm", rom.Ar)
        save_matrix(d / "Br.splm", rom.Br)
        save_matrix(d / "Hr.splm", rom.Hr)

    def _persist_deim(self, deim: DeimModel, label: str, two_r: int) -> None:
        d = self.out / "roms" / f"{label}_2r{two_r}"
        d.mkdir(parents=True, exist_ok=True)
        save_matrix(d / "Vdeim.splm", deim.v_deim)
        save_matrix(d / "indices.splm", deim.indices[None, :].astype(float))
        save_matrix(d / "weights.splm", deim.weights[None, :])
        save_matrix(d / "Dhat.splm", deim.Dhat)

    def build_roms(self) -> None:
        """Build and persist reduced operators for all (method, 2r) cells."""
        self.build_bases()
        cfg = self.config
        for two_r in cfg.two_r_list:
            r = two_r // 2
            for spec in cfg.methods:
                if spec.name in ("lifting", "standard-lifting"):
                    rom, _basis, _lifting, lifted = self._quadratic_rom(spec, r)
                    self._persist_lifted(lifted)
                    self._persist_rom(rom, spec.label, two_r)
                elif spec.name == "psd":
                    phi = self._phi(r)
                    model = self._primary_model()
                    save_matrix(
                        self.out / "roms" / f"psd_Dhat_2r{two_r}.splm",
                        build_psd_rom(model, phi).Dhat,
                    )
                elif spec.name == "spdeim":
                    deim = self._spdeim(spec, r)
                    self._persist_deim(deim, spec.label, two_r)

    def _primary_model(self) -> FomModel:
        cfg = self.config
        snaps = self.simulate_fom()
        if cfg.parametric:
            return snaps[cfg.mu_train[0]]["model"]
        key = "kgz" if cfg.model == "kgz" else None
        return snaps[key]["model"]

    def _quadratic_rom(self, spec: MethodSpec, r: int, mu: float | None = None):
        """Quadratic ROM for a lifting-family method (non-KGZ paths)."""
        cfg = self.config
        model = self._primary_model()
        if cfg.model == "kgz":
            lifting = lifting_for("kgz")
            lifted = build_lifted_operators(lifting, model.D)
            basis = self._kgz_basis(r, joint=True)
        elif spec.name == "standard-lifting":
            lifting = standard_lifting_sg(cfg.model)
            lifted = build_standard_lifting_sg(model.D, cfg.model)
            basis = self._lifting_basis(lifting, r, "standard-lifting")
        else:
            lifting = lifting_for(cfg.model, mu=mu if mu is not None else model.mu)
            lifted = build_lifted_operators(lifting, model.D)
            basis = self._lifting_basis(lifting, r, "lifting")
        return build_quadratic_rom(lifted, basis), basis, lifting, lifted

    def _spdeim(self, spec: MethodSpec, r: int) -> DeimModel:
        cfg = self.config
        phi = self._phi(r)
        if cfg.parametric:
            snaps = self.simulate_fom()
            base = with_mu(self._primary_model(), 1.0)
            jac_snaps = np.hstack(
                [
                    collect_jacobian_snapshots(base, phi, snaps[mu]["Q"])
                    for mu in cfg.mu_train
                ]
            )
            _, Q_all, _ = self._training_qp()
            return build_spdeim(
                base, phi, Q_all, spec.deim_size(r),
                jacobian_snapshots=jac_snaps,
            )
        model, Q, _ = self._training_qp()
        return build_spdeim(model, phi, Q, spec.deim_size(r))

    # ------------------------------------------------------------------
    # stages 5/6: ROM integration, metrics, emission
    # ------------------------------------------------------------------

    def _rom_config(self, solver: str = "newton") -> IntegratorConfig:
        cfg = self.config
        return IntegratorConfig(
            dt=cfg.dt, t_end=cfg.test_t_end, solver=solver,
            stride=cfg.snapshot_stride,
        )

    def _integrate_quadratic(self, rom: QuadraticRom, y0, integrator: str):
        if integrator == "kahan":
            return lambda: integrate_kahan(rom.Ar, rom.Br, y0, self._rom_config())
        return lambda: implicit_midpoint(
            rom.rhs(), y0, self._rom_config(), jac=rom.jacobian()
        )

    def _run_dir(self, label: str, two_r: int, mu=None) -> Path:
        name = f"{label}_2r{two_r}" + ("" if mu is None else f"_mu{mu:g}")
        d = self.out / "runs" / name
        d.mkdir(parents=True, exist_ok=True)
        return d

    def _wave_experiment(self, persist_runs: bool = True) -> ExperimentResult:
        cfg = self.config
        snap = self.simulate_fom()[None]
        model, Q, P, t = snap["model"], snap["Q"], snap["P"], snap["t"]
        reports, costs = [], []
        lifted_persisted = False
        # Kahan is the default for quadratic ROMs; the comparative study
        # configures midpoint to expose exact vs broken conservation.
        rom_integrator = cfg.rom_integrator
        for two_r in cfg.two_r_list:
            r = two_r // 2
            for spec in cfg.methods:
                label = spec.label
                rdir = self._run_dir(label, two_r)
                lifted_err = None
                if spec.name in ("lifting", "standard-lifting"):
                    if spec.name == "standard-lifting" and not cfg.model.startswith(
                        "sine-gordon"
                    ):
                        raise ValueError(
                            "standard-lifting is available for sine-Gordon only"
                        )
                    if spec.name == "standard-lifting":
                        lifting = standard_lifting_sg(cfg.model)
                        lifted = build_standard_lifting_sg(model.D, cfg.model)
                    else:
                        lifting = lifting_for(cfg.model, mu=model.mu)
                        lifted = build_lifted_operators(lifting, model.D)
                    t0 = time.perf_counter()
                    basis = self._lifting_basis(lifting, r, spec.name)
                    costs.append(
                        OfflineCost(cfg.model, label, two_r,
                                    "lifted_snapshots_and_svd",
                                    time.perf_counter() - t0)
                    )
                    t0 = time.perf_counter()
                    rom = build_quadratic_rom(lifted, basis)
                    costs.append(
                        OfflineCost(cfg.model, label, two_r,
                                    "quadratic_projection",
                                    time.perf_counter() - t0)
                    )
                    if not lifted_persisted:
                        self._persist_lifted(lifted)
                        lifted_persisted = True
                    self._persist_rom(rom, label, two_r)
                    phi = basis.block("q")
                    y0 = basis.project(lifting.lift(FomState(q=Q[:, 0], p=P[:, 0])))
                    traj, wall = _median_timed(
                        self._integrate_quadratic(rom, y0, rom_integrator),
                        cfg.timing_runs,
                    )
                    off = rom.offsets()
                    Qh = traj.states_rows[:, off["q"] : off["q"] + r].T
                    Ph = traj.states_rows[:, off["p"] : off["p"] + r].T
                    E = np.array(
                        [reduced_lifted_energy(rom, y) for y in traj.states_rows]
                    )
                    lifted_err = np.abs(E - E[0])
                    if persist_runs:
                        emit_series_csv(traj.t, lifted_err, rdir / "energy_lifted.csv")
                    reduced_dim = rom.rbar
                elif spec.name == "psd":
                    phi = self._phi(r)
                    rom_h = build_psd_rom(model, phi)
                    y0 = np.concatenate(
                        [phi.matrix.T @ Q[:, 0], phi.matrix.T @ P[:, 0]]
                    )
                    traj, wall = _median_timed(
                        lambda: implicit_midpoint(
                            rom_h.rhs(), y0, self._rom_config(),
                            jac=rom_h.jacobian(),
                        ),
                        cfg.timing_runs,
                    )
                    Qh, Ph = traj.states_rows[:, :r].T, traj.states_rows[:, r:].T
                    reduced_dim = 2 * r
                elif spec.name == "spdeim":
                    phi = self._phi(r)
                    t0 = time.perf_counter()
                    deim = self._spdeim(spec, r)
                    costs.append(
                        OfflineCost(cfg.model, label, two_r,
                                    "jacobian_snapshots_and_svd",
                                    time.perf_counter() - t0)
                    )
                    self._persist_deim(deim, label, two_r)
                    y0 = np.concatenate(
                        [phi.matrix.T @ Q[:, 0], phi.matrix.T @ P[:, 0]]
                    )
                    traj, wall = _median_timed(
                        lambda: implicit_midpoint(
                            spdeim_rhs(deim), y0, self._rom_config(),
                            jac=spdeim_jacobian(deim),
                        ),
                        cfg.timing_runs,
                    )
                    Qh, Ph = traj.states_rows[:, :r].T, traj.states_rows[:, r:].T
                    reduced_dim = 2 * r
                else:
                    raise ValueError(f"method {spec.name} not supported here")
                if persist_runs:
                    save_matrix(rdir / "Qhat.splm", Qh)
                    save_matrix(rdir / "Phat.splm", Ph)
                fom_err = fom_energy_error(model, phi, Qh, Ph)
                if persist_runs:
                    emit_series_csv(t, fom_err, rdir / "energy_fom.csv")
                regimes = {}
                for regime, mask in zip(
                    ("train", "test"), _train_test_split(t, cfg.train_t_end)
                ):
                    if not np.any(mask):
                        continue
                    regimes[regime] = RegimeMetrics(
                        rel_err_q=relative_state_error(Q[:, mask], phi, Qh[:, mask]),
                        rel_err_p=relative_state_error(P[:, mask], phi, Ph[:, mask]),
                        max_fom_energy_err=float(fom_err[mask].max()),
                        max_lifted_energy_err=(
                            float(lifted_err[mask].max())
                            if lifted_err is not None else None
                        ),
                    )
                rep = MetricReport(
                    model=cfg.model, method=label, two_r=two_r,
                    reduced_dim=reduced_dim, regimes=regimes, wall_seconds=wall,
                )
                if "train" in regimes:
                    rep.efficacy_value = efficacy(regimes["train"].rel_err_q, wall)
                reports.append(rep)
        return ExperimentResult(reports, costs, self.fom_wall)

    def _parametric_experiment(self, persist_runs: bool = True) -> ExperimentResult:
        cfg = self.config
        snaps = self.simulate_fom()
        base_model = self._primary_model()
        reports, costs = [], []
        # mu enters the lifted operators affinely: X(mu) = X0 + mu (X1 - X0).
        lifted0 = build_lifted_operators(lifting_for(cfg.model, mu=0.0), base_model.D)
        lifted1 = build_lifted_operators(lifting_for(cfg.model, mu=1.0), base_model.D)
        self._persist_lifted(lifted1)
        mu_sets = {"train": cfg.mu_train, "test": cfg.mu_test}
        for two_r in cfg.two_r_list:
            r = two_r // 2
            for spec in cfg.methods:
                label = spec.label
                rom_at = None
                if spec.name == "lifting":
                    t0 = time.perf_counter()
                    basis = self._lifting_basis(lifting_for(cfg.model, mu=1.0), r, "lifting")
                    costs.append(
                        OfflineCost(cfg.model, label, two_r,
                                    "lifted_snapshots_and_svd",
                                    time.perf_counter() - t0)
                    )
                    t0 = time.perf_counter()
                    Ar = project_linear(lifted1.A, basis)
                    Br0 = project_quadratic_sparse(lifted0.B, basis)
                    Br1 = project_quadratic_sparse(lifted1.B, basis)
                    Hr0 = project_linear(lifted0.H, basis)
                    Hr1 = project_linear(lifted1.H, basis)
                    costs.append(
                        OfflineCost(cfg.model, label, two_r,
                                    "quadratic_projection",
                                    time.perf_counter() - t0)
                    )
                    layout = tuple((lab, b.r) for lab, b in basis.blocks)

                    def rom_at(mu, Ar=Ar, Br0=Br0, Br1=Br1, Hr0=Hr0, Hr1=Hr1,
                               layout=layout):
                        return QuadraticRom(
                            model=cfg.model, Ar=Ar, Br=Br0 + mu * (Br1 - Br0),
                            Hr=Hr0 + mu * (Hr1 - Hr0),
                            lin=np.zeros(Ar.shape[0]), const=0.0, layout=layout,
                        )

                    self._persist_rom(rom_at(1.0), label, two_r, mu=1.0)
                elif spec.name == "spdeim":
                    t0 = time.perf_counter()
                    deim_base = self._spdeim(spec, r)
                    costs.append(
                        OfflineCost(cfg.model, label, two_r,
                                    "jacobian_snapshots_and_svd",
                                    time.perf_counter() - t0)
                    )
                elif spec.name != "psd":
                    raise ValueError(
                        f"method {spec.name} not supported in the parametric study"
                    )
                phi = self._phi(r)
                per_regime_errs: dict[str, list[float]] = {"train": [], "test": []}
                walls = []
                for regime, mus in mu_sets.items():
                    for mu in mus:
                        model_mu = with_mu(base_model, mu)
                        Q, P, t = snaps[mu]["Q"], snaps[mu]["P"], snaps[mu]["t"]
                        if spec.name == "lifting":
                            rom = rom_at(mu)
                            lifting_mu = lifting_for(cfg.model, mu=mu)
                            y0 = basis.project(
                                lifting_mu.lift(FomState(q=Q[:, 0], p=P[:, 0]))
                            )
                            traj, wall = _median_timed(
                                self._integrate_quadratic(rom, y0, "kahan"),
                                cfg.timing_runs,
                            )
                            off = rom.offsets()
                            Qh = traj.states_rows[:, off["q"] : off["q"] + r].T
                            Ph = traj.states_rows[:, off["p"] : off["p"] + r].T
                        else:
                            if spec.name == "psd":
                                rom_h = build_psd_rom(model_mu, phi)
                                rhs, jac = rom_h.rhs(), rom_h.jacobian()
                            else:  # spdeim: same points/weights, mu enters
                                # through the model's nonlinearity.
                                deim = replace(deim_base, model=model_mu)
                                rhs, jac = spdeim_rhs(deim), spdeim_jacobian(deim)
                            y0 = np.concatenate(
                                [phi.matrix.T @ Q[:, 0], phi.matrix.T @ P[:, 0]]
                            )
                            traj, wall = _median_timed(
                                lambda rhs=rhs, jac=jac: implicit_midpoint(
                                    rhs, y0, self._rom_config(), jac=jac
                                ),
                                cfg.timing_runs,
                            )
                            Qh = traj.states_rows[:, :r].T
                            Ph = traj.states_rows[:, r:].T
                        walls.append(wall)
                        per_regime_errs[regime].append(
                            relative_state_error(Q, phi, Qh)
                        )
                        if persist_runs:
                            rdir = self._run_dir(label, two_r, mu)
                            save_matrix(rdir / "Qhat.splm", Qh)
                            fom_err = fom_energy_error(model_mu, phi, Qh, Ph)
                            emit_series_csv(t, fom_err, rdir / "energy_fom.csv")
                            if spec.name == "lifting":
                                E = np.array(
                                    [reduced_lifted_energy(rom, y)
                                     for y in traj.states_rows]
                                )
                                emit_series_csv(
                                    traj.t, np.abs(E - E[0]),
                                    rdir / "energy_lifted.csv",
                                )
                regimes = {
                    regime: RegimeMetrics(
                        rel_err_q=average_relative_state_error(errs)
                    )
                    for regime, errs in per_regime_errs.items() if errs
                }
                wall_med = float(np.median(walls))
                rep = MetricReport(
                    model=cfg.model, method=label, two_r=two_r,
                    reduced_dim=3 * r if spec.name == "lifting" else 2 * r,
                    regimes=regimes, wall_seconds=wall_med,
                )
                if "train" in regimes:
                    rep.efficacy_value = efficacy(regimes["train"].rel_err_q, wall_med)
                reports.append(rep)
        return ExperimentResult(reports, costs, self.fom_wall)

    def _kgz_experiment(self, persist_runs: bool = True) -> ExperimentResult:
        cfg = self.config
        snap = self.simulate_fom()["kgz"]
        t = snap["t"]
        lifting = lifting_for("kgz")
        lifted = build_lifted_operators(lifting, snap["model"].D)
        self._persist_lifted(lifted)
        W = snap["q1"] ** 2 + snap["q2"] ** 2
        reports, costs, diagnostics = [], [], {}
        for two_r in cfg.two_r_list:
            r = two_r // 2
            t0 = time.perf_counter()
            basis = self._kgz_basis(r, joint=True)
            costs.append(
                OfflineCost("kgz", "lifting", two_r, "lifted_snapshots_and_svd",
                            time.perf_counter() - t0)
            )
            t0 = time.perf_counter()
            rom = build_quadratic_rom(lifted, basis)
            costs.append(
                OfflineCost("kgz", "lifting", two_r, "quadratic_projection",
                            time.perf_counter() - t0)
            )
            self._persist_rom(rom, "lifting", two_r)
            ybar0 = np.concatenate(
                [snap[lab][:, 0] for lab in KGZ_SNAPSHOT_FIELDS] + [W[:, 0]]
            )
            y0 = basis.project(ybar0)
            # Kahan is the timing integrator: one linear solve per step.
            traj, wall = _median_timed(
                self._integrate_quadratic(rom, y0, "kahan"), cfg.timing_runs
            )
            off = rom.offsets()
            phi = basis.block("q1")

            def blk(name, tr=traj, off=off):
                return tr.states_rows[:, off[name] : off[name] + r].T

            E = np.array([reduced_lifted_energy(rom, y) for y in traj.states_rows])
            lifted_err = np.abs(E - E[0])
            if persist_runs:
                rdir = self._run_dir("lifting", two_r)
                emit_series_csv(traj.t, lifted_err, rdir / "energy_lifted.csv")
                save_matrix(rdir / "Q1hat.splm", blk("q1"))
                save_matrix(rdir / "PHIhat.splm", blk("phi"))
            regimes = {}
            for regime, mask in zip(
                ("train", "test"), _train_test_split(t, cfg.train_t_end)
            ):
                if not np.any(mask):
                    continue
                err_psi = (
                    np.linalg.norm(snap["q1"][:, mask] - phi.matrix @ blk("q1")[:, mask], "fro") ** 2
                    + np.linalg.norm(snap["q2"][:, mask] - phi.matrix @ blk("q2")[:, mask], "fro") ** 2
                ) / (
                    np.linalg.norm(snap["q1"][:, mask], "fro") ** 2
                    + np.linalg.norm(snap["q2"][:, mask], "fro") ** 2
                )
                err_phi = relative_state_error(
                    snap["phi"][:, mask], basis.block("phi"), blk("phi")[:, mask]
                )
                regimes[regime] = RegimeMetrics(
                    rel_err_q=float(err_psi), rel_err_p=float(err_phi),
                    max_lifted_energy_err=float(lifted_err[mask].max()),
                )
            rep = MetricReport(
                model="kgz", method="lifting", two_r=two_r, reduced_dim=7 * r,
                regimes=regimes, wall_seconds=wall,
            )
            if "train" in regimes:
                rep.efficacy_value = efficacy(regimes["train"].rel_err_q, wall)
            reports.append(rep)

            # Non-joint diagnostic: separate varphi/phi and w bases leave a
            # nonzero continuous-time energy-rate residual.
            rom_sep = build_quadratic_rom(lifted, self._kgz_basis(r, joint=False))
            resid = []
            for _ in range(20):
                yh = self.rng.normal(size=rom_sep.rbar)
                grad = rom_sep.Hr @ yh + rom_sep.lin
                f = rom_rhs(rom_sep, yh)
                resid.append(abs(grad @ f) / (np.linalg.norm(grad) * np.linalg.norm(f)))
            diagnostics[f"nonjoint_residual_2r{two_r}"] = float(max(resid))
            diagnostics[f"rom_wall_2r{two_r}"] = wall
        diagnostics["fom_wall"] = self.fom_wall
        if self.fom_wall > 0:
            # The desk-scale FOM is itself cheap, so the online-speedup
            # assertion uses the smallest swept ROM; per-size ratios are
            # all emitted above.
            fastest = min(
                v for k, v in diagnostics.items() if k.startswith("rom_wall")
            )
            diagnostics["rom_fom_wall_ratio"] = fastest / self.fom_wall
            diagnostics["speedup_ok"] = bool(fastest <= self.fom_wall / 10.0)
        return ExperimentResult(reports, costs, self.fom_wall, diagnostics)

    # ------------------------------------------------------------------
    # public entry points
    # ------------------------------------------------------------------

    def run_roms(self, persist_runs: bool = True) -> ExperimentResult:
        cfg = self.config
        if cfg.model == "kgz":
            return self._kgz_experiment(persist_runs)
        if cfg.parametric:
            return self._parametric_experiment(persist_runs)
        return self._wave_experiment(persist_runs)

    def run(self) -> ExperimentResult:
        result = self.run_roms()
        self.emit(result)
        return result

    def emit(self, result: ExperimentResult) -> None:
        emit_metrics_csv(result.reports, self.out / "metrics.csv")
        emit_timings_csv(result.reports, self.out / "timings.csv")
        with open(self.out / "offline_costs.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["model", "method", "two_r", "mu", "component", "seconds"])
            for c in sorted(
                result.offline_costs,
                key=lambda c: (c.model, c.method, c.two_r, c.component),
            ):
                writer.writerow(
                    [c.model, c.method, c.two_r,
                     "" if c.mu is None else repr(c.mu), c.component,
                     repr(c.seconds)]
                )
        if result.diagnostics:
            with open(self.out / "diagnostics.csv", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["key", "value"])
                for key in sorted(result.diagnostics):
                    writer.writerow([key, repr(result.diagnostics[key])])


def run_experiment(
    config: ExperimentConfig, native_scale: bool = False
) -> ExperimentResult:
    """Simulate, reduce, integrate and emit metrics for one experiment."""
    return ExperimentRunner(config, native_scale=native_scale).run()
