"""Experiment configuration files.

Configs are flat ``key = value`` text with ``[section]`` headers (parsed
with the standard-library configparser).  All recognized keys:

    [experiment]  name, model, seed
    [grid]        nx, ny, native_nx, native_ny
    [time]        dt, train_t_end, test_t_end, snapshot_stride
    [reduction]   two_r (comma list), methods (comma list),
                  rom_integrator (kahan | midpoint, for the lifted ROMs)
    [parameters]  mu_train (comma list), mu_test (comma list)
    [output]      dir, timing_runs

Method tokens: ``psd``, ``lifting``, ``standard-lifting`` and
``spdeim(m)`` where m is either an absolute DEIM mode count or a
multiple of r written as e.g. ``2r``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class MethodSpec:
    """One reduction method; spdeim carries its DEIM size rule."""

    name: str
    deim_multiple: float | None = None  # m = multiple * r
    deim_modes: int | None = None  # absolute m

    def deim_size(self, r: int) -> int:
        if self.deim_modes is not None:
            return self.deim_modes
        return int(round(self.deim_multiple * r))

    @property
    def label(self) -> str:
        if self.name != "spdeim":
            return self.name
        if self.deim_modes is not None:
            return f"spdeim({self.deim_modes})"
        mult = self.deim_multiple
        mult_txt = str(int(mult)) if float(mult).is_integer() else str(mult)
        return f"spdeim({mult_txt}r)"


def parse_method(token: str) -> MethodSpec:
    token = token.strip()
    if token in ("psd", "lifting", "standard-lifting"):
        return MethodSpec(name=token)
    m = re.fullmatch(r"spdeim\(\s*([0-9.]*)\s*(r?)\s*\)", token)
    if m:
        digits, has_r = m.groups()
        if has_r:
            return MethodSpec(name="spdeim", deim_multiple=float(digits or 1))
        return MethodSpec(name="spdeim", deim_modes=int(digits))
    raise ValueError(f"unknown method token {token!r}")


@dataclass
class ExperimentConfig:
    name: str
    model: str
    nx: int
    ny: int | None
    dt: float
    train_t_end: float
    test_t_end: float
    snapshot_stride: int
    two_r_list: list[int]
    methods: list[MethodSpec]
    out_dir: Path
    rom_integrator: str = "kahan"
    seed: int = 0
    mu_train: list[float] = field(default_factory=list)
    mu_test: list[float] = field(default_factory=list)
    native_nx: int | None = None
    native_ny: int | None = None
    timing_runs: int = 5

    def __post_init__(self):
        if self.train_t_end <= 0 or self.test_t_end <= 0:
            raise ValueError("horizons must be positive")
        if self.test_t_end < self.train_t_end:
            raise ValueError("test horizon must not end before the training horizon")
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot stride must be >= 1")
        if self.rom_integrator not in ("kahan", "midpoint"):
            raise ValueError(f"unknown rom integrator {self.rom_integrator!r}")
        for mu in self.mu_train + self.mu_test:
            if not 0.1 <= mu <= 1.4:
                raise ValueError(f"mu={mu} outside the admissible range [0.1, 1.4]")

    @property
    def parametric(self) -> bool:
        return bool(self.mu_train)

    def at_native_scale(self) -> "ExperimentConfig":
        if self.native_nx is None:
            return self
        cfg = ExperimentConfig(**{**self.__dict__})
        cfg.nx = self.native_nx
        cfg.ny = self.native_ny or self.native_nx
        return cfg


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def load_config(path: str | Path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)
    exp = parser["experiment"]
    grid = parser["grid"]
    time = parser["time"]
    red = parser["reduction"]
    par = parser["parameters"] if parser.has_section("parameters") else {}
    out = parser["output"] if parser.has_section("output") else {}
    return ExperimentConfig(
        name=exp.get("name", Path(path).stem),
        model=exp["model"],
        seed=int(exp.get("seed", 0)),
        nx=int(grid["nx"]),
        ny=int(grid["ny"]) if "ny" in grid else None,
        native_nx=int(grid["native_nx"]) if "native_nx" in grid else None,
        native_ny=int(grid["native_ny"]) if "native_ny" in grid else None,
        dt=float(time["dt"]),
        train_t_end=float(time["train_t_end"]),
        test_t_end=float(time.get("test_t_end", time["train_t_end"])),
        snapshot_stride=int(time.get("snapshot_stride", 1)),
        two_r_list=_int_list(red["two_r"]),
        methods=[parse_method(tok) for tok in red["methods"].split(",")],
        rom_integrator=red.get("rom_integrator", "kahan"),
        mu_train=_float_list(par.get("mu_train", "")) if par else [],
        mu_test=_float_list(par.get("mu_test", "")) if par else [],
        out_dir=Path(out.get("dir", f"results/{exp.get('name', 'run')}")),
        timing_runs=int(out.get("timing_runs", 5)),
    )
