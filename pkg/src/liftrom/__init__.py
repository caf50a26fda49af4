"""liftrom: energy-conserving quadratic ROMs of nonlinear wave equations.

Builds conservative full-order models of nonlinear wave PDEs, lifts them
to quadratic form with energy-quadratizing auxiliary variables, projects
them onto block-diagonal POD bases, and benchmarks the resulting
quadratic reduced models against symplectic (PSD) and spDEIM reduced
models.
"""

from .basis import (
    BlockDiagonalBasis,
    CotangentLiftBasis,
    OrthonormalBasis,
    PodBasis,
    SnapshotSet,
    build_kgz_basis,
    build_lifted_basis,
    choose_rank,
    cotangent_lift,
    projection_error,
    truncated_svd,
)
from .grids import SpatialGrid, build_laplacian
from .hyperreduction import (
    DeimModel,
    build_spdeim,
    collect_jacobian_snapshots,
    deim_points,
    spdeim_hamiltonian,
    spdeim_jacobian,
    spdeim_rhs,
)
from .integrators import (
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    implicit_midpoint,
    integrate_kahan,
    kahan_step,
)
from .lifting import (
    LiftedModel,
    LiftingMap,
    QuadraticOperator,
    build_lifted_operators,
    build_standard_lifting_sg,
    lift_fom_model,
    lift_state,
    lifted_energy,
    lifted_jacobian,
    lifted_rhs,
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
from .models import (
    FomModel,
    FomState,
    KgzModel,
    KgzState,
    NonlinearityDef,
    default_grid,
    fom_energy,
    fom_rhs,
    initial_condition,
    kgz_energy,
    kgz_rhs,
    make_model,
    with_mu,
)
from .rom import (
    HamiltonianRom,
    QuadraticRom,
    build_psd_rom,
    build_quadratic_rom,
    energy_rate_residual,
    project_linear,
    project_quadratic_sparse,
    reduced_lifted_energy,
    rom_rhs,
)

__version__ = "0.1.0"
