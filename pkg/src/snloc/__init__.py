"""Sensor-network localization by squared-distance matrix completion.

Low-rank coordinate recovery from partial pairwise squared distances:
quotient-manifold conjugate gradients on the weighted completion residual,
a rank-reduction continuation for global recovery, a robust splitting
variant for outlier-heavy data, plus scene synthesis, rigidity
certificates, and a reproducible experiment harness.
"""

from .align import ProcrustesResult, align_to_anchors, procrustes, recovery_metrics
from .edm import (
    MdsDiagnostics,
    centering_matrix,
    classical_mds,
    edm_to_gram,
    g_adjoint,
    gram_to_edm,
    pairwise_sq_dists,
)
from .harness import (
    SOLVER_NAMES,
    ExperimentSpec,
    GridSpec,
    RigiditySpec,
    derive_seed,
    phase_grid,
    rigidity_curve,
    run_single,
    run_sweep,
    run_trial,
)
from .linesearch import (
    ArmijoResult,
    HzResult,
    LineSearchParams,
    SwitchState,
    approx_wolfe_check,
    armijo_backtrack,
    hz_search,
    initial_quartic_step,
    switch_update,
    wolfe_check,
)
from .madmm import AdmmConfig, madmm, soft_threshold
from .manifold import (
    METRICS,
    HorizontalVector,
    gram_matrix,
    inner,
    is_horizontal,
    norm,
    project_horizontal,
    project_vertical,
    retract,
    riemannian_gradient,
    solve_sylvester_skew,
    transport,
)
from .noise import apply_rssi_noise, build_weights, inject_outliers, rssi_factor
from .rigidity import RigidityReport, rigidity_matrix, rigidity_probe
from .sampling import SampleMask, sample_bernoulli, sample_unit_ball
from .scene import (
    MeasurementSet,
    Scene,
    gaussian_cloud,
    gen_scene,
    irregular_scene,
    load_measurements,
    load_scene,
    measure,
    paper_square,
    save_measurements,
    save_scene,
)
from .solvers import (
    InitDiagnostics,
    SolverConfig,
    TrialReport,
    beta_hz_plus,
    gd,
    rank_reduction,
    rcg,
    svd_mds_init,
)
from .sstress import (
    BasinProbeReport,
    SstressProblem,
    basin_probe,
    hessian_is_psd,
    min_hessian_eigenvalue,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # operators / geometry
    "pairwise_sq_dists",
    "gram_to_edm",
    "g_adjoint",
    "centering_matrix",
    "edm_to_gram",
    "classical_mds",
    "MdsDiagnostics",
    "METRICS",
    "HorizontalVector",
    "gram_matrix",
    "inner",
    "norm",
    "solve_sylvester_skew",
    "project_vertical",
    "project_horizontal",
    "is_horizontal",
    "riemannian_gradient",
    "retract",
    "transport",
    # objective
    "SstressProblem",
    "hessian_is_psd",
    "min_hessian_eigenvalue",
    "BasinProbeReport",
    "basin_probe",
    # line search
    "LineSearchParams",
    "HzResult",
    "hz_search",
    "wolfe_check",
    "approx_wolfe_check",
    "initial_quartic_step",
    "ArmijoResult",
    "armijo_backtrack",
    "SwitchState",
    "switch_update",
    # solvers
    "SolverConfig",
    "TrialReport",
    "rcg",
    "gd",
    "svd_mds_init",
    "InitDiagnostics",
    "rank_reduction",
    "beta_hz_plus",
    "AdmmConfig",
    "madmm",
    "soft_threshold",
    # data model
    "SampleMask",
    "sample_unit_ball",
    "sample_bernoulli",
    "rssi_factor",
    "apply_rssi_noise",
    "inject_outliers",
    "build_weights",
    "ProcrustesResult",
    "procrustes",
    "align_to_anchors",
    "recovery_metrics",
    "RigidityReport",
    "rigidity_matrix",
    "rigidity_probe",
    "Scene",
    "MeasurementSet",
    "paper_square",
    "gaussian_cloud",
    "irregular_scene",
    "gen_scene",
    "measure",
    "save_scene",
    "load_scene",
    "save_measurements",
    "load_measurements",
    # harness
    "SOLVER_NAMES",
    "ExperimentSpec",
    "GridSpec",
    "RigiditySpec",
    "derive_seed",
    "run_trial",
    "run_single",
    "run_sweep",
    "phase_grid",
    "rigidity_curve",
]
