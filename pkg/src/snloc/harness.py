"""Experiment harness: configs, seed derivation, trials, sweeps, grids.

Deterministic end to end: every trial's randomness comes from a SHA-256
digest of (master seed, sweep index, trial index, role) — independent of
execution order and worker count — so repeated runs of the same config
produce byte-identical CSV/JSONL outputs apart from wall-time columns.
Solver wall time is measured inside the solvers themselves and therefore
excludes scene generation, measurement synthesis, and file I/O.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - environment dependent
    import tomli as tomllib

from .align import recovery_metrics
from .edm import pairwise_sq_dists
from .madmm import AdmmConfig, madmm
from .rigidity import rigidity_probe
from .sampling import sample_unit_ball
from .scene import gen_scene, measure
from .solvers import (
    SolverConfig,
    TrialReport,
    gd,
    rank_reduction,
    rcg,
    svd_mds_init,
)
from .sstress import SstressProblem, hessian_is_psd

__all__ = [
    "SOLVER_NAMES",
    "ExperimentSpec",
    "GridSpec",
    "RigiditySpec",
    "SweepResult",
    "SweepRow",
    "derive_seed",
    "grid_to_csv",
    "load_toml",
    "phase_grid",
    "report_json",
    "rigidity_curve",
    "rigidity_to_csv",
    "run_single",
    "run_sweep",
    "run_trial",
]

SOLVER_NAMES = ("rank-reduction", "svd-mds-rcg", "svd-mds-gd", "madmm")

_CSV_COLUMNS = ("value", "solver", "re_q85", "msle_q85", "success", "wall_ms")


def derive_seed(master_seed: int, *components) -> int:
    """Stable 63-bit seed from the master seed and identifying components."""
    text = repr((int(master_seed), *components))
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def load_toml(path: Union[str, Path]) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a scenario, a measurement model, solvers, a sweep."""

    name: str
    scenario: str
    trials: int
    master_seed: int
    solvers: tuple
    scene_params: dict = field(default_factory=dict)
    measure_params: dict = field(default_factory=dict)
    sweep_axis: Optional[str] = None
    sweep_values: tuple = ()
    solver_overrides: dict = field(default_factory=dict)
    admm_overrides: dict = field(default_factory=dict)
    re_exact: float = 1e-5
    re_loose: float = 1e-3
    check_hessian: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        for name in self.solvers:
            if name not in SOLVER_NAMES:
                raise ValueError(f"unknown solver {name!r}")
        if self.sweep_axis is not None:
            vals = self.sweep_values
            if len(vals) == 0:
                raise ValueError("sweep axis given without sweep values")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError("sweep values must be strictly increasing")

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "ExperimentSpec":
        raw = load_toml(path)
        exp = raw.get("experiment", {})
        sweep = raw.get("sweep", {})
        thresholds = raw.get("thresholds", {})
        return cls(
            name=str(exp.get("name", Path(path).stem)),
            scenario=str(exp["scenario"]),
            trials=int(exp["trials"]),
            master_seed=int(exp.get("master_seed", 0)),
            solvers=tuple(exp.get("solvers", ["rank-reduction"])),
            scene_params=dict(raw.get("scene", {})),
            measure_params=dict(raw.get("measure", {})),
            sweep_axis=sweep.get("axis"),
            sweep_values=tuple(sweep.get("values", ())),
            solver_overrides=dict(raw.get("solver", {})),
            admm_overrides=dict(raw.get("admm", {})),
            re_exact=float(thresholds.get("re_exact", 1e-5)),
            re_loose=float(thresholds.get("re_loose", 1e-3)),
            check_hessian=bool(exp.get("check_hessian", False)),
        )


_SCENE_AXES = ("n", "n_sensors", "d")


def _instance_params(spec: ExperimentSpec, value) -> tuple[dict, dict]:
    """Scene and measurement parameter dicts with the sweep value applied."""
    scene_params = dict(spec.scene_params)
    measure_params = dict(spec.measure_params)
    if spec.sweep_axis is not None:
        axis = spec.sweep_axis
        if axis in _SCENE_AXES:
            scene_params[axis] = value
        else:
            measure_params[axis] = value
    return scene_params, measure_params


def _solver_config(spec: ExperimentSpec, measure_params: dict) -> SolverConfig:
    overrides = dict(spec.solver_overrides)
    if "grad_tol" not in overrides:
        noiseless = (
            float(measure_params.get("sigma", 0.0)) == 0.0
            and float(measure_params.get("p_out", 0.0)) == 0.0
        )
        overrides["grad_tol"] = 1e-15 if noiseless else 1e-6
    return replace(SolverConfig(), **overrides)


def _admm_config(spec: ExperimentSpec) -> AdmmConfig:
    return replace(AdmmConfig(), **spec.admm_overrides)


def _solve_one(
    name: str,
    problem: SstressProblem,
    d: int,
    scfg: SolverConfig,
    acfg: AdmmConfig,
) -> TrialReport:
    if name == "rank-reduction":
        return rank_reduction(problem, d, scfg)
    if name == "svd-mds-rcg":
        y0, _ = svd_mds_init(problem.D_obs, problem.mask, d)
        return rcg(problem, y0, scfg)
    if name == "svd-mds-gd":
        y0, _ = svd_mds_init(problem.D_obs, problem.mask, d)
        return gd(problem, y0, scfg)
    if name == "madmm":
        # The robust splitting needs a geometrically sound start: its dual
        # warm start is the residual at Y0, which separates outliers from
        # noise only once Y0 is already a decent fit.  Refine the
        # least-squares pipeline's output.
        warm = rank_reduction(problem, d, scfg)
        rep = madmm(problem, warm.y_hat, acfg, scfg)
        return replace(
            rep,
            wall_ms=warm.wall_ms + rep.wall_ms,
            diagnostics={
                **rep.diagnostics,
                "warm_start": "rank-reduction",
                "warm_iters": warm.iters,
            },
        )
    raise ValueError(f"unknown solver {name!r}")


def run_trial(
    spec: ExperimentSpec, sweep_idx: int, trial_idx: int, value=None
) -> list[TrialReport]:
    """Run every configured solver on one synthesized instance."""
    scene_params, measure_params = _instance_params(spec, value)
    scene_seed = derive_seed(spec.master_seed, sweep_idx, trial_idx, "scene")
    meas_seed = derive_seed(spec.master_seed, sweep_idx, trial_idx, "measure")
    scene = gen_scene(spec.scenario, seed=scene_seed, **scene_params)
    ms = measure(scene, seed=meas_seed, **measure_params)
    problem = SstressProblem.build(ms.D_obs, ms.mask, weights=ms.weights)
    d_target = scene.d
    d_star = pairwise_sq_dists(scene.positions)
    scfg = _solver_config(spec, measure_params)
    acfg = _admm_config(spec)

    reports = []
    for name in spec.solvers:
        try:
            rep = _solve_one(name, problem, d_target, scfg, acfg)
            re_val, msle = recovery_metrics(
                rep.y_hat, scene.positions, scene.anchor_idx, d_star
            )
            psd = None
            if spec.check_hessian and scene.n * d_target <= 1000:
                psd = bool(hessian_is_psd(problem.hessian_blocks(rep.y_hat)))
            rep = replace(
                rep,
                solver=name,
                seed=scene_seed,
                re=float(re_val),
                msle=float(msle),
                hessian_psd=psd,
            )
        except Exception as exc:  # noqa: BLE001 - a trial must never kill a sweep
            rep = TrialReport(
                solver=name,
                y_hat=np.zeros((scene.n, d_target)),
                cost_trace=(),
                iters=0,
                final_grad_norm=float("nan"),
                wall_ms=0.0,
                status=f"error:{type(exc).__name__}",
                stop="error",
                re=float("inf"),
                msle=float("nan"),
                seed=scene_seed,
            )
        reports.append(rep)
    return reports


@dataclass(frozen=True)
class SweepRow:
    value: float
    solver: str
    re_q85: float
    msle_q85: float
    success: float
    wall_ms: float


@dataclass(frozen=True)
class SweepResult:
    spec_name: str
    rows: tuple
    reports: tuple  # (sweep_idx, trial_idx, TrialReport), sorted

    def to_csv(self, path: Union[str, Path]) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(
                    [
                        _fmt(row.value),
                        row.solver,
                        _fmt(row.re_q85),
                        _fmt(row.msle_q85),
                        _fmt(row.success),
                        _fmt(row.wall_ms),
                    ]
                )

    def dump_trials(self, path: Union[str, Path]) -> None:
        with Path(path).open("w") as fh:
            for _, _, rep in self.reports:
                fh.write(json.dumps(report_json(rep), sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.12g}"


def report_json(rep: TrialReport) -> dict:
    """Canonical per-trial JSON record."""

    def _num(x):
        if x is None:
            return None
        x = float(x)
        return x if np.isfinite(x) else None

    return {
        "solver": rep.solver,
        "seed": rep.seed,
        "re": _num(rep.re),
        "msle": _num(rep.msle),
        "iters": int(rep.iters),
        "final_grad_norm": _num(rep.final_grad_norm),
        "hessian_psd": rep.hessian_psd,
        "wall_ms": float(rep.wall_ms),
    }


def _trial_job(args) -> tuple[int, int, list[TrialReport]]:
    spec, sweep_idx, trial_idx, value = args
    return sweep_idx, trial_idx, run_trial(spec, sweep_idx, trial_idx, value)


def run_sweep(spec: ExperimentSpec, threads: int = 1) -> SweepResult:
    """Run a full sweep and aggregate 85th-percentile rows per solver."""
    values: Sequence = spec.sweep_values if spec.sweep_axis is not None else (None,)
    jobs = [
        (spec, si, ti, values[si])
        for si in range(len(values))
        for ti in range(spec.trials)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(_trial_job, jobs))
    else:
        raw = [_trial_job(j) for j in jobs]
    raw.sort(key=lambda item: (item[0], item[1]))

    reports = []
    for si, ti, reps in raw:
        for rep in reps:
            reports.append((si, ti, rep))

    rows = []
    for si, value in enumerate(values):
        for name in spec.solvers:
            reps = [r for s, _, r in reports if s == si and r.solver == name]
            re_vals = np.array([r.re for r in reps], dtype=float)
            msle_vals = np.array([r.msle for r in reps], dtype=float)
            walls = np.array([r.wall_ms for r in reps], dtype=float)
            if np.all(np.isnan(msle_vals)):
                msle_q85 = float("nan")
            else:
                msle_q85 = float(np.nanpercentile(msle_vals, 85))
            rows.append(
                SweepRow(
                    value=float("nan") if value is None else float(value),
                    solver=name,
                    re_q85=float(np.percentile(re_vals, 85)),
                    msle_q85=msle_q85,
                    success=float(np.mean(re_vals < spec.re_exact)),
                    wall_ms=float(np.mean(walls)),
                )
            )
    return SweepResult(spec_name=spec.name, rows=tuple(rows), reports=tuple(reports))


def run_single(
    spec: ExperimentSpec, solver: str, seed: int, value=None
) -> TrialReport:
    """One solver on one instance; ``seed`` acts as the master seed.

    When ``spec`` sweeps a parameter, ``value`` picks the point on the
    sweep axis (default: the first sweep value), so a swept config is
    still usable for a one-off run.
    """
    if value is None and spec.sweep_axis is not None:
        value = spec.sweep_values[0]
    single = replace(spec, solvers=(solver,), master_seed=seed)
    return run_trial(single, 0, 0, value)[0]


# ---------------------------------------------------------------------------
# Phase-transition grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Recovery-rate grid over (n or d) x Bernoulli rate, Gaussian clouds."""

    axis: str
    axis_values: tuple
    p_values: tuple
    trials: int
    master_seed: int
    n: int = 500
    d: int = 2
    re_loose: float = 1e-3

    def __post_init__(self) -> None:
        if self.axis not in ("n", "d"):
            raise ValueError("grid axis must be 'n' or 'd'")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "GridSpec":
        raw = load_toml(path).get("grid", {})
        return cls(
            axis=str(raw["axis"]),
            axis_values=tuple(raw["axis_values"]),
            p_values=tuple(raw["p_values"]),
            trials=int(raw.get("trials", 10)),
            master_seed=int(raw.get("master_seed", 0)),
            n=int(raw.get("n", 500)),
            d=int(raw.get("d", 2)),
            re_loose=float(raw.get("re_loose", 1e-3)),
        )


def _grid_trial(args) -> tuple[int, int, int, bool]:
    gspec, ai, pi, ti = args
    axis_value = gspec.axis_values[ai]
    n = int(axis_value) if gspec.axis == "n" else gspec.n
    d = int(axis_value) if gspec.axis == "d" else gspec.d
    p = float(gspec.p_values[pi])
    cell = ai * len(gspec.p_values) + pi
    scene_seed = derive_seed(gspec.master_seed, cell, ti, "scene")
    meas_seed = derive_seed(gspec.master_seed, cell, ti, "measure")
    scene = gen_scene("gaussian_cloud", seed=scene_seed, n=n, d=d)
    ms = measure(scene, scheme="bernoulli", p=p, seed=meas_seed)
    problem = SstressProblem.build(ms.D_obs, ms.mask, weights=ms.weights)
    d_star = pairwise_sq_dists(scene.positions)
    try:
        y0, _ = svd_mds_init(problem.D_obs, problem.mask, d)
        rep = gd(problem, y0, replace(SolverConfig(), grad_tol=1e-15))
        re_val, _ = recovery_metrics(rep.y_hat, scene.positions, scene.anchor_idx, d_star)
    except Exception:  # noqa: BLE001 - a cell failure is just a non-recovery
        re_val = float("inf")
    return ai, pi, ti, bool(re_val < gspec.re_loose)


def phase_grid(gspec: GridSpec, threads: int = 1) -> list[tuple[float, float, float]]:
    """Success-rate rows (axis value, p, rate)."""
    jobs = [
        (gspec, ai, pi, ti)
        for ai in range(len(gspec.axis_values))
        for pi in range(len(gspec.p_values))
        for ti in range(gspec.trials)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(_grid_trial, jobs))
    else:
        raw = [_grid_trial(j) for j in jobs]
    hits: dict = {}
    for ai, pi, _, ok in raw:
        hits.setdefault((ai, pi), []).append(ok)
    rows = []
    for ai, av in enumerate(gspec.axis_values):
        for pi, p in enumerate(gspec.p_values):
            rate = float(np.mean(hits[(ai, pi)]))
            rows.append((float(av), float(p), rate))
    return rows


def grid_to_csv(gspec: GridSpec, rows, path: Union[str, Path]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([gspec.axis, "p", "success"])
        for av, p, rate in rows:
            writer.writerow([_fmt(av), _fmt(p), _fmt(rate)])


# ---------------------------------------------------------------------------
# Rigidity curve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RigiditySpec:
    """Fraction of unit-ball instances passing the rigidity certificates."""

    r_values: tuple
    trials: int
    master_seed: int
    scenario: str = "paper_square"
    scene_params: dict = field(default_factory=dict)

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "RigiditySpec":
        raw = load_toml(path)
        rig = raw.get("rigidity", {})
        return cls(
            r_values=tuple(rig["r_values"]),
            trials=int(rig.get("trials", 100)),
            master_seed=int(rig.get("master_seed", 0)),
            scenario=str(rig.get("scenario", "paper_square")),
            scene_params=dict(raw.get("scene", {})),
        )


def _rigidity_trial(args) -> tuple[int, int, bool, bool]:
    rspec, ri, ti = args
    r = float(rspec.r_values[ri])
    scene_seed = derive_seed(rspec.master_seed, ri, ti, "scene")
    scene = gen_scene(rspec.scenario, seed=scene_seed, **rspec.scene_params)
    d_star = pairwise_sq_dists(scene.positions)
    mask = sample_unit_ball(d_star, r, anchors=scene.anchor_idx)
    report = rigidity_probe(mask, scene.positions)
    return ri, ti, report.generically_rigid, report.globally_rigid


def rigidity_curve(
    rspec: RigiditySpec, threads: int = 1
) -> list[tuple[float, float, float]]:
    """Rows (r, generically rigid fraction, globally rigid fraction)."""
    jobs = [
        (rspec, ri, ti)
        for ri in range(len(rspec.r_values))
        for ti in range(rspec.trials)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(_rigidity_trial, jobs))
    else:
        raw = [_rigidity_trial(j) for j in jobs]
    gen_hits: dict = {}
    glob_hits: dict = {}
    for ri, _, g_ok, gl_ok in raw:
        gen_hits.setdefault(ri, []).append(g_ok)
        glob_hits.setdefault(ri, []).append(gl_ok)
    return [
        (float(r), float(np.mean(gen_hits[ri])), float(np.mean(glob_hits[ri])))
        for ri, r in enumerate(rspec.r_values)
    ]


def rigidity_to_csv(rows, path: Union[str, Path]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "generically_rigid", "globally_rigid"])
        for r, gen_rate, glob_rate in rows:
            writer.writerow([_fmt(r), _fmt(gen_rate), _fmt(glob_rate)])
