"""Command-line interface.

Subcommands
-----------
simulate        synthesize a scene + measurement files from a config
solve           run one solver on one synthesized instance, emit JSON
sweep           run a configured sweep, emit the aggregated CSV
basin-probe     sample the local-convexity certificate, emit JSON
phase-grid      recovery-rate grid over (n or d) x sampling rate
rigidity-curve  rigidity certificate rate as a function of the radius
selfcheck       fast internal consistency checks

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .edm import g_adjoint, gram_to_edm, pairwise_sq_dists
from .harness import ExperimentSpec, GridSpec, RigiditySpec, derive_seed
from .linesearch import LineSearchParams, hz_search
from .manifold import project_horizontal, project_vertical
from .sampling import sample_unit_ball
from .scene import gen_scene, measure, save_measurements, save_scene
from .solvers import SolverConfig, rank_reduction
from .sstress import SstressProblem, basin_probe

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snloc",
        description="Sensor-network localization via squared-distance matrix completion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write scene and measurement files")
    sim.add_argument("--config", required=True, help="experiment TOML")
    sim.add_argument("--seed", type=int, default=0, help="master seed")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--format", choices=("json", "csv"), default="json")

    sol = sub.add_parser("solve", help="solve one instance, print a JSON report")
    sol.add_argument("--config", required=True, help="experiment TOML")
    sol.add_argument("--solver", required=True, choices=harness.SOLVER_NAMES)
    sol.add_argument("--seed", type=int, default=0, help="master seed")
    sol.add_argument("--out", help="write the JSON report here instead of stdout")

    swp = sub.add_parser("sweep", help="run a sweep, write the aggregate CSV")
    swp.add_argument("--config", required=True, help="experiment TOML")
    swp.add_argument("--out", required=True, help="output CSV path")
    swp.add_argument("--threads", type=int, default=1)
    swp.add_argument("--dump-trials", help="also write per-trial JSONL here")

    probe = sub.add_parser("basin-probe", help="local-convexity certificate")
    probe.add_argument("--n", type=int, default=300)
    probe.add_argument("--d", type=int, default=2)
    probe.add_argument("--p", type=float, default=0.5)
    probe.add_argument("--draws", type=int, default=100)
    probe.add_argument("--seed", type=int, default=0)
    probe.add_argument("--out", help="write the JSON report here instead of stdout")

    grid = sub.add_parser("phase-grid", help="recovery-rate grid CSV")
    grid.add_argument("--config", required=True, help="grid TOML")
    grid.add_argument("--out", required=True, help="output CSV path")
    grid.add_argument("--threads", type=int, default=1)

    rig = sub.add_parser("rigidity-curve", help="rigidity rate vs radius CSV")
    rig.add_argument("--config", required=True, help="rigidity TOML")
    rig.add_argument("--out", required=True, help="output CSV path")
    rig.add_argument("--threads", type=int, default=1)

    sub.add_parser("selfcheck", help="fast internal consistency checks")
    return parser


def _cmd_simulate(args) -> int:
    spec = ExperimentSpec.from_toml(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scene_seed = derive_seed(args.seed, 0, 0, "scene")
    meas_seed = derive_seed(args.seed, 0, 0, "measure")
    scene = gen_scene(spec.scenario, seed=scene_seed, **spec.scene_params)
    ms = measure(scene, seed=meas_seed, **spec.measure_params)
    save_scene(scene, out_dir / "scene.json")
    suffix = "csv" if args.format == "csv" else "json"
    save_measurements(ms, out_dir / f"measurements.{suffix}", fmt=args.format)
    print(f"wrote {out_dir / 'scene.json'} and {out_dir / f'measurements.{suffix}'}")
    return 0


def _cmd_solve(args) -> int:
    spec = ExperimentSpec.from_toml(args.config)
    rep = harness.run_single(spec, args.solver, args.seed)
    payload = json.dumps(harness.report_json(rep), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    else:
        print(payload)
    return 0 if rep.status == "ok" else 1


def _cmd_sweep(args) -> int:
    spec = ExperimentSpec.from_toml(args.config)
    result = harness.run_sweep(spec, threads=args.threads)
    result.to_csv(args.out)
    if args.dump_trials:
        result.dump_trials(args.dump_trials)
    print(f"wrote {args.out} ({len(result.rows)} rows)")
    return 0


def _cmd_basin_probe(args) -> int:
    report = basin_probe(
        n=args.n, d=args.d, p=args.p, num_draws=args.draws, seed=args.seed
    )
    payload = {
        "n": report.n,
        "d": report.d,
        "p": report.p,
        "num_draws": report.num_draws,
        "seed": report.seed,
        "min_ratio": report.min_ratio,
        "median_ratio": report.median_ratio,
        "max_ratio": report.max_ratio,
        "smoothness_constant": report.smoothness_constant,
        "num_rejected": report.num_rejected,
        "row_cap_widenings": report.row_cap_widenings,
        "ratios": list(report.ratios),
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if report.min_ratio >= 1.0 else 1


def _cmd_phase_grid(args) -> int:
    gspec = GridSpec.from_toml(args.config)
    rows = harness.phase_grid(gspec, threads=args.threads)
    harness.grid_to_csv(gspec, rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def _cmd_rigidity_curve(args) -> int:
    rspec = RigiditySpec.from_toml(args.config)
    rows = harness.rigidity_curve(rspec, threads=args.threads)
    harness.rigidity_to_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def _selfcheck_cases():
    rng = np.random.default_rng(7)

    def check_adjoint():
        g = rng.standard_normal((9, 9))
        g = (g + g.T) / 2
        m = rng.standard_normal((9, 9))
        m = (m + m.T) / 2
        lhs = np.sum(gram_to_edm(g) * m)
        rhs = np.sum(g * g_adjoint(m))
        return abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def check_projections():
        y = rng.standard_normal((12, 3))
        z = rng.standard_normal((12, 3))
        for metric in ("flat", "scaled"):
            h = project_horizontal(y, z, metric)
            v = project_vertical(y, z, metric)
            if not np.allclose(h.dir + v, z, atol=1e-10):
                return False
            if not h.validate(tol=1e-8):
                return False
        return True

    def check_linesearch():
        phi = lambda a: (a - 1.3) ** 2  # noqa: E731
        dphi = lambda a: 2 * (a - 1.3)  # noqa: E731
        res = hz_search(phi, dphi, LineSearchParams(), f_ref=phi(0.0))
        return res.accepted and abs(res.alpha - 1.3) < 0.7

    def check_toy_descent():
        y_true = np.array([[0.0], [1.0], [5.0]])
        d_star = pairwise_sq_dists(y_true)
        mask = sample_unit_ball(d_star, r=100.0)
        problem = SstressProblem.build(d_star, mask)
        rep = rank_reduction(problem, 1, SolverConfig.noiseless())
        return rep.cost_trace[-1] <= 1e-10

    return [
        ("operator adjoint identity", check_adjoint),
        ("horizontal/vertical splitting", check_projections),
        ("line search on a parabola", check_linesearch),
        ("toy chain descent", check_toy_descent),
    ]


def _cmd_selfcheck(_args) -> int:
    failures = 0
    for name, fn in _selfcheck_cases():
        try:
            ok = fn()
        except Exception as exc:  # noqa: BLE001 - report, keep checking
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        print(f"{'ok  ' if ok else 'FAIL'} - {name}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1


_HANDLERS = {
    "simulate": _cmd_simulate,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "basin-probe": _cmd_basin_probe,
    "phase-grid": _cmd_phase_grid,
    "rigidity-curve": _cmd_rigidity_curve,
    "selfcheck": _cmd_selfcheck,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
