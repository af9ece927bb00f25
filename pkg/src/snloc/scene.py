"""Scene generation, measurement synthesis, and instance file formats.

A scene is a ground-truth configuration with a (possibly empty) block of
anchor nodes stored as the first rows.  Measurements are synthesized from a
scene in a fixed deterministic order: build the visibility mask, apply
multiplicative range noise, restore anchor-to-anchor entries to their exact
values (anchors know each other's positions), inject sparse outliers on the
non-anchor observed pairs, zero everything off the mask, and derive the
confidence weights.  Scene files are JSON; measurement files are JSON or
CSV triples with a parameter header, using 1-based node indices on disk.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .edm import pairwise_sq_dists
from .noise import apply_rssi_noise, build_weights, inject_outliers
from .sampling import SampleMask, sample_bernoulli, sample_unit_ball

__all__ = [
    "MeasurementSet",
    "Scene",
    "gaussian_cloud",
    "gen_scene",
    "irregular_scene",
    "load_measurements",
    "load_scene",
    "measure",
    "paper_square",
    "save_measurements",
    "save_scene",
]

SeedLike = Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class Scene:
    """Ground-truth configuration; anchor rows come first.

    ``side`` is the layout extent (0 when meaningless, e.g. Gaussian
    clouds); ``seed`` is the generation seed, kept for provenance.
    """

    d: int
    side: float
    anchors: np.ndarray
    positions: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        a = self.anchors
        pos = self.positions
        if pos.ndim != 2 or pos.shape[1] != self.d:
            raise ValueError("positions must be (n, d)")
        if a.size and not np.array_equal(pos[: a.shape[0]], a):
            raise ValueError("anchor rows must lead the position matrix")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def num_anchors(self) -> int:
        return self.anchors.shape[0]

    @property
    def anchor_idx(self) -> np.ndarray:
        return np.arange(self.num_anchors)


def paper_square(
    n_sensors: int = 100, side: float = 1.0, seed: SeedLike = 0
) -> Scene:
    """Four corner anchors plus uniform sensors in a centered square."""
    rng = np.random.default_rng(seed)
    h = side / 2.0
    anchors = np.array([[-h, -h], [-h, h], [h, -h], [h, h]])
    sensors = rng.uniform(-h, h, size=(n_sensors, 2))
    positions = np.vstack([anchors, sensors])
    return Scene(
        d=2,
        side=side,
        anchors=anchors,
        positions=positions,
        seed=_seed_int(seed),
    )


def gaussian_cloud(n: int = 300, d: int = 2, seed: SeedLike = 0) -> Scene:
    """Anchor-free standard-normal configuration."""
    rng = np.random.default_rng(seed)
    positions = rng.standard_normal((n, d))
    return Scene(
        d=d,
        side=0.0,
        anchors=np.zeros((0, d)),
        positions=positions,
        seed=_seed_int(seed),
    )


def _point_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Ray-casting containment test, vectorized over query points."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(points.shape[0], dtype=bool)
    px, py = polygon[:, 0], polygon[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    for x1, y1, x2, y2 in zip(px, py, qx, qy):
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < x_cross)
    return inside


def irregular_scene(
    polygon: Sequence[Sequence[float]],
    n_sensors: int,
    anchors: Sequence[Sequence[float]] = (),
    seed: SeedLike = 0,
) -> Scene:
    """Uniform sensors inside a polygon, with explicit anchor positions."""
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
        raise ValueError("polygon must be a list of at least 3 (x, y) vertices")
    anchors_arr = np.asarray(anchors, dtype=float).reshape(-1, 2)
    rng = np.random.default_rng(seed)
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    kept: list[np.ndarray] = []
    need = n_sensors
    for _ in range(10_000):
        if need <= 0:
            break
        batch = rng.uniform(lo, hi, size=(max(4 * need, 16), 2))
        good = batch[_point_in_polygon(batch, poly)]
        take = good[:need]
        kept.append(take)
        need -= take.shape[0]
    if need > 0:
        raise RuntimeError("polygon sampler failed; is the polygon degenerate?")
    sensors = np.vstack(kept)
    positions = np.vstack([anchors_arr, sensors]) if anchors_arr.size else sensors
    span = float(np.max(hi - lo))
    return Scene(
        d=2,
        side=span,
        anchors=anchors_arr,
        positions=positions,
        seed=_seed_int(seed),
    )


def gen_scene(scenario: str, seed: SeedLike = 0, **params) -> Scene:
    """Dispatch scene construction by scenario name."""
    if scenario == "paper_square":
        return paper_square(
            n_sensors=int(params.get("n_sensors", 100)),
            side=float(params.get("side", 1.0)),
            seed=seed,
        )
    if scenario == "gaussian_cloud":
        return gaussian_cloud(
            n=int(params.get("n", 300)), d=int(params.get("d", 2)), seed=seed
        )
    if scenario == "irregular":
        return irregular_scene(
            polygon=params["polygon"],
            n_sensors=int(params.get("n_sensors", 100)),
            anchors=params.get("anchors", ()),
            seed=seed,
        )
    raise ValueError(f"unknown scenario {scenario!r}")


@dataclass(frozen=True)
class MeasurementSet:
    """Observed squared distances with their mask, weights, and provenance."""

    mask: SampleMask
    D_obs: np.ndarray
    weights: np.ndarray
    header: dict


def _seed_int(seed: SeedLike) -> int:
    if isinstance(seed, np.random.SeedSequence):
        ent = seed.entropy
        return int(ent if not isinstance(ent, (list, tuple)) else ent[0])
    return int(seed)


def measure(
    scene: Scene,
    scheme: str = "unit_ball",
    r: Optional[float] = None,
    p: Optional[float] = None,
    sigma: float = 0.0,
    gamma: float = 2.0,
    p_out: float = 0.0,
    v_out: float = 0.0,
    seed: SeedLike = 0,
) -> MeasurementSet:
    """Synthesize one measurement instance from a scene.

    Anchor-to-anchor entries are exact (noise undone, outliers never
    injected there): anchors know their own coordinates, and the published
    protocol treats those links as given.  The outlier count is the
    configured fraction of the *corruptible* (non-anchor-pair) observed
    links.
    """
    rng = np.random.default_rng(seed)
    D_star = pairwise_sq_dists(scene.positions)
    n = scene.n
    a = scene.num_anchors

    if scheme == "unit_ball":
        if r is None:
            raise ValueError("unit_ball scheme needs a radius r")
        mask = sample_unit_ball(D_star, r, anchors=scene.anchor_idx)
    elif scheme == "bernoulli":
        if p is None:
            raise ValueError("bernoulli scheme needs a rate p")
        mask = sample_bernoulli(n, p, rng)
    else:
        raise ValueError(f"unknown sampling scheme {scheme!r}")

    D_e = apply_rssi_noise(D_star, sigma, gamma, rng)
    if a >= 2:
        block = np.ix_(scene.anchor_idx, scene.anchor_idx)
        D_e[block] = D_star[block]

    if p_out > 0.0 and v_out > 0.0:
        eligible_pairs = mask.pairs[mask.pairs[:, 1] >= a]
        if eligible_pairs.size:
            eligible = SampleMask(
                n=n, pairs=eligible_pairs, scheme=mask.scheme, param=mask.param
            )
            D_e, _ = inject_outliers(D_e, eligible, p_out, v_out, rng)

    D_obs = mask.project(D_e)
    weights = build_weights(D_obs, D_star)
    header = {
        "n": n,
        "scheme": scheme,
        ("r" if scheme == "unit_ball" else "p"): (r if scheme == "unit_ball" else p),
        "sigma": sigma,
        "gamma": gamma,
        "p_out": p_out,
        "v_out": v_out,
        "seed": _seed_int(seed),
    }
    return MeasurementSet(mask=mask, D_obs=D_obs, weights=weights, header=header)


def save_scene(scene: Scene, path: Union[str, Path]) -> None:
    """Write a scene as JSON (sorted keys, stable across runs)."""
    payload = {
        "n": scene.n,
        "d": scene.d,
        "side": scene.side,
        "anchors": scene.anchors.tolist(),
        "positions": scene.positions.tolist(),
        "seed": scene.seed,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_scene(path: Union[str, Path]) -> Scene:
    """Read a scene written by :func:`save_scene`."""
    payload = json.loads(Path(path).read_text())
    anchors = np.asarray(payload["anchors"], dtype=float).reshape(-1, payload["d"])
    positions = np.asarray(payload["positions"], dtype=float)
    return Scene(
        d=int(payload["d"]),
        side=float(payload["side"]),
        anchors=anchors,
        positions=positions,
        seed=int(payload["seed"]),
    )


def _triples(ms: MeasurementSet) -> list[tuple[int, int, float]]:
    """Observed entries as 1-based (i, j, squared distance) triples."""
    return [
        (int(i) + 1, int(j) + 1, float(ms.D_obs[i, j])) for i, j in ms.mask.pairs
    ]


def save_measurements(
    ms: MeasurementSet, path: Union[str, Path], fmt: Optional[str] = None
) -> None:
    """Write measurements as JSON (default) or CSV triples with a header."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "json"
    if fmt == "json":
        payload = {"header": ms.header, "triples": _triples(ms)}
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            for key in sorted(ms.header):
                fh.write(f"# {key}={ms.header[key]}\n")
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "d_squared"])
            writer.writerows(_triples(ms))
    else:
        raise ValueError(f"unknown measurement format {fmt!r}")


def load_measurements(path: Union[str, Path]) -> tuple[SampleMask, np.ndarray, dict]:
    """Read a measurement file; returns (mask, observed matrix, header).

    Weights are not stored on disk — rebuild them with
    :func:`snloc.noise.build_weights` against the scene's true distances.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        header: dict = {}
        rows: list[tuple[int, int, float]] = []
        with path.open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    header[key.strip()] = _parse_scalar(value.strip())
                    continue
                if line.lower().startswith("i,"):
                    continue
                i_s, j_s, v_s = line.split(",")
                rows.append((int(i_s), int(j_s), float(v_s)))
    else:
        payload = json.loads(path.read_text())
        header = dict(payload["header"])
        rows = [(int(i), int(j), float(v)) for i, j, v in payload["triples"]]
    n = int(header["n"])
    pairs = np.array([[i - 1, j - 1] for i, j, _ in rows], dtype=np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs = pairs[order]
    D_obs = np.zeros((n, n))
    for i, j, v in rows:
        D_obs[i - 1, j - 1] = v
        D_obs[j - 1, i - 1] = v
    scheme = str(header.get("scheme", "unit_ball"))
    param = header.get("r" if scheme == "unit_ball" else "p")
    mask = SampleMask(
        n=n, pairs=pairs, scheme=scheme, param=float(param) if param is not None else float("nan")
    )
    return mask, D_obs, header


def _parse_scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text
