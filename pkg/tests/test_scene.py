"""Tests for scene generation, measurement synthesis, and file formats."""

import numpy as np
import pytest

from snloc.edm import pairwise_sq_dists
from snloc.scene import (
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


def test_paper_square_layout():
    scene = paper_square(n_sensors=100, seed=0)
    assert scene.n == 104
    assert scene.d == 2
    assert scene.num_anchors == 4
    expected_anchors = np.array(
        [[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]]
    )
    assert np.array_equal(scene.anchors, expected_anchors)
    assert np.array_equal(scene.positions[:4], expected_anchors)
    assert np.array_equal(scene.anchor_idx, [0, 1, 2, 3])
    sensors = scene.positions[4:]
    assert np.all(np.abs(sensors) <= 0.5)


def test_scene_seed_determinism():
    a = paper_square(n_sensors=20, seed=42)
    b = paper_square(n_sensors=20, seed=42)
    c = paper_square(n_sensors=20, seed=43)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)


def test_gaussian_cloud_is_anchor_free():
    scene = gaussian_cloud(n=4000, d=3, seed=7)
    assert scene.positions.shape == (4000, 3)
    assert scene.num_anchors == 0
    assert scene.anchor_idx.size == 0
    assert scene.side == 0.0
    # Standard-normal columns: sample means shrink like 1/sqrt(n).
    assert np.abs(scene.positions.mean(axis=0)).max() < 0.1


def test_irregular_scene_respects_polygon():
    poly = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
    scene = irregular_scene(poly, 200, anchors=[(0.5, 0.5), (1.5, 0.5)], seed=5)
    assert scene.n == 202
    assert scene.num_anchors == 2
    assert scene.side == 2.0
    sensors = scene.positions[2:]
    assert np.all((sensors >= 0.0) & (sensors <= 2.0))
    # The L-shape excludes the upper-right quadrant of the bounding box.
    assert not np.any((sensors[:, 0] > 1.0) & (sensors[:, 1] > 1.0))


def test_irregular_scene_rejects_bad_polygon():
    with pytest.raises(ValueError):
        irregular_scene([(0, 0), (1, 1)], 10)


def test_gen_scene_dispatch():
    direct = paper_square(n_sensors=15, seed=9)
    routed = gen_scene("paper_square", seed=9, n_sensors=15)
    assert np.array_equal(direct.positions, routed.positions)
    with pytest.raises(ValueError):
        gen_scene("no_such_scenario")


def test_scene_anchor_rows_must_lead():
    anchors = np.array([[0.0, 0.0], [1.0, 0.0]])
    positions = np.array([[1.0, 0.0], [0.0, 0.0], [0.5, 0.5]])
    with pytest.raises(ValueError):
        Scene(d=2, side=1.0, anchors=anchors, positions=positions, seed=0)


def test_measure_anchor_block_exact_under_heavy_noise():
    scene = paper_square(n_sensors=30, seed=3)
    d_star = pairwise_sq_dists(scene.positions)
    ms = measure(scene, scheme="unit_ball", r=0.9, sigma=2.0, seed=12)
    assert np.array_equal(ms.D_obs[:4, :4], d_star[:4, :4])
    others = [(i, j) for i, j in ms.mask.pairs if j >= 4]
    assert all(ms.D_obs[i, j] != d_star[i, j] for i, j in others)


def test_measure_outliers_spare_anchor_pairs():
    scene = paper_square(n_sensors=30, seed=3)
    d_star = pairwise_sq_dists(scene.positions)
    ms = measure(
        scene, scheme="unit_ball", r=0.8, sigma=0.0, p_out=0.3, v_out=0.5, seed=11
    )
    diff = ms.D_obs - ms.mask.project(d_star)
    hits = [(i, j) for i, j in ms.mask.pairs if diff[i, j] != 0.0]
    eligible = ms.mask.pairs[ms.mask.pairs[:, 1] >= 4]
    assert len(hits) == int(np.floor(0.3 * len(eligible)))
    assert all(j >= 4 for _, j in hits)
    added = np.array([diff[i, j] for i, j in hits])
    assert np.all((added >= 1.0) & (added <= 1.5))
    symmetric = np.array([diff[j, i] for i, j in hits])
    assert np.array_equal(added, symmetric)


def test_measure_noiseless_weights_are_unit_on_mask():
    scene = paper_square(n_sensors=30, seed=3)
    ms = measure(scene, scheme="unit_ball", r=0.8, sigma=0.0, seed=13)
    assert np.all(ms.weights[ms.mask.indicator()] == 1.0)


def test_measure_bernoulli_scheme():
    scene = gaussian_cloud(n=12, d=2, seed=0)
    ms = measure(scene, scheme="bernoulli", p=1.0, seed=4)
    assert ms.mask.num_pairs == 12 * 11 // 2
    assert ms.header["scheme"] == "bernoulli"
    assert ms.header["p"] == 1.0
    assert "r" not in ms.header


def test_measure_validation():
    scene = gaussian_cloud(n=8, d=2, seed=0)
    with pytest.raises(ValueError):
        measure(scene, scheme="unit_ball")
    with pytest.raises(ValueError):
        measure(scene, scheme="bernoulli")
    with pytest.raises(ValueError):
        measure(scene, scheme="mystery", r=0.5)


def test_scene_roundtrip(tmp_path):
    scene = paper_square(n_sensors=17, seed=21)
    path = tmp_path / "scene.json"
    save_scene(scene, path)
    loaded = load_scene(path)
    assert loaded.d == scene.d
    assert loaded.side == scene.side
    assert loaded.seed == scene.seed
    assert np.array_equal(loaded.anchors, scene.anchors)
    assert np.array_equal(loaded.positions, scene.positions)


@pytest.mark.parametrize("fmt,suffix", [("json", ".json"), ("csv", ".csv")])
def test_measurements_roundtrip(tmp_path, fmt, suffix):
    scene = paper_square(n_sensors=20, seed=6)
    ms = measure(
        scene, scheme="unit_ball", r=0.7, sigma=0.5, p_out=0.1, v_out=0.3, seed=8
    )
    path = tmp_path / f"meas{suffix}"
    save_measurements(ms, path)
    mask, d_obs, header = load_measurements(path)
    assert np.array_equal(mask.pairs, ms.mask.pairs)
    assert mask.scheme == "unit_ball"
    assert mask.param == 0.7
    assert np.array_equal(d_obs, ms.D_obs)
    for key, value in ms.header.items():
        assert header[key] == value


def test_measurement_files_use_one_based_indices(tmp_path):
    scene = paper_square(n_sensors=5, seed=1)
    ms = measure(scene, scheme="unit_ball", r=2.0, seed=2)
    csv_path = tmp_path / "meas.csv"
    save_measurements(ms, csv_path)
    data_lines = [
        line
        for line in csv_path.read_text().splitlines()
        if line and not line.startswith("#") and not line.startswith("i,")
    ]
    firsts = [int(line.split(",")[0]) for line in data_lines]
    assert min(firsts) == 1
    # Complete 9-node mask: every node index 1..9 appears somewhere.
    seconds = [int(line.split(",")[1]) for line in data_lines]
    assert max(seconds) == scene.n
