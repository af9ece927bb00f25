"""Visibility masks: unit-ball rule, Bernoulli rule, and mask algebra."""

import numpy as np

from snloc import SampleMask, pairwise_sq_dists, sample_bernoulli, sample_unit_ball


def square_scene(rng, n=40):
    return rng.uniform(-0.5, 0.5, size=(n, 2))


def test_unit_ball_rule_is_strict_threshold():
    rng = np.random.default_rng(0)
    y = square_scene(rng)
    d = pairwise_sq_dists(y)
    r = 0.3
    mask = sample_unit_ball(d, r)
    ind = mask.indicator()
    for i in range(40):
        for j in range(40):
            if i == j:
                assert not ind[i, j]
            else:
                assert ind[i, j] == (d[i, j] < r * r)


def test_unit_ball_anchor_clique_always_present():
    rng = np.random.default_rng(1)
    y = square_scene(rng)
    # spread anchors far apart so the clique is not natural
    y[0] = (-0.5, -0.5)
    y[1] = (0.5, 0.5)
    y[2] = (-0.5, 0.5)
    d = pairwise_sq_dists(y)
    mask = sample_unit_ball(d, r=0.2, anchors=(0, 1, 2))
    ind = mask.indicator()
    for a in (0, 1, 2):
        for b in (0, 1, 2):
            if a != b:
                assert ind[a, b]


def test_mask_pairs_sorted_upper_triangle():
    rng = np.random.default_rng(2)
    mask = sample_bernoulli(25, 0.4, rng)
    pairs = mask.pairs
    assert np.all(pairs[:, 0] < pairs[:, 1])
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    assert np.array_equal(pairs, pairs[order])


def test_bernoulli_density_concentrates():
    rng = np.random.default_rng(3)
    n, p = 200, 0.3
    mask = sample_bernoulli(n, p, rng)
    total = n * (n - 1) // 2
    assert abs(mask.num_pairs / total - p) < 0.03


def test_indicator_symmetric_hollow_and_project():
    rng = np.random.default_rng(4)
    mask = sample_bernoulli(15, 0.5, rng)
    ind = mask.indicator()
    assert np.array_equal(ind, ind.T)
    assert not ind.diagonal().any()
    m = rng.standard_normal((15, 15))
    proj = mask.project(m)
    assert np.all(proj[~ind] == 0)
    assert np.all(proj[ind] == m[ind])
    # projection is idempotent
    assert np.array_equal(mask.project(proj), proj)


def test_fill_ratio_counts_both_triangles():
    pairs = np.array([[0, 1], [1, 2]])
    mask = SampleMask(n=4, pairs=pairs, scheme="unit_ball", param=1.0)
    assert mask.fill_ratio == 2 * 2 / 16


def test_union_merges_pair_sets():
    a = SampleMask(n=5, pairs=np.array([[0, 1], [2, 3]]), scheme="unit_ball", param=1.0)
    b = SampleMask(n=5, pairs=np.array([[0, 1], [1, 4]]), scheme="unit_ball", param=1.0)
    u = a.union(b)
    got = {tuple(p) for p in u.pairs}
    assert got == {(0, 1), (2, 3), (1, 4)}


def test_complete_mask_at_huge_radius():
    rng = np.random.default_rng(5)
    y = square_scene(rng, n=12)
    mask = sample_unit_ball(pairwise_sq_dists(y), r=100.0)
    assert mask.num_pairs == 12 * 11 // 2
