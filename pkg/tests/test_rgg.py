"""Point clouds, grid adjacency and nearest-neighbor radii vs brute force."""

import math

import numpy as np
import pytest
from scipy.stats import chisquare

from rggcrit.errors import DegenerateInstanceError, DomainError
from rggcrit.geometry import Region
from rggcrit.rgg import (
    GeometricGraph,
    PointCloud,
    build_graph,
    degree_count,
    generate,
    knn_radii,
    min_degree_radius,
    pairwise_distances,
    write_edges_csv,
    write_points_csv,
)

CUBE3 = Region("cube", 3)


def brute_adjacency(cloud, r):
    pts = cloud.points
    n = cloud.n
    out = []
    for i in range(n):
        dist = np.sqrt(((pts - pts[i]) ** 2).sum(axis=1))
        out.append(np.sort(np.flatnonzero((dist <= r) & (np.arange(n) != i))))
    return out


def collinear_cloud():
    pts = np.array([[0.1, 0.5, 0.5], [0.5, 0.5, 0.5], [0.9, 0.5, 0.5]])
    return PointCloud(CUBE3, pts, seed=0)


def test_generate_determinism_and_bounds():
    a = generate(CUBE3, 400, 987654321)
    b = generate(CUBE3, 400, 987654321)
    assert np.array_equal(a.points, b.points)
    assert a.points.shape == (400, 3)
    assert a.points.min() >= 0.0 and a.points.max() <= 1.0
    single = generate(CUBE3, 1, 3)
    assert build_graph(single, 5.0).edge_count == 0
    with pytest.raises(DomainError):
        generate(CUBE3, 0, 1)


def test_generate_chi_square_uniformity():
    pts = generate(CUBE3, 1_000_000, 2024).points
    cells = np.minimum((pts * 10).astype(int), 9)
    flat = cells[:, 0] * 100 + cells[:, 1] * 10 + cells[:, 2]
    counts = np.bincount(flat, minlength=1000)
    _, p = chisquare(counts)
    assert 0.001 < p < 0.999


def test_build_graph_collinear_path():
    g = build_graph(collinear_cloud(), 0.4)
    assert [list(a) for a in g.neighbors] == [[1], [0, 2], [1]]
    complete = build_graph(collinear_cloud(), CUBE3.diameter)
    assert all(len(a) == 2 for a in complete.neighbors)


def test_build_graph_matches_brute_force():
    for seed in range(10):
        for d in (2, 3, 4):
            cloud = generate(Region("cube", d), 300, seed)
            r = 0.12 + 0.03 * seed
            g = build_graph(cloud, r)
            assert all(np.array_equal(a, b)
                       for a, b in zip(g.neighbors, brute_adjacency(cloud, r)))


def test_edge_monotonicity_and_degree_sum():
    cloud = generate(CUBE3, 250, 5)
    g_small = build_graph(cloud, 0.1)
    g_big = build_graph(cloud, 0.2)
    for a, b in zip(g_small.neighbors, g_big.neighbors):
        assert set(a).issubset(set(b))
    assert g_big.degrees.sum() == 2 * g_big.edge_count


def test_knn_radii_collinear():
    cloud = collinear_cloud()
    assert np.allclose(knn_radii(cloud, 1), [0.4, 0.4, 0.4])
    assert np.allclose(knn_radii(cloud, 2), [0.8, 0.4, 0.8])
    with pytest.raises(DomainError):
        knn_radii(cloud, 3)


def test_knn_radii_matches_brute_force_bitwise():
    for seed in range(5):
        cloud = generate(CUBE3, 200, seed)
        pts = cloud.points
        for m in (1, 2, 5, 10):
            got = knn_radii(cloud, m)
            want = np.empty(200)
            for i in range(200):
                dist = np.sqrt(((pts - pts[i]) ** 2).sum(axis=1))
                want[i] = np.sort(dist[np.arange(200) != i])[m - 1]
            assert np.array_equal(got, want)


def test_knn_radii_monotone_in_m():
    cloud = generate(CUBE3, 120, 9)
    prev = knn_radii(cloud, 1)
    for m in range(2, 8):
        cur = knn_radii(cloud, m)
        assert np.all(cur >= prev)
        prev = cur


def test_min_degree_radius_collinear():
    cloud = collinear_cloud()
    assert min_degree_radius(cloud, 1) == pytest.approx(0.4)
    assert min_degree_radius(cloud, 2) == pytest.approx(0.8)
    with pytest.raises(DegenerateInstanceError):
        min_degree_radius(cloud, 3)


def test_min_degree_radius_attained_and_sharp():
    for seed in range(25):
        cloud = generate(CUBE3, 120, seed)
        dists = pairwise_distances(cloud)
        for K in (1, 2, 4):
            rho = min_degree_radius(cloud, K)
            assert rho in dists  # always one of the pairwise distances
            assert build_graph(cloud, rho).degrees.min() >= K
            assert build_graph(cloud, rho * (1 - 1e-12)).degrees.min() < K


def test_degree_count_partitions():
    cloud = generate(CUBE3, 50, 1)
    g = build_graph(cloud, 0.3)
    assert sum(degree_count(g, k) for k in range(50)) == 50
    complete = build_graph(cloud, CUBE3.diameter)
    assert degree_count(complete, 49) == 50
    assert degree_count(complete, 3) == 0
    empty = build_graph(cloud, 1e-9)
    assert degree_count(empty, 0) == 50


def test_csv_exports(tmp_path):
    cloud = generate(CUBE3, 20, 3)
    g = build_graph(cloud, 0.4)
    ppath = tmp_path / "points.csv"
    epath = tmp_path / "edges.csv"
    write_points_csv(cloud, str(ppath))
    write_edges_csv(g, str(epath))
    lines = ppath.read_text().strip().splitlines()
    assert lines[0] == "x1,x2,x3"
    assert len(lines) == 21
    back = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert np.array_equal(back, cloud.points)  # 17 digits round-trip
    elines = epath.read_text().strip().splitlines()
    assert elines[0] == "i,j,dist"
    assert len(elines) == g.edge_count + 1
    i, j, dist = elines[1].split(",")
    assert float(dist) <= 0.4 and int(i) < int(j)


def test_pairwise_distances_count_and_values():
    cloud = generate(CUBE3, 40, 2)
    dists = pairwise_distances(cloud)
    assert len(dists) == 40 * 39 // 2
    pts = cloud.points
    want = sorted(float(np.sqrt(((pts[i] - pts[j]) ** 2).sum()))
                  for i in range(40) for j in range(i + 1, 40))
    assert np.allclose(np.sort(dists), want, rtol=0, atol=0)
