"""Point clouds, grid-indexed geometric graphs and degree statistics.

Edges use the closed threshold (distance <= r): the critical radii are
minima over a finite set of pairwise distances and are attained only with
the closed convention.  All comparisons happen on distances computed as
sqrt of the coordinate-wise squared sum, so a radius returned by one
operation is reproduced bit-for-bit by the others.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInstanceError, DomainError
from .geometry import Region, sample_uniform

__all__ = [
    "PointCloud",
    "GeometricGraph",
    "generate",
    "build_graph",
    "knn_radii",
    "min_degree_radius",
    "degree_count",
    "pairwise_distances",
    "write_points_csv",
    "write_edges_csv",
]


@dataclass(frozen=True)
class PointCloud:
    """Points sampled uniformly over a region; bit-identical under reseed."""

    region: Region
    points: np.ndarray  # (n, d)
    seed: int

    @property
    def n(self) -> int:
        return len(self.points)


def generate(region: Region, n: int, seed: int) -> PointCloud:
    """n uniform points over the region, deterministic under the seed."""
    if n < 1:
        raise DomainError(f"need n >= 1 points, got {n}")
    rng = np.random.default_rng(seed)
    return PointCloud(region=region, points=sample_uniform(region, n, rng), seed=seed)


def _distances_from(points: np.ndarray, i: int, js: np.ndarray) -> np.ndarray:
    diff = points[js] - points[i]
    return np.sqrt((diff * diff).sum(axis=1))


@dataclass
class GeometricGraph:
    """Threshold graph on a point cloud: i ~ j iff distance <= radius."""

    cloud: PointCloud
    radius: float
    neighbors: list[np.ndarray]  # sorted vertex indices, symmetric, no loops
    grid: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.cloud.n

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.neighbors])

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self):
        """Yields (i, j, distance) with i < j."""
        pts = self.cloud.points
        for i, nbrs in enumerate(self.neighbors):
            for j in nbrs[nbrs > i]:
                yield i, int(j), float(np.sqrt(((pts[i] - pts[j]) ** 2).sum()))

    def is_edge(self, i: int, j: int) -> bool:
        k = np.searchsorted(self.neighbors[i], j)
        return k < len(self.neighbors[i]) and self.neighbors[i][k] == j


_KEY_BITS = 15  # packed cell coordinates, 15 bits per axis after centering


def _pack_rows(keys: np.ndarray) -> np.ndarray:
    packed = np.zeros(len(keys), np.int64)
    for axis in range(keys.shape[1]):
        packed = (packed << _KEY_BITS) + keys[:, axis]
    return packed


def _cell_index(points: np.ndarray, cell: float) -> dict:
    """Cells keyed by packed integer coordinates -> point index arrays."""
    keys = np.floor(points / cell).astype(np.int64) + (1 << (_KEY_BITS - 1))
    packed = _pack_rows(keys)
    order = np.argsort(packed, kind="stable")
    sorted_keys = packed[order]
    starts = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]])
    ends = np.r_[starts[1:], len(packed)]
    return {int(sorted_keys[s]): order[s:e] for s, e in zip(starts, ends)}


def _neighbor_offsets(d: int) -> np.ndarray:
    return _pack_rows(np.array(list(product((-1, 0, 1), repeat=d)), np.int64))


def build_graph(cloud: PointCloud, r: float) -> GeometricGraph:
    """Adjacency by scanning the 3^d neighborhood of a grid with cell size r.

    Matches the O(n^2) brute-force adjacency exactly.
    """
    if r <= 0:
        raise DomainError(f"radius must be > 0, got {r}")
    pts = cloud.points
    n, d = pts.shape
    if d * _KEY_BITS > 62:  # packing would overflow; n stays small at d >= 5
        neighbors = []
        for i in range(n):
            dist = np.sqrt(((pts - pts[i]) ** 2).sum(axis=1))
            neighbors.append(np.flatnonzero((dist <= r) & (np.arange(n) != i)))
        return GeometricGraph(cloud=cloud, radius=r, neighbors=neighbors, grid={})
    cells = _cell_index(pts, r)
    offsets = _neighbor_offsets(d)
    neighbors: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for key, idx in cells.items():
        block = [cells[nk] for off in offsets if (nk := key + int(off)) in cells]
        cand = np.concatenate(block)
        diff = pts[cand][None, :, :] - pts[idx][:, None, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        close = dist <= r
        for row, i in enumerate(idx):
            sel = cand[close[row]]
            neighbors[i] = np.sort(sel[sel != i])
    return GeometricGraph(cloud=cloud, radius=r, neighbors=neighbors, grid=cells)


def knn_radii(cloud: PointCloud, m: int) -> np.ndarray:
    """Distance from each point to its m-th nearest other point (exact).

    The k-d tree supplies the neighbor identity; the returned distance is
    recomputed with the canonical coordinate formula so that thresholds
    derived from it reproduce the same adjacency in build_graph.
    """
    n = cloud.n
    if not 1 <= m <= n - 1:
        raise DomainError(f"need 1 <= m <= n-1, got m={m}, n={n}")
    tree = cKDTree(cloud.points)
    _, idx = tree.query(cloud.points, k=m + 1)
    out = np.empty(n)
    for i in range(n):
        js = idx[i][idx[i] != i][:m]  # drop the self match, keep m others
        out[i] = _distances_from(cloud.points, i, js)[-1]
    return out


def min_degree_radius(cloud: PointCloud, k_plus_1: int) -> float:
    """Smallest radius at which the minimum vertex degree reaches k_plus_1.

    Equals the largest of the per-vertex k_plus_1-th nearest-neighbor
    distances, hence always one of the pairwise distances.
    """
    if k_plus_1 >= cloud.n:
        raise DegenerateInstanceError(
            f"min degree {k_plus_1} impossible with n={cloud.n} points")
    return float(knn_radii(cloud, k_plus_1).max())


def degree_count(graph: GeometricGraph, k: int) -> int:
    """Number of vertices with degree exactly k."""
    return int(np.count_nonzero(graph.degrees == k))


def pairwise_distances(cloud: PointCloud, chunk: int = 256) -> np.ndarray:
    """All n(n-1)/2 pairwise distances (canonical formula), unsorted."""
    pts = cloud.points
    n = cloud.n
    parts = []
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        diff = pts[lo:hi, None, :] - pts[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        for row in range(hi - lo):
            parts.append(dist[row, lo + row + 1:])
    return np.concatenate(parts)


def write_points_csv(cloud: PointCloud, path: str) -> None:
    """One row per point, d columns, header x1..xd."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(cloud.region.d)])
        for p in cloud.points:
            w.writerow([f"{v:.17g}" for v in p])


def write_edges_csv(graph: GeometricGraph, path: str) -> None:
    """Edge list rows i,j,dist with i < j."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "dist"])
        for i, j, dist in graph.edges():
            w.writerow([i, j, f"{dist:.17g}"])
