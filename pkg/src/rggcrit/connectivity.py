"""Exact vertex connectivity and the k-connectivity critical radius.

Local s-t connectivity is the max-flow on the standard vertex-split
network (v -> v_in, v_out with a unit internal arc; edge arcs uncapped),
computed by shortest augmenting paths: with unit internal capacities each
augmentation is one BFS and flows stop early once the target K is reached.
Global tests use a provably exact candidate-pair strategy: a minimum-degree
vertex against all of its non-neighbors, plus all non-adjacent pairs among
its neighbors.

The hot loop is a numba kernel; a pure-Python mirror of the same algorithm
serves as the reference implementation and differential-test oracle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import AdjacentPairError, DegenerateInstanceError, DomainError
from .rgg import GeometricGraph, PointCloud, build_graph, min_degree_radius, pairwise_distances

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*a, **k):
        def wrap(f):
            return f
        return wrap

__all__ = [
    "ConnectivityResult",
    "FlowNetwork",
    "local_vertex_connectivity",
    "is_k_connected",
    "vertex_connectivity",
    "connectivity_radius",
]


@dataclass(frozen=True)
class FlowNetwork:
    """Vertex-split directed network in CSR form.

    Vertex v maps to v_in = 2v and v_out = 2v+1; the internal arc
    v_in -> v_out has capacity 1, edge arcs have capacity n (effectively
    unbounded).  `rev[a]` is the index of the reverse arc of arc a.
    """

    n: int
    indptr: np.ndarray
    heads: np.ndarray
    caps: np.ndarray
    rev: np.ndarray

    @property
    def arc_count(self) -> int:
        return len(self.heads)


def build_flow_network(graph: GeometricGraph) -> FlowNetwork:
    n = graph.n
    m = graph.edge_count
    n_nodes = 2 * n
    n_arcs = 2 * n + 8 * m  # internal arc + reverse, 4 arcs per edge... see below
    # arcs per vertex: internal v_in->v_out and its reverse; per undirected
    # edge (u,v): u_out->v_in, v_out->u_in and their reverses
    deg = np.zeros(n_nodes, np.int64)
    deg[0::2] += 1  # v_in -> v_out
    deg[1::2] += 1  # reverse of internal arc sits on v_out
    for i, nbrs in enumerate(graph.neighbors):
        deg[2 * i + 1] += len(nbrs)  # i_out -> j_in
        deg[2 * i] += len(nbrs)      # reverse arcs j_out -> i_in land on i_in
    indptr = np.zeros(n_nodes + 1, np.int64)
    np.cumsum(deg, out=indptr[1:])
    heads = np.empty(indptr[-1], np.int64)
    caps = np.empty(indptr[-1], np.int64)
    rev = np.empty(indptr[-1], np.int64)
    cursor = indptr[:-1].copy()

    def add(u, v, c):
        a = cursor[u]
        cursor[u] += 1
        b = cursor[v]
        cursor[v] += 1
        heads[a], caps[a] = v, c
        heads[b], caps[b] = u, 0
        rev[a], rev[b] = b, a

    big = n  # any value >= max possible flow
    for v in range(n):
        add(2 * v, 2 * v + 1, 1)
    for i, nbrs in enumerate(graph.neighbors):
        for j in nbrs[nbrs > i]:
            add(2 * i + 1, 2 * int(j), big)
            add(2 * int(j) + 1, 2 * i, big)
    assert (cursor == indptr[1:]).all()
    return FlowNetwork(n=n, indptr=indptr, heads=heads, caps=caps, rev=rev)


@njit(cache=True)
def _nb_max_flow(indptr, heads, caps, rev, source, sink, limit):  # pragma: no cover
    n_nodes = len(indptr) - 1
    parent_arc = np.empty(n_nodes, np.int64)
    queue = np.empty(n_nodes, np.int64)
    flow = 0
    while flow < limit:
        parent_arc[:] = -1
        parent_arc[source] = -2
        queue[0] = source
        head, tail = 0, 1
        found = False
        while head < tail:
            u = queue[head]
            head += 1
            for a in range(indptr[u], indptr[u + 1]):
                if caps[a] > 0 and parent_arc[heads[a]] == -1:
                    parent_arc[heads[a]] = a
                    if heads[a] == sink:
                        found = True
                        break
                    queue[tail] = heads[a]
                    tail += 1
            if found:
                break
        if not found:
            break
        bottleneck = limit - flow
        v = sink
        while v != source:
            a = parent_arc[v]
            if caps[a] < bottleneck:
                bottleneck = caps[a]
            v = heads[rev[a]]
        v = sink
        while v != source:
            a = parent_arc[v]
            caps[a] -= bottleneck
            caps[rev[a]] += bottleneck
            v = heads[rev[a]]
        flow += bottleneck
    return flow


@njit(cache=True)
def _nb_min_over_targets(indptr, heads, caps0, rev, source, targets, limit):  # pragma: no cover
    """Minimum over targets of the early-exited s-t flow; stops at the
    first target whose flow falls below `limit`.

    The source-side BFS tree of the clean network supplies every target's
    first augmenting path, and per-target capacity changes are rolled back
    arc by arc, so each target costs limit-1 searches plus bookkeeping.
    """
    n_nodes = len(indptr) - 1
    caps = caps0.copy()
    parent_arc = np.empty(n_nodes, np.int64)
    queue = np.empty(n_nodes, np.int64)
    touched = np.empty(8 * n_nodes, np.int64)
    tree = np.full(n_nodes, -1, np.int64)
    tree[source] = -2
    queue[0] = source
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        for a in range(indptr[u], indptr[u + 1]):
            if caps[a] > 0 and tree[heads[a]] == -1:
                tree[heads[a]] = a
                queue[tail] = heads[a]
                tail += 1
    best = limit
    for ti in range(len(targets)):
        t = targets[ti]
        if tree[t] == -1:
            return 0
        flow = 0
        ntouch = 0
        clean = True
        # first augmentation along the clean-network tree path
        bn = best
        v = t
        while v != source:
            a = tree[v]
            if caps[a] < bn:
                bn = caps[a]
            v = heads[rev[a]]
        if bn > 0:
            v = t
            while v != source:
                a = tree[v]
                caps[a] -= bn
                caps[rev[a]] += bn
                if ntouch + 2 <= len(touched):
                    touched[ntouch] = a
                    touched[ntouch + 1] = rev[a]
                    ntouch += 2
                else:
                    clean = False
                v = heads[rev[a]]
            flow = bn
        # remaining augmentations by BFS on the residual network
        while flow < best:
            parent_arc[:] = -1
            parent_arc[source] = -2
            queue[0] = source
            head, tail = 0, 1
            found = False
            while head < tail:
                u = queue[head]
                head += 1
                for a in range(indptr[u], indptr[u + 1]):
                    if caps[a] > 0 and parent_arc[heads[a]] == -1:
                        parent_arc[heads[a]] = a
                        if heads[a] == t:
                            found = True
                            break
                        queue[tail] = heads[a]
                        tail += 1
                if found:
                    break
            if not found:
                break
            bn = best - flow
            v = t
            while v != source:
                a = parent_arc[v]
                if caps[a] < bn:
                    bn = caps[a]
                v = heads[rev[a]]
            v = t
            while v != source:
                a = parent_arc[v]
                caps[a] -= bn
                caps[rev[a]] += bn
                if ntouch + 2 <= len(touched):
                    touched[ntouch] = a
                    touched[ntouch + 1] = rev[a]
                    ntouch += 2
                else:
                    clean = False
                v = heads[rev[a]]
            flow += bn
        if clean:
            for i in range(ntouch):
                caps[touched[i]] = caps0[touched[i]]
        else:
            caps[:] = caps0
        if flow < best:
            best = flow
            if best < limit:
                break
    return best


def _py_max_flow(net: FlowNetwork, caps: np.ndarray, source: int, sink: int,
                 limit: int) -> int:
    """Pure-Python mirror of the numba kernel (reference implementation)."""
    indptr, heads, rev = net.indptr, net.heads, net.rev
    n_nodes = 2 * net.n
    flow = 0
    while flow < limit:
        parent = np.full(n_nodes, -1, np.int64)
        parent[source] = -2
        dq = deque([source])
        found = False
        while dq and not found:
            u = dq.popleft()
            for a in range(indptr[u], indptr[u + 1]):
                h = heads[a]
                if caps[a] > 0 and parent[h] == -1:
                    parent[h] = a
                    if h == sink:
                        found = True
                        break
                    dq.append(h)
        if not found:
            break
        bottleneck = limit - flow
        v = sink
        while v != source:
            a = parent[v]
            bottleneck = min(bottleneck, int(caps[a]))
            v = heads[rev[a]]
        v = sink
        while v != source:
            a = parent[v]
            caps[a] -= bottleneck
            caps[rev[a]] += bottleneck
            v = heads[rev[a]]
        flow += bottleneck
    return flow


def local_vertex_connectivity(graph: GeometricGraph, s: int, t: int,
                              limit: int | None = None,
                              use_numba: bool = _HAVE_NUMBA) -> int:
    """Maximum number of internally vertex-disjoint s-t paths.

    Equals the minimum s-t vertex cut for non-adjacent s, t.  `limit`
    caps the answer (early exit once that many paths are found).
    """
    n = graph.n
    if not (0 <= s < n and 0 <= t < n) or s == t:
        raise DomainError(f"invalid endpoint pair ({s}, {t})")
    if graph.is_edge(s, t):
        raise AdjacentPairError(f"local cut undefined for adjacent pair ({s}, {t})")
    if limit is None:
        limit = n
    net = build_flow_network(graph)
    if use_numba:
        return int(_nb_max_flow(net.indptr, net.heads, net.caps.copy(), net.rev,
                                2 * s + 1, 2 * t, limit))
    return _py_max_flow(net, net.caps.copy(), 2 * s + 1, 2 * t, limit)


def _connected(graph: GeometricGraph) -> bool:
    n = graph.n
    if n <= 1:
        return True
    seen = np.zeros(n, bool)
    seen[0] = True
    frontier = [0]
    count = 1
    while frontier:
        nxt = []
        for u in frontier:
            for v in graph.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    nxt.append(int(v))
        frontier = nxt
    return count == n


def _candidate_pairs(graph: GeometricGraph):
    """Exact strategy: a minimum-degree vertex v0 against its non-neighbors,
    plus non-adjacent pairs among the neighbors of v0."""
    degrees = graph.degrees
    v0 = int(degrees.argmin())
    nbrs = graph.neighbors[v0]
    mask = np.ones(graph.n, bool)
    mask[v0] = False
    mask[nbrs] = False
    non_nbrs = np.flatnonzero(mask)
    pairs = [(int(x), int(y)) for ii, x in enumerate(nbrs) for y in nbrs[ii + 1:]
             if not graph.is_edge(int(x), int(y))]
    return v0, non_nbrs, pairs


def is_k_connected(graph: GeometricGraph, K: int,
                   use_numba: bool = _HAVE_NUMBA) -> bool:
    """Whether no set of K-1 vertex removals can disconnect the graph.

    Complete graphs count as (n-1)-connected.  Exactness rests on the
    candidate-pair strategy; flows stop early at K.
    """
    if K < 1:
        raise DomainError(f"connectivity target must be >= 1, got {K}")
    n = graph.n
    if n < K + 1:
        return False
    if int(graph.degrees.min()) < K:
        return False
    if not _connected(graph):
        return False
    if K == 1:
        return True
    if all(len(a) == n - 1 for a in graph.neighbors):
        return True  # complete graph, kappa = n - 1 >= K here
    v0, non_nbrs, pairs = _candidate_pairs(graph)
    net = build_flow_network(graph)
    if use_numba and len(non_nbrs):
        got = int(_nb_min_over_targets(net.indptr, net.heads, net.caps, net.rev,
                                       2 * v0 + 1, 2 * non_nbrs, K))
        if got < K:
            return False
    elif len(non_nbrs):
        for t in non_nbrs:
            if _py_max_flow(net, net.caps.copy(), 2 * v0 + 1, 2 * int(t), K) < K:
                return False
    for x, y in pairs:
        if use_numba:
            f = int(_nb_max_flow(net.indptr, net.heads, net.caps.copy(), net.rev,
                                 2 * x + 1, 2 * y, K))
        else:
            f = _py_max_flow(net, net.caps.copy(), 2 * x + 1, 2 * y, K)
        if f < K:
            return False
    return True


@dataclass(frozen=True)
class ConnectivityResult:
    """Exact vertex connectivity with an optional witness cut."""

    kappa: int
    witness_cut: tuple[int, ...] | None = None


def _witness_from_flow(net: FlowNetwork, caps_after: np.ndarray, source: int) -> tuple[int, ...]:
    """Vertices whose internal arc crosses the saturated cut: v_in reachable
    in the residual network, v_out not."""
    n_nodes = 2 * net.n
    seen = np.zeros(n_nodes, bool)
    seen[source] = True
    dq = deque([source])
    while dq:
        u = dq.popleft()
        for a in range(net.indptr[u], net.indptr[u + 1]):
            h = net.heads[a]
            if caps_after[a] > 0 and not seen[h]:
                seen[h] = True
                dq.append(h)
    return tuple(v for v in range(net.n) if seen[2 * v] and not seen[2 * v + 1])


def vertex_connectivity(graph: GeometricGraph) -> ConnectivityResult:
    """Exact kappa; n-1 for complete graphs, 0 when disconnected."""
    n = graph.n
    if n < 2:
        raise DomainError(f"connectivity needs n >= 2 vertices, got {n}")
    if not _connected(graph):
        return ConnectivityResult(kappa=0, witness_cut=())
    if all(len(a) == n - 1 for a in graph.neighbors):
        return ConnectivityResult(kappa=n - 1, witness_cut=None)
    v0, non_nbrs, pairs = _candidate_pairs(graph)
    net = build_flow_network(graph)
    best = n - 1
    best_pair = None
    for s, t in [(v0, int(u)) for u in non_nbrs] + pairs:
        if _HAVE_NUMBA:
            f = int(_nb_max_flow(net.indptr, net.heads, net.caps.copy(), net.rev,
                                 2 * s + 1, 2 * t, best))
        else:
            f = _py_max_flow(net, net.caps.copy(), 2 * s + 1, 2 * t, best)
        if f < best:
            best, best_pair = f, (s, t)
    if best_pair is None:
        # every candidate flow hit the cap n-1; the graph is (n-1)-connected
        return ConnectivityResult(kappa=best, witness_cut=None)
    caps = net.caps.copy()
    _py_max_flow(net, caps, 2 * best_pair[0] + 1, 2 * best_pair[1], n)
    return ConnectivityResult(kappa=best,
                              witness_cut=_witness_from_flow(net, caps, 2 * best_pair[0] + 1))


def connectivity_radius(cloud: PointCloud, K: int, verify: bool = True) -> float:
    """Minimum pairwise distance r with build_graph(cloud, r) K-connected.

    kappa is monotone in r, and kappa <= delta pins the answer at or above
    the minimum-degree radius for K; the search gallops up the sorted
    pairwise-distance candidates from there and bisects the bracket.  The
    returned radius is verified K-connected and the next-smaller candidate
    verified not K-connected.
    """
    n = cloud.n
    if K >= n:
        raise DegenerateInstanceError(f"K={K} impossible with n={n} points")
    if K < 1:
        raise DomainError(f"connectivity target must be >= 1, got {K}")
    rho_delta = min_degree_radius(cloud, K)
    if is_k_connected(build_graph(cloud, rho_delta), K):
        # no smaller candidate can work: below rho_delta the minimum degree,
        # hence kappa, is < K
        return rho_delta
    dists = np.unique(pairwise_distances(cloud))
    cand = dists[dists > rho_delta]
    lo, step = -1, 1  # cand[lo] known False (rho_delta itself), gallop up
    while True:
        hi = lo + step
        if hi >= len(cand) - 1:
            hi = len(cand) - 1
            if not is_k_connected(build_graph(cloud, cand[hi]), K):
                raise DegenerateInstanceError(
                    f"graph never becomes {K}-connected (K >= n unreachable)")
            break
        if is_k_connected(build_graph(cloud, cand[hi]), K):
            break
        lo, step = hi, 2 * step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if is_k_connected(build_graph(cloud, cand[mid]), K):
            hi = mid
        else:
            lo = mid
    result = float(cand[hi])
    if verify:
        assert is_k_connected(build_graph(cloud, result), K)
        prev = cand[hi - 1] if hi > 0 else rho_delta
        assert not is_k_connected(build_graph(cloud, float(prev)), K)
    return result
