"""Monomial graphs, greedy coloring, and cycle-length checks.

A monomial graph has one vertex per interaction index set and an edge wherever
two sets intersect.  Disjointness of the top interactions (the reduction to a
non-intersecting model) is the event "this graph has no edges"; the coloring
bound used for the mid-rank interactions is: a graph with no cycle longer
than k is (k+1)-colorable, achieved constructively by the smallest-last
(degeneracy) greedy order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MonomialGraph", "Coloring", "build_graph", "greedy_color", "is_proper",
    "has_cycle", "longest_cycle_length",
]


@dataclass(frozen=True)
class MonomialGraph:
    """Vertices are index sets; adjacency stored in CSR form."""

    vertices: tuple[tuple[int, ...], ...]
    indptr: np.ndarray
    indices: np.ndarray
    n_edges: int

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_pairs(self) -> int:
        v = self.n_vertices
        return v * (v - 1) // 2

    @property
    def intersection_prob(self) -> float:
        return self.n_edges / self.n_pairs if self.n_pairs else 0.0

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])


def build_graph(index_sets) -> MonomialGraph:
    """Edges between every pair of intersecting index sets (I != J)."""
    verts = [tuple(sorted(int(i) for i in s)) for s in index_sets]
    sets = [frozenset(v) for v in verts]
    adj = [[] for _ in verts]
    n_edges = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i] & sets[j]:
                adj[i].append(j)
                adj[j].append(i)
                n_edges += 1
    indptr = np.zeros(len(verts) + 1, dtype=np.int64)
    for i, nb in enumerate(adj):
        indptr[i + 1] = indptr[i] + len(nb)
    indices = np.fromiter((j for nb in adj for j in sorted(nb)), dtype=np.int64,
                          count=int(indptr[-1]))
    return MonomialGraph(tuple(verts), indptr, indices, n_edges)


@dataclass(frozen=True)
class Coloring:
    colors: np.ndarray
    n_colors: int
    order: tuple[int, ...]


def _smallest_last_order(graph: MonomialGraph) -> list[int]:
    """Repeatedly remove a minimum-degree vertex; color in reverse removal order."""
    v = graph.n_vertices
    deg = [graph.degree(i) for i in range(v)]
    removed = [False] * v
    heap = [(deg[i], i) for i in range(v)]
    heapq.heapify(heap)
    removal = []
    while heap:
        d, i = heapq.heappop(heap)
        if removed[i] or d != deg[i]:
            continue
        removed[i] = True
        removal.append(i)
        for j in graph.neighbors(i):
            if not removed[j]:
                deg[j] -= 1
                heapq.heappush(heap, (deg[j], int(j)))
    return removal[::-1]


def greedy_color(graph: MonomialGraph, order_rule="smallest_last") -> Coloring:
    """Proper greedy coloring; order_rule is 'smallest_last' or an explicit order.

    Smallest-last uses at most degeneracy+1 colors, hence at most k+1 colors on
    any graph whose cycles all have length <= k.
    """
    if order_rule == "smallest_last":
        order = _smallest_last_order(graph)
    else:
        order = [int(i) for i in order_rule]
        if sorted(order) != list(range(graph.n_vertices)):
            raise ValueError("explicit order must be a permutation of the vertices")
    colors = np.full(graph.n_vertices, -1, dtype=np.int64)
    for i in order:
        used = {int(colors[j]) for j in graph.neighbors(i) if colors[j] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[i] = c
    n_colors = int(colors.max()) + 1 if graph.n_vertices else 0
    return Coloring(colors, n_colors, tuple(order))


def is_proper(graph: MonomialGraph, colors: np.ndarray) -> bool:
    for i in range(graph.n_vertices):
        for j in graph.neighbors(i):
            if colors[i] == colors[j]:
                return False
    return True


def has_cycle(graph: MonomialGraph) -> bool:
    """Union-find cycle detection."""
    parent = list(range(graph.n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(graph.n_vertices):
        for j in graph.neighbors(i):
            if j <= i:
                continue
            ri, rj = find(i), find(int(j))
            if ri == rj:
                return True
            parent[ri] = rj
    return False


def longest_cycle_length(graph: MonomialGraph, max_vertices: int = 2000) -> int:
    """Exact longest simple cycle by bounded DFS; 0 when the graph is a forest.

    Exponential in the worst case; intended for the small sparse graphs these
    diagnostics produce (|V| <= 2000 guard, plus the caller's judgment).
    """
    if graph.n_vertices > max_vertices:
        raise ValueError(f"graph too large for exact cycle search ({graph.n_vertices})")
    if not has_cycle(graph):
        return 0
    best = 0
    n = graph.n_vertices
    on_path = [False] * n
    pos = {}

    def dfs(start, u, depth):
        nonlocal best
        on_path[u] = True
        pos[u] = depth
        for w in graph.neighbors(u):
            w = int(w)
            if w < start:
                continue  # cycles through smaller roots already enumerated
            if w == start and depth >= 2:
                best = max(best, depth + 1)
            elif not on_path[w]:
                dfs(start, w, depth + 1)
        on_path[u] = False
        del pos[u]

    for s in range(n):
        dfs(s, s, 0)
    return best
