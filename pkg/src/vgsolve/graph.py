"""Viewing-graph representation, edge-list parsing, and combinatorial
necessary conditions used as cheap pre-tests before any rank computation.

A viewing graph is an undirected simple graph whose nodes stand for cameras
and whose edges mark camera pairs with a known fundamental matrix.  Edge
order is significant throughout the package: edge k owns rows
``10*k .. 10*k+9`` of the constraint Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GraphParseError",
    "GraphValidationError",
    "ViewingGraph",
    "NecessaryConditionResult",
    "parse_edge_list",
    "to_edge_list",
    "necessary_conditions",
    "incidence_matrix",
    "minimal_edge_count",
]


class GraphParseError(ValueError):
    """Malformed edge-list input (bad token, wrong field count)."""


class GraphValidationError(ValueError):
    """Structurally invalid graph (self-loop, duplicate edge, bad node id)."""


def minimal_edge_count(n: int) -> int:
    """Fewest edges a solvable graph on ``n`` nodes can have: ceil((11n-15)/7)."""
    return max(0, math.ceil((11 * n - 15) / 7))


@dataclass(frozen=True)
class ViewingGraph:
    """Immutable undirected simple graph with 0-based contiguous node ids.

    Edges are normalized to ``(min, max)`` pairs but kept in construction
    order, since downstream Jacobian row blocks are indexed by edge position.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.node_count < 1:
            raise GraphValidationError(f"node_count must be >= 1, got {self.node_count}")
        canonical = []
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise GraphValidationError(f"self-loop at node {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise GraphValidationError(
                    f"edge ({i}, {j}) out of range for {self.node_count} nodes"
                )
            e = (i, j) if i < j else (j, i)
            if e in seen:
                raise GraphValidationError(f"duplicate edge {e}")
            seen.add(e)
            canonical.append(e)
        object.__setattr__(self, "edges", tuple(canonical))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.node_count
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return tuple(deg)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs = [[] for _ in range(self.node_count)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(a)) for a in nbrs)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def permuted(self, perm: list[int] | tuple[int, ...]) -> "ViewingGraph":
        """Relabel nodes: node ``v`` becomes ``perm[v]``."""
        if sorted(perm) != list(range(self.node_count)):
            raise GraphValidationError("perm is not a permutation of the node ids")
        return ViewingGraph(
            self.node_count, tuple((perm[i], perm[j]) for i, j in self.edges)
        )


def parse_edge_list(text: str) -> ViewingGraph:
    """Parse a whitespace-separated edge list, one ``i j`` pair per line.

    Lines starting with ``#`` and blank lines are ignored.  Node ids must be
    0-based and contiguous; files with gaps are rejected rather than
    compacted.
    """
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    mentioned: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"line {lineno}: expected two node ids, got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"line {lineno}: non-integer node id in {raw!r}") from None
        if i < 0 or j < 0:
            raise GraphParseError(f"line {lineno}: negative node id in {raw!r}")
        if i == j:
            raise GraphValidationError(f"line {lineno}: self-loop at node {i}")
        e = (i, j) if i < j else (j, i)
        if e in seen:
            raise GraphValidationError(f"line {lineno}: duplicate edge {e}")
        seen.add(e)
        edges.append(e)
        mentioned.update(e)
    if not edges:
        raise GraphParseError("no edges found in input")
    n = max(mentioned) + 1
    missing = sorted(set(range(n)) - mentioned)
    if missing:
        raise GraphValidationError(f"node ids are not contiguous, missing {missing}")
    return ViewingGraph(n, tuple(edges))


def to_edge_list(g: ViewingGraph) -> str:
    """Serialize back to the edge-list format accepted by parse_edge_list."""
    return "".join(f"{i} {j}\n" for i, j in g.edges)


@dataclass(frozen=True)
class NecessaryConditionResult:
    """Outcome of the combinatorial pre-tests.

    All five conditions are necessary for solvability; none is sufficient.
    """

    connected: bool
    biconnected: bool
    min_degree_ok: bool
    no_adjacent_degree_two: bool
    edge_bound_ok: bool
    articulation_points: tuple[int, ...]


def _dfs_articulation(g: ViewingGraph) -> tuple[int, list[int]]:
    """Iterative low-link DFS; returns (#components, articulation points)."""
    n = g.node_count
    adj = g.adjacency
    disc = [-1] * n
    low = [0] * n
    parent = [-1] * n
    is_ap = [False] * n
    timer = 0
    components = 0
    for s in range(n):
        if disc[s] != -1:
            continue
        components += 1
        disc[s] = low[s] = timer
        timer += 1
        root_children = 0
        stack: list[tuple[int, int]] = [(s, 0)]
        while stack:
            v, ptr = stack[-1]
            if ptr < len(adj[v]):
                stack[-1] = (v, ptr + 1)
                w = adj[v][ptr]
                if disc[w] == -1:
                    parent[w] = v
                    if v == s:
                        root_children += 1
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, 0))
                elif w != parent[v]:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if u != s and low[v] >= disc[u]:
                        is_ap[u] = True
        if root_children > 1:
            is_ap[s] = True
    return components, [v for v in range(n) if is_ap[v]]


def necessary_conditions(g: ViewingGraph) -> NecessaryConditionResult:
    """Evaluate the cheap combinatorial conditions every solvable graph meets.

    ``no_adjacent_degree_two`` flags an edge joining two nodes of degree at
    most two that share no common neighbor; an edge inside a triangle is
    exempt (a lone triangle is solvable even though all its degrees are 2).
    """
    components, aps = _dfs_articulation(g)
    connected = components == 1
    biconnected = connected and not aps
    deg = g.degrees
    min_degree_ok = all(d >= 2 for d in deg)
    no_adjacent_degree_two = True
    adj_sets = [set(a) for a in g.adjacency]
    for i, j in g.edges:
        if deg[i] <= 2 and deg[j] <= 2 and not (adj_sets[i] & adj_sets[j]):
            no_adjacent_degree_two = False
            break
    edge_bound_ok = g.edge_count >= minimal_edge_count(g.node_count)
    return NecessaryConditionResult(
        connected=connected,
        biconnected=biconnected,
        min_degree_ok=min_degree_ok,
        no_adjacent_degree_two=no_adjacent_degree_two,
        edge_bound_ok=edge_bound_ok,
        articulation_points=tuple(aps),
    )


def incidence_matrix(g: ViewingGraph) -> np.ndarray:
    """Signed m-by-n incidence matrix: row for edge (i, j) with i < j holds
    -1 in column i and +1 in column j."""
    out = np.zeros((g.edge_count, g.node_count), dtype=np.int8)
    for k, (i, j) in enumerate(g.edges):
        out[k, i] = -1
        out[k, j] = 1
    return out
