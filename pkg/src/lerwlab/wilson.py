"""Uniform spanning trees on finite multigraphs via loop-erased walk branches,
wired-boundary collapse, and distributional checks against enumeration.

Walks on a multigraph step uniformly over incident edge ends, so parallel
edges (which wiring creates) get proportional weight; that is the correct
wired-walk law.  Self-loops produced by wiring are deleted: they only lazify
the walk and never enter a tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .erasure import loop_erase
from .rng import Stream
from .statutil import bootstrap_tv

_WALK_CAP = 10**7


@dataclass(frozen=True, eq=False)
class FiniteMultigraph:
    """Connected multigraph: unordered vertex pairs with multiplicity, no loops."""

    vertices: tuple
    edges: tuple  # edge i is the unordered pair edges[i]

    def __post_init__(self):
        vertices = tuple(self.vertices)
        edges = tuple((u, v) for u, v in self.edges)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)
        vset = set(vertices)
        if len(vset) != len(vertices):
            raise ValueError("vertex ids must be unique")
        incidence = {v: [] for v in vertices}
        for eid, (u, v) in enumerate(edges):
            if u == v:
                raise ValueError(f"loop edge at {u!r} is not allowed")
            if u not in vset or v not in vset:
                raise ValueError(f"edge ({u!r}, {v!r}) uses unknown vertices")
            incidence[u].append((v, eid))
            incidence[v].append((u, eid))
        if any(not inc for inc in incidence.values()):
            raise ValueError("every vertex must have degree >= 1")
        object.__setattr__(self, "incidence", incidence)
        # connectivity (needed for sampling)
        seen = {vertices[0]}
        frontier = [vertices[0]]
        while frontier:
            u = frontier.pop()
            for w, _ in incidence[u]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        if len(seen) != len(vertices):
            raise ValueError("graph must be connected")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def degree(self, v) -> int:
        return len(self.incidence[v])


def graph_from_json(obj) -> FiniteMultigraph:
    """Load {"vertices": [...], "edges": [[u, v], ...]} (repeat = multiplicity)
    or {"vertices": [...], "adjacency": {u: {v: mult}}}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    vertices = [tuple(v) if isinstance(v, list) else v for v in obj["vertices"]]

    def norm(v):
        return tuple(v) if isinstance(v, list) else v

    if "edges" in obj:
        edges = [(norm(u), norm(v)) for u, v in obj["edges"]]
    else:
        by_name = {str(v): v for v in vertices}
        edges = []
        for u_name, row in obj["adjacency"].items():
            for v_name, mult in row.items():
                u, v = by_name[u_name], by_name[v_name]
                if str(u) < str(v):  # count each unordered pair once
                    edges.extend([(u, v)] * int(mult))
    return FiniteMultigraph(tuple(vertices), tuple(edges))


def graph_to_json(graph: FiniteMultigraph) -> dict:
    return {
        "vertices": list(graph.vertices),
        "edges": [list(e) for e in graph.edges],
    }


def complete_graph(n: int) -> FiniteMultigraph:
    vs = tuple(range(n))
    return FiniteMultigraph(vs, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def cycle_graph(n: int) -> FiniteMultigraph:
    vs = tuple(range(n))
    return FiniteMultigraph(vs, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> FiniteMultigraph:
    vs = tuple(range(n))
    return FiniteMultigraph(vs, tuple((i, i + 1) for i in range(n - 1)))


def grid_graph(rows: int, cols: int) -> FiniteMultigraph:
    vs = tuple((r, c) for r in range(rows) for c in range(cols))
    edges = []
    for r in range(rows):
        for c in range(cols):
            if r + 1 < rows:
                edges.append(((r, c), (r + 1, c)))
            if c + 1 < cols:
                edges.append(((r, c), (r, c + 1)))
    return FiniteMultigraph(vs, tuple(edges))


@dataclass(frozen=True)
class SpanningTree:
    """Parent map toward the root; each entry carries the tree edge id."""

    root: object
    parent: dict  # vertex -> (parent vertex, edge id)

    def edge_ids(self) -> frozenset:
        return frozenset(eid for _, eid in self.parent.values())

    def vertices(self) -> set:
        return set(self.parent) | {self.root}

    def validate(self, graph: FiniteMultigraph) -> None:
        if self.vertices() != set(graph.vertices):
            raise AssertionError("tree does not span the graph")
        if len(self.parent) != graph.n_vertices - 1:
            raise AssertionError("tree edge count is not |V| - 1")
        for v, (p, eid) in self.parent.items():
            if set(graph.edges[eid]) != {v, p}:
                raise AssertionError(f"edge id {eid} does not join {v!r} and {p!r}")
        for v in self.parent:  # acyclicity: every vertex reaches the root
            seen = set()
            while v != self.root:
                if v in seen:
                    raise AssertionError("cycle in parent map")
                seen.add(v)
                v = self.parent[v][0]


def _walk_until(graph: FiniteMultigraph, start, targets: set, gen: Stream):
    """Random walk until entering ``targets``; returns (vertices, entry edges)."""
    verts = [start]
    eids = [None]
    v = start
    for _ in range(_WALK_CAP):
        if v in targets:
            return verts, eids
        nbrs = graph.incidence[v]
        v, eid = nbrs[gen.below(len(nbrs))]
        verts.append(v)
        eids.append(eid)
    raise RuntimeError(f"walk exceeded {_WALK_CAP} steps without reaching the target set")


def wilson_tree(graph: FiniteMultigraph, root, seed: int, stream: int = 0) -> SpanningTree:
    """Uniform spanning tree grown from successive loop-erased walk branches."""
    if root not in graph.incidence:
        raise ValueError(f"unknown root {root!r}")
    gen = Stream(seed, stream)
    in_tree = {root}
    parent: dict = {}
    for v0 in graph.vertices:
        if v0 in in_tree:
            continue
        verts, eids = _walk_until(graph, v0, in_tree, gen)
        branch = loop_erase(verts)
        # The surviving edge out of branch state j is the one the walk used
        # when it last departed that state.
        for j in range(len(branch.states) - 1):
            u = branch.states[j]
            parent[u] = (branch.states[j + 1], eids[branch.source_index[j] + 1])
            in_tree.add(u)
    return SpanningTree(root=root, parent=parent)


def wire_boundary(graph: FiniteMultigraph, boundary, wired_label="wired") -> FiniteMultigraph:
    """Collapse a proper nonempty vertex subset to one vertex.

    Parallel edges are retained; edges inside the boundary become loops and
    are deleted.
    """
    bset = set(boundary)
    if not bset:
        raise ValueError("boundary must be nonempty")
    vset = set(graph.vertices)
    if not bset <= vset:
        raise ValueError("boundary contains unknown vertices")
    if bset == vset:
        raise ValueError("boundary must be a proper subset of the vertices")
    if wired_label in vset - bset:
        raise ValueError(f"wired label {wired_label!r} collides with a kept vertex")
    vertices = tuple(v for v in graph.vertices if v not in bset) + (wired_label,)
    edges = []
    for u, v in graph.edges:
        u2 = wired_label if u in bset else u
        v2 = wired_label if v in bset else v
        if u2 != v2:
            edges.append((u2, v2))
    return FiniteMultigraph(vertices, tuple(edges))


def tree_path(tree: SpanningTree, u, v) -> tuple:
    """The unique u-v path in the tree, as a vertex tuple."""
    known = tree.vertices()
    if u not in known or v not in known:
        raise ValueError("both endpoints must belong to the tree")
    up = [u]
    while up[-1] != tree.root:
        up.append(tree.parent[up[-1]][0])
    pos = {w: i for i, w in enumerate(up)}
    down = [v]
    while down[-1] not in pos:
        down.append(tree.parent[down[-1]][0])
    return tuple(up[: pos[down[-1]]] + list(reversed(down)))


def sample_lerw(graph: FiniteMultigraph, start, target, seed: int, stream: int = 0) -> tuple:
    """Loop-erasure of the random walk from start stopped on hitting target."""
    verts, _ = _walk_until(graph, start, {target}, Stream(seed, stream))
    return loop_erase(verts).states


@dataclass
class PemantleReport:
    n_samples: int
    tv_distance: float
    tv_bootstrap_se: float


def pemantle_check(
    graph: FiniteMultigraph, x, y, n_samples: int, seed: int
) -> PemantleReport:
    """Total-variation distance between the tree-path law and the LERW law.

    Both laws are sampled n_samples times: the x-to-y path inside a uniform
    spanning tree, and the loop-erasure of a walk from x stopped at y.  The
    two laws coincide, so the distance should vanish as n_samples grows.
    """
    if x == y:
        raise ValueError("endpoints must differ")
    tree_paths = []
    lerw_paths = []
    for i in range(n_samples):
        tree = wilson_tree(graph, x, seed, stream=i)
        tree_paths.append(tree_path(tree, x, y))
    for i in range(n_samples):
        lerw_paths.append(sample_lerw(graph, x, y, seed, stream=n_samples + i))
    tv, se = bootstrap_tv(tree_paths, lerw_paths, seed=seed)
    return PemantleReport(n_samples=n_samples, tv_distance=tv, tv_bootstrap_se=se)


def enumerate_spanning_trees(graph: FiniteMultigraph, max_vertices: int = 8) -> list[frozenset]:
    """All spanning trees as frozensets of edge ids (explicit enumeration)."""
    n = graph.n_vertices
    if n > max_vertices:
        raise ValueError(f"enumeration limited to {max_vertices} vertices, got {n}")
    index = {v: i for i, v in enumerate(graph.vertices)}
    trees = []
    for combo in combinations(range(len(graph.edges)), n - 1):
        root_of = list(range(n))

        def find(a: int) -> int:
            while root_of[a] != a:
                root_of[a] = root_of[root_of[a]]
                a = root_of[a]
            return a

        acyclic = True
        for eid in combo:
            u, v = graph.edges[eid]
            ru, rv = find(index[u]), find(index[v])
            if ru == rv:
                acyclic = False
                break
            root_of[ru] = rv
        if acyclic:
            trees.append(frozenset(combo))
    return trees


def spanning_tree_count(graph: FiniteMultigraph) -> int:
    """Number of spanning trees, from the Laplacian cofactor determinant."""
    n = graph.n_vertices
    index = {v: i for i, v in enumerate(graph.vertices)}
    lap = np.zeros((n, n))
    for u, v in graph.edges:
        i, j = index[u], index[v]
        lap[i, j] -= 1.0
        lap[j, i] -= 1.0
        lap[i, i] += 1.0
        lap[j, j] += 1.0
    return int(round(float(np.linalg.det(lap[1:, 1:]))))
