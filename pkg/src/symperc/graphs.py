"""Finite simple graphs with canonical vertex labels and canonical edge order.

Every graph used anywhere in this package comes out of :func:`build_graph`
(or one of the named builders it dispatches to).  Two conventions are fixed
here and relied on by the exact engine for bit-exact reproducibility:

* edges are sorted lexicographically as (min endpoint, max endpoint) pairs,
  and edge k corresponds to bit k of every configuration bitmask;
* a Cartesian product indexes its vertices row-major over the factor
  indices, i.e. (i1, i2) -> i1 * n2 + i2, and concatenates factor labels.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field


class GraphError(ValueError):
    """Invalid graph parameters or a structurally invalid graph."""


VertexSet = tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    """Immutable connected simple graph on vertices 0..n_vertices-1.

    ``labels[v]`` is the coordinate tuple assigned by the builder, e.g.
    (i, j) on a torus or a 0/1 tuple on a hypercube.  ``adjacency[v]`` lists
    neighbors in increasing order.
    """

    n_vertices: int
    labels: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...]
    _label_index: dict = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index_of(self, label: Sequence[int]) -> int:
        """Vertex index carrying the given coordinate label."""
        if not self._label_index:
            self._label_index.update(
                {lab: v for v, lab in enumerate(self.labels)}
            )
        try:
            return self._label_index[tuple(label)]
        except KeyError:
            raise GraphError(f"no vertex labeled {tuple(label)}") from None

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])


def _canonical(labels: Sequence[tuple[int, ...]],
               edge_pairs: Iterable[tuple[int, int]]) -> Graph:
    n = len(labels)
    if n == 0:
        raise GraphError("empty graph")
    seen: set[tuple[int, int]] = set()
    for u, v in edge_pairs:
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u},{v}) out of range for {n} vertices")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        e = (u, v) if u < v else (v, u)
        if e in seen:
            raise GraphError(f"duplicate edge {e}")
        seen.add(e)
    edges = tuple(sorted(seen))
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    g = Graph(
        n_vertices=n,
        labels=tuple(tuple(lab) for lab in labels),
        edges=edges,
        adjacency=tuple(tuple(sorted(nb)) for nb in adj),
    )
    if not _is_connected(g):
        raise GraphError("graph is not connected")
    return g


def _is_connected(g: Graph) -> bool:
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in g.adjacency[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == g.n_vertices


# ---------------------------------------------------------------------------
# named builders


def path_graph(n: int) -> Graph:
    """Line graph on n vertices (n = 1 gives the single-vertex graph)."""
    if n < 1:
        raise GraphError(f"path needs n >= 1, got {n}")
    return _canonical([(i,) for i in range(n)],
                      [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle needs n >= 3 to stay simple, got {n}")
    return _canonical([(i,) for i in range(n)],
                      [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    if n < 1:
        raise GraphError(f"complete graph needs n >= 1, got {n}")
    return _canonical([(i,) for i in range(n)],
                      [(i, j) for i in range(n) for j in range(i + 1, n)])


def cartesian_product(g1: Graph, g2: Graph) -> Graph:
    """Cartesian product; vertex (i1, i2) gets index i1 * |V2| + i2."""
    n2 = g2.n_vertices
    labels = [g1.labels[i1] + g2.labels[i2]
              for i1 in range(g1.n_vertices) for i2 in range(n2)]
    edges: list[tuple[int, int]] = []
    for (u, v) in g1.edges:
        for i2 in range(n2):
            edges.append((u * n2 + i2, v * n2 + i2))
    for i1 in range(g1.n_vertices):
        for (u, v) in g2.edges:
            edges.append((i1 * n2 + u, i1 * n2 + v))
    return _canonical(labels, edges)


def hypercube_graph(d: int) -> Graph:
    """d-fold product of the single-edge graph; labels are 0/1 tuples."""
    if d < 1:
        raise GraphError(f"hypercube needs d >= 1, got {d}")
    g = path_graph(2)
    for _ in range(d - 1):
        g = cartesian_product(g, path_graph(2))
    return g


def bunkbed_graph(base: Graph) -> Graph:
    """Two copies of the base joined by a post at every vertex."""
    return cartesian_product(base, path_graph(2))


def cylinder_graph(base: Graph, m: int) -> Graph:
    if m < 3:
        raise GraphError(f"cylinder needs m >= 3, got {m}")
    return cartesian_product(base, cycle_graph(m))


def torus_graph(n: int, m: int) -> Graph:
    if n < 3 or m < 3:
        raise GraphError(f"torus needs n, m >= 3 to stay simple, got {n}x{m}")
    return cartesian_product(cycle_graph(n), cycle_graph(m))


def explicit_graph(n_vertices: int, edge_pairs: Iterable[Sequence[int]]) -> Graph:
    pairs = []
    for e in edge_pairs:
        if len(e) != 2:
            raise GraphError(f"edge must be a pair, got {e!r}")
        pairs.append((int(e[0]), int(e[1])))
    return _canonical([(i,) for i in range(n_vertices)], pairs)


def build_graph(spec: Mapping) -> Graph:
    """Build a graph from a JSON-style spec dict, e.g. {"builder": "torus",
    "n": 5, "m": 5} or {"builder": "bunkbed", "base": {...}}."""
    try:
        builder = spec["builder"]
    except (KeyError, TypeError):
        raise GraphError(f"graph spec needs a 'builder' key: {spec!r}") from None
    try:
        if builder == "path":
            return path_graph(int(spec["n"]))
        if builder == "cycle":
            return cycle_graph(int(spec["n"]))
        if builder == "complete":
            return complete_graph(int(spec["n"]))
        if builder == "hypercube":
            return hypercube_graph(int(spec["d"]))
        if builder == "torus":
            return torus_graph(int(spec["n"]), int(spec["m"]))
        if builder == "bunkbed":
            return bunkbed_graph(build_graph(spec["base"]))
        if builder == "cylinder":
            return cylinder_graph(build_graph(spec["base"]), int(spec["m"]))
        if builder == "explicit":
            return explicit_graph(int(spec["vertices"]), spec["edges"])
    except KeyError as exc:
        raise GraphError(f"graph spec for {builder!r} misses {exc}") from None
    raise GraphError(f"unknown builder {builder!r}")


# ---------------------------------------------------------------------------
# queries


def distances_from(g: Graph, source: int) -> tuple[int, ...]:
    """BFS distances from source to every vertex."""
    _check_vertex(g, source)
    dist = [-1] * g.n_vertices
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in g.adjacency[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return tuple(dist)


def distance(g: Graph, u: int, v: int) -> int:
    """Graph distance (edge count of a shortest path)."""
    _check_vertex(g, v)
    return distances_from(g, u)[v]


def boundary(g: Graph, a: Iterable[int], k: int) -> VertexSet:
    """Inner boundary of thickness k: vertices of `a` within distance k of
    some vertex outside `a`."""
    if k < 1:
        raise GraphError(f"boundary thickness must be >= 1, got {k}")
    a_set = set(as_vertex_set(g, a))
    outside = [v for v in range(g.n_vertices) if v not in a_set]
    if not outside:
        return ()
    dist = [-1] * g.n_vertices
    queue = deque()
    for v in outside:
        dist[v] = 0
        queue.append(v)
    while queue:
        v = queue.popleft()
        if dist[v] >= k:
            continue
        for w in g.adjacency[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return tuple(sorted(v for v in a_set if dist[v] > 0))


def as_vertex_set(g: Graph, vertices: Iterable[int]) -> VertexSet:
    """Validate and canonicalize a vertex collection (sorted, no duplicates)."""
    out = sorted(int(v) for v in vertices)
    for v in out:
        _check_vertex(g, v)
    for x, y in zip(out, out[1:]):
        if x == y:
            raise GraphError(f"duplicate vertex {x}")
    return tuple(out)


def relabel_graph(g: Graph, perm: Sequence[int]) -> Graph:
    """Apply a vertex permutation: vertex v moves to index perm[v], carrying
    its label along; edges are re-canonicalized."""
    if sorted(perm) != list(range(g.n_vertices)):
        raise GraphError("relabeling must be a permutation of all vertices")
    labels: list[tuple[int, ...]] = [()] * g.n_vertices
    for v, lab in enumerate(g.labels):
        labels[perm[v]] = lab
    edges = [(perm[u], perm[v]) for (u, v) in g.edges]
    return _canonical(labels, edges)


def _check_vertex(g: Graph, v: int) -> None:
    if not 0 <= v < g.n_vertices:
        raise GraphError(f"vertex {v} out of range for {g.n_vertices} vertices")
