"""Graphs, jump-rate generators, metrics and invariant measures."""

from __future__ import annotations

import itertools
import math
from collections import deque
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .numeric import Number, all_exact, close, div, is_exact, leq, solve_linear

SEP = "|"

Measure = Mapping[str, Number]


def _check_vertex_ids(vertices: Sequence[str]) -> tuple[str, ...]:
    out = tuple(str(v) for v in vertices)
    if len(set(out)) != len(out):
        raise ValueError("duplicate vertex identifiers")
    for v in out:
        if not v or any(c.isspace() for c in v):
            raise ValueError(f"invalid vertex identifier {v!r}")
    return out


class Graph:
    """Finite connected simple graph on opaque string vertices.

    Edges are undirected; the adjacency is stored symmetrically and in
    vertex order, which fixes every downstream iteration order.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str]]):
        self.vertices = _check_vertex_ids(list(vertices))
        if not self.vertices:
            raise ValueError("graph needs at least one vertex")
        self.index = {v: i for i, v in enumerate(self.vertices)}
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for x, y in edges:
            if x not in adj or y not in adj:
                raise ValueError(f"edge ({x},{y}) uses an unknown vertex")
            if x == y:
                raise ValueError(f"self-loop at {x}")
            adj[x].add(y)
            adj[y].add(x)
        self._adj = {v: tuple(sorted(adj[v], key=self.index.__getitem__)) for v in self.vertices}
        self._dist_cache: dict[str, dict[str, int]] = {}
        if len(self._bfs(self.vertices[0])) != len(self.vertices):
            raise ValueError("graph is not connected")

    def neighbors(self, x: str) -> tuple[str, ...]:
        return self._adj[x]

    def degree(self, x: str) -> int:
        return len(self._adj[x])

    def has_edge(self, x: str, y: str) -> bool:
        return y in self._adj.get(x, ())

    def edges(self) -> list[tuple[str, str]]:
        """Each undirected edge once, as (earlier, later) in vertex order."""
        out = []
        for x in self.vertices:
            for y in self._adj[x]:
                if self.index[x] < self.index[y]:
                    out.append((x, y))
        return out

    def _bfs(self, source: str) -> dict[str, int]:
        cached = self._dist_cache.get(source)
        if cached is not None:
            return cached
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        self._dist_cache[source] = dist
        return dist

    def distance(self, x: str, y: str) -> int:
        if x not in self.index or y not in self.index:
            raise KeyError(f"unknown vertex in ({x},{y})")
        d = self._bfs(x).get(y)
        if d is None:
            raise ValueError(f"{x} and {y} are disconnected")
        return d

    def diameter(self) -> int:
        return max(max(self._bfs(v).values()) for v in self.vertices)

    def geodesic(self, x: str, y: str) -> list[str]:
        """Lexicographically smallest shortest path (in vertex order) from x to y."""
        to_y = self._bfs(y)
        path = [x]
        while path[-1] != y:
            here = path[-1]
            nxt = min((w for w in self._adj[here] if to_y[w] == to_y[here] - 1),
                      key=self.index.__getitem__)
            path.append(nxt)
        return path


class Generator:
    """Jump-rate kernel J(x, y) of a continuous-time Markov chain.

    ``rates`` maps ordered pairs to nonnegative rates; zeros are dropped.
    The graph is the support of J, which must be symmetric unless
    ``relaxed=True`` (then the graph is the symmetrized support and only
    J itself is used). When ``graph`` is given, J must be positive exactly
    on its edges.
    """

    def __init__(
        self,
        rates: Mapping[tuple[str, str], Number],
        vertices: Sequence[str] | None = None,
        graph: Graph | None = None,
        relaxed: bool = False,
    ):
        if vertices is None:
            seen: dict[str, None] = {}
            for x, y in rates:
                seen.setdefault(x)
                seen.setdefault(y)
            vertices = list(graph.vertices) if graph is not None else list(seen)
        self.vertices = _check_vertex_ids(vertices)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        out: dict[str, dict[str, Number]] = {v: {} for v in self.vertices}
        for (x, y), r in rates.items():
            if x not in out or y not in out:
                raise ValueError(f"rate ({x},{y}) uses an unknown vertex")
            if isinstance(r, float) and not math.isfinite(r):
                raise ValueError(f"non-finite rate on ({x},{y})")
            if r < 0:
                raise ValueError(f"negative rate on ({x},{y})")
            if x == y:
                if r != 0:
                    raise ValueError(f"self-jump rate at {x}; false rates are added internally")
                continue
            if r != 0:
                out[x][y] = r
        self._out = {x: dict(sorted(out[x].items(), key=lambda kv: self.index[kv[0]])) for x in self.vertices}
        self.relaxed = relaxed
        support = [(x, y) for x in self.vertices for y in self._out[x]]
        if graph is not None:
            if graph.vertices != self.vertices:
                raise ValueError("graph and generator vertex lists differ")
            for x in self.vertices:
                if set(graph.neighbors(x)) != set(self._out[x]):
                    raise ValueError(f"rates out of {x} are not positive exactly on its edges")
            self.graph = graph
        else:
            if not relaxed:
                for x, y in support:
                    if x not in self._out[y]:
                        raise ValueError(f"J({x},{y}) > 0 but J({y},{x}) = 0; support must be symmetric")
            self.graph = Graph(self.vertices, support)
        self.exact = all_exact(r for x in self.vertices for r in self._out[x].values())

    def rate(self, x: str, y: str) -> Number:
        return self._out[x].get(y, 0)

    def jumps(self, x: str) -> dict[str, Number]:
        return dict(self._out[x])

    def total_rate(self, x: str) -> Number:
        return sum(self._out[x].values(), 0)

    def rates(self) -> dict[tuple[str, str], Number]:
        return {(x, y): r for x in self.vertices for y, r in self._out[x].items()}

    def apply(self, f: Mapping[str, Number] | Callable[[str], Number]) -> dict[str, Number]:
        """The generator acting on a function: sum_y J(x,y)(f(y) - f(x))."""
        val = f if callable(f) else f.__getitem__
        return {x: sum((r * (val(y) - val(x)) for y, r in self._out[x].items()), 0) for x in self.vertices}

    def matrix(self) -> np.ndarray:
        n = len(self.vertices)
        q = np.zeros((n, n))
        for x in self.vertices:
            i = self.index[x]
            for y, r in self._out[x].items():
                q[i, self.index[y]] = float(r)
            q[i, i] = -float(self.total_rate(x))
        return q

    def scaled(self, c: Number) -> "Generator":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return Generator({k: c * v for k, v in self.rates().items()}, self.vertices, relaxed=self.relaxed)

    def to_float(self) -> "Generator":
        return Generator({k: float(v) for k, v in self.rates().items()}, self.vertices, relaxed=self.relaxed)

    def is_irreducible(self) -> bool:
        def reach(adj):
            seen = {self.vertices[0]}
            stack = [self.vertices[0]]
            while stack:
                u = stack.pop()
                for w in adj(u):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            return len(seen) == len(self.vertices)

        incoming: dict[str, list[str]] = {v: [] for v in self.vertices}
        for x in self.vertices:
            for y in self._out[x]:
                incoming[y].append(x)
        return reach(lambda u: self._out[u]) and reach(lambda u: incoming[u])


class Metric:
    """Symmetric cost table on the vertices of a finite space.

    ``kind`` is one of ``graph``, ``length``, ``pullback`` or ``custom``.
    ``is_metric`` is False for cost functions that may fail the triangle
    inequality; those are only accepted where a cost function suffices.
    Values are computed on demand and cached.
    """

    def __init__(self, vertices: Sequence[str], func: Callable[[str, str], Number], kind: str,
                 is_metric: bool = True, name: str = ""):
        if kind not in ("graph", "length", "pullback", "custom"):
            raise ValueError(f"unknown metric kind {kind!r}")
        self.vertices = tuple(vertices)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.kind = kind
        self.is_metric = is_metric
        self.name = name or kind
        self._func = func
        self._cache: dict[tuple[str, str], Number] = {}

    def __call__(self, x: str, y: str) -> Number:
        if x == y:
            return 0
        key = (x, y) if self.index[x] < self.index[y] else (y, x)
        val = self._cache.get(key)
        if val is None:
            val = self._func(*key)
            if not val > 0:
                raise ValueError(f"metric value at {key} must be positive, got {val}")
            self._cache[key] = val
        return val

    @property
    def supports_edge_reduction(self) -> bool:
        return self.kind in ("graph", "length")

    def pairs(self) -> Iterable[tuple[str, str]]:
        return itertools.combinations(self.vertices, 2)

    def exact(self) -> bool:
        return all(is_exact(self(x, y)) for x, y in self.pairs())

    def triangle_violations(self, limit: int = 10) -> list[tuple[str, str, str]]:
        bad = []
        for x, y, z in itertools.permutations(self.vertices, 3):
            if not leq(self(x, z), self(x, y) + self(y, z)):
                bad.append((x, y, z))
                if len(bad) >= limit:
                    break
        return bad

    def table(self) -> dict[tuple[str, str], Number]:
        return {(x, y): self(x, y) for x, y in self.pairs()}

    def diameter(self) -> Number:
        return max((self(x, y) for x, y in self.pairs()), default=0)


def graph_distance(g: Graph, x: str, y: str) -> int:
    return g.distance(x, y)


def graph_metric(g: Graph) -> Metric:
    return Metric(g.vertices, g.distance, "graph", name="graph distance")


def length_metric(g: Graph, w: Mapping[tuple[str, str], Number]) -> Metric:
    """Shortest-path metric for positive edge weights ``w`` (given on either orientation)."""
    weights: dict[tuple[str, str], Number] = {}
    for (x, y), val in w.items():
        if not g.has_edge(x, y):
            raise ValueError(f"weight given on non-edge ({x},{y})")
        if not val > 0:
            raise ValueError(f"nonpositive weight on ({x},{y})")
        for key in ((x, y), (y, x)):
            if key in weights and weights[key] != val:
                raise ValueError(f"asymmetric weight on ({x},{y})")
            weights[key] = val
    for x, y in g.edges():
        if (x, y) not in weights:
            raise ValueError(f"missing weight on edge ({x},{y})")
    cache: dict[str, dict[str, Number]] = {}

    def dijkstra(source: str) -> dict[str, Number]:
        import heapq

        if source in cache:
            return cache[source]
        dist: dict[str, Number] = {source: 0}
        done: set[str] = set()
        heap = [(0, g.index[source], source)]
        while heap:
            d, _, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v in g.neighbors(u):
                nd = d + weights[(u, v)]
                if v not in dist or nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, g.index[v], v))
        cache[source] = dist
        return dist

    return Metric(g.vertices, lambda x, y: dijkstra(x)[y], "length", name="length metric")


def discrete_metric(vertices: Sequence[str]) -> Metric:
    return Metric(vertices, lambda x, y: 1, "custom", name="discrete metric")


def custom_metric(vertices: Sequence[str], values: Mapping[tuple[str, str], Number],
                  is_metric: bool | None = None, name: str = "custom") -> Metric:
    """Metric from an explicit table; missing pairs are an error.

    When ``is_metric`` is None the triangle inequality is checked and the
    result tagged accordingly.
    """
    vertices = tuple(vertices)
    table: dict[tuple[str, str], Number] = {}
    for (x, y), v in values.items():
        if x == y:
            if v != 0:
                raise ValueError(f"nonzero diagonal at {x}")
            continue
        if (y, x) in table and table[(y, x)] != v:
            raise ValueError(f"asymmetric value on ({x},{y})")
        table[(x, y)] = v
        table[(y, x)] = v

    def lookup(x: str, y: str) -> Number:
        try:
            return table[(x, y)]
        except KeyError:
            raise ValueError(f"metric table has no entry for ({x},{y})") from None

    m = Metric(vertices, lookup, "custom", True, name)
    for x, y in m.pairs():
        m(x, y)
    if is_metric is None:
        m.is_metric = not m.triangle_violations(1)
    else:
        m.is_metric = is_metric
    return m


def pullback_metric(base: Metric, h: Callable[[Number], Number] | Sequence[Number],
                    assume_metric: bool = False) -> Metric:
    """The cost h(base(x, y)).

    ``h`` is a function or a sequence indexed by (integer) base values.
    It must vanish at 0 and increase strictly on the attained values.
    Concave profiles give a metric. Otherwise the result is tagged as a
    cost function unless ``assume_metric`` is set, in which case the
    triangle inequality is checked exhaustively.
    """
    if not callable(h):
        seq = list(h)

        def h(v, _seq=seq):
            if int(v) != v or not 0 <= int(v) < len(_seq):
                raise ValueError(f"profile has no value at {v}")
            return _seq[int(v)]

    if h(0) != 0:
        raise ValueError("profile must vanish at 0")
    attained = sorted({base(x, y) for x, y in base.pairs()} | {0})
    values = [h(v) for v in attained]
    for (v0, h0), (v1, h1) in zip(zip(attained, values), zip(attained[1:], values[1:])):
        if not h1 > h0:
            raise ValueError(f"profile is not increasing between {v0} and {v1}")
    slopes = [div(h1 - h0, v1 - v0) for v0, v1, h0, h1 in zip(attained, attained[1:], values, values[1:])]
    concave = all(leq(b, a) for a, b in zip(slopes, slopes[1:]))
    result = Metric(base.vertices, lambda x, y: h(base(x, y)), "pullback",
                    is_metric=concave and base.is_metric, name=f"pullback of {base.name}")
    if not result.is_metric and assume_metric:
        bad = result.triangle_violations(1)
        if bad:
            raise ValueError(f"triangle inequality fails at {bad[0]}")
        result.is_metric = True
    return result


def product_vertex(parts: Sequence[str]) -> str:
    return SEP.join(parts)


def split_vertex(v: str) -> list[str]:
    return v.split(SEP)


def invariant_measure(gen: Generator) -> dict[str, Number]:
    """Stationary probability of an irreducible finite generator.

    Exact rates give the exact rational solution of mu Q = 0, sum mu = 1.
    """
    if not gen.is_irreducible():
        raise ValueError("generator is reducible; invariant measure is not unique")
    verts = gen.vertices
    n = len(verts)
    if gen.exact:
        rows = [[0] * n for _ in range(n)]
        for x in verts:
            i = gen.index[x]
            for y, r in gen.jumps(x).items():
                rows[gen.index[y]][i] += r
            rows[i][i] -= gen.total_rate(x)
        rows[-1] = [1] * n
        rhs = [0] * (n - 1) + [1]
        sol = solve_linear(rows, rhs)
        return {v: (Fraction(s) if not isinstance(s, int) else s) for v, s in zip(verts, sol)}
    a = gen.matrix().T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    sol = np.linalg.solve(a, rhs)
    return {v: float(s) for v, s in zip(verts, sol)}


def check_reversibility(gen: Generator, mu: Measure) -> bool:
    """Detailed balance mu(x)J(x,y) = mu(y)J(y,x) on every ordered pair."""
    for x in gen.vertices:
        if not mu[x] > 0:
            raise ValueError(f"measure must be positive, zero at {x}")
    for x in gen.vertices:
        for y in gen.vertices:
            if gen.index[x] < gen.index[y]:
                if not close(mu[x] * gen.rate(x, y), mu[y] * gen.rate(y, x), 1e-12):
                    return False
    return True
