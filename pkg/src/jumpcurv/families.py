"""Bundled example generators with their metrics and known curvature values."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .birth_death import BirthDeathChain, chain_metric
from .certificate import Certificate
from .graph_model import Generator, Graph, Metric, custom_metric, graph_metric, pullback_metric
from .glauber import GlauberModel, gibbs_generator, queue_curvature, queue_model, spin_curvature, spin_model
from .numeric import Number, div


@dataclass
class Example:
    """A generator, the metric it is meant to be measured in and its known rates.

    ``kappa`` is the known curvature lower bound for ``metric`` (None when
    there is no closed form) and ``gap`` the known spectral gap.
    """

    name: str
    generator: Generator
    metric: Metric
    kappa: Number | None = None
    gap: Number | None = None
    K: Number = 1
    chain: BirthDeathChain | None = None
    model: GlauberModel | None = None
    notes: list[str] = field(default_factory=list)

    def certificate(self) -> Certificate:
        if self.kappa is None:
            raise ValueError(f"{self.name} has no closed-form rate")
        kind = "ricci" if self.K == 1 else "w1"
        return Certificate(self.kappa, self.metric, self.K, kind, ["closed form for the bundled family"] + self.notes,
                           self.name)


def laplacian(g: Graph) -> Generator:
    """Rate 1/deg(x) from x to each neighbor."""
    rates = {}
    for x in g.vertices:
        deg = g.degree(x)
        for y in g.neighbors(x):
            rates[(x, y)] = Fraction(1, deg)
    return Generator(rates, graph=g)


def _undirected(vertices: Sequence[str], edges) -> Graph:
    both = set()
    for x, y in edges:
        both.add((x, y))
        both.add((y, x))
    return Graph(vertices, sorted(both, key=lambda e: (vertices.index(e[0]), vertices.index(e[1]))))


def complete(n: int) -> Example:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    vs = [str(i) for i in range(n)]
    gen = laplacian(_undirected(vs, itertools.combinations(vs, 2)))
    k = Fraction(n, n - 1)
    return Example(f"complete n={n}", gen, graph_metric(gen.graph), k, k)


def star(n: int, metric: str = "graph") -> Example:
    """Center o joined to leaves x1..xn."""
    if n < 2:
        raise ValueError("star needs n >= 2 leaves")
    vs = ["o"] + [f"x{i}" for i in range(1, n + 1)]
    gen = laplacian(_undirected(vs, [("o", v) for v in vs[1:]]))
    if metric == "graph":
        return Example(f"star n={n}", gen, graph_metric(gen.graph), Fraction(2, n), 1)
    if metric != "custom":
        raise ValueError("star metric is 'graph' or 'custom'")
    far = Fraction(2 * (n - 1), n)
    table = {("o", v): far for v in vs[1:]}
    table.update({(u, v): 2 for u, v in itertools.combinations(vs[1:], 2)})
    m = custom_metric(vs, table, name="star metric")
    return Example(f"star n={n} custom metric", gen, m, 1, 1)


def cycle(n: int, metric: str = "graph") -> Example:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    vs = [str(i) for i in range(n)]
    gen = laplacian(_undirected(vs, [(vs[i], vs[(i + 1) % n]) for i in range(n)]))
    gap = 1 - math.cos(2 * math.pi / n)
    d = graph_metric(gen.graph)
    if metric == "graph":
        return Example(f"cycle n={n}", gen, d, None, gap)
    if metric != "sin":
        raise ValueError("cycle metric is 'graph' or 'sin'")
    m = pullback_metric(d, lambda k: math.sin(k * math.pi / n))
    m.name = "sine metric"
    return Example(f"cycle n={n} sine metric", gen, m, gap, gap)


def path(D: int, metric: str = "graph") -> Example:
    ch = BirthDeathChain.random_walk(D)
    gen = ch.to_generator()
    if metric == "graph":
        return Example(f"path D={D}", gen, graph_metric(gen.graph), None, None, chain=ch)
    if metric != "cos":
        raise ValueError("path metric is 'graph' or 'cos'")
    m = chain_metric(ch, lambda k: -math.cos(k * math.pi / D))
    return Example(f"path D={D} cosine metric", gen, m, 1 - math.cos(math.pi / D), None, chain=ch)


def cube(n: int) -> Example:
    """Hypercube {0,1}^n with rate 1/n along each coordinate."""
    if n < 1:
        raise ValueError("cube needs n >= 1")
    vs = ["".join(bits) for bits in itertools.product("01", repeat=n)]
    edges = [(v, v[:i] + ("1" if v[i] == "0" else "0") + v[i + 1:]) for v in vs for i in range(n)]
    gen = laplacian(_undirected(vs, edges))
    k = Fraction(2, n)
    return Example(f"cube n={n}", gen, graph_metric(gen.graph), k, k)


def bipartite(n1: int, n2: int) -> Example:
    """Complete bipartite graph with the two-level metric h0(1) = 1, h0(2) = n1 n2/(2 n1 n2 - n1 - n2)."""
    if n1 < 2 or n2 < 2:
        raise ValueError("both parts need at least two vertices")
    left = [f"a{i}" for i in range(1, n1 + 1)]
    right = [f"b{i}" for i in range(1, n2 + 1)]
    vs = left + right
    gen = laplacian(_undirected(vs, [(u, v) for u in left for v in right]))
    far = Fraction(n1 * n2, 2 * n1 * n2 - n1 - n2)
    d = graph_metric(gen.graph)
    table = {(x, y): (1 if d(x, y) == 1 else far) for x, y in d.pairs()}
    m = custom_metric(vs, table, name="two-level metric")
    return Example(f"bipartite {n1},{n2}", gen, m, 1, 1)


def kpartite(k: int, n: int) -> Example:
    """Regular complete k-partite graph with parts of size n and h0(2) = n/(2(n-1))."""
    if k < 2 or n < 2:
        raise ValueError("need k >= 2 parts of size n >= 2")
    parts = [[f"p{i}v{j}" for j in range(1, n + 1)] for i in range(1, k + 1)]
    vs = [v for p in parts for v in p]
    edges = [(u, v) for a, b in itertools.combinations(range(k), 2) for u in parts[a] for v in parts[b]]
    gen = laplacian(_undirected(vs, edges))
    far = Fraction(n, 2 * (n - 1))
    d = graph_metric(gen.graph)
    table = {(x, y): (1 if d(x, y) == 1 else far) for x, y in d.pairs()}
    m = custom_metric(vs, table, name="two-level metric")
    return Example(f"k-partite k={k} n={n}", gen, m, 1, None)


def petersen() -> Example:
    outer = [f"o{i}" for i in range(5)]
    inner = [f"i{i}" for i in range(5)]
    edges = [(outer[i], outer[(i + 1) % 5]) for i in range(5)]
    edges += [(inner[i], inner[(i + 2) % 5]) for i in range(5)]
    edges += [(outer[i], inner[i]) for i in range(5)]
    gen = laplacian(_undirected(outer + inner, edges))
    return Example("petersen", gen, graph_metric(gen.graph))


def random_connected(n: int, extra: float = 0.3, seed: int = 0) -> Example:
    """Random spanning tree plus each remaining pair with probability ``extra``."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = random.Random(seed)
    vs = [str(i) for i in range(n)]
    order = vs[:]
    rng.shuffle(order)
    edges = {tuple(sorted((order[i], rng.choice(order[:i])))) for i in range(1, n)}
    for u, v in itertools.combinations(vs, 2):
        if (u, v) not in edges and rng.random() < extra:
            edges.add((u, v))
    gen = laplacian(_undirected(vs, sorted(edges)))
    return Example(f"random n={n} seed={seed}", gen, graph_metric(gen.graph))


def mm_infinity(lam: Number = 1, trunc: int = 20) -> Example:
    ch = BirthDeathChain.mm_infinity(lam, trunc)
    gen = ch.to_generator()
    return Example(f"mm-infinity lambda={lam} trunc={trunc}", gen, graph_metric(gen.graph), 1, None, chain=ch)


def binomial(n: int = 6, p: Number = Fraction(1, 2)) -> Example:
    ch = BirthDeathChain.binomial(n, p)
    gen = ch.to_generator()
    return Example(f"binomial n={n} p={p}", gen, graph_metric(gen.graph), 1, 1, chain=ch)


def geometric_one(a: Number = 4, b: Number = 1, trunc: int = 10, metric: str = "sqrt") -> Example:
    """Constant rates; the metric with h(n) = (a/b)^(n/2) has curvature (sqrt a - sqrt b)^2."""
    ch = BirthDeathChain.geometric_one(a, b, trunc)
    gen = ch.to_generator()
    if metric == "graph":
        return Example(f"geometric-1 a={a} b={b}", gen, graph_metric(gen.graph), 0, None, chain=ch)
    if metric != "sqrt":
        raise ValueError("geometric-1 metric is 'graph' or 'sqrt'")
    ratio = div(a, b)
    root = math.isqrt(ratio) if isinstance(ratio, int) and math.isqrt(ratio) ** 2 == ratio else None
    if root is not None:
        h = [root ** n for n in range(trunc + 1)]
        rate = (root - 1) ** 2 * b
    else:
        h = [ratio ** (n / 2) for n in range(trunc + 1)]
        rate = (math.sqrt(a) - math.sqrt(b)) ** 2
    return Example(f"geometric-1 a={a} b={b} square-root metric", gen, chain_metric(ch, h), rate, None, chain=ch)


def geometric_two(p: Number = Fraction(1, 2), trunc: int = 12) -> Example:
    ch = BirthDeathChain.geometric_two(p, trunc)
    gen = ch.to_generator()
    return Example(f"geometric-2 p={p}", gen, graph_metric(gen.graph), 1 - p, None, chain=ch)


def dissipative_chain() -> BirthDeathChain:
    """Chain with negative curvature near 0 and positive curvature far out."""
    return BirthDeathChain(list(range(8)), [1] + [3] * 6 + [0])


def lyapunov_chain() -> tuple[BirthDeathChain, dict[str, int], set[str]]:
    """Geometric chain a = 4, b = 1 on 0..6 with V(n) = 2^n and K = {0, 1}."""
    ch = BirthDeathChain.geometric_one(4, 1, 6)
    return ch, {str(n): 2 ** n for n in range(7)}, {"0", "1"}


def spin(betas: Sequence[Sequence[float]] | None = None) -> Example:
    if betas is None:
        betas = [[0, -0.2, -0.1], [-0.2, 0, -0.3], [-0.1, -0.3, 0]]
    model = spin_model(betas)
    gen = gibbs_generator(model)
    return Example(model.name, gen, model.l1_metric(gen.vertices), spin_curvature(betas), None, model=model)


def queue(lam: float = 1.0, betas: Sequence[Sequence[float]] | None = None, trunc: int = 4) -> Example:
    if betas is None:
        betas = [[0, math.log(2)], [math.log(2), 0]]
    model = queue_model(lam, betas, trunc)
    gen = gibbs_generator(model)
    return Example(model.name, gen, model.l1_metric(gen.vertices), queue_curvature(lam, betas), None, model=model,
                   notes=[f"truncated at {trunc}"])


FAMILIES: dict[str, Callable[..., Example]] = {
    "complete": complete,
    "star": star,
    "cycle": cycle,
    "path": path,
    "cube": cube,
    "bipartite": bipartite,
    "k-partite": kpartite,
    "petersen": petersen,
    "random": random_connected,
    "mm-infinity": mm_infinity,
    "binomial": binomial,
    "geometric-1": geometric_one,
    "geometric-2": geometric_two,
    "spin": spin,
    "queue": queue,
}
