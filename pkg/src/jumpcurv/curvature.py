"""Coarse Ricci curvature of jump generators.

For a pair x != y the curvature is

    Ric(x, y) = [(lam(x) + lam(y)) d(x, y) - T_d(mu_x, mu_y)] / d(x, y)

where lam is the total jump rate and mu_x = J(x, .) + lam(y) delta_x,
mu_y = J(y, .) + lam(x) delta_y are the jump measures padded with false
self-jumps to a common mass. Any optimal plan between the padded measures
is a coupling generator realizing the curvature.
"""

from __future__ import annotations

import itertools
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .graph_model import Generator, Metric, graph_metric, length_metric
from .numeric import Number, close, div, format_number, is_zero, leq
from .transport import transport_cost


@dataclass(frozen=True)
class CouplingRates:
    """Jump rates of a coupling generator out of the pair ``base``."""

    base: tuple[str, str]
    rates: dict[tuple[str, str], Number]

    @property
    def total(self) -> Number:
        return sum(self.rates.values(), 0)

    def drift(self, f: Callable[[str, str], Number]) -> Number:
        """The coupling generator applied to f at the base pair."""
        x, y = self.base
        fxy = f(x, y)
        return sum((r * (f(a, b) - fxy) for (a, b), r in self.rates.items()), 0)


@dataclass
class CurvatureReport:
    metric: Metric
    values: dict[tuple[str, str], Number]
    kappa: Number
    witnesses: dict[tuple[str, str], CouplingRates] = field(repr=False)
    edge_reduction: bool
    argmin: tuple[str, str]

    def to_csv(self) -> str:
        lines = ["x,y,distance,curvature"]
        for (x, y), v in self.values.items():
            lines.append(f"{x},{y},{format_number(self.metric(x, y))},{format_number(v)}")
        lines.append(f"GLOBAL,{format_number(self.kappa)}")
        return "\n".join(lines) + "\n"


def padded_measures(gen: Generator, x: str, y: str, total: Number | None = None):
    lx, ly = gen.total_rate(x), gen.total_rate(y)
    if total is None:
        total = lx + ly
    mu_x = gen.jumps(x)
    mu_x[x] = mu_x.get(x, 0) + (total - lx)
    mu_y = gen.jumps(y)
    mu_y[y] = mu_y.get(y, 0) + (total - ly)
    return mu_x, mu_y


def _pair(gen: Generator, d: Metric, x: str, y: str, total: Number | None = None):
    if x == y:
        raise ValueError("curvature needs two distinct vertices")
    lx, ly = gen.total_rate(x), gen.total_rate(y)
    if total is None:
        total = lx + ly
    elif not leq(lx + ly, total):
        raise ValueError(f"total rate {total} is below lam(x) + lam(y) = {lx + ly}")
    mu_x, mu_y = padded_measures(gen, x, y, total)
    plan = transport_cost(mu_x, mu_y, d)
    dxy = d(x, y)
    value = div((lx + ly) * dxy - plan.cost, dxy)
    rates = {k: m for k, m in plan.plan.items() if k != (x, y)}
    return value, CouplingRates((x, y), rates), plan


def pair_curvature(gen: Generator, d: Metric, x: str, y: str) -> Number:
    return _pair(gen, d, x, y)[0]


def optimal_coupling_rates(gen: Generator, d: Metric, x: str, y: str,
                           total: Number | None = None) -> CouplingRates:
    """Optimal coupling rates out of (x, y); the diagonal moves synchronously."""
    if x == y:
        return CouplingRates((x, x), {(z, z): r for z, r in gen.jumps(x).items()})
    return _pair(gen, d, x, y, total)[1]


def independent_coupling(gen: Generator, x: str, y: str) -> CouplingRates:
    if x == y:
        return CouplingRates((x, x), {(z, z): r for z, r in gen.jumps(x).items()})
    rates: dict[tuple[str, str], Number] = {}
    for z, r in gen.jumps(x).items():
        rates[(z, y)] = rates.get((z, y), 0) + r
    for z, r in gen.jumps(y).items():
        rates[(x, z)] = rates.get((x, z), 0) + r
    return CouplingRates((x, y), rates)


def validate_coupling(gen: Generator, cr: CouplingRates) -> bool:
    """Marginal identities off the diagonal; synchronous moves on it."""
    x, y = cr.base
    if any(r < 0 for r in cr.rates.values()):
        return False
    if x == y:
        jumps = gen.jumps(x)
        if any(a != b for a, b in cr.rates):
            return False
        got = {a: r for (a, _), r in cr.rates.items() if not is_zero(r)}
        return set(got) == set(jumps) and all(close(got[z], jumps[z]) for z in jumps)
    row: dict[str, Number] = {}
    col: dict[str, Number] = {}
    for (a, b), r in cr.rates.items():
        if a != x:
            row[a] = row.get(a, 0) + r
        if b != y:
            col[b] = col.get(b, 0) + r
    for marg, z, base in ((row, x, gen.jumps(x)), (col, y, gen.jumps(y))):
        for v in set(marg) | set(base):
            if not close(marg.get(v, 0), base.get(v, 0)):
                return False
    return True


_SWEEP: dict = {}


def _sweep_worker(pair):
    gen, d = _SWEEP["gen"], _SWEEP["d"]
    value, cr, _ = _pair(gen, d, *pair)
    return pair, value, cr


def curvature_lower_bound(gen: Generator, d: Metric | None = None, edges_only: bool | None = None,
                          jobs: int = 1) -> CurvatureReport:
    """Global curvature lower bound as an infimum of pair curvatures.

    For graph and length metrics the infimum over edges equals the infimum
    over all pairs, so only edges are computed. Other metrics sweep every
    pair unless ``edges_only`` is forced.
    """
    if d is None:
        d = graph_metric(gen.graph)
    if edges_only is None:
        edges_only = d.supports_edge_reduction
    pairs = gen.graph.edges() if edges_only else list(d.pairs())
    if not pairs:
        raise ValueError("no pairs to evaluate")
    results = []
    if jobs > 1 and len(pairs) > 1:
        _SWEEP["gen"], _SWEEP["d"] = gen, d
        try:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
                results = list(pool.map(_sweep_worker, pairs, chunksize=max(1, len(pairs) // (4 * jobs))))
        finally:
            _SWEEP.clear()
    else:
        for x, y in pairs:
            value, cr, _ = _pair(gen, d, x, y)
            results.append(((x, y), value, cr))
    values = {p: v for p, v, _ in results}
    witnesses = {p: cr for p, _, cr in results}
    argmin = min(values, key=values.__getitem__)
    return CurvatureReport(d, values, values[argmin], witnesses, edges_only, argmin)


def discrete_metric_curvature(gen: Generator, x: str, y: str) -> Number:
    """Overlap of the padded jump measures; the curvature for the 0-1 metric."""
    if x == y:
        raise ValueError("curvature needs two distinct vertices")
    mu_x, mu_y = padded_measures(gen, x, y)
    return sum((min(w, mu_y[z]) for z, w in mu_x.items() if z in mu_y), 0)


def alpha_ricci(kernel: Generator, d: Metric, alpha: Number, x: str, y: str) -> Number:
    """Pairwise curvature of the lazy kernel (J(x, .) + alpha delta_x) / (1 + alpha)."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if x == y:
        raise ValueError("curvature needs two distinct vertices")
    for v in kernel.vertices:
        if not close(kernel.total_rate(v), 1):
            raise ValueError(f"kernel is not a probability kernel at {v}")

    def lazy(z):
        m = {k: div(r, 1 + alpha) for k, r in kernel.jumps(z).items()}
        m[z] = m.get(z, 0) + div(alpha, 1 + alpha)
        return m

    w = transport_cost(lazy(x), lazy(y), d).cost
    dxy = d(x, y)
    return div(-(1 + alpha) * (w - dxy), dxy)


@dataclass
class MyersReport:
    pair_bounds: dict[tuple[str, str], Number]
    violations: list[tuple[str, str]]
    diameter: Number
    diameter_bound: Number

    @property
    def holds(self) -> bool:
        return not self.violations and leq(self.diameter, self.diameter_bound)


def myers_bound(gen: Generator, d: Metric, kappa: Number) -> MyersReport:
    """Pairwise and diameter bounds implied by a positive curvature bound.

    d(x, y) <= (m(x) + m(y)) / kappa with m(x) = sum_x' J(x, x') d(x, x'),
    and hence diam <= 2 max m / kappa (2 M / kappa for the graph metric).
    """
    if not kappa > 0:
        raise ValueError("Myers bound needs kappa > 0")
    first = {x: sum((r * d(x, z) for z, r in gen.jumps(x).items()), 0) for x in gen.vertices}
    bounds = {}
    bad = []
    for x, y in d.pairs():
        b = div(first[x] + first[y], kappa)
        bounds[(x, y)] = b
        if not leq(d(x, y), b):
            bad.append((x, y))
    return MyersReport(bounds, bad, d.diameter(), div(2 * max(first.values()), kappa))


def superpose(gens: Sequence[Generator], weights: Sequence[Number] | None = None) -> Generator:
    if not gens:
        raise ValueError("nothing to superpose")
    if weights is None:
        weights = [1] * len(gens)
    if len(weights) != len(gens):
        raise ValueError("one weight per generator")
    verts = gens[0].vertices
    for g in gens[1:]:
        if set(g.vertices) != set(verts):
            raise ValueError("generators live on different vertex sets")
    total: dict[tuple[str, str], Number] = {}
    for g, w in zip(gens, weights):
        if not w > 0:
            raise ValueError("weights must be positive")
        for k, r in g.rates().items():
            total[k] = total.get(k, 0) + w * r
    return Generator(total, verts)


def tensorize(factors: Sequence[tuple[Generator, Metric]], sep: str = "|") -> tuple[Generator, Metric]:
    """Product generator (one coordinate jumps at a time) with the L1 metric."""
    if not factors:
        raise ValueError("empty factor list")
    if len(factors) == 1:
        return factors[0]
    coords = list(itertools.product(*[g.vertices for g, _ in factors]))
    names = [sep.join(c) for c in coords]
    if len(set(names)) != len(names):
        raise ValueError("product vertex names collide; choose another separator")
    lookup = dict(zip(names, coords))
    rates: dict[tuple[str, str], Number] = {}
    for name, c in zip(names, coords):
        for i, (g, _) in enumerate(factors):
            for z, r in g.jumps(c[i]).items():
                target = sep.join(c[:i] + (z,) + c[i + 1:])
                rates[(name, target)] = r
    gen = Generator(rates, names)
    kinds = {m.kind for _, m in factors}
    kind = "graph" if kinds == {"graph"} else "length" if kinds <= {"graph", "length"} else "custom"

    def l1(x: str, y: str) -> Number:
        cx, cy = lookup[x], lookup[y]
        return sum((m(a, b) for (_, m), a, b in zip(factors, cx, cy)), 0)

    metric = Metric(names, l1, kind, all(m.is_metric for _, m in factors), "L1 product metric")
    return gen, metric


def order_metric(gen: Generator, h: Mapping[str, Number] | Callable[[str], Number]) -> Metric:
    hv = h if callable(h) else h.__getitem__
    return length_metric(gen.graph, {(x, y): abs(hv(y) - hv(x)) for x, y in gen.graph.edges()})


def order_preserving_curvature(gen: Generator, h: Mapping[str, Number] | Callable[[str], Number],
                               order: Sequence[str]) -> Number:
    """Curvature for the metric |h(y) - h(x)| when jumps respect a total order.

    Every edge x < y must satisfy the stochastic domination of the padded
    jump measures. Then the curvature is the infimum over edges of
    -(Lh(y) - Lh(x)) / (h(y) - h(x)).
    """
    hv = h if callable(h) else h.__getitem__
    pos = {v: k for k, v in enumerate(order)}
    if set(pos) != set(gen.vertices):
        raise ValueError("order must list every vertex exactly once")
    for a, b in zip(order, order[1:]):
        if not hv(b) > hv(a):
            raise ValueError(f"h is not increasing between {a} and {b}")
    lh = gen.apply(hv)
    best = None
    for x, y in gen.graph.edges():
        if pos[x] > pos[y]:
            x, y = y, x
        mu_x, mu_y = padded_measures(gen, x, y)
        up_x = up_y = 0
        for v in reversed(order):
            up_x += mu_x.get(v, 0)
            up_y += mu_y.get(v, 0)
            if not leq(up_x, up_y):
                raise ValueError(f"jump measures of edge ({x},{y}) are not stochastically ordered")
        val = div(-(lh[y] - lh[x]), hv(y) - hv(x))
        if best is None or val < best:
            best = val
    if best is None:
        raise ValueError("generator has no edges")
    return best


def one_step_coupling(gen: Generator, x: str, y: str) -> CouplingRates:
    """Graph-metric optimal coupling that never changes the distance by two.

    Starting from an optimal plan of the padded measures, every joint move
    changing the distance by +-2 is split into two single moves. Then, with
    x1 and y1 the neighbors of x and y on the lexicographically smallest
    geodesic, all of x's jump to x1 is paired with y staying and all of
    y's jump to y1 with x staying. Each exchange trades mass with the
    'both stay' cell and never raises the cost, so optimality is kept.
    """
    if x == y:
        raise ValueError("one-step coupling needs two distinct vertices")
    g = gen.graph
    d = graph_metric(g)
    n = d(x, y)
    _, _, plan = _pair(gen, d, x, y)
    p: dict[tuple[str, str], Number] = dict(plan.plan)
    p.setdefault((x, y), 0)

    def move(cell, r, a_cell, b_cell):
        p[cell] -= r
        for c in (a_cell, b_cell):
            p[c] = p.get(c, 0) + r
        p[(x, y)] -= r

    for (a, b), r in list(p.items()):
        if a != x and b != y and r != 0 and abs(d(a, b) - n) == 2:
            move((a, b), r, (a, y), (x, b))
    path = g.geodesic(x, y)
    x1, y1 = path[1], path[-2]
    for (a, b), r in list(p.items()):
        if a == x1 and b != y and r != 0:
            move((a, b), r, (x1, y), (x, b))
    for (a, b), r in list(p.items()):
        if b == y1 and a != x and r != 0:
            move((a, b), r, (a, y), (x, y1))
    if p[(x, y)] < 0 and not is_zero(p[(x, y)], 1e-12):
        raise RuntimeError("exchange exhausted the both-stay mass")
    rates = {k: r for k, r in p.items() if k != (x, y) and not (r == 0 or is_zero(r, 1e-15))}
    return CouplingRates((x, y), rates)
