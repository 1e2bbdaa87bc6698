"""Curvature from a Lyapunov drift condition and a coupling pseudo-metric.

Given V >= 1 with LV <= -rV + b 1_K, inf_{K^c} V > b/r, and a pseudo-metric
d_pi <= C(V(x) + V(y)) whose coupling drift is at most -1 on K^2 off the
diagonal, the cost d_beta = d_pi + beta 1_{x != y}(V(x) + V(y)) has
curvature at least

    min{ beta (r V_low - b) / ((C + beta)(V_high + V_low)),
         (1 - 2 beta b) / (2 (C + beta) V_high) }

for 0 < beta < 1/(2b), with V_high = max_K V and V_low = min_{K^c} V.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection, Mapping, Sequence

from .comparison import one_step_couplings
from .curvature import CouplingRates, curvature_lower_bound, discrete_metric_curvature, optimal_coupling_rates
from .graph_model import Generator, Metric, discrete_metric, graph_metric
from .numeric import Number, div, format_number, leq, solve_linear

Pair = tuple[str, str]


@dataclass
class PseudoMetric:
    """Symmetric table vanishing on the diagonal, possibly zero off it.

    ``couplings`` holds witness coupling rates for the drift condition.
    """

    vertices: tuple[str, ...]
    values: dict[Pair, Number]
    C: Number
    couplings: dict[Pair, CouplingRates] | None = None
    name: str = "pseudo-metric"

    def __call__(self, x: str, y: str) -> Number:
        if x == y:
            return 0
        v = self.values.get((x, y))
        if v is None:
            v = self.values[(y, x)]
        return v

    def drift(self, pair: Pair) -> Number:
        if self.couplings is None:
            raise ValueError("no witness couplings attached")
        cr = self.couplings.get(pair)
        if cr is None:
            x, y = pair
            base = self.couplings[(y, x)]
            cr = CouplingRates(pair, {(b, a): r for (a, b), r in base.rates.items()})
        return cr.drift(self)


def drift_violations(d_pi: PseudoMetric, K: Collection[str], limit: int = 10) -> list[str]:
    """Pairs where the witness drift exceeds -1 on K^2 or 0 elsewhere."""
    bad = []
    for x in d_pi.vertices:
        for y in d_pi.vertices:
            if x == y:
                continue
            target = -1 if (x in K and y in K) else 0
            val = d_pi.drift((x, y))
            if not leq(val, target):
                bad.append(f"drift {format_number(val)} > {target} at ({x},{y})")
                if len(bad) >= limit:
                    return bad
    return bad


def occupation_pseudometric(couplings: Mapping[Pair, CouplingRates], K: Collection[str],
                            vertices: Sequence[str] | None = None) -> PseudoMetric:
    """Expected time spent in K^2 before coupling, solved as a linear system.

    Unknowns are d(x, y) for x != y; each satisfies
    sum_q J_pi(p, q)(d(q) - d(p)) = -1_{K^2}(p) with d = 0 on the diagonal.
    """
    if vertices is None:
        seen: dict[str, None] = {}
        for x, y in couplings:
            seen.setdefault(x)
            seen.setdefault(y)
        vertices = list(seen)
    vertices = tuple(vertices)
    for (x, y), cr in couplings.items():
        if x == y and any(a != b for a, b in cr.rates):
            raise ValueError(f"coupling leaves the diagonal at ({x},{x})")
    unknowns = [(x, y) for x in vertices for y in vertices if x != y]
    index = {p: k for k, p in enumerate(unknowns)}
    n = len(unknowns)
    rows = [[0] * n for _ in range(n)]
    rhs = [0] * n
    for p, k in index.items():
        cr = couplings.get(p)
        if cr is None:
            raise ValueError(f"no coupling supplied for {p}")
        for (a, b), r in cr.rates.items():
            if r == 0:
                continue
            rows[k][k] -= r
            if a != b:
                if (a, b) not in index:
                    raise ValueError(f"coupling at {p} jumps to unknown pair ({a},{b})")
                rows[k][index[(a, b)]] += r
        rhs[k] = -1 if (p[0] in K and p[1] in K) else 0
    try:
        sol = solve_linear(rows, rhs)
    except ValueError:
        raise ValueError("coupling never meets from some pair; system is singular") from None
    values = {p: sol[k] for p, k in index.items()}
    C = max([div(v, 2) for v in values.values()] + [0])
    return PseudoMetric(vertices, values, C, dict(couplings), "occupation pseudo-metric")


def minorization_pseudometric(gen: Generator, K: Collection[str]) -> PseudoMetric:
    """d_pi = 1_{x != y}/delta with delta the least jump-measure overlap on K^2.

    Works for any kernel, nearest-neighbor or not.
    """
    K = [v for v in gen.vertices if v in set(K)]
    verts = gen.vertices
    if len(K) < 2:
        zero = {(x, y): 0 for x in verts for y in verts if x != y}
        return PseudoMetric(verts, zero, 0, None, "trivial pseudo-metric")
    delta = min(discrete_metric_curvature(gen, x, y) for i, x in enumerate(K) for y in K[i + 1:])
    if not delta > 0:
        raise ValueError("jump measures on K do not overlap (delta = 0)")
    dm = discrete_metric(verts)
    couplings = {}
    for i, x in enumerate(verts):
        for y in verts[i + 1:]:
            cr = optimal_coupling_rates(gen, dm, x, y)
            couplings[(x, y)] = cr
    inv = div(1, delta)
    values = {(x, y): inv for x in verts for y in verts if x != y}
    return PseudoMetric(verts, values, inv, couplings, "minorization pseudo-metric")


def curvature_pseudometric(gen: Generator, K: Collection[str], R: Number | None = None,
                           J_star: Number | None = None) -> PseudoMetric:
    """h0(d_G) with D h0(n-1) = nu[n, N]/(2 J* nu(n)) on 1..N and h0 flat beyond N.

    N is the graph diameter of K and nu the reversible measure of the
    reference chain with down rate 2J* and up rate 2J* + Rn.
    """
    g = gen.graph
    d = graph_metric(g)
    kappa = curvature_lower_bound(gen, d).kappa
    if R is None:
        R = max(0, -kappa)
    elif not leq(-R, kappa):
        raise ValueError(f"graph-metric curvature {format_number(kappa)} is below -R")
    min_rate = min(gen.rates().values())
    if J_star is None:
        J_star = min_rate
    elif not (J_star > 0 and leq(J_star, min_rate)):
        raise ValueError(f"J* must lie in (0, {format_number(min_rate)}]")
    Kl = [v for v in gen.vertices if v in set(K)]
    N = max([g.distance(x, y) for x in Kl for y in Kl] + [1])
    J2 = 2 * J_star
    nu = [0] * (N + 1)
    nu[N] = 1
    for n in range(N - 1, 0, -1):
        nu[n] = div(nu[n + 1] * J2, J2 + R * n)
    h = [0]
    tail = 0
    incs = []
    for n in range(N, 0, -1):
        tail += nu[n]
        incs.append(div(tail, J2 * nu[n]))
    for v in reversed(incs):
        h.append(h[-1] + v)
    top = h[N]
    verts = gen.vertices
    values = {(x, y): h[min(g.distance(x, y), N)] for x in verts for y in verts if x != y}
    pm = PseudoMetric(verts, values, div(top, 2), one_step_couplings(gen), "curvature pseudo-metric")
    bad = drift_violations_near(pm, g, N)
    if bad:
        raise ValueError("drift audit of the curvature pseudo-metric failed: " + bad[0])
    return pm


def drift_violations_near(pm: PseudoMetric, g, N: int) -> list[str]:
    """Drift must be <= -1 at graph distance 1..N and <= 0 beyond."""
    bad = []
    for x in pm.vertices:
        for y in pm.vertices:
            if x == y:
                continue
            target = -1 if g.distance(x, y) <= N else 0
            val = pm.drift((x, y))
            if not leq(val, target):
                bad.append(f"drift {format_number(val)} > {target} at ({x},{y})")
    return bad


@dataclass
class LyapunovData:
    V: Mapping[str, Number]
    r: Number
    b: Number
    K: frozenset[str]
    d_pi: PseudoMetric
    beta: Number | None = None

    @property
    def C(self) -> Number:
        return self.d_pi.C


@dataclass
class LyapunovResult:
    kappa: Number
    beta: Number
    metric: Metric
    V_high: Number
    V_low: Number | None
    branches: tuple[Number | None, Number]
    evidence: list[str] = field(default_factory=list)


def fit_drift(gen: Generator, V: Mapping[str, Number], K: Collection[str],
              r: Number | None = None) -> tuple[Number, Number]:
    """Best r (least -LV/V off K) and the matching b (largest LV + rV on K)."""
    lv = gen.apply(V)
    outside = [x for x in gen.vertices if x not in K]
    if r is None:
        if not outside:
            raise ValueError("K covers the space; supply r")
        r = min(div(-lv[x], V[x]) for x in outside)
    if not r > 0:
        raise ValueError("no positive drift rate r outside K")
    b = max(lv[x] + r * V[x] for x in gen.vertices if x in K)
    if not b > 0:
        raise ValueError("drift already negative on K; b would not be positive")
    return r, b


def default_beta(b: Number, C: Number) -> Number:
    q = div(1, 4 * b)
    return min(q, C) if C > 0 else q


def _check(gen: Generator, data: LyapunovData) -> list[str]:
    errors = []
    V, K = data.V, data.K
    for x in gen.vertices:
        if not V[x] >= 1:
            errors.append(f"V({x}) = {format_number(V[x])} is below 1")
    if not (data.r > 0 and data.b > 0):
        errors.append("r and b must be positive")
    lv = gen.apply(V)
    for x in gen.vertices:
        bound = -data.r * V[x] + (data.b if x in K else 0)
        if not leq(lv[x], bound):
            errors.append(f"drift condition fails at {x}: LV = {format_number(lv[x])} > {format_number(bound)}")
    outside = [V[x] for x in gen.vertices if x not in K]
    if outside and not min(outside) > div(data.b, data.r):
        errors.append(f"inf of V off K = {format_number(min(outside))} does not exceed b/r")
    for x in gen.vertices:
        for y in gen.vertices:
            if x != y and not leq(data.d_pi(x, y), data.C * (V[x] + V[y])):
                errors.append(f"d_pi({x},{y}) exceeds C (V(x) + V(y))")
                break
    return errors


def lyapunov_kappa(gen: Generator, data: LyapunovData) -> LyapunovResult:
    """Curvature bound for d_beta after checking every hypothesis pointwise."""
    errors = _check(gen, data)
    if errors:
        raise ValueError(errors[0])
    beta = default_beta(data.b, data.C) if data.beta is None else data.beta
    if not (beta > 0 and beta < div(1, 2 * data.b)):
        raise ValueError("beta must satisfy 0 < beta < 1/(2b)")
    evidence = ["drift condition checked pointwise", "d_pi <= C (V + V) checked"]
    if data.d_pi.couplings is not None:
        bad = drift_violations(data.d_pi, data.K, 1)
        if bad:
            raise ValueError("coupling drift condition fails: " + bad[0])
        evidence.append("coupling drift of d_pi checked on every pair")
    else:
        evidence.append("coupling drift of d_pi not audited (no witness)")
    V, K, C, r, b = data.V, data.K, data.C, data.r, data.b
    high = max(V[x] for x in gen.vertices if x in K)
    outside = [V[x] for x in gen.vertices if x not in K]
    low = min(outside) if outside else None
    second = div(1 - 2 * beta * b, 2 * (C + beta) * high)
    first = None if low is None else div(beta * (r * low - b), (C + beta) * (high + low))
    kappa = second if first is None else min(first, second)
    verts = gen.vertices

    def d_beta(x: str, y: str) -> Number:
        return data.d_pi(x, y) + beta * (V[x] + V[y])

    metric = Metric(verts, d_beta, "custom", True, "Lyapunov cost d_beta")
    return LyapunovResult(kappa, beta, metric, high, low, (first, second), evidence)


def best_beta(gen: Generator, data: LyapunovData, points: int = 64) -> LyapunovResult:
    """Grid search of the bound over beta in (0, 1/(2b))."""
    top = div(1, 2 * data.b)
    best = None
    for k in range(1, points):
        beta = top * div(k, points)
        trial = LyapunovData(data.V, data.r, data.b, data.K, data.d_pi, beta)
        res = lyapunov_kappa(gen, trial)
        if best is None or res.kappa > best.kappa:
            best = res
    return best
