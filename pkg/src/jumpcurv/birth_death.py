"""Birth-death chains on {0, ..., D} and metrics designed for them.

The generator is Lf(n) = a_n (f(n-1) - f(n)) + b_n (f(n+1) - f(n)) with
a_0 = 0 and b_D = 0. Infinite chains are represented by a truncation level
chosen by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .graph_model import Generator, Metric, pullback_metric
from .numeric import Number, all_exact, div, is_exact


def exact_sqrt(x: Number) -> Number:
    """Square root, exact when x is the square of a rational."""
    if is_exact(x) and x >= 0:
        q = Fraction(x)
        p, r = math.isqrt(q.numerator), math.isqrt(q.denominator)
        if p * p == q.numerator and r * r == q.denominator:
            out = Fraction(p, r)
            return int(out) if out.denominator == 1 else out
    return math.sqrt(x)


def _profile(h, length: int) -> list[Number]:
    if callable(h):
        return [h(n) for n in range(length)]
    vals = list(h)
    if len(vals) < length:
        raise ValueError(f"profile needs {length} values, got {len(vals)}")
    return vals[:length]


class BirthDeathChain:
    """Death rates ``a`` and birth rates ``b`` indexed by state 0..D.

    Parameters
    ----------
    a : sequence of numbers
        Death rates with ``a[0] == 0`` and ``a[n] > 0`` for n >= 1.
    b : sequence of numbers
        Birth rates with ``b[D] == 0`` and ``b[n] > 0`` for n < D.
    """

    def __init__(self, a: Sequence[Number], b: Sequence[Number]):
        a = list(a)
        b = list(b)
        if len(a) != len(b) or not a:
            raise ValueError("a and b must have the same positive length")
        self.D = len(a) - 1
        if a[0] != 0:
            raise ValueError("a_0 must be 0")
        if b[self.D] != 0:
            raise ValueError("b_D must be 0 on a finite chain")
        for n in range(1, self.D + 1):
            if not a[n] > 0:
                raise ValueError(f"death rate a_{n} must be positive")
        for n in range(self.D):
            if not b[n] > 0:
                raise ValueError(f"birth rate b_{n} must be positive")
        self.a = a
        self.b = b

    @classmethod
    def mm_infinity(cls, lam: Number, trunc: int) -> "BirthDeathChain":
        return cls([n for n in range(trunc + 1)], [lam] * trunc + [0])

    @classmethod
    def binomial(cls, n: int, p: Number) -> "BirthDeathChain":
        """Birth p(n - y), death (1 - p) y; the product of n two-state chains."""
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        return cls([(1 - p) * y for y in range(n + 1)], [p * (n - y) for y in range(n + 1)])

    @classmethod
    def geometric_one(cls, a: Number, b: Number, trunc: int) -> "BirthDeathChain":
        """Constant rates a_n = a (n >= 1), b_n = b; geometric invariant law when a > b."""
        return cls([0] + [a] * trunc, [b] * trunc + [0])

    @classmethod
    def geometric_two(cls, p: Number, trunc: int) -> "BirthDeathChain":
        """b_n = p(n + 1), a_n = n; negative binomial type invariant law."""
        return cls(list(range(trunc + 1)), [p * (n + 1) for n in range(trunc)] + [0])

    @classmethod
    def random_walk(cls, D: int) -> "BirthDeathChain":
        """Graph Laplacian of the path 0..D (rate 1/degree to each neighbor)."""
        if D < 1:
            raise ValueError("path needs D >= 1")
        half = Fraction(1, 2)
        a = [0] + [half] * (D - 1) + [1]
        b = [1] + [half] * (D - 1) + [0]
        if D == 1:
            a, b = [0, 1], [1, 0]
        return cls(a, b)

    @property
    def vertices(self) -> list[str]:
        return [str(n) for n in range(self.D + 1)]

    @property
    def exact(self) -> bool:
        return all_exact(self.a + self.b)

    def to_generator(self) -> Generator:
        rates = {}
        for n in range(self.D + 1):
            if n > 0:
                rates[(str(n), str(n - 1))] = self.a[n]
            if n < self.D:
                rates[(str(n), str(n + 1))] = self.b[n]
        return Generator(rates, self.vertices)

    def apply(self, f) -> list[Number]:
        v = _profile(f, self.D + 1)
        out = []
        for n in range(self.D + 1):
            val = 0
            if n > 0:
                val += self.a[n] * (v[n - 1] - v[n])
            if n < self.D:
                val += self.b[n] * (v[n + 1] - v[n])
            out.append(val)
        return out

    def invariant_measure(self) -> list[Number]:
        """mu(n) proportional to b_0...b_{n-1} / (a_1...a_n)."""
        w = [Fraction(1) if self.exact else 1.0]
        for n in range(1, self.D + 1):
            w.append(div(w[-1] * self.b[n - 1], self.a[n]))
        z = sum(w)
        return [div(x, z) for x in w]

    def mean(self) -> Number:
        return sum((n * p for n, p in enumerate(self.invariant_measure())), 0)


def bd_curvature(chain: BirthDeathChain) -> Number:
    """min over n of (a_{n+1} - a_n) - (b_{n+1} - b_n): the graph-metric curvature."""
    if chain.D < 1:
        raise ValueError("chain needs at least two states")
    return min((chain.a[n + 1] - chain.a[n]) - (chain.b[n + 1] - chain.b[n]) for n in range(chain.D))


def _metric_ratios(chain: BirthDeathChain, inc: Sequence[Number]) -> list[Number]:
    a, b, D = chain.a, chain.b, chain.D
    out = []
    for n in range(D):
        down = a[n] * inc[n - 1] if n >= 1 else 0
        up = b[n + 1] * inc[n + 1] if n + 1 < D else 0
        lhs = (a[n + 1] * inc[n] - down) - (up - b[n] * inc[n])
        out.append(div(lhs, inc[n]))
    return out


def bd_metric_curvature(chain: BirthDeathChain, h) -> Number:
    """Curvature for the metric |h(m) - h(n)| with h increasing.

    Evaluates, for each edge (n, n+1),
    [(a_{n+1} Dh(n) - a_n Dh(n-1)) - (b_{n+1} Dh(n+1) - b_n Dh(n))] / Dh(n)
    with Dh(n) = h(n+1) - h(n), and returns the minimum.
    """
    vals = _profile(h, chain.D + 1)
    inc = [vals[n + 1] - vals[n] for n in range(chain.D)]
    for n, v in enumerate(inc):
        if not v > 0:
            raise ValueError(f"h is not increasing at {n}")
    return min(_metric_ratios(chain, inc))


@dataclass
class ReferenceChain:
    """Jump chain on distances 0..D killed at 0.

    ``rates[n][j]`` is the rate from distance n to n + j, for n in 1..D and
    j in {-2, -1, 1, 2}.
    """

    D: int
    rates: dict[int, dict[int, Number]]

    def __post_init__(self):
        for n in range(1, self.D + 1):
            row = self.rates.setdefault(n, {})
            for j, r in row.items():
                if j not in (-2, -1, 1, 2):
                    raise ValueError(f"jump size {j} is not allowed")
                if r < 0:
                    raise ValueError("reference rates must be nonnegative")
                if r != 0 and not 0 <= n + j <= self.D:
                    raise ValueError(f"rate from {n} to {n + j} leaves [0, {self.D}]")
        extra = set(self.rates) - set(range(1, self.D + 1))
        if extra:
            raise ValueError(f"rates given at distances outside 1..D: {sorted(extra)}")

    @classmethod
    def from_rates(cls, down: Sequence[Number], up: Sequence[Number]) -> "ReferenceChain":
        """down[n-1] = J_n(n-1), up[n-1] = J_n(n+1) for n = 1..D."""
        D = len(down)
        return cls(D, {n: {-1: down[n - 1], 1: up[n - 1] if n < D else 0} for n in range(1, D + 1)})

    def rate(self, n: int, j: int) -> Number:
        return self.rates.get(n, {}).get(j, 0)

    def apply(self, h) -> dict[int, Number]:
        """L_ref h(n) for n = 1..D, with h(0) = 0 enforced."""
        vals = _profile(h, self.D + 1)
        if vals[0] != 0:
            raise ValueError("h must vanish at 0")
        return {n: sum((r * (vals[n + j] - vals[n]) for j, r in self.rates[n].items() if r != 0), 0)
                for n in range(1, self.D + 1)}

    def invariant_weights(self) -> list[Number]:
        """mu_ref(k) = J_1(2)...J_{k-1}(k) / (J_2(1)...J_k(k-1)), k = 1..D."""
        w = [Fraction(1) if all_exact(r for row in self.rates.values() for r in row.values()) else 1.0]
        for k in range(2, self.D + 1):
            w.append(div(w[-1] * self.rate(k - 1, 1), self.rate(k, -1)))
        return w


@dataclass
class MetricDesign:
    """A distance profile h on 0..D with the curvature it certifies.

    ``increments[n]`` is h(n+1) - h(n). ``is_metric`` is False for the
    cost-function profile that jumps at 0.
    """

    h: list[Number] | Callable[[int], Number]
    increments: list[Number] | None
    kappa: Number
    case: str = ""
    K_g: Number | None = None
    k_g: Number | None = None
    tail: Number | None = None
    is_metric: bool = True
    reference: ReferenceChain | None = None
    notes: list[str] = field(default_factory=list)

    def value(self, n: int) -> Number:
        return self.h(n) if callable(self.h) else self.h[n]

    def metric(self, base: Metric) -> Metric:
        """Pull the profile back along an integer-valued base metric."""
        m = pullback_metric(base, self.value)
        if not self.is_metric:
            m.is_metric = False
        return m


def _increasing(g: Sequence[Number]) -> bool:
    return all(y > x for x, y in zip(g, g[1:]))


def poisson_metric(chain: BirthDeathChain, g, tol: float = 1e-12) -> MetricDesign:
    """Solve -Lh = g with h(0) = 0 for a centered increasing g.

    Increments are Dh(n-1) = sum_{k >= n} mu(k) g(k) / (a_n mu(n)).
    K(g) and k(g) are the sup and inf of Dh(n-1) / Dg(n-1); 1/K(g) is a
    curvature lower bound for the metric |h(m) - h(n)|.
    """
    gv = _profile(g, chain.D + 1)
    if not _increasing(gv):
        raise ValueError("g must be increasing")
    mu = chain.invariant_measure()
    mean = sum((m * x for m, x in zip(mu, gv)), 0)
    if all_exact(gv) and chain.exact:
        if mean != 0:
            raise ValueError(f"g is not centered: mu(g) = {mean}")
    elif abs(float(mean)) > tol:
        raise ValueError(f"g is not centered: mu(g) = {mean}")
    tails = [0] * (chain.D + 2)
    for k in range(chain.D, -1, -1):
        tails[k] = tails[k + 1] + mu[k] * gv[k]
    inc = [div(tails[n], chain.a[n] * mu[n]) for n in range(1, chain.D + 1)]
    if any(isinstance(v, float) and not math.isfinite(v) for v in inc):
        raise ValueError("increments overflow on this truncation")
    ratios = [div(inc[n - 1], gv[n] - gv[n - 1]) for n in range(1, chain.D + 1)]
    h = [0]
    for v in inc:
        h.append(h[-1] + v)
    K = max(ratios)
    return MetricDesign(h, inc, div(1, K), "poisson", K, min(ratios), mu[chain.D])


@dataclass(frozen=True)
class DecayCertificate:
    """W1 (graph metric) contraction with prefactor K and rate delta."""

    K: Number
    delta: Number
    case: str
    design: MetricDesign


def w1_decay_certificate(chain: BirthDeathChain, alpha: Number | None = None) -> DecayCertificate:
    """Graph-metric W1 decay from the Poisson metric with g(n) = n - mean.

    Without ``alpha``: K = K(g)/k(g), rate 1/K(g). With ``alpha`` in
    (0, 1/M), M = max(0, -min edge curvature): K = (K(g) + alpha)/alpha and
    rate (1 - alpha M)/(K(g) + alpha).
    """
    m = chain.mean()
    design = poisson_metric(chain, lambda n: n - m)
    if alpha is None:
        if not design.k_g > 0:
            raise ValueError("k(g) = 0; supply alpha to use the shifted metric")
        return DecayCertificate(div(design.K_g, design.k_g), div(1, design.K_g), "a", design)
    M = max(0, -bd_curvature(chain))
    if not alpha > 0 or (M > 0 and not alpha < div(1, M)):
        raise ValueError(f"alpha must lie in (0, 1/M) with M = {M}")
    return DecayCertificate(div(design.K_g + alpha, alpha), div(1 - alpha * M, design.K_g + alpha), "b", design)


def occupation_bound(ref: ReferenceChain, g, n: int) -> Number:
    """sum_{m=1}^{n} sum_{k >= m} g(k) mu_ref(k) / (mu_ref(m) J_m(m-1)).

    On a finite reference chain with nearest-neighbor jumps this is the
    solution at n of L_ref h = -g, h(0) = 0.
    """
    if not 0 <= n <= ref.D:
        raise ValueError(f"start distance must lie in 0..{ref.D}")
    gv = _profile(g, ref.D + 1)
    if any(v < 0 for v in gv[1:]):
        raise ValueError("g must be nonnegative")
    w = ref.invariant_weights()
    total = 0
    for m in range(1, n + 1):
        tail = sum((gv[k] * w[k - 1] for k in range(m, ref.D + 1)), 0)
        total += div(tail, w[m - 1] * ref.rate(m, -1))
    return total


def reference_case_solver(a: Number, b: Number, D: int | None = None) -> MetricDesign:
    """Profiles for the reference chain with down rate a and up rate b.

    a > b: h(n) = (a/b)^(n/2) for n > 0, h(0) = 0, rate (sqrt a - sqrt b)^2;
    this jumps at 0 and is a cost function, not a metric.
    a = b: h(k) = sin(k pi / 2D), rate 2a(1 - cos(pi / 2D)); the reference
    rate down from the top distance D is 2a.
    a < b: increments ((b/a)^(D-n+1) - 1)/(b - a), rate 1/h(D).
    """
    if not (a > 0 and b > 0):
        raise ValueError("rates must be positive")
    if a > b:
        r = exact_sqrt(div(a, b))
        rate = a + b - 2 * exact_sqrt(a * b)
        if not is_exact(r):
            rate = (math.sqrt(a) - math.sqrt(b)) ** 2

        def h(n: int, r=r) -> Number:
            return 0 if n == 0 else r ** n

        ref = None
        vals: list[Number] | Callable[[int], Number] = h
        inc = None
        if D is not None:
            vals = [h(n) for n in range(D + 1)]
            inc = [vals[n + 1] - vals[n] for n in range(D)]
            ref = ReferenceChain.from_rates([a] * D, [b] * D)
        return MetricDesign(vals, inc, rate, "a", is_metric=False, reference=ref,
                            notes=["cost function: jumps at 0"])
    if D is None or D < 1:
        raise ValueError("cases a = b and a < b need a finite horizon D >= 1")
    if a == b:
        vals = [math.sin(k * math.pi / (2 * D)) for k in range(D + 1)]
        vals[0] = 0
        inc = [vals[n + 1] - vals[n] for n in range(D)]
        down = [a] * (D - 1) + [2 * a]
        ref = ReferenceChain.from_rates(down, [a] * D)
        return MetricDesign(vals, inc, 2 * a * (1 - math.cos(math.pi / (2 * D))), "b", reference=ref,
                            notes=["top distance uses down rate 2a"])
    q = div(b, a)
    inc = [div(q ** (D - n + 1) - 1, b - a) for n in range(1, D + 1)]
    vals = [0]
    for v in inc:
        vals.append(vals[-1] + v)
    ref = ReferenceChain.from_rates([a] * D, [b] * D)
    return MetricDesign(vals, inc, div(1, vals[D]), "c", reference=ref)


@dataclass(frozen=True)
class DegreeDiameterBound:
    value: Number
    lam_star: Number
    d_L: Number
    diameter: int


def degree_diameter_bound(gen: Generator) -> DegreeDiameterBound:
    """Lower bound on the real part of nonzero eigenvalues of -L.

    2 lam_* (d_L - 2) / (d_L [sum_{k=1}^{D} (d_L - 1)^k - D]) where lam_* is
    the least total rate, d_L the largest ratio lam(x)/J(x, y) over edges
    and D the graph diameter.
    """
    lam_star = min(gen.total_rate(x) for x in gen.vertices)
    d_L = max(div(gen.total_rate(x), r) for x in gen.vertices for r in gen.jumps(x).values())
    D = gen.graph.diameter()
    if D < 1:
        raise ValueError("graph has a single vertex")
    if not d_L > 2:
        raise ValueError(f"d_L = {d_L} must exceed 2")
    denom = d_L * (sum((d_L - 1) ** k for k in range(1, D + 1)) - D)
    return DegreeDiameterBound(div(2 * lam_star * (d_L - 2), denom), lam_star, d_L, D)


def chain_metric(chain: BirthDeathChain, h) -> Metric:
    """The metric |h(m) - h(n)| on the states of ``chain``."""
    vals = _profile(h, chain.D + 1)
    g = chain.to_generator().graph
    if not _increasing(vals):
        raise ValueError("h must be increasing")
    return Metric(g.vertices, lambda x, y: abs(vals[int(y)] - vals[int(x)]), "length",
                  name="chain metric")
