"""Comparison of coupled distances with a one-dimensional reference chain.

A family of coupling rates out of every pair (x, y) is compared with a jump
chain on the distances 0..D. With a_j (resp. b_j) the total coupling rate
onto pairs whose graph distance drops (resp. grows) by j, the condition is

    a_j >= alpha [J_n(n - j) + beta_{-j}],  b_j <= alpha [J_n(n + j) + beta_j]

for j = 1, 2 and n = d_G(x, y), together with
(beta_{-1} + 2 beta_{-2}) - (beta_1 + 2 beta_2) >= 0 and
J_n(n - 1) + 2 J_n(n - 2) > 0. A profile h0 with -L_ref h0 >= kappa h0 then
gives a curvature bound for the metric h0(d_G).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .birth_death import ReferenceChain
from .certificate import Certificate
from .curvature import (CouplingRates, curvature_lower_bound, one_step_coupling, pair_curvature,
                        validate_coupling)
from .graph_model import Generator, Graph, graph_metric, pullback_metric
from .numeric import Number, close, div, format_number, leq

Pair = tuple[str, str]
ZERO_BETA = (0, 0, 0, 0)


@dataclass
class ComparisonData:
    """Reference rates plus per-pair slack.

    ``beta[pair]`` lists (beta_{-2}, beta_{-1}, beta_1, beta_2); pairs absent
    from ``alpha`` or ``beta`` use 1 and zeros.
    """

    reference: ReferenceChain
    alpha: Mapping[Pair, Number] = field(default_factory=dict)
    beta: Mapping[Pair, Sequence[Number]] = field(default_factory=dict)

    def alpha_at(self, pair: Pair) -> Number:
        return self.alpha.get(pair, self.alpha.get(pair[::-1], 1))

    def beta_at(self, pair: Pair) -> tuple[Number, Number, Number, Number]:
        b = self.beta.get(pair, self.beta.get(pair[::-1], ZERO_BETA))
        if len(b) != 4:
            raise ValueError(f"beta at {pair} needs four entries")
        return tuple(b)

    def beta_is_zero(self) -> bool:
        return all(v == 0 for b in self.beta.values() for v in b)


@dataclass
class ConditionReport:
    ok: bool
    violations: list[str]
    moves: dict[Pair, dict[int, Number]]


def distance_moves(cr: CouplingRates, dist: Callable[[str, str], int]) -> dict[int, Number]:
    """Total coupling rate grouped by the change of graph distance."""
    x, y = cr.base
    n = dist(x, y)
    out: dict[int, Number] = {}
    for (a, b), r in cr.rates.items():
        if r == 0:
            continue
        j = dist(a, b) - n
        if j:
            out[j] = out.get(j, 0) + r
    return out


def _coupling_for(couplings: Mapping[Pair, CouplingRates], x: str, y: str) -> CouplingRates | None:
    cr = couplings.get((x, y))
    if cr is not None:
        return cr
    cr = couplings.get((y, x))
    if cr is None:
        return None
    return CouplingRates((x, y), {(b, a): r for (a, b), r in cr.rates.items()})


def verify_condition_C(gen: Generator, couplings: Mapping[Pair, CouplingRates],
                       data: ComparisonData) -> ConditionReport:
    """Audit the comparison condition on every pair and list all violations."""
    g = gen.graph
    ref = data.reference
    violations: list[str] = []
    moves: dict[Pair, dict[int, Number]] = {}
    for n in range(1, ref.D + 1):
        if not ref.rate(n, -1) + 2 * ref.rate(n, -2) > 0:
            violations.append(f"condition (3): J_{n}({n - 1}) + 2 J_{n}({n - 2}) = 0")
    diam = g.diameter()
    if diam > ref.D:
        violations.append(f"reference horizon {ref.D} is below the diameter {diam}")
    for x, y in graph_metric(g).pairs():
        cr = _coupling_for(couplings, x, y)
        if cr is None:
            violations.append(f"no coupling supplied for ({x},{y})")
            continue
        if not validate_coupling(gen, cr):
            violations.append(f"coupling at ({x},{y}) fails the marginal identities")
            continue
        n = g.distance(x, y)
        mv = distance_moves(cr, g.distance)
        moves[(x, y)] = mv
        far = [j for j in mv if abs(j) > 2]
        if far:
            violations.append(f"coupling at ({x},{y}) changes the distance by {far[0]}")
        alpha = data.alpha_at((x, y))
        bm2, bm1, b1, b2 = data.beta_at((x, y))
        if alpha < 1:
            violations.append(f"alpha({x},{y}) = {format_number(alpha)} is below 1")
        if min(bm2, bm1, b1, b2) < 0:
            violations.append(f"beta({x},{y}) has a negative entry")
        if not leq(0, (bm1 + 2 * bm2) - (b1 + 2 * b2)):
            violations.append(f"condition (2) fails at ({x},{y})")
        if n > ref.D:
            continue
        slack = {-2: bm2, -1: bm1, 1: b1, 2: b2}
        for j in (1, 2):
            down = mv.get(-j, 0)
            need = alpha * (ref.rate(n, -j) + slack[-j])
            if not leq(need, down):
                violations.append(f"condition (1): a_{j}({x},{y}) = {format_number(down)} < {format_number(need)}")
            up = mv.get(j, 0)
            cap = alpha * (ref.rate(n, j) + slack[j])
            if not leq(up, cap):
                violations.append(f"condition (1): b_{j}({x},{y}) = {format_number(up)} > {format_number(cap)}")
    return ConditionReport(not violations, violations, moves)


def reference_from_couplings(gen: Generator, couplings: Mapping[Pair, CouplingRates]) -> ReferenceChain:
    """Tightest reference chain with alpha = 1 and beta = 0 for the given couplings.

    J_n(n - j) is the least a_j and J_n(n + j) the largest b_j over pairs at
    distance n.
    """
    g = gen.graph
    D = g.diameter()
    rates: dict[int, dict[int, Number]] = {n: {} for n in range(1, D + 1)}
    seen: dict[int, bool] = {}
    for x, y in graph_metric(g).pairs():
        cr = _coupling_for(couplings, x, y)
        if cr is None:
            raise ValueError(f"no coupling supplied for ({x},{y})")
        n = g.distance(x, y)
        mv = distance_moves(cr, g.distance)
        row = rates[n]
        for j in (-2, -1):
            v = mv.get(j, 0)
            row[j] = v if not seen.get(n) else min(row[j], v)
        for j in (1, 2):
            v = mv.get(j, 0)
            row[j] = v if not seen.get(n) else max(row[j], v)
        seen[n] = True
    for n, row in rates.items():
        for j in list(row):
            if row[j] == 0 or not 0 <= n + j <= D:
                row.pop(j)
    return ReferenceChain(D, rates)


def _profile(h0, length: int) -> list[Number]:
    if callable(h0):
        return [h0(n) for n in range(length)]
    vals = list(h0)
    if len(vals) < length:
        raise ValueError(f"profile needs values on 0..{length - 1}")
    return vals[:length]


def comparison_certificate(data: ComparisonData, h0, kappa: Number, graph: Graph | None = None,
                           condition: ConditionReport | None = None, label: str = "") -> Certificate:
    """Certify kappa from a profile h0 dominated by the reference chain.

    Branch (a): increments of h0 non-increasing gives Ric(L, h0(d_G)) >= kappa.
    Branch (b): beta = 0 gives the contraction of the cost h0(d_G).
    """
    ref = data.reference
    vals = _profile(h0, ref.D + 1)
    if vals[0] != 0:
        raise ValueError("h0 must vanish at 0")
    inc = [vals[n + 1] - vals[n] for n in range(ref.D)]
    for n, v in enumerate(inc):
        if not v > 0:
            raise ValueError(f"h0 is not increasing between {n} and {n + 1}")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if condition is not None and not condition.ok:
        raise ValueError("comparison condition fails: " + condition.violations[0])
    lref = ref.apply(vals)
    for n in range(1, ref.D + 1):
        if not leq(kappa * vals[n], -lref[n]):
            raise ValueError(f"-L_ref h0({n}) = {format_number(-lref[n])} is below "
                             f"kappa h0({n}) = {format_number(kappa * vals[n])}")
    evidence = [f"-L_ref h0 >= kappa h0 on 1..{ref.D}"]
    if condition is not None:
        evidence.append("comparison condition audited on every pair")
    concave = all(leq(b, a) for a, b in zip(inc, inc[1:]))
    metric = None
    if concave:
        if graph is not None:
            metric = pullback_metric(graph_metric(graph), vals)
        evidence.append("branch a: increments of h0 are non-increasing")
        return Certificate(kappa, metric, 1, "ricci", evidence, label, vals)
    if data.beta_is_zero():
        if graph is not None:
            metric = pullback_metric(graph_metric(graph), vals)
        evidence.append("branch b: beta = 0, cost-function contraction")
        return Certificate(kappa, metric, 1, "cost", evidence, label, vals)
    raise ValueError("neither branch applies: increments of h0 grow and beta is nonzero")


def cycle_couplings(n: int, vertices: Sequence[str] | None = None) -> dict[Pair, CouplingRates]:
    """Couplings of the cycle random walk (rate 1/2 to each neighbor).

    Neighbors x, y = x + 1 meet with rate 1/2 from each side and otherwise
    step apart together; at larger distance the walkers move as mirror
    images, towards each other or away from each other with rate 1/2 each.
    """
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    names = list(vertices) if vertices is not None else [str(i) for i in range(n)]
    half = Fraction(1, 2)
    out: dict[Pair, CouplingRates] = {}

    def step(v: int, t: int) -> str:
        return names[(v + t) % n]

    for i in range(n):
        for k in range(1, n):
            j = (i + k) % n
            fwd = k <= n - k
            # walk direction from x towards y along a shortest arc
            s = 1 if fwd else -1
            x, y = names[i], names[j]
            rates: dict[Pair, Number] = {}
            dist = min(k, n - k)
            if dist == 1:
                pairs = [(y, y), (x, x), (step(i, -s), step(j, s))]
            else:
                pairs = [(step(i, s), step(j, -s)), (step(i, -s), step(j, s))]
            for p in pairs:
                rates[p] = rates.get(p, 0) + half
            out[(x, y)] = CouplingRates((x, y), rates)
    return out


@dataclass(frozen=True)
class DissipativityProfile:
    """Curvature at least kappa_inf at distance >= N and at least -R below N."""

    J_star: Number
    kappa_inf: Number
    R: Number
    N: int

    def __post_init__(self):
        if not self.J_star > 0:
            raise ValueError("J* must be positive")
        if not self.kappa_inf > 0:
            raise ValueError("kappa_inf must be positive")
        if self.R < 0:
            raise ValueError("R must be nonnegative")
        if self.N < 1:
            raise ValueError("N must be at least 1")

    def normalized(self) -> "DissipativityProfile":
        """Raise N until kappa_inf N >= 2 J*; the hypotheses survive the change."""
        N = self.N
        while not leq(2 * self.J_star, self.kappa_inf * N):
            N += 1
        return DissipativityProfile(self.J_star, self.kappa_inf, self.R, N)


def dissipativity_profile(gen: Generator, N: int | None = None) -> DissipativityProfile:
    """Read J*, R and kappa_inf off the graph-metric pair curvatures.

    Without N the smallest N with positive curvature on all pairs at
    distance >= N is used. When no pair is that far apart, kappa_inf is
    set to 2 J*/N, which the hypothesis then allows.
    """
    g = gen.graph
    J_star = min(r for r in gen.rates().values())
    d = graph_metric(g)
    curv = {p: pair_curvature(gen, d, *p) for p in d.pairs()}
    D = g.diameter()

    def split(N):
        far = [v for p, v in curv.items() if g.distance(*p) >= N]
        near = [v for p, v in curv.items() if g.distance(*p) < N]
        return far, near

    if N is None:
        N = next(m for m in range(1, D + 2) if all(v > 0 for v in split(m)[0]))
    far, near = split(N)
    if far and not min(far) > 0:
        raise ValueError(f"curvature at distance >= {N} is not positive")
    if far:
        kappa_inf = min(far)
    else:
        kappa_inf = div(2 * J_star, N)
    R = max([0] + [-v for v in near])
    return DissipativityProfile(J_star, kappa_inf, R, N)


@dataclass
class DissipativeDesign:
    profile: DissipativityProfile
    nu: list[Number]
    increments: list[Number]
    delta: Number
    delta_stated: Number
    K: Number
    reference: ReferenceChain | None

    def h0(self, n: int) -> Number:
        N = self.profile.N
        if n <= N:
            return sum(self.increments[:n], 0)
        return sum(self.increments, 0) + (n - N)

    def g(self, n: int) -> Number:
        p = self.profile
        return 2 * p.J_star if n <= p.N else p.kappa_inf * n


def dissipative_metric(profile: DissipativityProfile, horizon: int | None = None) -> DissipativeDesign:
    """Concave profile turning dissipativity at infinity into W1 decay.

    With nu(N) = 1 and nu(n) = (2J*)^{N-n} / prod_{k=n}^{N-1} (2J* + R k),
    increments are nu[n, N]/nu(n) up to N and 1 beyond. The rate is
    delta = inf g/h0 = 2J*/h0(N) and the prefactor K = nu[1, N]/nu(1).
    ``delta_stated`` is 2J* / sum_j j nu[j, N]/nu(j), a smaller admissible
    rate.
    """
    p = profile.normalized()
    N, J2, R = p.N, 2 * p.J_star, p.R
    nu = [0] * (N + 1)
    nu[N] = 1 if not isinstance(J2, float) else 1.0
    for n in range(N - 1, 0, -1):
        nu[n] = div(nu[n + 1] * J2, J2 + R * n)
    tail = [0] * (N + 2)
    for n in range(N, 0, -1):
        tail[n] = tail[n + 1] + nu[n]
    inc = [div(tail[n], nu[n]) for n in range(1, N + 1)]
    hN = sum(inc, 0)
    delta = div(J2, hN)
    stated = div(J2, sum((div(j * tail[j], nu[j]) for j in range(1, N + 1)), 0))
    K = div(tail[1], nu[1])
    ref = None
    if horizon is not None:
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        rates = {}
        for n in range(1, horizon + 1):
            down = J2 if n < N else p.kappa_inf * n
            up = J2 + R * n if n < N and n < horizon else 0
            rates[n] = {-1: down, 1: up}
        ref = ReferenceChain(horizon, rates)
    return DissipativeDesign(p, nu, inc, delta, stated, K, ref)


def one_step_couplings(gen: Generator) -> dict[Pair, CouplingRates]:
    d = graph_metric(gen.graph)
    return {(x, y): one_step_coupling(gen, x, y) for x, y in d.pairs()}


def dissipative_certificate(gen: Generator, N: int | None = None) -> tuple[Certificate, Certificate, DissipativeDesign]:
    """Curvature certificate for h0(d_G) and the W1 decay it implies for d_G."""
    g = gen.graph
    profile = dissipativity_profile(gen, N).normalized()
    D = g.diameter()
    design = dissipative_metric(profile, D)
    couplings = one_step_couplings(gen)
    ref = design.reference
    beta = {}
    for (x, y), cr in couplings.items():
        n = g.distance(x, y)
        a = distance_moves(cr, g.distance).get(-1, 0)
        slack = a - ref.rate(n, -1)
        beta[(x, y)] = (0, slack, slack, 0)
    data = ComparisonData(ref, {}, beta)
    report = verify_condition_C(gen, couplings, data)
    vals = [design.h0(n) for n in range(D + 1)]
    ricci = comparison_certificate(data, vals, design.delta, g, report, "dissipative metric")
    ricci.evidence.append(f"J* = {format_number(profile.J_star)}, kappa_inf = {format_number(profile.kappa_inf)}, "
                          f"R = {format_number(profile.R)}, N = {profile.N}")
    decay = Certificate(design.delta, graph_metric(g), design.K, "w1",
                        ["W1 decay for d_G from n <= h0(n) <= h0(1) n"] + ricci.evidence,
                        "graph metric decay")
    return ricci, decay, design


def zhong_yang_bound(gen: Generator, a: Number | None = None,
                     couplings: Mapping[Pair, CouplingRates] | None = None,
                     check_spectrum: bool = True) -> Certificate:
    """Sine-metric curvature for graphs of nonnegative graph-metric curvature.

    Requires a_1 + 2 a_2 >= a below the diameter D and >= 2a at D for
    graph-metric optimal couplings (one-step couplings by default). The
    metric sin(pi d_G / 2D) then has curvature >= 2a (1 - cos(pi / 2D)).
    Without ``a`` the largest admissible value is used.
    """
    g = gen.graph
    d = graph_metric(g)
    report = curvature_lower_bound(gen, d)
    if report.kappa < 0:
        raise ValueError(f"negative graph-metric curvature at {report.argmin}")
    if couplings is None:
        couplings = one_step_couplings(gen)
    D = g.diameter()
    need_near = need_far = None
    for x, y in d.pairs():
        cr = _coupling_for(couplings, x, y)
        if cr is None:
            raise ValueError(f"no coupling supplied for ({x},{y})")
        if not validate_coupling(gen, cr):
            raise ValueError(f"coupling at ({x},{y}) fails the marginal identities")
        n = g.distance(x, y)
        drift = cr.drift(d)
        if not close(drift, -pair_curvature(gen, d, x, y) * n):
            raise ValueError(f"coupling at ({x},{y}) is not graph-metric optimal")
        mv = distance_moves(cr, g.distance)
        volume = mv.get(-1, 0) + 2 * mv.get(-2, 0)
        if n < D:
            need_near = volume if need_near is None else min(need_near, volume)
        else:
            need_far = volume if need_far is None else min(need_far, volume)
    best = div(need_far, 2) if need_near is None else min(need_near, div(need_far, 2))
    if a is None:
        a = best
    elif not leq(a, best):
        raise ValueError(f"a = {format_number(a)} exceeds what the couplings support ({format_number(best)})")
    if not a > 0:
        raise ValueError("activity constant a must be positive")
    kappa = 2 * a * (1 - math.cos(math.pi / (2 * D)))
    if D == 1:
        kappa = 2 * a
    metric = pullback_metric(d, lambda k: math.sin(k * math.pi / (2 * D)) if k < D else 1)
    cert = Certificate(kappa, metric, 1, "ricci",
                       [f"graph-metric curvature >= {format_number(report.kappa)} >= 0",
                        f"a_1 + 2 a_2 >= a = {format_number(a)} below the diameter {D}, >= 2a at it"],
                       "sine metric")
    if check_spectrum:
        from .verifier import spectral_gap

        gap = spectral_gap(gen)
        if gap < float(kappa) - 1e-8:
            raise RuntimeError(f"spectral gap {gap} below certified {float(kappa)}")
        cert.evidence.append(f"spectral gap {gap!r} >= kappa")
    return cert
