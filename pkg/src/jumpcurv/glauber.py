"""Glauber dynamics on finite product spaces and Dobrushin-type curvature bounds.

A configuration is a tuple of site values in site order; as a vertex of the
product generator it is written with ``product_vertex``. Each block of the
covering resamples its sites at the rates supplied by the model, and the
curvature bounds refer to the L1 sum of the per-site metrics.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

from .certificate import Certificate
from .graph_model import Generator, Metric, discrete_metric, graph_metric, Graph, product_vertex
from .curvature import curvature_lower_bound
from .numeric import Number, div, format_number
from .transport import transport_cost

STATE_CAP = 200_000

Config = tuple[str, ...]
BlockRates = Callable[[int, Config], Mapping[Config, Number]]


class ProductSpace:
    """Sites with finite value sets, per-site metrics and a covering by blocks.

    Per-site metrics default to the discrete (Hamming) metric; blocks
    default to singletons.
    """

    def __init__(self, sites: Sequence[str], spaces: Mapping[str, Sequence[str]],
                 metrics: Mapping[str, Metric] | None = None,
                 blocks: Sequence[Sequence[str]] | None = None):
        self.sites = tuple(sites)
        if len(set(self.sites)) != len(self.sites) or not self.sites:
            raise ValueError("sites must be distinct and nonempty")
        self.site_index = {s: k for k, s in enumerate(self.sites)}
        self.spaces = {}
        for s in self.sites:
            vals = tuple(spaces[s])
            if not vals:
                raise ValueError(f"site {s} has an empty value set")
            self.spaces[s] = vals
        metrics = dict(metrics or {})
        self.metrics = {s: metrics.get(s) or discrete_metric(self.spaces[s]) for s in self.sites}
        if blocks is None:
            blocks = [(s,) for s in self.sites]
        self.blocks = tuple(tuple(b) for b in blocks)
        for b in self.blocks:
            if not b or any(s not in self.site_index for s in b):
                raise ValueError(f"block {b} is empty or names an unknown site")
        covered = {s for b in self.blocks for s in b}
        if covered != set(self.sites):
            raise ValueError("blocks do not cover every site")

    @property
    def size(self) -> int:
        return math.prod(len(self.spaces[s]) for s in self.sites)

    def configurations(self) -> Iterator[Config]:
        return itertools.product(*(self.spaces[s] for s in self.sites))

    def multiplicity(self, site: str) -> int:
        """N(j): the number of blocks containing the site."""
        return sum(1 for b in self.blocks if site in b)

    def block_configurations(self, k: int) -> list[Config]:
        return list(itertools.product(*(self.spaces[s] for s in self.blocks[k])))

    def restrict(self, k: int, x: Config) -> Config:
        return tuple(x[self.site_index[s]] for s in self.blocks[k])

    def replace(self, k: int, x: Config, values: Config) -> Config:
        out = list(x)
        for s, v in zip(self.blocks[k], values):
            out[self.site_index[s]] = v
        return tuple(out)

    def block_distance(self, k: int, u: Config, v: Config) -> Number:
        return sum((self.metrics[s](a, b) for s, a, b in zip(self.blocks[k], u, v)), 0)

    def l1(self, x: Config, y: Config) -> Number:
        return sum((self.metrics[s](a, b) for s, a, b in zip(self.sites, x, y)), 0)


class GlauberModel:
    """Block dynamics: block k moves x to x with x_Lambda replaced at given rates.

    ``block_rates(k, x)`` maps new block values (different from the current
    ones) to rates.
    """

    def __init__(self, space: ProductSpace, block_rates: BlockRates, name: str = "glauber",
                 site_graphs: Mapping[str, Graph] | None = None):
        self.space = space
        self._rates = block_rates
        self.name = name
        self.site_graphs = dict(site_graphs or {})

    def rates(self, k: int, x: Config) -> dict[Config, Number]:
        cur = self.space.restrict(k, x)
        return {v: r for v, r in self._rates(k, x).items() if v != cur and r != 0}

    @classmethod
    def gibbs(cls, space: ProductSpace, weight: Callable[[Config], Number], name: str = "gibbs sampler") -> "GlauberModel":
        """Heat-bath sampler of the measure proportional to ``weight``.

        Block k jumps to x_Lambda' at rate mu_Lambda(x_Lambda' | x).
        """
        if any(len(space.spaces[s]) < 2 for s in space.sites):
            raise ValueError("every site needs at least two values")

        def rates(k: int, x: Config) -> dict[Config, Number]:
            ws = {v: weight(space.replace(k, x, v)) for v in space.block_configurations(k)}
            total = sum(ws.values(), 0)
            if any(not w > 0 for w in ws.values()):
                raise ValueError("conditional probabilities must be strictly positive")
            return {v: div(w, total) for v, w in ws.items()}

        graphs = {s: Graph(space.spaces[s], itertools.permutations(space.spaces[s], 2)) for s in space.sites}
        return cls(space, rates, name, graphs)

    @classmethod
    def from_energy(cls, space: ProductSpace, energy: Callable[[Config], float], name: str = "gibbs sampler") -> "GlauberModel":
        """Gibbs sampler of the measure proportional to exp(-energy)."""
        return cls.gibbs(space, lambda x: math.exp(-energy(x)), name)

    @classmethod
    def independent(cls, space: ProductSpace, marginals: Mapping[str, Mapping[str, Number]]) -> "GlauberModel":
        def weight(x: Config) -> Number:
            return math.prod(marginals[s][v] for s, v in zip(space.sites, x))

        return cls.gibbs(space, weight, "independent product sampler")

    @classmethod
    def table(cls, space: ProductSpace, conditionals: Mapping[tuple[int, Config], Mapping[Config, Number]],
              name: str = "conditional table") -> "GlauberModel":
        """Block conditionals given explicitly, keyed by (block, outside values).

        Outside values are the configuration restricted to sites not in the
        block, in site order.
        """
        for key, dist in conditionals.items():
            total = sum(dist.values(), 0)
            if abs(float(total) - 1) > 1e-12 or any(not p > 0 for p in dist.values()):
                raise ValueError(f"conditional at {key} is not a positive probability vector")

        def rates(k: int, x: Config) -> Mapping[Config, Number]:
            block = set(space.blocks[k])
            outside = tuple(v for s, v in zip(space.sites, x) if s not in block)
            try:
                return conditionals[(k, outside)]
            except KeyError:
                raise ValueError(f"no conditional for block {k} given {outside}") from None

        graphs = {s: Graph(space.spaces[s], itertools.permutations(space.spaces[s], 2)) for s in space.sites}
        return cls(space, rates, name, graphs)

    def l1_metric(self, vertices: Sequence[str]) -> Metric:
        """Sum of per-site metrics; a length metric for single-site moves on site graphs."""
        ps = self.space
        lookup = {product_vertex(c): c for c in ps.configurations()}
        length = (all(len(b) == 1 for b in ps.blocks)
                  and all(s in self.site_graphs and ps.metrics[s].kind in ("graph", "length") for s in ps.sites))

        def dist(a: str, b: str) -> Number:
            return ps.l1(lookup[a], lookup[b])

        return Metric(vertices, dist, "length" if length else "custom",
                      all(m.is_metric for m in ps.metrics.values()), "L1 product metric")


def gibbs_generator(model: GlauberModel, cap: int = STATE_CAP) -> Generator:
    """Generator on the product space; refuses spaces larger than ``cap``."""
    ps = model.space
    if ps.size > cap:
        raise ValueError(f"product space has {ps.size} states, above the cap {cap}; truncate further")
    rates: dict[tuple[str, str], Number] = {}
    names = []
    for x in ps.configurations():
        vx = product_vertex(x)
        names.append(vx)
        for k in range(len(ps.blocks)):
            for v, r in model.rates(k, x).items():
                key = (vx, product_vertex(ps.replace(k, x, v)))
                rates[key] = rates.get(key, 0) + r
    return Generator(rates, names)


def _signed_rates(model: GlauberModel, k: int, x: Config) -> dict[Config, Number]:
    out = dict(model.rates(k, x))
    out[model.space.restrict(k, x)] = -sum(out.values(), 0)
    return out


def block_coefficient(model: GlauberModel, k: int, site: str) -> Number:
    """C_{Lambda j}: sup of W(J_Lambda(x,.), J_Lambda(y,.)) / d_j(x_j, y_j) over x = y off j.

    Both padded measures sit at the same block point, so the padding level
    cancels and only the positive and negative parts of the rate difference
    are transported.
    """
    ps = model.space
    if site in ps.blocks[k]:
        raise ValueError("the site lies inside the block")
    j = ps.site_index[site]
    dj = ps.metrics[site]
    best: Number = 0

    def cost(u: Config, v: Config) -> Number:
        return ps.block_distance(k, u, v)

    for x in ps.configurations():
        for b in ps.spaces[site]:
            a = x[j]
            if ps.spaces[site].index(b) <= ps.spaces[site].index(a):
                continue
            y = x[:j] + (b,) + x[j + 1:]
            mx, my = _signed_rates(model, k, x), _signed_rates(model, k, y)
            keys = set(mx) | set(my)
            diff = {u: mx.get(u, 0) - my.get(u, 0) for u in keys}
            pos = {u: w for u, w in diff.items() if w > 0}
            neg = {u: -w for u, w in diff.items() if w < 0}
            if not pos:
                continue
            w1 = transport_cost(pos, neg, cost).cost
            ratio = div(w1, dj(a, b))
            if ratio > best:
                best = ratio
    return best


def dobrushin_coefficients(model: GlauberModel) -> dict[tuple[int, str], Number]:
    """C_{Lambda j} for every block and every site outside it."""
    ps = model.space
    return {(k, s): block_coefficient(model, k, s)
            for k in range(len(ps.blocks)) for s in ps.sites if s not in ps.blocks[k]}


def dobrushin_matrix(model: GlauberModel) -> list[list[Number]]:
    """Single-site coefficients C_ij as a matrix (rows i, columns j); C_ii = 0."""
    ps = model.space
    if any(len(b) != 1 for b in ps.blocks) or len(ps.blocks) != len(ps.sites):
        raise ValueError("the Dobrushin matrix needs the singleton covering")
    coeff = dobrushin_coefficients(model)
    by_site = {b[0]: k for k, b in enumerate(ps.blocks)}
    return [[0 if i == j else coeff[(by_site[i], j)] for j in ps.sites] for i in ps.sites]


def dobrushin_curvature(C: Sequence[Sequence[Number]]) -> Number:
    """1 - max_j sum_i C_ij; nonpositive values certify nothing."""
    n = len(C)
    for i in range(n):
        if len(C[i]) != n:
            raise ValueError("coefficient matrix must be square")
        if C[i][i] != 0:
            raise ValueError("coefficient matrix must have a zero diagonal")
        if any(c < 0 for c in C[i]):
            raise ValueError("coefficients must be nonnegative")
    return 1 - max(sum((C[i][j] for i in range(n)), 0) for j in range(n))


def glauber_block_bound(space: ProductSpace, kappa0: Number, C_block: Mapping[tuple[int, str], Number]) -> Number:
    """min_j (kappa0 N(j) - sum over blocks not containing j of C_{Lambda j})."""
    values = []
    for s in space.sites:
        outside = sum((C_block.get((k, s), 0) for k, b in enumerate(space.blocks) if s not in b), 0)
        values.append(kappa0 * space.multiplicity(s) - outside)
    return min(values)


def block_kappa0(model: GlauberModel) -> Number:
    """Least curvature of a single block's dynamics over all boundary conditions."""
    ps = model.space
    best = None
    for k, block in enumerate(ps.blocks):
        others = [s for s in ps.sites if s not in block]
        seen = set()
        for x in ps.configurations():
            outside = tuple(x[ps.site_index[s]] for s in others)
            if outside in seen:
                continue
            seen.add(outside)
            names = {v: product_vertex(v) for v in ps.block_configurations(k)}
            rates = {}
            for v in names:
                for w, r in model.rates(k, ps.replace(k, x, v)).items():
                    rates[(names[v], names[w])] = r
            gen = Generator(rates, list(names.values()), relaxed=True)
            lookup = {n: v for v, n in names.items()}
            d = Metric(gen.vertices, lambda a, b: ps.block_distance(k, lookup[a], lookup[b]), "custom",
                       name="block metric")
            kappa = curvature_lower_bound(gen, d).kappa
            if best is None or kappa < best:
                best = kappa
    return best


@dataclass(frozen=True)
class ShlosmanCheck:
    lhs: float
    rhs: int
    kappa: float

    @property
    def passed(self) -> bool:
        return self.kappa > 0


def dobrushin_shlosman_check(C: float, delta: float, l: int, d: int, N: int) -> ShlosmanCheck:
    """Block-sampler condition on the box [-N, N]^d covered by side 2l+1 cubes.

    Blocks are the cubes [-l, l]^d + c meeting the box, one per center c,
    so every site lies in exactly (2l+1)^d of them. C_{Lambda j} is
    C exp(-delta d(j, Lambda)) with the L1 lattice distance; the sums are
    taken exactly over the finite box. Returns the worst site's sum
    (lhs), (2l+1)^d (rhs) and their difference.
    """
    if l < 0 or d < 1 or N < 0:
        raise ValueError("need l >= 0, d >= 1, N >= 0")
    side = range(-N - l, N + l + 1)
    boxes = []
    for c in itertools.product(side, repeat=d):
        lo = [max(ck - l, -N) for ck in c]
        hi = [min(ck + l, N) for ck in c]
        if all(a <= b for a, b in zip(lo, hi)):
            boxes.append((lo, hi))
    rhs = (2 * l + 1) ** d
    lhs = 0.0
    for j in itertools.product(range(-N, N + 1), repeat=d):
        total = 0.0
        for lo, hi in boxes:
            dist = sum(max(a - jk, 0, jk - b) for jk, a, b in zip(j, lo, hi))
            if dist > 0:
                total += C * math.exp(-delta * dist)
        lhs = max(lhs, total)
    return ShlosmanCheck(lhs, rhs, rhs - lhs)


def _check_betas(betas: Sequence[Sequence[float]]) -> int:
    n = len(betas)
    for i in range(n):
        if len(betas[i]) != n:
            raise ValueError("interaction matrix must be square")
        for j in range(n):
            if betas[i][j] != betas[j][i]:
                raise ValueError("interaction matrix must be symmetric")
    return n


def spin_model(betas: Sequence[Sequence[float]]) -> GlauberModel:
    """Heat-bath sampler of exp(-sum_{i<j} beta_ij x_i x_j) on {-1, 1}^N."""
    n = _check_betas(betas)
    sites = [str(i + 1) for i in range(n)]
    space = ProductSpace(sites, {s: ("-1", "1") for s in sites})

    def energy(x: Config) -> float:
        v = [int(t) for t in x]
        return sum(betas[i][j] * v[i] * v[j] for i in range(n) for j in range(i + 1, n))

    return GlauberModel.from_energy(space, energy, f"spin model N={n}")


def spin_coupling_term(beta_ij: float, field: float) -> float:
    """mu_i(1 | x^{j+}) - mu_i(1 | x^{j-}) for local field s from the other sites."""
    e = math.exp
    return e(2 * field) * (e(-2 * beta_ij) - e(2 * beta_ij)) / ((1 + e(2 * field - 2 * beta_ij)) * (1 + e(2 * field + 2 * beta_ij)))


def spin_curvature(betas: Sequence[Sequence[float]]) -> float:
    """1 - sup_x max_j sum_{i != j} c_ij(x) for a ferromagnetic spin model.

    This is exactly the optimal curvature bound for the Hamming metric.
    """
    n = _check_betas(betas)
    if any(betas[i][j] > 0 for i in range(n) for j in range(n)):
        raise ValueError("spin_curvature needs beta_ij <= 0 (ferromagnetic)")
    worst = 0.0
    for x in itertools.product((-1, 1), repeat=n):
        for j in range(n):
            total = 0.0
            for i in range(n):
                if i == j:
                    continue
                field = sum(betas[i][k] * x[k] for k in range(n) if k not in (i, j))
                total += spin_coupling_term(betas[i][j], field)
            worst = max(worst, total)
    return 1 - worst


def queue_model(lam: float, betas: Sequence[Sequence[float]], trunc: int) -> GlauberModel:
    """Interacting M/M/infinity queues on {0..trunc}^N.

    Site i gains a customer at rate lam exp(-sum_j beta_ij x_j) (zero at the
    truncation level) and loses one at rate x_i.
    """
    n = _check_betas(betas)
    if trunc < 1:
        raise ValueError("truncation level must be at least 1")
    if any(betas[i][j] < 0 for i in range(n) for j in range(n)):
        raise ValueError("queue interactions must be nonnegative")
    sites = [str(i + 1) for i in range(n)]
    levels = tuple(str(k) for k in range(trunc + 1))
    path = Graph(levels, [(levels[k], levels[k + 1]) for k in range(trunc)] + [(levels[k + 1], levels[k]) for k in range(trunc)])
    pm = graph_metric(path)
    space = ProductSpace(sites, {s: levels for s in sites}, {s: pm for s in sites})

    def rates(k: int, x: Config) -> dict[Config, Number]:
        v = [int(t) for t in x]
        out = {}
        if v[k] < trunc:
            field = sum(betas[k][j] * v[j] for j in range(n) if j != k)
            out[(str(v[k] + 1),)] = lam * math.exp(-field) if field else lam
        if v[k] > 0:
            out[(str(v[k] - 1),)] = v[k]
        return out

    return GlauberModel(space, rates, f"queue model N={n}", {s: path for s in sites})


def queue_curvature(lam: float, betas: Sequence[Sequence[float]]) -> float:
    """1 - lam max_j sum_{i != j} (1 - exp(-beta_ij))."""
    n = _check_betas(betas)
    if n == 0:
        raise ValueError("no sites")
    return 1 - lam * max(sum(1 - math.exp(-betas[i][j]) for i in range(n) if i != j) for j in range(n))


def glauber_certificate(model: GlauberModel, kappa: Number, label: str, evidence: Sequence[str] = ()) -> Certificate:
    """Curvature certificate for the L1 metric; rejects nonpositive rates."""
    if not kappa > 0:
        raise ValueError(f"no contraction certified (kappa = {format_number(kappa)})")
    gen = gibbs_generator(model)
    return Certificate(kappa, model.l1_metric(gen.vertices), 1, "ricci", list(evidence), label)
