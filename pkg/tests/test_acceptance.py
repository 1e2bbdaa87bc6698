"""Acceptance criteria 1-14, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in
the terminal summary) or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import random
import sys
from fractions import Fraction

import pytest

from jumpcurv.birth_death import (BirthDeathChain, bd_curvature, chain_metric, degree_diameter_bound, exact_sqrt,
                                  poisson_metric, reference_case_solver, w1_decay_certificate)
from jumpcurv.certificate import Certificate
from jumpcurv.comparison import (ComparisonData, comparison_certificate, cycle_couplings, dissipative_certificate,
                                 reference_from_couplings, verify_condition_C, zhong_yang_bound)
from jumpcurv.curvature import (alpha_ricci, curvature_lower_bound, myers_bound, order_preserving_curvature,
                                pair_curvature)
from jumpcurv.families import (FAMILIES, bipartite, binomial, complete, cube, cycle, dissipative_chain,
                               geometric_one, kpartite, lyapunov_chain, petersen, random_connected, star)
from jumpcurv.glauber import (dobrushin_matrix, gibbs_generator, glauber_certificate, queue_curvature, queue_model,
                              spin_curvature, spin_model)
from jumpcurv.graph_model import Generator, graph_metric
from jumpcurv.lyapunov import LyapunovData, fit_drift, lyapunov_kappa, minorization_pseudometric
from jumpcurv.verifier import AUDIT_TOL, audit_certificate, contraction_audit, eigen_vs_certificate, spectral_gap

from oracles import brute_force_transport

RESULTS: dict[int, tuple[bool, str]] = {}


class Criterion:
    def __init__(self):
        self.failures: list[str] = []
        self.checked = 0

    def check(self, ok: bool, what: str) -> None:
        self.checked += 1
        if not ok:
            self.failures.append(what)


def _record(number: int, crit: Criterion, summary: str) -> tuple[bool, str]:
    ok = not crit.failures
    detail = f"{summary}; {crit.checked} checks"
    if not ok:
        detail += f"; first failure: {crit.failures[0]} ({len(crit.failures)} failing)"
    RESULTS[number] = (ok, detail)
    return ok, detail


def criterion_1():
    c = Criterion()
    for n in range(2, 9):
        ex = complete(n)
        target = Fraction(n, n - 1)
        for x, y in ex.metric.pairs():
            v = pair_curvature(ex.generator, ex.metric, x, y)
            c.check(v == target, f"K_{n} ({x},{y}) gave {v}")
    return _record(1, c, "complete graphs N=2..8, every pair N/(N-1) exactly")


def criterion_2():
    c = Criterion()
    for n in range(2, 9):
        ex = star(n)
        k = curvature_lower_bound(ex.generator, ex.metric).kappa
        c.check(k == Fraction(2, n), f"star {n} graph metric gave {k}")
        custom = star(n, "custom")
        k = curvature_lower_bound(custom.generator, custom.metric).kappa
        c.check(k >= 1, f"star {n} custom metric gave {k}")
        gap = spectral_gap(ex.generator)
        c.check(abs(gap - 1) <= 1e-9, f"star {n} gap {gap}")
    return _record(2, c, "star graphs N=2..8: kappa 2/N exactly, custom metric >= 1, gap 1 within 1e-9")


def criterion_3():
    c = Criterion()
    for n in range(3, 13):
        ex = cycle(n)
        lam = 1 - math.cos(2 * math.pi / n)
        gap = spectral_gap(ex.generator)
        c.check(abs(gap - lam) <= 1e-9, f"cycle {n} gap {gap}")
        couplings = cycle_couplings(n)
        ref = reference_from_couplings(ex.generator, couplings)
        data = ComparisonData(ref)
        report = verify_condition_C(ex.generator, couplings, data)
        c.check(report.ok, f"cycle {n} comparison condition: {report.violations[:1]}")
        try:
            cert = comparison_certificate(data, lambda k: math.sin(k * math.pi / n), lam, ex.generator.graph, report)
        except ValueError as exc:
            c.check(False, f"cycle {n} certificate rejected: {exc}")
            continue
        audit = contraction_audit(ex.generator, cert.metric, lam, 1)
        c.check(audit.verdict, f"cycle {n} audit ratio {audit.max_ratio}")
    return _record(3, c, "cycles n=3..12: gap within 1e-9, sine certificate accepted, audit with K=1")


def criterion_4():
    c = Criterion()
    for lam in (1, Fraction(5, 2), 7):
        v = bd_curvature(BirthDeathChain.mm_infinity(lam, 15))
        c.check(v == 1, f"M/M/inf lambda={lam} gave {v}")
    for p in (Fraction(1, 4), Fraction(1, 2), Fraction(5, 6)):
        v = bd_curvature(BirthDeathChain.geometric_two(p, 15))
        c.check(v == 1 - p, f"geometric II p={p} gave {v}")
    for a, b in ((4, 1), (3, 1), (9, 4)):
        ch = BirthDeathChain.geometric_one(a, b, 12)
        v = bd_curvature(ch)
        c.check(v == 0, f"geometric I ({a},{b}) graph metric gave {v}")
        gen = ch.to_generator()
        order = [str(n) for n in range(13)]
        ra, rb = exact_sqrt(a), exact_sqrt(b)
        if isinstance(ra, int | Fraction) and isinstance(rb, int | Fraction):
            root = Fraction(ra) / rb
            got = order_preserving_curvature(gen, lambda v: root ** int(v), order)
            want = (ra - rb) ** 2
            c.check(got == want, f"geometric I ({a},{b}) exact rate {got} vs {want}")
        else:
            got = order_preserving_curvature(gen, lambda v: (a / b) ** (int(v) / 2), order)
            want = (math.sqrt(a) - math.sqrt(b)) ** 2
            c.check(abs(got - want) <= 1e-12, f"geometric I ({a},{b}) rate {got} vs {want}")
    return _record(4, c, "birth-death closed forms: M/M/inf 1, geometric II 1-p, geometric I 0 and (sqrt a - sqrt b)^2")


def criterion_5():
    c = Criterion()
    for n in range(1, 13):
        for p in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            ex = binomial(n, p)
            k = curvature_lower_bound(ex.generator, ex.metric).kappa
            c.check(k == 1, f"binomial n={n} p={p} kappa {k}")
            gap = spectral_gap(ex.generator)
            c.check(abs(gap - 1) <= 1e-9, f"binomial n={n} p={p} gap {gap}")
    return _record(5, c, "binomial chains n<=12, p in {1/4,1/2,3/4}: kappa 1, gap 1 within 1e-9")


def criterion_6():
    c = Criterion()
    for n1 in (2, 3, 4):
        for n2 in (2, 3, 4):
            ex = bipartite(n1, n2)
            k = curvature_lower_bound(ex.generator, ex.metric).kappa
            c.check(k >= 1, f"K_{n1},{n2} kappa {k}")
            c.check(contraction_audit(ex.generator, ex.metric, 1).verdict, f"K_{n1},{n2} audit")
            gap = spectral_gap(ex.generator)
            c.check(abs(gap - 1) <= 1e-9, f"K_{n1},{n2} gap {gap}")
    for k in (2, 3, 4):
        for n in (2, 3):
            ex = kpartite(k, n)
            v = curvature_lower_bound(ex.generator, ex.metric).kappa
            c.check(v >= 1, f"{k}-partite n={n} kappa {v}")
            c.check(contraction_audit(ex.generator, ex.metric, 1).verdict, f"{k}-partite n={n} audit")
    return _record(6, c, "two-partite and k-partite graphs: kappa >= 1 by LP sweep, audit passes, two-partite gap 1")


def criterion_7():
    c = Criterion()
    for a in (Fraction(1, 2), 1, 3):
        for D in range(1, 8):
            res = reference_case_solver(a, a, D)
            want = 2 * a * (1 - math.cos(math.pi / (2 * D)))
            c.check(abs(float(res.kappa) - want) <= 1e-12, f"case b a={a} D={D}: {res.kappa} vs {want}")
    for a, b in ((1, 2), (1, 3), (2, 3), (Fraction(1, 2), 2)):
        for D in range(1, 7):
            res = reference_case_solver(a, b, D)
            a_, b_ = Fraction(a), Fraction(b)
            want = (b_ - a_) ** 2 / (b_ * ((b_ / a_) ** D - 1) - D * (b_ - a_))
            c.check(res.kappa == want, f"case c a={a} b={b} D={D}: {res.kappa} vs {want}")
            bound = (b_ - a_) / ((b_ / a_) ** D - 1)
            c.check(res.kappa <= bound, f"case c a={a} b={b} D={D} order bound {bound}")
    return _record(7, c, "case solver: case b within 1e-12, case c exact with the order bound")


def _random_graphs(count: int):
    out = []
    seed = 0
    while len(out) < count:
        ex = random_connected(random.Random(seed).randint(5, 9), 0.3, seed)
        seed += 1
        gen = ex.generator
        if max(gen.graph.degree(v) for v in gen.vertices) > 2:
            out.append(ex)
    return out


def criterion_8():
    c = Criterion()
    for ex in [cube(3), petersen()] + _random_graphs(20):
        bound = degree_diameter_bound(ex.generator).value
        gap = spectral_gap(ex.generator)
        c.check(float(bound) <= gap + 1e-12, f"{ex.name}: bound {bound} above gap {gap}")
    return _record(8, c, "degree-diameter bound below the spectral gap on the 3-cube, Petersen and 20 random graphs")


def _examples_with_rate():
    out = [complete(5), star(4), star(4, "custom"), cycle(6, "sin"), cube(3), bipartite(2, 3), kpartite(3, 2),
           binomial(5, Fraction(1, 3)), geometric_one(4, 1, 8), FAMILIES["geometric-2"](Fraction(1, 2), 8),
           FAMILIES["path"](5, "cos"), FAMILIES["mm-infinity"](2, 10), FAMILIES["spin"](), FAMILIES["queue"]()]
    return out


def criterion_9():
    c = Criterion()
    for ex in _examples_with_rate():
        if not ex.kappa or not ex.kappa > 0:
            continue
        rep = myers_bound(ex.generator, ex.metric, ex.kappa)
        c.check(not rep.violations, f"{ex.name}: pair bound fails at {rep.violations[:1]}")
    gen = Generator({("0", "1"): 1, ("1", "0"): 1})
    d = graph_metric(gen.graph)
    kappa = curvature_lower_bound(gen, d).kappa
    rep = myers_bound(gen, d, kappa)
    c.check(rep.holds and rep.diameter == rep.diameter_bound == 1, f"two-point graph {rep.diameter} vs {rep.diameter_bound}")
    return _record(9, c, "Myers pair bounds on every positive example; equality on the two-point graph")


def _random_kernel(rng: random.Random) -> Generator:
    n = rng.randint(2, 6)
    verts = [str(i) for i in range(n)]
    rates = {}
    for x in verts:
        others = [y for y in verts if y != x]
        targets = rng.sample(others, rng.randint(1, len(others)))
        weights = [rng.randint(1, 5) for _ in targets]
        total = sum(weights)
        for y, w in zip(targets, weights):
            rates[(x, y)] = Fraction(w, total)
    return Generator(rates, verts, relaxed=True)


def criterion_10():
    c = Criterion()
    rng = random.Random(2024)
    made = 0
    while made < 20:
        gen = _random_kernel(rng)
        if not gen.is_irreducible():
            continue
        made += 1
        d = graph_metric(gen.graph)
        for x, y in d.pairs():
            a = alpha_ricci(gen, d, 1, x, y)
            p = pair_curvature(gen, d, x, y)
            c.check(a == p, f"kernel {made} ({x},{y}): {a} vs {p}")
    return _record(10, c, "alpha-Ricci with alpha=1 equals pair curvature on 20 random unit-rate kernels, exactly")


def criterion_11():
    from jumpcurv.transport import transport_cost

    c = Criterion()
    rng = random.Random(11)
    for _ in range(200):
        s = [rng.randint(1, 6) for _ in range(rng.randint(1, 4))]
        t = [rng.randint(1, 6) for _ in range(rng.randint(1, 4))]
        supply = [Fraction(v, sum(s)) for v in s]
        demand = [Fraction(v, sum(t)) for v in t]
        cost = [[rng.randint(0, 9) for _ in t] for _ in s]
        src = {f"s{i}": w for i, w in enumerate(supply)}
        dst = {f"t{j}": w for j, w in enumerate(demand)}
        got = transport_cost(src, dst, lambda a, b: cost[int(a[1:])][int(b[1:])]).cost
        want = brute_force_transport(supply, demand, cost)
        c.check(got == want, f"instance {supply} {demand} {cost}: {got} vs {want}")
    return _record(11, c, "transportation simplex equals basic-solution enumeration on 200 instances, exactly")


def _lyapunov_result():
    ch, V, K = lyapunov_chain()
    gen = ch.to_generator()
    r, b = fit_drift(gen, V, K)
    data = LyapunovData(V, r, b, frozenset(K), minorization_pseudometric(gen, K))
    return gen, lyapunov_kappa(gen, data)


def criterion_12():
    c = Criterion()
    gen, res = _lyapunov_result()
    c.check(res.kappa > 0, f"kappa {res.kappa}")
    lp = curvature_lower_bound(gen, res.metric).kappa
    c.check(lp >= res.kappa, f"LP sweep {lp} below {res.kappa}")
    audit = contraction_audit(gen, res.metric, res.kappa)
    c.check(audit.verdict, f"audit ratio {audit.max_ratio}")
    return _record(12, c, f"Lyapunov chain: kappa {res.kappa} > 0, LP sweep {lp}, audit max ratio {audit.max_ratio:.4f}")


def _sym(n, entries):
    m = [[0.0] * n for _ in range(n)]
    for (i, j), v in entries.items():
        m[i][j] = m[j][i] = v
    return m


def criterion_13():
    c = Criterion()
    cases = [(1.0, _sym(2, {(0, 1): math.log(2)}), 4), (0.5, _sym(2, {(0, 1): 1.3}), 4),
             (0.8, _sym(3, {(0, 1): 0.2, (0, 2): 0.1, (1, 2): 0.3}), 3)]
    for lam, betas, trunc in cases:
        model = queue_model(lam, betas, trunc)
        C = dobrushin_matrix(model)
        n = len(betas)
        for i in range(n):
            for j in range(n):
                if i != j:
                    want = lam * (1 - math.exp(-betas[i][j]))
                    c.check(abs(C[i][j] - want) <= 1e-12, f"queue C_{i}{j} {C[i][j]} vs {want}")
        kappa = queue_curvature(lam, betas)
        gen = gibbs_generator(model)
        lp = curvature_lower_bound(gen, model.l1_metric(gen.vertices)).kappa
        c.check(lp >= kappa - 1e-12, f"queue LP {lp} below {kappa}")
    rng = random.Random(13)
    for trial in range(12):
        n = 2 + trial % 2
        entries = {(i, j): -rng.uniform(0, 1.2) for i in range(n) for j in range(i + 1, n)}
        betas = _sym(n, entries)
        kappa = spin_curvature(betas)
        model = spin_model(betas)
        gen = gibbs_generator(model)
        lp = curvature_lower_bound(gen, model.l1_metric(gen.vertices)).kappa
        # sufficiency: the criterion's rate holds; necessity: a larger claim is refuted by the sweep
        c.check(lp >= kappa - 1e-12, f"spin {betas}: LP {lp} below {kappa}")
        c.check(lp < kappa + 1e-6, f"spin {betas}: claim {kappa + 1e-6} not refuted (LP {lp})")
    return _record(13, c, "queue coefficients within 1e-12 with LP confirmation; spin criterion sharp both ways")


def _all_certificates():
    """(generator, certificate) for every module that emits certificates."""
    out = []
    for ex in _examples_with_rate():
        if ex.kappa is not None and ex.kappa > 0:
            out.append((ex.generator, ex.certificate()))
    for n in (4, 5, 7):
        gen = cycle(n).generator
        couplings = cycle_couplings(n)
        data = ComparisonData(reference_from_couplings(gen, couplings))
        lam = 1 - math.cos(2 * math.pi / n)
        out.append((gen, comparison_certificate(data, lambda k: math.sin(k * math.pi / n), lam, gen.graph,
                                                verify_condition_C(gen, couplings, data), "cycle comparison")))
    gen = dissipative_chain().to_generator()
    ricci, decay, _ = dissipative_certificate(gen)
    out += [(gen, ricci), (gen, decay)]
    for ex in (cube(3), bipartite(2, 2), complete(4), cycle(8)):
        out.append((ex.generator, zhong_yang_bound(ex.generator, check_spectrum=False)))
    for ch in (BirthDeathChain.binomial(5, Fraction(1, 3)), BirthDeathChain.mm_infinity(2, 15),
               BirthDeathChain([0, 1, 3, 4, 6], [5, 4, 2, 1, 0])):
        m = ch.mean()
        design = poisson_metric(ch, lambda n: n - m)
        gen = ch.to_generator()
        out.append((gen, Certificate(design.kappa, chain_metric(ch, design.h), 1, "ricci", label="poisson metric")))
        dec = w1_decay_certificate(ch)
        out.append((gen, Certificate(dec.delta, graph_metric(gen.graph), dec.K, "w1", label="poisson decay")))
    gen, res = _lyapunov_result()
    out.append((gen, Certificate(res.kappa, res.metric, 1, "ricci", label="Lyapunov")))
    spin = spin_model(_sym(3, {(0, 1): -0.3, (0, 2): -0.2, (1, 2): -0.1}))
    out.append((gibbs_generator(spin), glauber_certificate(spin, spin_curvature(
        _sym(3, {(0, 1): -0.3, (0, 2): -0.2, (1, 2): -0.1})), "spin")))
    return out


def criterion_14():
    c = Criterion()
    worst = 0.0
    certs = _all_certificates()
    for gen, cert in certs:
        audit = audit_certificate(gen, cert)
        worst = max(worst, audit.max_ratio)
        c.check(audit.max_ratio <= 1 + AUDIT_TOL, f"{cert.label}: ratio {audit.max_ratio}")
        rep = eigen_vs_certificate(gen, [cert], strict=False)
        c.check(rep.ok, f"{cert.label}: gap {rep.gap} below {cert.kappa}")
    return _record(14, c, f"{len(certs)} certificates audited, worst ratio {worst:.12f}, no gap below kappa")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13, criterion_14]


def _line(number: int, ok: bool, detail: str) -> str:
    return f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("number", range(1, 15))
def test_criterion(number):
    ok, detail = CRITERIA[number - 1]()
    print(_line(number, ok, detail))
    assert ok, detail


def summary_lines() -> list[str]:
    return [_line(n, *RESULTS[n]) for n in sorted(RESULTS)]


if __name__ == "__main__":
    failed = 0
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        print(_line(k, ok, detail))
        failed += not ok
    sys.exit(1 if failed else 0)
