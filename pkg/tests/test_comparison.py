from __future__ import annotations

import math
from fractions import Fraction

import pytest

from jumpcurv.birth_death import ReferenceChain
from jumpcurv.comparison import (ComparisonData, DissipativityProfile, comparison_certificate, cycle_couplings,
                                 dissipative_certificate, dissipative_metric, reference_from_couplings,
                                 verify_condition_C, zhong_yang_bound)
from jumpcurv.curvature import curvature_lower_bound, independent_coupling
from jumpcurv.families import bipartite, complete, cube, cycle, dissipative_chain
from jumpcurv.graph_model import graph_metric
from jumpcurv.verifier import audit_certificate, spectral_gap


def _sin_profile(n):
    return lambda k: math.sin(k * math.pi / n)


@pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
def test_cycle_coupling_table(n):
    gen = cycle(n).generator
    couplings = cycle_couplings(n)
    ref = reference_from_couplings(gen, couplings)
    half = Fraction(1, 2)
    # neighbors meet at rate 1 and otherwise step apart together at rate 1/2
    assert ref.rate(1, -1) == 1
    apart = min(3, n - 3) - 1
    assert sum(ref.rate(1, j) for j in (1, 2)) == (half if apart > 0 else 0)
    assert ref.rate(1, apart) == (half if apart > 0 else 0)
    report = verify_condition_C(gen, couplings, ComparisonData(ref))
    assert report.ok, report.violations


@pytest.mark.parametrize("n", [3, 4, 5, 6, 9, 12])
def test_cycle_sine_profile_is_eigenfunction(n):
    gen = cycle(n).generator
    couplings = cycle_couplings(n)
    ref = reference_from_couplings(gen, couplings)
    lam = 1 - math.cos(2 * math.pi / n)
    h = [math.sin(k * math.pi / n) for k in range(ref.D + 1)]
    lh = ref.apply(h)
    for k in range(1, ref.D + 1):
        assert lh[k] == pytest.approx(-lam * h[k], abs=1e-12)
    data = ComparisonData(ref)
    cert = comparison_certificate(data, h, lam, gen.graph, verify_condition_C(gen, couplings, data))
    assert cert.kind == "ricci"
    assert audit_certificate(gen, cert).verdict


def _unit_reference(D):
    rates = {n: {-1: 1, 1: 1} if n < D else {-1: 1} for n in range(1, D + 1)}
    return ReferenceChain(D, rates)


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_independent_coupling_on_cycle(n):
    gen = cycle(n).generator
    d = graph_metric(gen.graph)
    couplings = {p: independent_coupling(gen, *p) for p in d.pairs()}
    ref = _unit_reference(n // 2)
    report = verify_condition_C(gen, couplings, ComparisonData(ref))
    assert report.ok, report.violations


def test_condition_two_violation_is_named():
    gen = cycle(6).generator
    couplings = cycle_couplings(6)
    ref = reference_from_couplings(gen, couplings)
    beta = {p: (0, 0, 1, 0) for p in couplings}
    report = verify_condition_C(gen, couplings, ComparisonData(ref, {}, beta))
    assert not report.ok
    assert any("condition (2)" in v for v in report.violations)


def test_missing_coupling_and_bad_alpha_reported():
    gen = cycle(5).generator
    couplings = cycle_couplings(5)
    ref = reference_from_couplings(gen, couplings)
    partial = {p: c for p, c in couplings.items() if p != ("0", "2") and p != ("2", "0")}
    report = verify_condition_C(gen, partial, ComparisonData(ref, {("0", "1"): Fraction(1, 2)}))
    assert any("no coupling" in v for v in report.violations)
    assert any("alpha" in v for v in report.violations)


@pytest.mark.parametrize("a,D", [(1, 1), (1, 3), (Fraction(1, 2), 4), (2, 6)])
def test_equal_rate_reference_sine_profile(a, D):
    rates = {n: ({-1: a, 1: a} if n < D else {-1: 2 * a}) for n in range(1, D + 1)}
    ref = ReferenceChain(D, rates)
    kappa = 2 * a * (1 - math.cos(math.pi / (2 * D)))
    cert = comparison_certificate(ComparisonData(ref), lambda k: math.sin(k * math.pi / (2 * D)), kappa)
    assert cert.kind == "ricci"
    assert float(cert.kappa) == pytest.approx(kappa, abs=1e-15)


def test_profile_rejections():
    ref = _unit_reference(3)
    with pytest.raises(ValueError, match="below"):
        comparison_certificate(ComparisonData(ref), [0, 1, 2, 3], 1)
    with pytest.raises(ValueError, match="vanish"):
        comparison_certificate(ComparisonData(ref), [1, 2, 3, 4], Fraction(1, 10))
    with pytest.raises(ValueError, match="increasing"):
        comparison_certificate(ComparisonData(ref), [0, 1, 1, 2], Fraction(1, 10))


def test_convex_profile_branches():
    rates = {1: {-1: 2}, 2: {-1: 3}}
    ref = ReferenceChain(2, rates)
    h = [0, 1, 3]
    cert = comparison_certificate(ComparisonData(ref), h, 1)
    assert cert.kind == "cost"
    with pytest.raises(ValueError, match="neither branch"):
        comparison_certificate(ComparisonData(ref, {}, {("a", "b"): (0, 1, 0, 0)}), h, 1)


def test_dissipative_metric_worked_example():
    design = dissipative_metric(DissipativityProfile(1, 1, 1, 2))
    assert design.nu[1] == Fraction(2, 3)
    assert design.K == Fraction(5, 2)
    assert design.increments == [Fraction(5, 2), 1]
    assert design.delta_stated == Fraction(4, 9)
    # inf g/h0 is attained at N: 2 / h0(2)
    assert design.delta == Fraction(4, 7)
    assert design.delta == min(design.g(n) / design.h0(n) for n in range(1, 40))
    for n in range(1, 40):
        assert n <= design.h0(n) <= design.h0(1) * n


@pytest.mark.parametrize("J,R,N,kinf", [(1, 1, 2, 1), (Fraction(1, 2), 2, 3, 1), (2, Fraction(1, 3), 4, 2)])
def test_dissipative_profile_solves_reference_equation(J, R, N, kinf):
    design = dissipative_metric(DissipativityProfile(J, kinf, R, N), horizon=N + 5)
    N = design.profile.N
    h = [design.h0(n) for n in range(N + 6)]
    lh = design.reference.apply(h)
    for n in range(1, N):
        assert -lh[n] == design.g(n)
    for n in range(N + 1, N + 5):
        assert -lh[n] == design.g(n)
    # at N the relation holds only as an inequality
    assert -lh[N] >= design.g(N)
    incs = design.increments + [1]
    assert all(b <= a for a, b in zip(incs, incs[1:]))


def test_dissipative_zero_R():
    design = dissipative_metric(DissipativityProfile(Fraction(3, 2), 3, 0, 1))
    assert design.nu == [0, 1] and design.delta == 3 and design.K == 1


def test_dissipative_chain_certificate():
    gen = dissipative_chain().to_generator()
    assert curvature_lower_bound(gen).kappa < 0
    ricci, decay, design = dissipative_certificate(gen)
    assert ricci.kind == "ricci" and decay.kind == "w1"
    assert curvature_lower_bound(gen, ricci.metric).kappa >= ricci.kappa
    assert audit_certificate(gen, ricci).verdict
    assert audit_certificate(gen, decay).verdict


def test_profile_invariants():
    with pytest.raises(ValueError):
        DissipativityProfile(0, 1, 1, 1)
    with pytest.raises(ValueError):
        DissipativityProfile(1, 1, -1, 1)
    with pytest.raises(ValueError):
        DissipativityProfile(1, 0, 1, 1)
    assert DissipativityProfile(1, Fraction(1, 2), 0, 1).normalized().N == 4


def test_zhong_yang_complete_graph():
    gen = complete(4).generator
    cert = zhong_yang_bound(gen)
    assert 0 < cert.kappa <= spectral_gap(gen) + 1e-12
    assert audit_certificate(gen, cert).verdict


def test_zhong_yang_diameter_one_formula():
    cert = zhong_yang_bound(complete(3).generator, a=Fraction(1, 2))
    assert cert.kappa == 1


@pytest.mark.parametrize("ex", [bipartite(2, 2), cube(3), cycle(6)])
def test_zhong_yang_below_gap(ex):
    cert = zhong_yang_bound(ex.generator)
    assert float(cert.kappa) <= spectral_gap(ex.generator) + 1e-12
    assert audit_certificate(ex.generator, cert).verdict


def test_zhong_yang_rejections():
    with pytest.raises(ValueError, match="negative"):
        zhong_yang_bound(dissipative_chain().to_generator())
    with pytest.raises(ValueError, match="exceeds"):
        zhong_yang_bound(cube(3).generator, a=10)
