from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from jumpcurv.birth_death import BirthDeathChain
from jumpcurv.curvature import CouplingRates, curvature_lower_bound, one_step_coupling
from jumpcurv.families import complete, cycle, dissipative_chain, lyapunov_chain
from jumpcurv.graph_model import Generator
from jumpcurv.lyapunov import (LyapunovData, best_beta, curvature_pseudometric, drift_violations, fit_drift,
                               lyapunov_kappa, minorization_pseudometric, occupation_pseudometric)
from jumpcurv.verifier import contraction_audit


def _instance(beta=None):
    ch, V, K = lyapunov_chain()
    gen = ch.to_generator()
    r, b = fit_drift(gen, V, K)
    return gen, LyapunovData(V, r, b, frozenset(K), minorization_pseudometric(gen, K), beta)


def test_bundled_instance_formula():
    gen, data = _instance()
    assert (data.r, data.b) == (1, 2)
    assert data.C == Fraction(1, 5)
    res = lyapunov_kappa(gen, data)
    assert res.beta == Fraction(1, 8)
    # beta (r V_low - b)/((C + beta)(V_high + V_low)) with V_high = 2, V_low = 4
    first = Fraction(1, 8) * (4 - 2) / ((Fraction(1, 5) + Fraction(1, 8)) * 6)
    second = (1 - 2 * Fraction(1, 8) * 2) / (2 * (Fraction(1, 5) + Fraction(1, 8)) * 2)
    assert res.branches == (first, second)
    assert res.kappa == min(first, second) == Fraction(5, 39)


def test_bundled_instance_confirmed_by_lp_and_audit():
    gen, data = _instance()
    res = lyapunov_kappa(gen, data)
    assert curvature_lower_bound(gen, res.metric).kappa >= res.kappa
    assert contraction_audit(gen, res.metric, res.kappa).verdict


def test_best_beta_improves_and_stays_valid():
    gen, data = _instance()
    base = lyapunov_kappa(gen, data)
    best = best_beta(gen, data)
    assert best.kappa >= base.kappa
    assert curvature_lower_bound(gen, best.metric).kappa >= best.kappa


def test_beta_limits():
    gen, data = _instance(Fraction(1, 4))
    with pytest.raises(ValueError, match="0 < beta < 1/\\(2b\\)"):
        lyapunov_kappa(gen, data)
    data.beta = 0
    with pytest.raises(ValueError, match="beta"):
        lyapunov_kappa(gen, data)
    small = [lyapunov_kappa(gen, LyapunovData(data.V, data.r, data.b, data.K, data.d_pi, Fraction(1, 10 ** k))).kappa
             for k in (2, 4, 6, 8)]
    assert all(b < a for a, b in zip(small, small[1:]))
    # the first branch is linear in beta near 0
    assert small[-1] < Fraction(1, 10 ** 7)


def test_invariant_failures_are_named():
    gen, data = _instance()
    bad_v = dict(data.V)
    bad_v["0"] = Fraction(1, 2)
    with pytest.raises(ValueError, match="below 1"):
        lyapunov_kappa(gen, LyapunovData(bad_v, data.r, data.b, data.K, data.d_pi))
    with pytest.raises(ValueError, match="drift condition fails"):
        lyapunov_kappa(gen, LyapunovData(data.V, 2, data.b, data.K, data.d_pi))
    with pytest.raises(ValueError, match="b/r"):
        lyapunov_kappa(gen, LyapunovData(data.V, data.r, 8, data.K, data.d_pi, Fraction(1, 32)))


def test_minorization_complete_graph():
    for n in range(2, 7):
        gen = complete(n).generator
        pm = minorization_pseudometric(gen, gen.vertices)
        assert pm.C == Fraction(n - 1, n)
        assert pm("0", "1") == Fraction(n - 1, n)
        assert drift_violations(pm, gen.vertices) == []


def test_minorization_degenerate_cases():
    gen = BirthDeathChain.random_walk(4).to_generator()
    with pytest.raises(ValueError, match="delta = 0"):
        minorization_pseudometric(gen, {"0", "3"})
    pm = minorization_pseudometric(gen, {"2"})
    assert pm.C == 0 and pm("0", "4") == 0


def _two_point(p, q):
    gen = Generator({("0", "1"): p, ("1", "0"): q})
    couplings = {("0", "1"): CouplingRates(("0", "1"), {("1", "1"): p, ("0", "0"): q}),
                 ("1", "0"): CouplingRates(("1", "0"), {("0", "0"): p, ("1", "1"): q})}
    return gen, couplings


@settings(max_examples=30, deadline=None)
@given(st.fractions(Fraction(1, 10), 5), st.fractions(Fraction(1, 10), 5))
def test_occupation_two_point(p, q):
    _, couplings = _two_point(p, q)
    pm = occupation_pseudometric(couplings, {"0", "1"})
    assert pm("0", "1") == 1 / (p + q)
    assert pm("0", "0") == 0
    # residual of the defining system is exactly zero
    for pair in couplings:
        assert pm.drift(pair) == -1


def test_occupation_residual_on_cycle():
    gen = cycle(5).generator
    verts = gen.vertices
    couplings = {(x, y): one_step_coupling(gen, x, y) for x in verts for y in verts if x != y}
    K = {"0", "1", "2"}
    pm = occupation_pseudometric(couplings, K, verts)
    for x in verts:
        for y in verts:
            if x != y:
                assert pm.drift((x, y)) == (-1 if x in K and y in K else 0)


def test_occupation_errors():
    _, couplings = _two_point(1, 1)
    leaky = dict(couplings)
    leaky[("0", "0")] = CouplingRates(("0", "0"), {("1", "0"): 1})
    with pytest.raises(ValueError, match="diagonal"):
        occupation_pseudometric(leaky, {"0", "1"})
    stuck = {("0", "1"): CouplingRates(("0", "1"), {("1", "0"): 1}),
             ("1", "0"): CouplingRates(("1", "0"), {("0", "1"): 1})}
    with pytest.raises(ValueError, match="singular"):
        occupation_pseudometric(stuck, {"0", "1"})


def test_curvature_pseudometric_zero_R():
    ex = cycle(8)
    gen = ex.generator
    K = {"0", "1", "2", "3"}
    pm = curvature_pseudometric(gen, K)
    J = Fraction(1, 2)
    N = 3
    h = [0]
    for n in range(1, N + 1):
        h.append(h[-1] + Fraction(N - n + 1) / (2 * J))
    assert pm("0", "1") == h[1] and pm("0", "3") == h[3] and pm("0", "4") == h[3]
    assert pm.C == h[3] / 2


def test_curvature_pseudometric_single_edge():
    gen = complete(3).generator
    pm = curvature_pseudometric(gen, {"0", "1"})
    assert pm("0", "1") == 1 / (2 * Fraction(1, 2))


def test_curvature_pseudometric_negative_curvature():
    gen = dissipative_chain().to_generator()
    pm = curvature_pseudometric(gen, {"0", "1", "2"})
    assert pm("0", "2") > pm("0", "1") > 0
    with pytest.raises(ValueError, match="below -R"):
        curvature_pseudometric(gen, {"0", "1"}, R=0)
    with pytest.raises(ValueError, match="J\\*"):
        curvature_pseudometric(gen, {"0", "1"}, J_star=10)


def test_curvature_pseudometric_feeds_lyapunov():
    ch, V, K = lyapunov_chain()
    gen = ch.to_generator()
    pm = curvature_pseudometric(gen, K)
    r, b = fit_drift(gen, V, K)
    res = lyapunov_kappa(gen, LyapunovData(V, r, b, frozenset(K), pm))
    assert res.kappa > 0
    assert curvature_lower_bound(gen, res.metric).kappa >= res.kappa


def test_fit_drift_errors():
    ch, V, K = lyapunov_chain()
    gen = ch.to_generator()
    with pytest.raises(ValueError):
        fit_drift(gen, V, gen.vertices)
    flat = {v: 1 for v in gen.vertices}
    with pytest.raises(ValueError):
        fit_drift(gen, flat, K)
