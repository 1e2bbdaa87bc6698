"""Optimal transport between finitely supported measures.

The solver is a transportation simplex (MODI method) over a spanning-tree
basis. It runs in exact rational arithmetic when masses and costs are
rational and in floating point otherwise. Entering cells follow Dantzig's
rule with lowest-index tie-breaking; after a run of degenerate pivots the
solver switches to Bland's rule, which cannot cycle. Outputs are therefore
deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .numeric import Number, all_exact, close, leq

Cost = Callable[[str, str], Number]

MASS_TOL = 1e-12


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling of ``source`` and ``target`` with its dual potentials.

    ``row_potential`` and ``col_potential`` satisfy
    u(x) + v(y) <= c(x, y) with equality on the plan's support, and
    cost = sum u*source + sum v*target.
    """

    plan: dict[tuple[str, str], Number]
    cost: Number
    source: dict[str, Number]
    target: dict[str, Number]
    row_potential: dict[str, Number] = field(default_factory=dict)
    col_potential: dict[str, Number] = field(default_factory=dict)
    pivots: int = 0

    def to_csv(self) -> str:
        from .numeric import format_number

        lines = ["x,y,mass"]
        for (x, y), m in self.plan.items():
            lines.append(f"{x},{y},{format_number(m)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DualCertificate:
    """A 1-Lipschitz potential f with sum f*(source - target) equal to the cost."""

    potential: dict[str, Number]
    value: Number


def _support(nu: Mapping[str, Number], order: Callable[[str], int] | None) -> dict[str, Number]:
    out = {}
    for x, w in nu.items():
        if w < 0:
            raise ValueError(f"negative weight at {x}")
        if w != 0:
            out[x] = w
    if order is not None:
        out = dict(sorted(out.items(), key=lambda kv: order(kv[0])))
    return out


def _vertex_order(cost) -> Callable[[str], int] | None:
    index = getattr(cost, "index", None)
    if index is None:
        return None
    return index.__getitem__


def transport_cost(nu1: Mapping[str, Number], nu2: Mapping[str, Number], cost: Cost) -> TransportPlan:
    """Minimal cost of moving ``nu1`` onto ``nu2`` under ``cost``.

    Zero weights are dropped. Masses must agree exactly for rational
    inputs; float masses within 1e-12 relative are rescaled to agree.
    """
    order = _vertex_order(cost)
    src = _support(nu1, order)
    tgt = _support(nu2, order)
    m1 = sum(src.values(), 0)
    m2 = sum(tgt.values(), 0)
    exact = all_exact(list(src.values()) + list(tgt.values()))
    if exact:
        if m1 != m2:
            raise ValueError(f"mass mismatch: {m1} vs {m2}")
    else:
        if abs(float(m1) - float(m2)) > MASS_TOL * max(1.0, abs(float(m1)), abs(float(m2))):
            raise ValueError(f"mass mismatch: {m1} vs {m2}")
        if m2 != 0 and m1 != m2:
            ratio = float(m1) / float(m2)
            tgt = {y: float(w) * ratio for y, w in tgt.items()}
    if not src:
        return TransportPlan({}, 0, src, tgt)
    rows = list(src)
    cols = list(tgt)
    c = [[cost(x, y) for y in cols] for x in rows]
    exact = exact and all(all_exact(row) for row in c)
    if not exact:
        c = [[float(v) for v in row] for row in c]
    flows, u, v, pivots = _transportation_simplex([src[x] for x in rows], [tgt[y] for y in cols], c, exact)
    plan = {}
    total = 0
    for (i, j), f in sorted(flows.items()):
        if f != 0:
            plan[(rows[i], cols[j])] = f
            total = total + f * c[i][j]
    return TransportPlan(plan, total, src, tgt,
                         {x: u[i] for i, x in enumerate(rows)},
                         {y: v[j] for j, y in enumerate(cols)}, pivots)


def _transportation_simplex(supply: Sequence[Number], demand: Sequence[Number],
                            c: list[list[Number]], exact: bool):
    m, n = len(supply), len(demand)
    s = list(supply)
    d = list(demand)
    flows = _least_cost_start(s, d, c)
    row_adj: list[set[int]] = [set() for _ in range(m)]
    col_adj: list[set[int]] = [set() for _ in range(n)]
    for (a, b) in flows:
        row_adj[a].add(b)
        col_adj[b].add(a)

    cmat = None if exact else np.asarray(c, dtype=float)
    tol = 0.0 if exact else 1e-12 * max(1.0, float(np.max(np.abs(cmat))))
    bland = False
    degenerate_run = 0
    pivots = 0
    limit = 50 * (m + n) * (m + n) + 1000
    while True:
        u, v = _potentials(m, n, row_adj, col_adj, c, exact)
        enter = _entering(m, n, c, cmat, u, v, flows, bland, tol, exact)
        if enter is None:
            return flows, u, v, pivots
        pivots += 1
        if pivots > limit:
            raise RuntimeError("transportation simplex did not converge")
        path = _tree_path(enter[0], enter[1], m, row_adj, col_adj)
        # path cells from the entering row to the entering column; odd positions lose mass
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flows[e] for e in minus)
        leave = min((e for e in minus if flows[e] == theta), key=lambda e: e[0] * n + e[1])
        if theta == 0:
            degenerate_run += 1
            if degenerate_run > m + n:
                bland = True
        else:
            degenerate_run = 0
            bland = False
        for e in minus:
            flows[e] -= theta
        for e in plus:
            flows[e] += theta
        del flows[leave]
        row_adj[leave[0]].discard(leave[1])
        col_adj[leave[1]].discard(leave[0])
        flows[enter] = theta
        row_adj[enter[0]].add(enter[1])
        col_adj[enter[1]].add(enter[0])


def _least_cost_start(s: list, d: list, c) -> dict[tuple[int, int], Number]:
    """Greedy allocation in increasing cost order, completed to a spanning tree.

    Each positive allocation exhausts a row or a column, so the allocated
    cells form a forest; zero-flow cells then join its components.
    """
    m, n = len(s), len(d)
    order = sorted(((c[i][j], i, j) for i in range(m) for j in range(n)))
    flows: dict[tuple[int, int], Number] = {}
    parent = list(range(m + n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for _, i, j in order:
        if s[i] > 0 and d[j] > 0:
            q = s[i] if s[i] <= d[j] else d[j]
            flows[(i, j)] = q
            s[i] -= q
            d[j] -= q
            parent[find(i)] = find(m + j)
    for _, i, j in order:
        if len(flows) == m + n - 1:
            break
        if (i, j) in flows:
            continue
        ri, rj = find(i), find(m + j)
        if ri != rj:
            flows[(i, j)] = 0 * c[i][j]
            parent[ri] = rj
    return flows


def _potentials(m, n, row_adj, col_adj, c, exact):
    u: list = [None] * m
    v: list = [None] * n
    u[0] = 0 if exact else 0.0
    queue = deque([("r", 0)])
    while queue:
        kind, k = queue.popleft()
        if kind == "r":
            for b in row_adj[k]:
                if v[b] is None:
                    v[b] = c[k][b] - u[k]
                    queue.append(("c", b))
        else:
            for a in col_adj[k]:
                if u[a] is None:
                    u[a] = c[a][k] - v[k]
                    queue.append(("r", a))
    if any(x is None for x in u) or any(x is None for x in v):
        raise RuntimeError("basis is not a spanning tree")
    return u, v


def _entering(m, n, c, cmat, u, v, flows, bland, tol, exact):
    if exact:
        best = None
        best_val = 0
        for i in range(m):
            ui = u[i]
            ci = c[i]
            for j in range(n):
                if (i, j) in flows:
                    continue
                r = ci[j] - ui - v[j]
                if r < 0:
                    if bland:
                        return (i, j)
                    if r < best_val:
                        best, best_val = (i, j), r
        return best
    red = cmat - np.asarray(u)[:, None] - np.asarray(v)[None, :]
    for (i, j) in flows:
        red[i, j] = 0.0
    if bland:
        cand = np.flatnonzero(red.ravel() < -tol)
        if cand.size == 0:
            return None
        k = int(cand[0])
    else:
        k = int(np.argmin(red))
        if not red.flat[k] < -tol:
            return None
    return divmod(k, n)


def _tree_path(i0: int, j0: int, m: int, row_adj, col_adj) -> list[tuple[int, int]]:
    """Basic cells on the tree path from row i0 to column j0, in order."""
    start = ("r", i0)
    goal = ("c", j0)
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        kind, k = node
        nbrs = [("c", b) for b in row_adj[k]] if kind == "r" else [("r", a) for a in col_adj[k]]
        for nb in nbrs:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    nodes = []
    node = goal
    while node is not None:
        nodes.append(node)
        node = parent[node]
    nodes.reverse()
    cells = []
    for a, b in zip(nodes, nodes[1:]):
        if a[0] == "r":
            cells.append((a[1], b[1]))
        else:
            cells.append((b[1], a[1]))
    return cells


def dual_certificate(plan: TransportPlan, cost, vertices: Sequence[str] | None = None) -> DualCertificate:
    """Kantorovich potential for a metric cost, extended to ``vertices``.

    f(z) = min over target points y of [d(z, y) - v(y)] is 1-Lipschitz and
    satisfies sum f*(source - target) = plan cost.
    """
    if not getattr(cost, "is_metric", True):
        raise ValueError("dual certificates need a metric cost")
    if vertices is None:
        vertices = getattr(cost, "vertices", None) or list(dict.fromkeys(list(plan.source) + list(plan.target)))
    if not plan.target:
        return DualCertificate({z: 0 for z in vertices}, 0)
    if not plan.col_potential:
        raise ValueError("plan carries no dual potentials")
    f = {z: min(cost(z, y) - vy for y, vy in plan.col_potential.items()) for z in vertices}
    value = sum((f[x] * w for x, w in plan.source.items()), 0) - sum((f[y] * w for y, w in plan.target.items()), 0)
    if not close(value, plan.cost, 1e-10):
        raise RuntimeError(f"duality gap: potential gives {value}, plan costs {plan.cost}")
    return DualCertificate(f, value)


def is_lipschitz(f: Mapping[str, Number], cost) -> bool:
    keys = list(f)
    return all(leq(abs(f[x] - f[y]), cost(x, y)) for a, x in enumerate(keys) for y in keys[a + 1:])


def w1_ordered(nu1: Mapping[str, Number], nu2: Mapping[str, Number],
               h: Mapping[str, Number] | Callable[[str], Number], order: Sequence[str],
               d_w=None) -> Number:
    """Transport cost between stochastically ordered measures on a chain.

    ``order`` lists vertices from smallest to largest. Requires nu1 below
    nu2 in stochastic order; then every order-preserving coupling is
    optimal and the cost is sum h*(nu2 - nu1) for the metric h(y) - h(x).
    """
    hv = h if callable(h) else h.__getitem__
    pos = {v: k for k, v in enumerate(order)}
    for nu in (nu1, nu2):
        for x, w in nu.items():
            if w != 0 and x not in pos:
                raise ValueError(f"{x} is not in the given order")
    m1 = sum(nu1.values(), 0)
    m2 = sum(nu2.values(), 0)
    if not close(m1, m2, MASS_TOL):
        raise ValueError("masses differ")
    tail1 = tail2 = 0
    for v in reversed(order):
        tail1 += nu1.get(v, 0)
        tail2 += nu2.get(v, 0)
        if not leq(tail1, tail2, MASS_TOL):
            raise ValueError(f"stochastic order fails at the up-set starting at {v}")
    if d_w is not None:
        pts = [v for v in order if nu1.get(v, 0) != 0 or nu2.get(v, 0) != 0]
        for a, x in enumerate(pts):
            for y in pts[a + 1:]:
                if not close(d_w(x, y), hv(y) - hv(x)):
                    raise ValueError(f"metric does not match h on ({x},{y})")
    return sum((hv(v) * (nu2.get(v, 0) - nu1.get(v, 0)) for v in order), 0)


def transport_cost_dense(supply: np.ndarray, demand: np.ndarray, cmat: np.ndarray) -> float:
    """Float optimal cost for mass vectors and a dense cost matrix.

    Zero entries are dropped; the demand is rescaled to the supply mass.
    """
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    rows = np.flatnonzero(supply > 0)
    cols = np.flatnonzero(demand > 0)
    if rows.size == 0 or cols.size == 0:
        return 0.0
    s = supply[rows]
    t = demand[cols]
    if abs(s.sum() - t.sum()) > MASS_TOL * max(1.0, s.sum()):
        raise ValueError(f"mass mismatch: {s.sum()} vs {t.sum()}")
    t = t * (s.sum() / t.sum())
    c = np.asarray(cmat, dtype=float)[np.ix_(rows, cols)]
    flows, _, _, _ = _transportation_simplex(s.tolist(), t.tolist(), c.tolist(), False)
    return float(sum(f * c[i, j] for (i, j), f in flows.items()))
