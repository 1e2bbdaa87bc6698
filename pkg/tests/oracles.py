"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _spanning_trees(m: int, n: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    cells = [(i, j) for i in range(m) for j in range(n)]
    trees = []
    for subset in itertools.combinations(cells, m + n - 1):
        parent = list(range(m + n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        ok = True
        for i, j in subset:
            ri, rj = find(i), find(m + j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if ok:
            trees.append(subset)
    return tuple(trees)


def _solve_on_tree(tree, supply, demand):
    m = len(supply)
    s = list(supply)
    d = list(demand)
    remaining = set(tree)
    flows = {}
    while remaining:
        deg: dict[int, list] = {}
        for i, j in remaining:
            deg.setdefault(i, []).append((i, j))
            deg.setdefault(m + j, []).append((i, j))
        node, cells = next((k, v) for k, v in sorted(deg.items()) if len(v) == 1)
        cell = cells[0]
        i, j = cell
        f = s[i] if node == i else d[j]
        flows[cell] = f
        s[i] -= f
        d[j] -= f
        remaining.discard(cell)
    if any(v != 0 for v in s) or any(v != 0 for v in d):
        return None
    return flows


def brute_force_transport(supply, demand, cost):
    """Minimum over all basic feasible solutions (spanning-tree bases)."""
    m, n = len(supply), len(demand)
    best = None
    for tree in _spanning_trees(m, n):
        flows = _solve_on_tree(tree, supply, demand)
        if flows is None or any(f < 0 for f in flows.values()):
            continue
        val = sum((f * cost[i][j] for (i, j), f in flows.items()), Fraction(0))
        if best is None or val < best:
            best = val
    return best


def linprog_transport(supply, demand, cost) -> float:
    from scipy.optimize import linprog

    m, n = len(supply), len(demand)
    a_eq = []
    b_eq = []
    for i in range(m):
        row = np.zeros(m * n)
        row[i * n:(i + 1) * n] = 1
        a_eq.append(row)
        b_eq.append(float(supply[i]))
    for j in range(n):
        row = np.zeros(m * n)
        row[j::n] = 1
        a_eq.append(row)
        b_eq.append(float(demand[j]))
    res = linprog(np.asarray(cost, dtype=float).ravel(), A_eq=np.array(a_eq), b_eq=np.array(b_eq),
                  bounds=(0, None), method="highs")
    assert res.success
    return float(res.fun)


def dense_generator_eigenvalues(q: np.ndarray) -> np.ndarray:
    return np.linalg.eigvals(-q)


def expm_series(q: np.ndarray, t: float, terms: int = 120) -> np.ndarray:
    """Plain Taylor series of exp(tq); accurate while t |q| stays moderate."""
    a = q * t
    term = np.eye(q.shape[0])
    out = term.copy()
    for k in range(1, terms):
        term = term @ a / k
        out += term
    return out
