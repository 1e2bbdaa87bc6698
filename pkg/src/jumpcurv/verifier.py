"""Numerical audits of contraction certificates on finite state spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .certificate import Certificate
from .graph_model import Generator, Metric, check_reversibility, graph_metric, invariant_measure
from .numeric import Number, format_number
from .transport import transport_cost_dense

TAIL = 1e-14
AUDIT_TOL = 1e-8
DEFAULT_GRID = (0.1, 0.5, 1, 2, 5)


@dataclass(frozen=True)
class SemigroupSlice:
    t: float
    matrix: np.ndarray
    vertices: tuple[str, ...]

    def row(self, x: str) -> np.ndarray:
        return self.matrix[self.vertices.index(x)]


def transition_matrix(gen: Generator, t: float) -> SemigroupSlice:
    """P_t = exp(tL) by uniformization on a short step followed by squaring.

    With L = lam (P - I) and lam the largest total rate, exp(tau L) is the
    Poisson mixture of powers of P, summed until the remaining weight is
    below 1e-14, for tau = t / 2^s with lam tau <= 1. Squaring keeps every
    slice stochastic.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    q = gen.matrix()
    n = q.shape[0]
    eye = np.eye(n)
    lam = float(np.max(-np.diag(q))) if n else 0.0
    if t == 0 or lam == 0:
        return SemigroupSlice(float(t), eye, gen.vertices)
    s = max(0, math.ceil(math.log2(lam * t)))
    x = lam * t / 2 ** s
    p = eye + q / lam
    weight = math.exp(-x)
    term = eye
    acc = weight * eye
    cum = weight
    k = 0
    while 1.0 - cum > TAIL and k < 200:
        k += 1
        term = term @ p
        weight *= x / k
        acc += weight * term
        cum += weight
    acc /= acc.sum(axis=1, keepdims=True)
    for _ in range(s):
        acc = acc @ acc
    if acc.min() < -TAIL:
        raise RuntimeError("semigroup lost positivity")
    acc[acc < 0] = 0.0
    acc /= acc.sum(axis=1, keepdims=True)
    return SemigroupSlice(float(t), acc, gen.vertices)


def _cost_matrix(d: Metric, vertices: Sequence[str]) -> np.ndarray:
    n = len(vertices)
    c = np.zeros((n, n))
    for i, x in enumerate(vertices):
        for j in range(i + 1, n):
            c[i, j] = c[j, i] = float(d(x, vertices[j]))
    return c


def row_distance(p: np.ndarray, q: np.ndarray, cmat: np.ndarray, metric: bool = True) -> float:
    """Transport cost between two probability rows.

    For a metric the common mass stays in place, so only the positive and
    negative parts of p - q are transported.
    """
    if metric:
        diff = p - q
        diff[np.abs(diff) < 1e-16] = 0.0
        return transport_cost_dense(np.clip(diff, 0, None), np.clip(-diff, 0, None), cmat)
    return transport_cost_dense(p, q, cmat)


@dataclass
class ContractionAudit:
    metric: str
    kappa: Number
    K: Number
    times: list[float]
    rows: list[tuple[str, str, float, float, float, float]]
    tol: float = AUDIT_TOL
    sampled: bool = False

    @property
    def max_ratio(self) -> float:
        return max((r[5] for r in self.rows), default=0.0)

    @property
    def verdict(self) -> bool:
        return self.max_ratio <= 1 + self.tol

    def curves(self) -> dict[tuple[str, str], list[tuple[float, float]]]:
        out: dict[tuple[str, str], list[tuple[float, float]]] = {}
        for x, y, t, w, _, _ in self.rows:
            out.setdefault((x, y), []).append((t, w))
        return out

    def to_csv(self) -> str:
        lines = ["pair,t,w1,bound,ratio"]
        for x, y, t, w, b, r in self.rows:
            lines.append(f"{x}~{y},{t!r},{w!r},{b!r},{r!r}")
        lines.append(f"VERDICT,{'pass' if self.verdict else 'fail'},max_ratio={self.max_ratio!r}")
        return "\n".join(lines) + "\n"

    def plot_csv(self) -> str:
        lines = ["pair,t,w1"]
        for x, y, t, w, _, _ in self.rows:
            lines.append(f"{x}~{y},{t!r},{w!r}")
        return "\n".join(lines) + "\n"


def default_times(kappa: Number) -> list[float]:
    scale = 1 / float(kappa) if kappa > 0 else 1.0
    return [g * scale for g in DEFAULT_GRID]


def _select_pairs(d: Metric, gen: Generator, max_pairs: int | None) -> tuple[list[tuple[str, str]], bool]:
    pairs = list(d.pairs())
    if max_pairs is None or len(pairs) <= max_pairs:
        return pairs, False
    chosen = dict.fromkeys(gen.graph.edges())
    stride = max(1, len(pairs) // max(1, max_pairs - len(chosen)))
    for p in pairs[::stride]:
        chosen.setdefault(p)
    return list(chosen), True


def contraction_audit(gen: Generator, d: Metric, kappa: Number, K: Number = 1,
                      times: Iterable[float] | None = None, pairs: Iterable[tuple[str, str]] | None = None,
                      tol: float = AUDIT_TOL, max_pairs: int | None = None) -> ContractionAudit:
    """Ratios W_d(P_t(x,.), P_t(y,.)) / (K exp(-kappa t) d(x, y)) on a time grid.

    Non-metric costs are transported in full, without cancelling common mass.
    """
    times = default_times(kappa) if times is None else [float(t) for t in times]
    sampled = False
    if pairs is None:
        pairs, sampled = _select_pairs(d, gen, max_pairs)
    else:
        pairs = list(pairs)
    verts = gen.vertices
    idx = gen.index
    cmat = _cost_matrix(d, verts)
    rows = []
    for t in times:
        pt = transition_matrix(gen, t).matrix
        decay = float(K) * math.exp(-float(kappa) * t)
        for x, y in pairs:
            w = row_distance(pt[idx[x]], pt[idx[y]], cmat, d.is_metric)
            bound = decay * float(d(x, y))
            rows.append((x, y, t, w, bound, w / bound if bound > 0 else math.inf))
    return ContractionAudit(d.name, kappa, K, times, rows, tol, sampled)


def audit_certificate(gen: Generator, cert: Certificate, times: Iterable[float] | None = None,
                      max_pairs: int | None = None) -> ContractionAudit:
    d = cert.metric if cert.metric is not None else graph_metric(gen.graph)
    return contraction_audit(gen, d, cert.kappa, cert.K, times, max_pairs=max_pairs)


def is_reversible(gen: Generator) -> bool:
    mu = invariant_measure(gen.to_float())
    return check_reversibility(gen.to_float(), mu)


def spectral_gap(gen: Generator) -> float:
    """Smallest real part of the nonzero spectrum of -L.

    Reversible generators use the symmetrized matrix and a symmetric
    eigensolver; others use the dense nonsymmetric solver.
    """
    if not gen.is_irreducible():
        raise ValueError("generator is reducible")
    if len(gen.vertices) < 2:
        raise ValueError("need at least two states")
    q = gen.matrix()
    fgen = gen.to_float()
    mu = invariant_measure(fgen)
    if check_reversibility(fgen, mu):
        root = np.sqrt(np.array([mu[v] for v in gen.vertices]))
        sym = (root[:, None] * q) / root[None, :]
        sym = (sym + sym.T) / 2
        vals = np.sort(-np.linalg.eigvalsh(sym))
        return float(vals[1])
    vals = -np.linalg.eigvals(q)
    order = np.argsort(np.abs(vals))
    rest = vals[order[1:]]
    return float(np.min(rest.real))


@dataclass
class EigenReport:
    gap: float
    reversible: bool
    rows: list[tuple[str, Number, bool]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r[2] for r in self.rows)

    def to_text(self) -> str:
        lines = [f"spectral_gap {self.gap!r}", f"reversible {'yes' if self.reversible else 'no'}"]
        for label, kappa, ok in self.rows:
            lines.append(f"{label} kappa={format_number(kappa)} {'ok' if ok else 'VIOLATED'}")
        return "\n".join(lines) + "\n"


def eigen_vs_certificate(gen: Generator, certs: Sequence[Certificate | Number], tol: float = AUDIT_TOL,
                         strict: bool = True) -> EigenReport:
    """Check that the spectral gap dominates every certified rate."""
    gap = spectral_gap(gen)
    rep = EigenReport(gap, is_reversible(gen))
    for k, c in enumerate(certs):
        kappa = c.kappa if isinstance(c, Certificate) else c
        label = (c.label if isinstance(c, Certificate) and c.label else f"certificate {k}")
        rep.rows.append((label, kappa, gap >= float(kappa) - tol))
    if strict and not rep.ok:
        bad = next(r for r in rep.rows if not r[2])
        raise RuntimeError(f"spectral gap {gap!r} is below the rate {format_number(bad[1])} of {bad[0]}")
    return rep
