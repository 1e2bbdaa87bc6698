"""Contraction claims with the evidence that produced them."""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph_model import Metric
from .numeric import Number, format_number

KINDS = ("ricci", "cost", "w1")


@dataclass
class Certificate:
    """A claimed bound W_d(P_t(x,.), P_t(y,.)) <= K exp(-kappa t) d(x, y).

    ``kind`` is ``ricci`` for a curvature lower bound (K = 1), ``cost`` for
    a contraction of the transport cost of a non-metric cost function and
    ``w1`` for a decay estimate with a prefactor.
    """

    kappa: Number
    metric: Metric | None = None
    K: Number = 1
    kind: str = "ricci"
    evidence: list[str] = field(default_factory=list)
    label: str = ""
    profile: list[Number] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if self.K < 1:
            raise ValueError("prefactor K must be at least 1")

    def to_text(self, include_table: bool = False) -> str:
        lines = [f"certificate {self.label or 'unnamed'}", f"kind {self.kind}"]
        if self.metric is not None:
            lines.append(f"metric {self.metric.name}")
        if self.profile is not None:
            lines.append("profile " + " ".join(format_number(v) for v in self.profile))
        lines.append(f"kappa {format_number(self.kappa)}")
        lines.append(f"K {format_number(self.K)}")
        for item in self.evidence:
            lines.append(f"evidence {item}")
        if include_table and self.metric is not None:
            for (x, y), v in self.metric.table().items():
                lines.append(f"dist {x} {y} {format_number(v)}")
        return "\n".join(lines) + "\n"
