"""Number handling shared by every module.

Values are either exact (``int`` or ``Fraction``) or ``float``. Arithmetic
mixes them the usual Python way, so a single float input turns the whole
computation into float mode. Comparisons go through :func:`leq` and
:func:`close`, which are exact for rationals and tolerant for floats.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

Number = Union[int, Fraction, float]

FLOAT_TOL = 1e-9


def is_exact(value) -> bool:
    return isinstance(value, Rational) and not isinstance(value, bool)


def all_exact(values: Iterable) -> bool:
    return all(is_exact(v) for v in values)


def parse_number(text: str, mode: str | None = None) -> Number:
    """Parse ``p/q``, integers and decimals exactly; ``mode='float'`` forces floats."""
    text = text.strip()
    if not text:
        raise ValueError("empty number")
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(f"non-finite number: {text!r}")
    if mode == "float":
        return float(value)
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value


def coerce(value: Number, mode: str | None) -> Number:
    if mode == "float":
        return float(value)
    return value


def format_number(value: Number) -> str:
    """Rationals print as ``p/q`` (or ``p``); floats as the shortest round-trip repr."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def div(a: Number, b: Number) -> Number:
    """Quotient that stays exact (and integral when possible) for rationals."""
    if is_exact(a) and is_exact(b):
        q = Fraction(a) / Fraction(b)
        return int(q) if q.denominator == 1 else q
    return a / b


def scale(*values: Number) -> float:
    return max([1.0] + [abs(float(v)) for v in values])


def leq(a: Number, b: Number, tol: float = FLOAT_TOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a <= b
    return float(a) <= float(b) + tol * scale(a, b)


def close(a: Number, b: Number, tol: float = FLOAT_TOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(float(a) - float(b)) <= tol * scale(a, b)


def is_zero(a: Number, tol: float = FLOAT_TOL) -> bool:
    return close(a, 0, tol)


def solve_linear(matrix: Sequence[Sequence[Number]], rhs: Sequence[Number]) -> list[Number]:
    """Solve a square system by Gauss-Jordan elimination.

    Exact inputs give an exact answer. Float inputs use partial pivoting.
    Raises ``ValueError`` on a singular matrix.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("system must be square")
    exact = all_exact(rhs) and all(all_exact(row) for row in matrix)
    zero = Fraction(0) if exact else 0.0
    aug = [[(Fraction(v) if exact else float(v)) for v in row] + [Fraction(r) if exact else float(r)]
           for row, r in zip(matrix, rhs)]
    for col in range(n):
        if exact:
            pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        else:
            pivot = max(range(col, n), key=lambda r: abs(aug[r][col]))
            if abs(aug[pivot][col]) < 1e-300:
                pivot = None
        if pivot is None:
            raise ValueError("singular linear system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        row = [v / p for v in aug[col]]
        aug[col] = row
        for r in range(n):
            if r != col and aug[r][col] != zero:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], row)]
    return [aug[i][n] for i in range(n)]
