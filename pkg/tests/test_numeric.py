from __future__ import annotations

from fractions import Fraction

import pytest

from jumpcurv.numeric import close, div, format_number, leq, parse_number, solve_linear


def test_parse_exact_and_float():
    assert parse_number("3/4") == Fraction(3, 4)
    assert parse_number("0.25") == Fraction(1, 4)
    assert parse_number("7") == 7 and isinstance(parse_number("7"), int)
    assert parse_number("1e-3", "float") == 0.001
    with pytest.raises(ValueError):
        parse_number("")
    with pytest.raises(ValueError):
        parse_number("inf")


def test_format_round_trip():
    assert format_number(Fraction(6, 4)) == "3/2"
    assert format_number(Fraction(4, 2)) == "2"
    x = 0.1 + 0.2
    assert float(format_number(x)) == x


def test_div_stays_exact():
    assert div(1, 3) == Fraction(1, 3)
    assert div(4, 2) == 2 and isinstance(div(4, 2), int)
    assert isinstance(div(1.0, 3), float)


def test_comparisons():
    assert leq(Fraction(1, 3), Fraction(1, 3))
    assert not leq(Fraction(1, 3) + Fraction(1, 10**30), Fraction(1, 3))
    assert leq(1 + 1e-12, 1)
    assert close(0.1 + 0.2, 0.3)


def test_solve_linear_exact():
    sol = solve_linear([[2, 1], [1, 3]], [3, 5])
    assert sol == [Fraction(4, 5), Fraction(7, 5)]
    with pytest.raises(ValueError):
        solve_linear([[1, 2], [2, 4]], [1, 2])
