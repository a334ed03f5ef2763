import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ait.bits import (
    BitStringError,
    ceil_neg_log2,
    check_bits,
    dyadic,
    format_dyadic,
    format_rational,
    is_dyadic,
    is_prefix,
    parse_dyadic,
    parse_rational,
    strings_up_to,
)
from ait.intervals import Interval, exact_log2, log2

bits = st.text(alphabet="01", max_size=12)
rationals = st.fractions(min_value=Fraction(1, 10**6), max_value=10**6)


def test_check_bits_rejects_other_characters():
    assert check_bits("0101") == "0101"
    with pytest.raises(BitStringError):
        check_bits("012")


def test_strings_up_to_counts_and_order():
    xs = list(strings_up_to(3))
    assert len(xs) == 15
    assert xs[:4] == ["", "0", "1", "00"]


@given(bits, bits)
def test_is_prefix_matches_startswith(a, b):
    assert is_prefix(a, b) == b.startswith(a)


@given(st.integers(-1000, 1000), st.integers(0, 40))
def test_dyadic_roundtrip(m, e):
    q = dyadic(m, e)
    assert is_dyadic(q)
    assert parse_dyadic(format_dyadic(q)) == q


def test_dyadic_format_is_reduced():
    assert format_dyadic(Fraction(3, 8)) == "3/2^3"
    assert format_dyadic(Fraction(1, 2)) == "1/2^1"
    with pytest.raises(ValueError):
        format_dyadic(Fraction(1, 3))


@given(st.fractions())
def test_rational_roundtrip(q):
    s = format_rational(q)
    assert parse_rational(s) == q
    num, den = s.split("/")
    assert math.gcd(int(num), int(den)) == 1


@given(rationals)
def test_ceil_neg_log2_is_least(q):
    c = ceil_neg_log2(q)
    assert Fraction(2) ** -c <= q < Fraction(2) ** -(c - 1)


@given(rationals)
def test_log2_encloses_float_log(q):
    iv = log2(q, 40)
    assert iv.width <= Fraction(1, 2**40)
    ref = math.log2(q.numerator) - math.log2(q.denominator)
    assert float(iv.lo) - 1e-9 <= ref <= float(iv.hi) + 1e-9


@given(st.integers(-60, 60))
def test_log2_exact_on_powers_of_two(e):
    q = Fraction(2) ** e
    assert exact_log2(q) == e
    assert log2(q) == Interval.exact(e)


@given(rationals, rationals)
def test_interval_arithmetic_contains_exact(a, b):
    ia, ib = Interval(a - Fraction(1, 7), a), Interval(b, b + Fraction(1, 9))
    assert (ia + ib).contains(a + b)
    assert (ia * ib).contains(a * b)
    assert (ia - ib).contains(a - b)


def test_interval_comparisons():
    iv = Interval(Fraction(1), Fraction(2))
    assert iv.below(2) and not iv.strictly_below(2)
    assert iv.strictly_above(Fraction(1, 2))
    with pytest.raises(ValueError):
        Interval(Fraction(2), Fraction(1))
