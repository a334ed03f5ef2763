"""Bit strings, exact dyadic rationals, and their text forms.

Bit strings are plain ``str`` objects over the alphabet ``{'0', '1'}``; the
empty string is the empty word. Dyadic rationals are ``Fraction`` values whose
denominator is a power of two.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterator

BitString = str
EMPTY: BitString = ""


class BitStringError(ValueError):
    pass


def check_bits(x: str) -> BitString:
    if not isinstance(x, str) or x.strip("01"):
        raise BitStringError(f"not a bit string: {x!r}")
    return x


def is_prefix(a: BitString, b: BitString) -> bool:
    """True if ``a`` is a (not necessarily proper) prefix of ``b``."""
    return b.startswith(a)


def strings_of_length(n: int) -> Iterator[BitString]:
    """All strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield EMPTY
        return
    for t in itertools.product("01", repeat=n):
        yield "".join(t)


def strings_up_to(n: int) -> Iterator[BitString]:
    """All strings of length ``<= n``, shortest first."""
    for m in range(n + 1):
        yield from strings_of_length(m)


def ones(x: BitString) -> int:
    return x.count("1")


# -- dyadic rationals ---------------------------------------------------------


def is_dyadic(q: Fraction) -> bool:
    d = Fraction(q).denominator
    return d & (d - 1) == 0


def dyadic(m: int, e: int) -> Fraction:
    """The dyadic rational ``m / 2**e``."""
    return Fraction(m, 1 << e) if e >= 0 else Fraction(m << -e)


def pow2(e: int) -> Fraction:
    """Exact ``2**e`` for any integer ``e``."""
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


def ceil_neg_log2(q: Fraction) -> int:
    """Smallest integer ``c`` with ``2**-c <= q``; requires ``q > 0``."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("ceil_neg_log2 needs a positive argument")
    # 2**-c <= q  <=>  den <= num * 2**c
    c = q.denominator.bit_length() - q.numerator.bit_length() - 1
    while pow2(-c) > q:
        c += 1
    while pow2(-(c - 1)) <= q:
        c -= 1
    return c


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(s: str | int | Fraction) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    return Fraction(s.strip())


def format_dyadic(q: Fraction) -> str:
    q = Fraction(q)
    if not is_dyadic(q):
        raise ValueError(f"{q} is not dyadic")
    return f"{q.numerator}/2^{q.denominator.bit_length() - 1}"


def parse_dyadic(s: str) -> Fraction:
    num, _, den = s.strip().partition("/")
    if not den:
        return Fraction(int(num))
    if not den.startswith("2^"):
        raise ValueError(f"malformed dyadic {s!r}")
    return dyadic(int(num), int(den[2:]))
