"""Outward-rounded real intervals with exact rational endpoints.

Logarithms are the only irrational quantities in the package. They are
evaluated with mpmath's interval kernels at an explicit working precision and
the endpoints are converted back to ``Fraction``, so every comparison made
against an interval is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from mpmath.libmp import from_int, from_rational, libmpi, round_ceiling, round_floor, to_rational

Number = Union[int, Fraction]

DEFAULT_BITS = 30


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, q: Number) -> "Interval":
        q = Fraction(q)
        return cls(q, q)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __add__(self, other: "Interval | Number") -> "Interval":
        o = _lift(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other: "Interval | Number") -> "Interval":
        return self + (-_lift(other))

    def __rsub__(self, other: Number) -> "Interval":
        return _lift(other) - self

    def __mul__(self, other: "Interval | Number") -> "Interval":
        o = _lift(other)
        products = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def contains(self, q: Number) -> bool:
        return self.lo <= q <= self.hi

    def below(self, q: Number) -> bool:
        """Every point of the interval is ``<= q``."""
        return self.hi <= q

    def strictly_below(self, q: Number) -> bool:
        return self.hi < q

    def above(self, q: Number) -> bool:
        return self.lo >= q

    def strictly_above(self, q: Number) -> bool:
        return self.lo > q

    def round_out(self, bits: int) -> "Interval":
        """Widen to the enclosing interval with endpoints on the grid ``2**-bits``."""
        scale = 1 << bits
        lo = Fraction(math.floor(self.lo * scale), scale)
        hi = Fraction(math.ceil(self.hi * scale), scale)
        return Interval(lo, hi)

    def __float__(self) -> float:
        return float(self.mid)

    def __str__(self) -> str:
        if self.is_exact:
            return str(self.lo)
        return f"[{float(self.lo):.12g}, {float(self.hi):.12g}]"


def _lift(x: "Interval | Number") -> Interval:
    return x if isinstance(x, Interval) else Interval.exact(x)


def interval_sum(xs: Iterable[Interval]) -> Interval:
    total = Interval.exact(0)
    for x in xs:
        total = total + x
    return total


def _mpi(q: Fraction, prec: int):
    return (
        from_rational(q.numerator, q.denominator, prec, round_floor),
        from_rational(q.numerator, q.denominator, prec, round_ceiling),
    )


def _to_interval(v) -> Interval:
    a, b = (Fraction(*to_rational(e)) for e in v)
    return Interval(a, b)


def exact_log2(q: Fraction) -> int | None:
    """``log2(q)`` when ``q`` is an integral power of two, else None."""
    q = Fraction(q)
    if q <= 0:
        return None
    n, d = q.numerator, q.denominator
    if n & (n - 1) == 0 and d & (d - 1) == 0:
        return n.bit_length() - d.bit_length()
    return None


def log2(q: Number, bits: int = DEFAULT_BITS) -> Interval:
    """Enclosure of ``log2(q)`` of width at most ``2**-bits``; exact for powers of two."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("log2 of a nonpositive number")
    e = exact_log2(q)
    if e is not None:
        return Interval.exact(e)
    # magnitude of the result adds to the required mantissa precision
    prec = bits + 20 + max(q.numerator.bit_length(), q.denominator.bit_length()).bit_length()
    while True:
        lg = libmpi.mpi_log(_mpi(q, prec), prec)
        ln2 = libmpi.mpi_log((from_int(2), from_int(2)), prec)
        out = _to_interval(libmpi.mpi_div(lg, ln2, prec))
        if out.width <= Fraction(1, 1 << bits):
            return out
        prec += 32


def log2_interval(x: Interval, bits: int = DEFAULT_BITS) -> Interval:
    """Enclosure of ``log2`` over a positive interval (log is increasing)."""
    if x.lo <= 0:
        raise ValueError("log2 of an interval touching zero")
    return Interval(log2(x.lo, bits).lo, log2(x.hi, bits).hi)


def reciprocal(x: Interval) -> Interval:
    if x.lo <= 0 <= x.hi:
        raise ZeroDivisionError("reciprocal of an interval containing zero")
    return Interval(1 / x.hi, 1 / x.lo)
