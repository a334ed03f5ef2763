"""Bounded algorithmic probability: ``m^t``, ``Omega^t``, mixtures, the
interval code built from an enumeration of lower bounds, and the monotone
machine's ``M^t`` / ``KM^t``."""

from __future__ import annotations

import functools
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Hashable, Mapping, Sequence

from ait.bits import EMPTY, BitString, check_bits, format_dyadic, is_dyadic, parse_dyadic, pow2
from ait.codec import CodeBook, leftmost_largest_subinterval
from ait.intervals import DEFAULT_BITS, Interval, log2
from ait.machine import Mode, enumerate_programs


class SemimeasureError(ValueError):
    pass


@dataclass(frozen=True)
class SemimeasureTable:
    masses: Mapping[BitString, Fraction]
    residual: Fraction = Fraction(0)

    def __post_init__(self):
        if any(m < 0 for m in self.masses.values()) or self.residual < 0:
            raise SemimeasureError("negative mass")
        if self.total + self.residual > 1:
            raise SemimeasureError(f"total mass {self.total + self.residual} exceeds 1")

    @property
    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def __call__(self, x: BitString) -> Fraction:
        return self.masses.get(x, Fraction(0))

    def to_json(self) -> str:
        return json.dumps({x: format_dyadic(m) for x, m in sorted(self.masses.items())}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SemimeasureTable":
        return cls({check_bits(x): parse_dyadic(v) for x, v in json.loads(text).items()})


@dataclass(frozen=True)
class SeqSemimeasureTable:
    """Masses on prefixes of infinite sequences."""

    masses: Mapping[BitString, Fraction] = field(default_factory=dict)

    def __call__(self, x: BitString) -> Fraction:
        return self.masses.get(x, Fraction(0))


# -- m^t and Omega^t ---------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _discrete_masses(L: int, t: int, condition: BitString) -> dict[BitString, Fraction]:
    masses: dict[BitString, Fraction] = defaultdict(Fraction)
    cache = enumerate_programs(Mode.SELF_DELIM, L, t, condition)
    for p in cache.domain:
        masses[cache.entries[p].output] += pow2(-len(p))
    return dict(masses)


def m_t(x: BitString, L: int, t: int, condition: BitString = EMPTY) -> Fraction:
    """``sum 2**-|p|`` over domain programs of length ``<= L`` printing ``x`` within ``t`` steps."""
    return _discrete_masses(L, t, condition).get(x, Fraction(0))


def m_t_table(L: int, t: int, condition: BitString = EMPTY) -> SemimeasureTable:
    masses = dict(_discrete_masses(L, t, condition))
    return SemimeasureTable(masses, 1 - sum(masses.values(), Fraction(0)))


def omega_t(L: int, t: int) -> Fraction:
    """Bounded halting probability of the self-delimiting machine."""
    cache = enumerate_programs(Mode.SELF_DELIM, L, t)
    return sum((pow2(-len(p)) for p in cache.domain), Fraction(0))


def mixture(tables: Sequence[SemimeasureTable], weights: Sequence[Fraction]) -> SemimeasureTable:
    """Pointwise ``sum_i weights[i] * tables[i](x)``."""
    if len(tables) != len(weights):
        raise SemimeasureError("one weight per table")
    ws = [Fraction(w) for w in weights]
    if any(w < 0 for w in ws):
        raise SemimeasureError("negative weight")
    if sum(ws, Fraction(0)) > 1:
        raise SemimeasureError(f"weight sum {sum(ws)} exceeds 1")
    masses: dict[BitString, Fraction] = defaultdict(Fraction)
    for tab, w in zip(tables, ws):
        for x, m in tab.masses.items():
            masses[x] += w * m
    residual = sum((w * tab.residual for tab, w in zip(tables, ws)), Fraction(0))
    return SemimeasureTable(dict(masses), residual)


# -- the coding construction -------------------------------------------------------------


@dataclass(frozen=True)
class EnumerationStream:
    """Pairs ``(z_t, k_t)`` with ``sum_t 2**-k_t < 2``; the ``z_t`` are opaque labels."""

    items: tuple[tuple[Hashable, int], ...]

    def __post_init__(self):
        for _, k in self.items:
            if not isinstance(k, int) or k < 0:
                raise SemimeasureError(f"bad exponent {k!r}")
        if self.mass >= 2:
            raise SemimeasureError(f"stream mass {self.mass} is not below 2")

    @property
    def mass(self) -> Fraction:
        return sum((pow2(-k) for _, k in self.items), Fraction(0))

    @classmethod
    def from_file(cls, path: str | Path) -> "EnumerationStream":
        items = []
        for line in Path(path).read_text().splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            z, k = line.split("\t")
            items.append((z, int(k)))
        return cls(tuple(items))


def coding_intervals(stream: EnumerationStream) -> list[tuple[BitString, BitString]]:
    """Per stream item, ``(z_t, word)`` where ``word`` is the largest binary
    interval inside the ``t``-th consecutive interval of length ``2**-(k_t+1)``."""
    out = []
    left = Fraction(0)
    for z, k in stream.items:
        width = pow2(-k - 1)
        out.append((z, leftmost_largest_subinterval(left, left + width, 2)))
        left += width
    return out


def coding_code(stream: EnumerationStream) -> CodeBook:
    """Prefix code over the distinct ``z`` values, keeping each one's shortest word."""
    best: dict[BitString, BitString] = {}
    for z, w in coding_intervals(stream):
        if z not in best or len(w) < len(best[z]):
            best[z] = w
    return CodeBook(tuple(best.values()), tuple(best))


# -- monotone machine ---------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _monotone_masses(L: int, t: int) -> dict[BitString, Fraction]:
    cache = enumerate_programs(Mode.MONOTONE, L, t)
    masses: dict[BitString, Fraction] = defaultdict(Fraction)
    for p, o in cache.entries.items():
        # p is minimal for exactly the prefixes of its output that its parent did not reach
        start = len(cache.entries[p[:-1]].output) + 1 if p else 0
        w = pow2(-len(p))
        for j in range(start, len(o.output) + 1):
            masses[o.output[:j]] += w
    return dict(masses)


def monotone_m(x: BitString, L: int, t: int) -> Fraction:
    """Probability (over programs of length ``<= L``) that the monotone output extends ``x``."""
    return _monotone_masses(L, t).get(x, Fraction(0))


def km(x: BitString, L: int, t: int, bits: int = DEFAULT_BITS) -> Interval | None:
    """``-log2 monotone_m(x)``; None when the mass is zero."""
    m = monotone_m(x, L, t)
    return None if m == 0 else -log2(m, bits)


def monotone_table(L: int, t: int, depth: int) -> SeqSemimeasureTable:
    masses = _monotone_masses(L, t)
    return SeqSemimeasureTable({x: m for x, m in masses.items() if len(x) <= depth})


def uniform_cylinder(x: BitString) -> Fraction:
    return pow2(-len(x))


def bernoulli_cylinder(p: Fraction) -> Callable[[BitString], Fraction]:
    p = Fraction(p)

    def measure(x: BitString) -> Fraction:
        k = x.count("1")
        return p**k * (1 - p) ** (len(x) - k)

    return measure


@dataclass(frozen=True)
class DPrimeBound:
    ratio: Fraction
    at: int
    log2: Interval


def seq_test_dprime(
    prefix: BitString, P: Callable[[BitString], Fraction], L: int, t: int, bits: int = DEFAULT_BITS
) -> DPrimeBound:
    """``max_{n <= |prefix|} log2(M^t(prefix[:n]) / P(prefix[:n]))``.

    Since ``M^t <= M`` this is a lower bound on the sequence test for every
    extension of ``prefix``.
    """
    best, at = Fraction(0), 0
    for n in range(len(prefix) + 1):
        y = prefix[:n]
        py = Fraction(P(y))
        if py <= 0:
            raise SemimeasureError(f"prefix {y!r} has probability zero")
        r = monotone_m(y, L, t) / py
        if r > best:
            best, at = r, n
    return DPrimeBound(best, at, log2(best, bits))


def is_dyadic_table(table: SemimeasureTable) -> bool:
    return all(is_dyadic(m) for m in table.masses.values())
