"""Seeded random instances for property checks.

Every generator takes a :class:`random.Random` so runs are reproducible from
a single integer seed.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from ait.bits import pow2, strings_of_length, strings_up_to
from ait.codec import kraft_total
from ait.measures import FiniteMeasure, MetricSpec
from ait.randomness import BernoulliTestTable, DistributionSpec, TestTable
from ait.semimeasure import EnumerationStream


def kraft_lengths(rng: random.Random, max_count: int = 12, max_len: int = 10) -> list[int]:
    """A multiset of codeword lengths with Kraft sum at most 1."""
    lengths = [rng.randint(0, max_len) for _ in range(rng.randint(1, max_count))]
    while kraft_total(lengths) > 1:
        i = rng.randrange(len(lengths))
        lengths[i] += 1
    return lengths


def invalid_kraft_lengths(rng: random.Random, max_len: int = 6) -> list[int]:
    """A multiset whose Kraft sum exceeds 1."""
    n = rng.randint(1, max_len)
    return [n] * ((1 << n) + rng.randint(1, 4))


def weights(rng: random.Random, max_count: int = 10) -> list[Fraction]:
    """Positive rationals with sum at most 1."""
    parts = [rng.randint(1, 50) for _ in range(rng.randint(1, max_count))]
    denom = sum(parts) + rng.choice([0, 0, rng.randint(1, 100)])
    return [Fraction(a, denom) for a in parts]


def stream(rng: random.Random, max_items: int = 40, max_k: int = 9) -> EnumerationStream:
    """Pairs ``(z, k)`` with ``sum 2**-k < 2``; labels repeat on purpose."""
    labels = [z for z in strings_up_to(3)]
    items = []
    mass = Fraction(0)
    for _ in range(rng.randint(1, max_items)):
        k = rng.randint(0, max_k)
        if mass + pow2(-k) >= 2:
            continue
        mass += pow2(-k)
        items.append((rng.choice(labels), k))
    return EnumerationStream(tuple(items))


def probability(rng: random.Random, size: int, zeros: bool = True) -> list[Fraction]:
    """A probability vector of the given size with small denominators."""
    while True:
        raw = [rng.randint(0 if zeros else 1, 6) for _ in range(size)]
        if sum(raw):
            return [Fraction(a, sum(raw)) for a in raw]


def measure_pair(rng: random.Random, size: int) -> tuple[FiniteMeasure, FiniteMeasure]:
    points = tuple(f"x{i}" for i in range(size))
    return FiniteMeasure(points, tuple(probability(rng, size))), FiniteMeasure(points, tuple(probability(rng, size)))


def metric(rng: random.Random, points: tuple) -> MetricSpec:
    """Shortest-path closure of random positive rational edge weights."""
    n = len(points)
    d = [[Fraction(0) if i == j else Fraction(rng.randint(1, 8), 4) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            d[i][j] = d[j][i]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return MetricSpec.from_rows(points, d)


def integrable_table(rng: random.Random, P: DistributionSpec) -> TestTable:
    """A random nonnegative table rescaled to expectation at most 1."""
    support = P.support()
    raw = {x: Fraction(rng.randint(0, 20)) for x in support}
    e = sum((P.prob(x) * v for x, v in raw.items()), Fraction(0))
    scale = Fraction(rng.randint(1, 10), 10) / e if e else Fraction(1)
    return TestTable({x: v * scale for x, v in raw.items()}, P.support_length)


def bernoulli_table(rng: random.Random, n: int) -> BernoulliTestTable:
    """A valid combinatorial Bernoulli test on strings of length ``<= n``.

    Level ``m`` starts as the monotone extension of level ``m - 1`` and then
    spends a random part of each class's slack ``C(m, k) - sum`` on random members.
    """
    values = {"": Fraction(rng.randint(0, 4), 4)}
    for m in range(1, n + 1):
        level = {x: values[x[:-1]] for x in strings_of_length(m)}
        by_class: dict[int, list[str]] = {}
        for x in level:
            by_class.setdefault(x.count("1"), []).append(x)
        for k, members in by_class.items():
            slack = math.comb(m, k) - sum(level[x] for x in members)
            for _ in range(rng.randint(0, 2)):
                if slack <= 0:
                    break
                x = rng.choice(members)
                bump = slack * Fraction(rng.randint(1, 4), 4)
                level[x] += bump
                slack -= bump
        values.update(level)
    return BernoulliTestTable(values, n)
