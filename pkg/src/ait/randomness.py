"""Finite-string randomness tests in exact rational arithmetic.

A test is stored by its payoff ``2**d(x)`` rather than the deficiency ``d(x)``
so that integrability and probability-bound checks stay exact; deficiencies are
reported as intervals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from ait.bits import EMPTY, BitString, check_bits, format_rational, parse_rational, pow2, strings_of_length, strings_up_to
from ait.codec import tuple_encode
from ait.intervals import DEFAULT_BITS, Interval, log2
from ait.machine import complexity_K


class TestError(ValueError):
    __test__ = False  # keep pytest from collecting it


# -- distributions ---------------------------------------------------------------------


@dataclass(frozen=True)
class DistributionSpec:
    """A probability distribution on a finite set of bit strings.

    ``kind`` is ``"uniform"`` (all strings of length ``n``), ``"bernoulli"``
    (i.i.d. bits with ``P(1) = p`` on length ``n``) or ``"table"``.
    """

    kind: str
    n: int | None = None
    p: Fraction | None = None
    table: Mapping[BitString, Fraction] | None = None

    def __post_init__(self):
        if self.kind in ("uniform", "bernoulli"):
            if self.n is None or self.n < 0:
                raise TestError(f"{self.kind} needs a length n >= 0")
            if self.kind == "bernoulli" and not (self.p is not None and 0 <= self.p <= 1):
                raise TestError("bernoulli needs 0 <= p <= 1")
        elif self.kind == "table":
            if not self.table:
                raise TestError("empty table")
            for x, m in self.table.items():
                check_bits(x)
                if m < 0:
                    raise TestError(f"negative mass at {x!r}")
            total = sum(self.table.values(), Fraction(0))
            if total != 1:
                raise TestError(f"table masses sum to {total}, not 1")
        else:
            raise TestError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def uniform(cls, n: int) -> "DistributionSpec":
        return cls("uniform", n=n)

    @classmethod
    def bernoulli(cls, p: Fraction, n: int) -> "DistributionSpec":
        return cls("bernoulli", n=n, p=Fraction(p))

    @classmethod
    def from_table(cls, table: Mapping[BitString, Fraction]) -> "DistributionSpec":
        return cls("table", table={x: Fraction(m) for x, m in table.items()})

    @property
    def support_length(self) -> int | None:
        if self.n is not None:
            return self.n
        lengths = {len(x) for x in self.table}
        return lengths.pop() if len(lengths) == 1 else None

    def prob(self, x: BitString) -> Fraction:
        if self.kind == "table":
            return self.table.get(x, Fraction(0))
        if len(x) != self.n:
            return Fraction(0)
        if self.kind == "uniform":
            return pow2(-self.n)
        k = x.count("1")
        return self.p**k * (1 - self.p) ** (self.n - k)

    def support(self) -> list[BitString]:
        if self.kind == "table":
            return sorted((x for x, m in self.table.items() if m > 0), key=lambda s: (len(s), s))
        return [x for x in strings_of_length(self.n) if self.prob(x) > 0]

    def items(self) -> Iterable[tuple[BitString, Fraction]]:
        for x in self.support():
            yield x, self.prob(x)

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "n": self.n}
        if self.kind == "bernoulli":
            return {"kind": "bernoulli", "n": self.n, "p": format_rational(self.p)}
        return {"kind": "table", "masses": {x: format_rational(m) for x, m in sorted(self.table.items())}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "DistributionSpec":
        kind = d["kind"]
        if kind == "uniform":
            return cls.uniform(int(d["n"]))
        if kind == "bernoulli":
            return cls.bernoulli(parse_rational(d["p"]), int(d["n"]))
        if kind == "table":
            return cls.from_table({x: parse_rational(v) for x, v in d["masses"].items()})
        raise TestError(f"unknown distribution kind {kind!r}")


@dataclass(frozen=True)
class TestTable:
    """Payoffs ``t(x) = 2**d(x) >= 0`` of a test on strings of length ``n``."""

    __test__ = False

    values: Mapping[BitString, Fraction]
    n: int | None = None

    def __post_init__(self):
        for x, v in self.values.items():
            check_bits(x)
            if v < 0:
                raise TestError(f"negative payoff at {x!r}")
            if self.n is not None and len(x) != self.n:
                raise TestError(f"{x!r} does not have length {self.n}")

    def __call__(self, x: BitString) -> Fraction:
        return self.values[x]

    def to_dict(self) -> dict:
        return {"n": self.n, "values": {x: format_rational(v) for x, v in sorted(self.values.items())}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TestTable":
        return cls({x: parse_rational(v) for x, v in d["values"].items()}, d.get("n"))

    @classmethod
    def constant(cls, n: int, c: Fraction) -> "TestTable":
        return cls({x: Fraction(c) for x in strings_of_length(n)}, n)


def _paired(t: TestTable, P: DistributionSpec) -> list[tuple[Fraction, Fraction]]:
    if t.n is not None and P.support_length is not None and t.n != P.support_length:
        raise TestError(f"test length {t.n} differs from distribution length {P.support_length}")
    out = []
    for x, px in P.items():
        if x not in t.values:
            raise TestError(f"test undefined at support point {x!r}")
        out.append((px, t.values[x]))
    return out


# -- LLN test ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Payoff:
    """A test value: the exact payoff ``2**d`` and an enclosure of ``d``."""

    payoff: Fraction
    d: Interval | None  # None when the payoff is 0 (d = -infinity)


def _payoff(v: Fraction, bits: int) -> Payoff:
    return Payoff(v, log2(v, bits) if v > 0 else None)


def lln_payoff(x: BitString) -> Fraction:
    n = len(x)
    if n == 0:
        raise TestError("the LLN test needs a nonempty string")
    k = x.count("1")
    # Python's Fraction gives 0**0 == 1, matching the convention at k in {0, n}
    return Fraction(k, n) ** k * Fraction(n - k, n) ** (n - k) * 2**n / (n + 1)


def lln_test(x: BitString, bits: int = DEFAULT_BITS) -> Payoff:
    """``d(x) = log P_x(x) + n - log(n + 1)`` with ``P_x`` the empirical Bernoulli law."""
    check_bits(x)
    return _payoff(lln_payoff(x), bits)


def lln_table(n: int) -> TestTable:
    return TestTable({x: lln_payoff(x) for x in strings_of_length(n)}, n)


def lln_expectation(n: int) -> Fraction:
    """``sum_x 2**-n 2**d(x)`` over all strings of length ``n``, grouped by weight."""
    return sum(
        (math.comb(n, k) * Fraction(k, n) ** k * Fraction(n - k, n) ** (n - k) for k in range(n + 1)),
        Fraction(0),
    ) / (n + 1)


# -- test conditions --------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrableVerdict:
    ok: bool
    expectation: Fraction


def integrable_check(t: TestTable, P: DistributionSpec) -> IntegrableVerdict:
    """``sum_x P(x) t(x) <= 1``."""
    e = sum((px * v for px, v in _paired(t, P)), Fraction(0))
    return IntegrableVerdict(e <= 1, e)


@dataclass(frozen=True)
class MLVerdict:
    ok: bool
    failed_at: int | None
    tails: tuple[Fraction, ...]  # P{t > 2**k} for k = 0, 1, ...


def ml_check(t: TestTable, P: DistributionSpec) -> MLVerdict:
    """``P{d > k} < 2**-k`` for every integer ``k >= 0`` (i.e. ``P{t > 2**k} < 2**-k``)."""
    pairs = _paired(t, P)
    top = max((v for _, v in pairs), default=Fraction(0))
    tails = []
    k = 0
    while pow2(k) < top or k == 0:
        tail = sum((px for px, v in pairs if v > pow2(k)), Fraction(0))
        tails.append(tail)
        if not tail < pow2(-k):
            return MLVerdict(False, k, tuple(tails))
        k += 1
    return MLVerdict(True, None, tuple(tails))


class InvariantError(ArithmeticError):
    """An inequality that holds by theorem failed; indicates a bug."""


def markov_tail(P: DistributionSpec, f: TestTable, lam: Fraction) -> Fraction:
    """``P{f > lam * E_P f}``, checked against the bound ``1 / lam``."""
    lam = Fraction(lam)
    if lam <= 0:
        raise TestError("lambda must be positive")
    pairs = _paired(f, P)
    mean = sum((px * v for px, v in pairs), Fraction(0))
    tail = sum((px for px, v in pairs if v > lam * mean), Fraction(0))
    if tail > 1 / lam:
        raise InvariantError(f"Markov bound violated: {tail} > {1 / lam}")
    return tail


# -- complexity-based deficiency ----------------------------------------------------------


def deficiency_bar(
    x: BitString, P: DistributionSpec, L: int, t: int, bits: int = DEFAULT_BITS
) -> Payoff | None:
    """Lower bound ``-log P(x) - K^t(x)`` on the universal integrable test.

    Returns the payoff ``2**-K^t(x) / P(x)``, or None when no program of length
    ``<= L`` prints ``x`` within ``t`` steps.
    """
    px = P.prob(x)
    if px == 0:
        raise TestError(f"P({x!r}) = 0")
    k = complexity_K(x, EMPTY, L, t)
    if k is None:
        return None
    return _payoff(pow2(-k) / px, bits)


# -- Bernoulli tests ---------------------------------------------------------------------


@dataclass(frozen=True)
class BernoulliTestTable:
    values: Mapping[BitString, Fraction]
    n: int

    def __post_init__(self):
        for x in strings_up_to(self.n):
            if x not in self.values:
                raise TestError(f"table lacks a value at {x!r}")
            if self.values[x] < 0:
                raise TestError(f"negative value at {x!r}")

    def __call__(self, x: BitString) -> Fraction:
        return self.values[x]

    def restrict(self, n: int) -> "BernoulliTestTable":
        return BernoulliTestTable({x: v for x, v in self.values.items() if len(x) <= n}, n)

    def to_dict(self) -> dict:
        return {"n": self.n, "values": {x: format_rational(v) for x, v in sorted(self.values.items())}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "BernoulliTestTable":
        return cls({x: parse_rational(v) for x, v in d["values"].items()}, int(d["n"]))

    @classmethod
    def constant(cls, n: int, c: Fraction) -> "BernoulliTestTable":
        return cls({x: Fraction(c) for x in strings_up_to(n)}, n)


@dataclass(frozen=True)
class BernoulliVerdict:
    ok: bool
    violation: str | None = None
    violations: tuple[str, ...] = field(default_factory=tuple)


def bernoulli_validate(f: BernoulliTestTable) -> BernoulliVerdict:
    """Prefix monotonicity and ``sum_{x in B(m,k)} f(x) <= C(m,k)`` for all ``k <= m <= n``."""
    bad = []
    for x in strings_up_to(f.n):
        if x and f(x[:-1]) > f(x):
            bad.append(f"monotonicity: f({x[:-1]!r}) = {f(x[:-1])} > f({x!r}) = {f(x)}")
    for m in range(f.n + 1):
        sums = [Fraction(0)] * (m + 1)
        for x in strings_of_length(m):
            sums[x.count("1")] += f(x)
        for k, s in enumerate(sums):
            if s > math.comb(m, k):
                bad.append(f"class sum: B({m},{k}) totals {s} > {math.comb(m, k)}")
    return BernoulliVerdict(not bad, bad[0] if bad else None, tuple(bad))


def bernoulli_extend(f: BernoulliTestTable) -> BernoulliTestTable:
    """Extend to length ``n + 1`` by ``f(xs) = f(x)``."""
    verdict = bernoulli_validate(f)
    if not verdict.ok:
        raise TestError(f"cannot extend an invalid table: {verdict.violation}")
    values = dict(f.values)
    for x in strings_of_length(f.n):
        values[x + "0"] = values[x + "1"] = f(x)
    return BernoulliTestTable(values, f.n + 1)


def bernoulli_prob(p: Fraction, n: int, k: int) -> Fraction:
    """``C(n,k) p^k (1-p)^(n-k)``."""
    p = Fraction(p)
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


@dataclass(frozen=True)
class GapVerdict:
    ok: bool
    sums: tuple[tuple[Fraction, Fraction], ...]  # (p, partial sum + tail bound)


def gap_check(
    D: Mapping[tuple[int, int], int] | Callable[[int, int], int],
    p_grid: Iterable[Fraction],
    n_max: int,
    tail_bound: Fraction,
) -> GapVerdict:
    """``sum_{n <= n_max} sum_k B_p(n,k) 2**-D(n,k) + tail_bound <= 1`` for every grid ``p``.

    ``tail_bound`` must bound ``sum_{n > n_max} max_k 2**-D(n,k)``.
    """
    get = D if callable(D) else (lambda n, k: D[(n, k)])
    table = {}
    for n in range(1, n_max + 1):
        for k in range(n + 1):
            try:
                table[n, k] = get(n, k)
            except KeyError:
                raise TestError(f"gap function undefined at (n, k) = ({n}, {k})") from None
    sums = []
    for p in p_grid:
        p = Fraction(p)
        s = sum((bernoulli_prob(p, n, k) * pow2(-d) for (n, k), d in table.items()), Fraction(0))
        sums.append((p, s + Fraction(tail_bound)))
    return GapVerdict(all(s <= 1 for _, s in sums), tuple(sums))


def separating_gp(prefix: BitString, p: Fraction) -> int:
    """Largest ``k`` with ``2**k <= |prefix|`` and ``|S_{2**k} - 2**k p| > 2**(0.6 k)``; 0 if none.

    Compared exactly as ``|S - 2**k p|**5 > 2**(3k)``.
    """
    check_bits(prefix)
    p = Fraction(p)
    best = 0
    k = 0
    while (1 << k) <= len(prefix):
        delta = abs(prefix[: 1 << k].count("1") - (1 << k) * p)
        if delta**5 > 2 ** (3 * k):
            best = k
        k += 1
    return best


# -- randomness conservation ---------------------------------------------------------------


def image_measure(fmap: Callable[[BitString], BitString], P: DistributionSpec) -> dict[BitString, Fraction]:
    """``(f*P)(y) = P(f^-1(y))``."""
    out: dict[BitString, Fraction] = {}
    for x, px in P.items():
        try:
            y = fmap(x)
        except Exception as exc:
            raise TestError(f"map undefined at {x!r}: {exc}") from exc
        out[y] = out.get(y, Fraction(0)) + px
    return out


@dataclass
class ConservationReport:
    image: dict[BitString, Fraction]
    pulled_back: dict[BitString, Fraction]  # payoff 2**d_P(x), 0 where K^t(f(x)) is unknown
    expectation: Fraction  # sum_x P(x) 2**d_P(x)
    witness_mass: Fraction  # sum over the image of 2**-K^t(y)
    missing: int  # image points without a witness
    max_gap: Interval | None  # max of dbar_{f*P}(f(x)) - dbar_P(x) where both are defined

    @property
    def ok(self) -> bool:
        return self.expectation <= 1 and self.expectation == self.witness_mass


def conservation_report(
    fmap: Callable[[BitString], BitString], P: DistributionSpec, L: int, t: int, bits: int = DEFAULT_BITS
) -> ConservationReport:
    image = image_measure(fmap, P)
    kt = {y: complexity_K(y, EMPTY, L, t) for y in image}
    pulled: dict[BitString, Fraction] = {}
    gap: Interval | None = None
    for x, px in P.items():
        y = fmap(x)
        ky = kt[y]
        pulled[x] = Fraction(0) if ky is None else pow2(-ky) / image[y]
        kx = complexity_K(x, EMPTY, L, t)
        if ky is not None and kx is not None:
            # dbar_{f*P}(y) - dbar_P(x) = log(P(x) / f*P(y)) + K(x) - K(y)
            g = log2(px / image[y], bits) + (kx - ky)
            gap = g if gap is None else Interval(max(gap.lo, g.lo), max(gap.hi, g.hi))
    expectation = sum((px * pulled[x] for x, px in P.items()), Fraction(0))
    witness_mass = sum((pow2(-k) for k in kt.values() if k is not None), Fraction(0))
    return ConservationReport(
        image, pulled, expectation, witness_mass, sum(1 for k in kt.values() if k is None), gap
    )


def _parity_extend(x: BitString) -> BitString:
    return x + str(x.count("1") % 2)


def _drop_last(x: BitString) -> BitString:
    if not x:
        raise TestError("drop-last is undefined on the empty string")
    return x[:-1]


NAMED_MAPS: dict[str, Callable[[BitString], BitString]] = {
    "identity": lambda x: x,
    "drop-last": _drop_last,
    "parity-extend": _parity_extend,
}


# -- mutual information ---------------------------------------------------------------------


def info_estimate(x: BitString, y: BitString, L: int, t: int) -> int | None:
    """``K^t(x) + K^t(y) - K^t(<x, y>)``; None if any term is undefined."""
    terms = [complexity_K(z, EMPTY, L, t) for z in (x, y, tuple_encode([x, y]))]
    if any(v is None for v in terms):
        return None
    return terms[0] + terms[1] - terms[2]


def info_pair(x: BitString, y: BitString, L: int, t: int) -> tuple[int | None, int | None]:
    """Both argument orders; the joint terms may differ on a bounded machine."""
    return info_estimate(x, y, L, t), info_estimate(y, x, L, t)


def dumps(obj) -> str:
    return json.dumps(obj.to_dict(), sort_keys=True)
