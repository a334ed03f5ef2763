"""Exact utilities for measures on a finite labelled point set: entropy,
relative entropy, expected complexity, and the total variation, Prokhorov and
Wasserstein distances."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from ait.bits import EMPTY, format_rational, parse_rational
from ait.intervals import DEFAULT_BITS, Interval, log2
from ait.machine import complexity_K
from ait.semimeasure import SemimeasureTable, SeqSemimeasureTable

MAX_SUPPORT = 20
NEG_INF = float("-inf")


class MeasureError(ValueError):
    pass


class SizeCapError(MeasureError):
    def __init__(self, size: int, cap: int = MAX_SUPPORT):
        super().__init__(f"{size} support points exceed the enumeration cap of {cap}")
        self.size, self.cap = size, cap


@dataclass(frozen=True)
class FiniteMeasure:
    points: tuple[Hashable, ...]
    masses: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.points) != len(self.masses):
            raise MeasureError("one mass per point")
        if len(set(self.points)) != len(self.points):
            raise MeasureError("duplicate point labels")
        if any(m < 0 for m in self.masses):
            raise MeasureError("negative mass")

    @classmethod
    def of(cls, mapping: Mapping[Hashable, Fraction]) -> "FiniteMeasure":
        return cls(tuple(mapping), tuple(Fraction(m) for m in mapping.values()))

    @classmethod
    def dirac(cls, points: Sequence[Hashable], at: Hashable) -> "FiniteMeasure":
        return cls(tuple(points), tuple(Fraction(int(p == at)) for p in points))

    @property
    def total(self) -> Fraction:
        return sum(self.masses, Fraction(0))

    @property
    def is_probability(self) -> bool:
        return self.total == 1

    def mass(self, point: Hashable) -> Fraction:
        return self.masses[self.points.index(point)]

    def support(self) -> list[int]:
        return [i for i, m in enumerate(self.masses) if m > 0]

    def to_dict(self) -> dict:
        return {"points": list(self.points), "masses": [format_rational(m) for m in self.masses]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FiniteMeasure":
        if isinstance(d.get("masses"), Mapping):
            return cls.of({k: parse_rational(v) for k, v in d["masses"].items()})
        return cls(tuple(d["points"]), tuple(parse_rational(v) for v in d["masses"]))


@dataclass(frozen=True)
class MetricSpec:
    points: tuple[Hashable, ...]
    distance: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.points)
        d = self.distance
        if len(d) != n or any(len(row) != n for row in d):
            raise MeasureError("distance matrix must be square over the points")
        for i in range(n):
            if d[i][i] != 0:
                raise MeasureError(f"nonzero diagonal at {self.points[i]!r}")
            for j in range(n):
                if d[i][j] < 0 or d[i][j] != d[j][i]:
                    raise MeasureError("distances must be nonnegative and symmetric")
                if i != j and d[i][j] == 0:
                    raise MeasureError("distinct points at distance zero")
                for k in range(n):
                    if d[i][k] > d[i][j] + d[j][k]:
                        raise MeasureError(f"triangle inequality fails at {(i, j, k)}")

    @classmethod
    def from_rows(cls, points: Sequence[Hashable], rows: Sequence[Sequence]) -> "MetricSpec":
        return cls(tuple(points), tuple(tuple(Fraction(v) for v in row) for row in rows))

    @classmethod
    def discrete(cls, points: Sequence[Hashable]) -> "MetricSpec":
        n = len(points)
        return cls.from_rows(points, [[int(i != j) for j in range(n)] for i in range(n)])

    @property
    def diameter(self) -> Fraction:
        return max((v for row in self.distance for v in row), default=Fraction(0))

    def to_dict(self) -> dict:
        return {"points": list(self.points), "distance": [[format_rational(v) for v in row] for row in self.distance]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricSpec":
        return cls.from_rows(d["points"], [[parse_rational(v) for v in row] for row in d["distance"]])


def _same_points(P: FiniteMeasure, Q: FiniteMeasure) -> None:
    if P.points != Q.points:
        raise MeasureError("measures live on different point sets")


def _require_probability(*ms: FiniteMeasure) -> None:
    for m in ms:
        if not m.is_probability:
            raise MeasureError(f"total mass {m.total} is not 1")


# -- information quantities -----------------------------------------------------------------


def entropy(P: FiniteMeasure, bits: int = DEFAULT_BITS) -> Interval:
    """Enclosure of ``-sum p log2 p`` (``0 log 0 = 0``), width at most ``2**-bits``."""
    _require_probability(P)
    terms = [m for m in P.masses if m > 0]
    # per-term precision so the summed width stays within 2**-bits
    b = bits + max(len(terms), 1).bit_length()
    total = Interval.exact(0)
    for m in terms:
        total = total + (-log2(m, b)) * m
    return total


def relative_entropy(P: FiniteMeasure, Q: FiniteMeasure, bits: int = DEFAULT_BITS) -> Interval | float:
    """``-sum mu(x) log2(mu(x) / nu(x))``, or ``-inf`` when ``mu`` is not absolutely continuous."""
    _same_points(P, Q)
    terms = []
    for mu, nu in zip(P.masses, Q.masses):
        if mu == 0:
            continue
        if nu == 0:
            return NEG_INF
        terms.append((mu, mu / nu))
    b = bits + max(len(terms), 1).bit_length()
    total = Interval.exact(0)
    for mu, ratio in terms:
        total = total - log2(ratio, b) * mu
    if P.total >= Q.total and not total.lo <= 0:
        raise ArithmeticError("relative entropy enclosure lies above zero")
    return total


@dataclass(frozen=True)
class KLVerdict:
    status: str  # "zero", "negative", "-inf" or "inconclusive"
    value: Interval | float
    bits: int


def kl_verdict(P: FiniteMeasure, Q: FiniteMeasure, bits: int = DEFAULT_BITS, max_bits: int = 4096) -> KLVerdict:
    """Decide the sign of the relative entropy, raising precision until the enclosure is conclusive."""
    while True:
        v = relative_entropy(P, Q, bits)
        if isinstance(v, float):
            return KLVerdict("-inf", v, bits)
        if v.is_exact and v.lo == 0:
            return KLVerdict("zero", v, bits)
        if v.strictly_below(0):
            return KLVerdict("negative", v, bits)
        if bits >= max_bits:
            return KLVerdict("inconclusive", v, bits)
        bits *= 2


@dataclass(frozen=True)
class ExpectedComplexity:
    status: str  # "pass", "fail", "inconclusive" or "insufficient budget"
    value: Fraction | None
    entropy: Interval
    missing: tuple[str, ...] = ()


def expected_complexity(P: FiniteMeasure, L: int, t: int, bits: int = DEFAULT_BITS) -> ExpectedComplexity:
    """``sum P(x) K^t(x)`` over a measure on bit strings, compared against the entropy.

    The witness lengths form a prefix code, so the entropy never exceeds the
    expectation; the comparison is made against the entropy enclosure.
    """
    H = entropy(P, bits)
    missing = []
    total = Fraction(0)
    for x, m in zip(P.points, P.masses):
        if m == 0:
            continue
        k = complexity_K(x, EMPTY, L, t)
        if k is None:
            missing.append(x)
        else:
            total += m * k
    if missing:
        return ExpectedComplexity("insufficient budget", None, H, tuple(missing))
    if H.below(total):
        status = "pass"
    elif H.strictly_above(total):
        status = "fail"
    else:
        status = "inconclusive"
    return ExpectedComplexity(status, total, H)


# -- distances ---------------------------------------------------------------------------------


def tv_distance(P: FiniteMeasure, Q: FiniteMeasure) -> Fraction:
    """``sum |P(x) - Q(x)|`` (ranges over ``[0, 2]`` for probability measures)."""
    _same_points(P, Q)
    return sum((abs(a - b) for a, b in zip(P.masses, Q.masses)), Fraction(0))


def _check_metric(P: FiniteMeasure, m: MetricSpec) -> None:
    if m.points != P.points:
        raise MeasureError("metric and measures live on different point sets")


def prokhorov_one_sided(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec) -> Fraction:
    """Least ``eps`` with ``P(A) <= Q(A^eps) + eps`` for every ``A`` (closed neighbourhoods).

    Only subsets of the support of ``P`` need checking. For a fixed ``A`` the
    least feasible ``eps`` is ``min over levels r of max(r, P(A) - Q(A^r))``,
    where ``r`` runs over the distances from ``A`` to the points.
    """
    support = P.support()
    if len(support) > MAX_SUPPORT:
        raise SizeCapError(len(support))
    n = len(P.points)
    d = m.distance
    worst = Fraction(0)
    for mask in range(1, 1 << len(support)):
        members = [support[i] for i in range(len(support)) if mask >> i & 1]
        pa = sum((P.masses[i] for i in members), Fraction(0))
        if pa <= worst:
            continue
        to_a = [min(d[x][a] for a in members) for x in range(n)]
        best = pa
        for r in sorted(set(to_a)):
            qa = sum((Q.masses[x] for x in range(n) if to_a[x] <= r), Fraction(0))
            best = min(best, max(r, pa - qa))
        worst = max(worst, best)
    return worst


@dataclass(frozen=True)
class ProkhorovReport:
    value: Fraction
    forward: Fraction
    backward: Fraction


def prokhorov_report(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec) -> ProkhorovReport:
    _same_points(P, Q)
    _check_metric(P, m)
    _require_probability(P, Q)
    fwd = prokhorov_one_sided(P, Q, m)
    bwd = prokhorov_one_sided(Q, P, m)
    return ProkhorovReport(max(fwd, bwd), fwd, bwd)


def prokhorov(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec) -> Fraction:
    """Symmetrised Prokhorov distance: the larger of the two one-sided values."""
    return prokhorov_report(P, Q, m).value


# -- optimal transport ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportPlan:
    cost: Fraction
    flow: dict[tuple[int, int], Fraction]
    source_potential: tuple[Fraction, ...]  # f with f(i) - g(j) <= d(i, j)
    target_potential: tuple[Fraction, ...]


def _bellman_ford(nodes: int, arcs: list[tuple[int, int, Fraction]], sources: Sequence[int]) -> list:
    dist: list = [None] * nodes
    pred: list = [None] * nodes
    for s in sources:
        dist[s] = Fraction(0)
    for _ in range(nodes):
        changed = False
        for u, v, c in arcs:
            if dist[u] is not None and (dist[v] is None or dist[u] + c < dist[v]):
                dist[v] = dist[u] + c
                pred[v] = u
                changed = True
        if not changed:
            return [dist, pred]
    raise ArithmeticError("negative cycle in residual network")


def transport(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec) -> TransportPlan:
    """Exact optimal coupling by successive shortest augmenting paths on rationals.

    Returns the plan together with optimal dual potentials, which certify the
    cost: ``f(i) - g(j) <= d(i, j)`` everywhere, with equality on the flow.
    """
    _same_points(P, Q)
    _check_metric(P, m)
    _require_probability(P, Q)
    src = P.support()
    dst = Q.support()
    if max(len(src), len(dst)) > MAX_SUPPORT:
        raise SizeCapError(max(len(src), len(dst)))
    a, b = len(src), len(dst)
    d = [[m.distance[i][j] for j in dst] for i in src]
    supply = [P.masses[i] for i in src]
    demand = [Q.masses[j] for j in dst]
    flow = [[Fraction(0)] * b for _ in range(a)]
    # node ids: supply i -> i, demand j -> a + j
    while any(supply):
        arcs = [(i, a + j, d[i][j]) for i in range(a) for j in range(b)]
        arcs += [(a + j, i, -d[i][j]) for i in range(a) for j in range(b) if flow[i][j] > 0]
        dist, pred = _bellman_ford(a + b, arcs, [i for i in range(a) if supply[i] > 0])
        end = min((j for j in range(b) if demand[j] > 0 and dist[a + j] is not None), key=lambda j: dist[a + j])
        path = [a + end]
        while pred[path[-1]] is not None:
            path.append(pred[path[-1]])
        path.reverse()
        start = path[0]
        amount = min(supply[start], demand[end])
        for u, v in zip(path, path[1:]):
            if u >= a:  # backward arc: cancel flow on (v, u - a)
                amount = min(amount, flow[v][u - a])
        for u, v in zip(path, path[1:]):
            if u < a:
                flow[u][v - a] += amount
            else:
                flow[v][u - a] -= amount
        supply[start] -= amount
        demand[end] -= amount
    # potentials from shortest distances in the final residual network
    arcs = [(i, a + j, d[i][j]) for i in range(a) for j in range(b)]
    arcs += [(a + j, i, -d[i][j]) for i in range(a) for j in range(b) if flow[i][j] > 0]
    phi, _ = _bellman_ford(a + b, arcs, list(range(a + b)))
    f = tuple(-phi[i] for i in range(a))
    g = tuple(-phi[a + j] for j in range(b))
    plan = {(src[i], dst[j]): flow[i][j] for i in range(a) for j in range(b) if flow[i][j] > 0}
    cost = sum((flow[i][j] * d[i][j] for i in range(a) for j in range(b)), Fraction(0))
    return TransportPlan(cost, plan, f, g)


def wasserstein(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec) -> Fraction:
    """Optimal transport cost ``min over couplings of sum pi(x, y) d(x, y)``."""
    return transport(P, Q, m).cost


def dual_certificate_ok(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec, plan: TransportPlan) -> bool:
    """Dual feasibility plus equal objective values (so the plan is optimal)."""
    src, dst = P.support(), Q.support()
    f, g = plan.source_potential, plan.target_potential
    for ii, i in enumerate(src):
        for jj, j in enumerate(dst):
            if f[ii] - g[jj] > m.distance[i][j]:
                return False
    dual = sum((P.masses[i] * f[ii] for ii, i in enumerate(src)), Fraction(0)) - sum(
        (Q.masses[j] * g[jj] for jj, j in enumerate(dst)), Fraction(0)
    )
    return dual == plan.cost


# -- semimeasure validation ------------------------------------------------------------------------


@dataclass(frozen=True)
class SemimeasureVerdict:
    ok: bool
    violation: str | None = None


def semimeasure_validate(table: SemimeasureTable | SeqSemimeasureTable | Mapping) -> SemimeasureVerdict:
    """Discrete tables: total mass at most 1. Sequence tables: ``mu(x) >= mu(x0) + mu(x1)``."""
    if isinstance(table, SemimeasureTable):
        masses, residual, seq = table.masses, table.residual, False
    elif isinstance(table, SeqSemimeasureTable):
        masses, residual, seq = table.masses, Fraction(0), True
    else:
        masses, residual, seq = {k: Fraction(v) for k, v in table.items()}, Fraction(0), False
    if any(v < 0 for v in masses.values()):
        return SemimeasureVerdict(False, "negative mass")
    if not seq:
        total = sum(masses.values(), Fraction(0)) + residual
        return SemimeasureVerdict(total <= 1, None if total <= 1 else f"total mass {total} exceeds 1")
    if masses.get(EMPTY, Fraction(0)) > 1:
        return SemimeasureVerdict(False, "mass of the empty prefix exceeds 1")
    parents = {x[:-1] for x in masses if x}
    for x in sorted(parents, key=lambda s: (len(s), s)):
        children = masses.get(x + "0", Fraction(0)) + masses.get(x + "1", Fraction(0))
        if masses.get(x, Fraction(0)) < children:
            return SemimeasureVerdict(False, f"children of {x!r} carry {children} > {masses.get(x, Fraction(0))}")
    return SemimeasureVerdict(True)


def dumps(obj) -> str:
    return json.dumps(obj.to_dict(), sort_keys=True)
