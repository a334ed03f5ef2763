"""Brute-force reference implementations used to cross-check the exact solvers.

They share no code with :mod:`ait.measures` beyond the data types, and are
only meant for a handful of points.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from ait.measures import FiniteMeasure, MetricSpec


def _subset_masses(mu: FiniteMeasure) -> list[Fraction]:
    n = len(mu.points)
    return [sum((mu.masses[i] for i in range(n) if mask >> i & 1), Fraction(0)) for mask in range(1 << n)]


def prokhorov_brute(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec) -> Fraction:
    """Symmetrised Prokhorov distance by checking every subset at every candidate ``eps``.

    The infimum is attained at a distance value or at ``P(A) - Q(B)`` for
    some subsets ``A``, ``B``, so scanning that finite candidate set suffices.
    """
    n = len(P.points)
    d = m.distance
    mp, mq = _subset_masses(P), _subset_masses(Q)
    candidates = {Fraction(0), Fraction(1)} | {v for row in d for v in row}
    candidates |= {a - b for a in mp for b in mq if 0 < a - b < 1}
    candidates |= {a - b for a in mq for b in mp if 0 < a - b < 1}

    def neighbourhood(mask: int, eps: Fraction) -> int:
        out = 0
        for x in range(n):
            if any(mask >> a & 1 and d[x][a] <= eps for a in range(n)):
                out |= 1 << x
        return out

    def feasible(eps: Fraction) -> bool:
        for mask in range(1 << n):
            nb = neighbourhood(mask, eps)
            if mp[mask] > mq[nb] + eps or mq[mask] > mp[nb] + eps:
                return False
        return True

    ordered = sorted(c for c in candidates if 0 <= c <= 1)
    lo, hi = 0, len(ordered) - 1  # feasibility is monotone in eps and holds at eps = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(ordered[mid]):
            hi = mid
        else:
            lo = mid + 1
    return ordered[lo]


def _peel(cells: tuple[tuple[int, int], ...], supply: list[Fraction], demand: list[Fraction]):
    """Solve the marginal constraints on a candidate basis by peeling leaves; None if singular or infeasible."""
    supply, demand = list(supply), list(demand)
    remaining = set(cells)
    flow = {}
    while remaining:
        progress = False
        for i in range(len(supply)):
            row = [c for c in remaining if c[0] == i]
            if len(row) == 1:
                c = row[0]
                flow[c] = supply[i]
                supply[i] = Fraction(0)
                demand[c[1]] -= flow[c]
                remaining.discard(c)
                progress = True
        for j in range(len(demand)):
            col = [c for c in remaining if c[1] == j]
            if len(col) == 1:
                c = col[0]
                flow[c] = demand[j]
                demand[j] = Fraction(0)
                supply[c[0]] -= flow[c]
                remaining.discard(c)
                progress = True
        if not progress:
            return None  # the support contains a cycle
    if any(supply) or any(demand) or any(v < 0 for v in flow.values()):
        return None
    return flow


def wasserstein_brute(P: FiniteMeasure, Q: FiniteMeasure, m: MetricSpec) -> Fraction:
    """Minimum transport cost over all basic feasible couplings (vertices of the polytope)."""
    n = len(P.points)
    cells = [(i, j) for i in range(n) for j in range(n)]
    best = None
    for basis in itertools.combinations(cells, 2 * n - 1):
        if len({i for i, _ in basis}) < n or len({j for _, j in basis}) < n:
            continue  # a spanning tree touches every row and column
        flow = _peel(basis, list(P.masses), list(Q.masses))
        if flow is None:
            continue
        cost = sum((v * m.distance[i][j] for (i, j), v in flow.items()), Fraction(0))
        if best is None or cost < best:
            best = cost
    if best is None:
        raise ArithmeticError("no basic feasible coupling found")
    return best
