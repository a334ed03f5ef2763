"""Acceptance criteria 1-13, one test each.

Every test carries a ``criterion`` marker; the conftest hook prints one
``PASS criterion N: ...`` or ``FAIL criterion N: ...`` line per test and
repeats them in an "acceptance criteria" section at the end of the run.
"""

import json
import random
from fractions import Fraction

import numpy as np
import pytest

from ait import instances
from ait.bits import pow2, strings_of_length
from ait.codec import (
    CodecError,
    KraftError,
    cnv,
    cnv_batch,
    digits_to_str,
    kraft_construct,
    shannon_fano,
)
from ait.harness import ExperimentConfig, bundled_config, run_experiment
from ait.machine import Mode, clear_memo, enumerate_programs
from ait.measures import FiniteMeasure, expected_complexity, kl_verdict, prokhorov, transport, wasserstein
from ait.oracles import prokhorov_brute, wasserstein_brute
from ait.randomness import (
    NAMED_MAPS,
    DistributionSpec,
    bernoulli_extend,
    bernoulli_validate,
    conservation_report,
    gap_check,
    lln_test,
)
from ait.semimeasure import coding_intervals, m_t, m_t_table, monotone_m, omega_t

SEED = 20_240_601
BUDGETS = (10, 100, 1_000, 10_000)


def detail(request, text):
    request.node.user_properties.append(("detail", text))


def sorted_prefix_free(words):
    words = sorted(words)
    return all(not b.startswith(a) for a, b in zip(words, words[1:]))


def kraft(words):
    return sum((Fraction(1, 2 ** len(w)) for w in words), Fraction(0))


@pytest.mark.criterion(1, "prefix-free domain and Kraft sum <= 1, all programs |p| <= 16, t = 10^4")
def test_criterion_01_prefix_free_domain(request):
    cache = enumerate_programs(Mode.SELF_DELIM, 16, 10_000)
    total = kraft(cache.domain)
    detail(request, f"{len(cache.entries)} programs, {len(cache.domain)} in domain, Kraft sum {total}")
    assert len(cache.entries) == 2**17 - 1
    assert sorted_prefix_free(cache.domain)
    assert total <= 1


@pytest.mark.criterion(2, "counting bound |{x : K^t(x|y) <= u}| < 2^(u+1) for u <= 16, y in {empty, 1, beta(5)}")
def test_criterion_02_counting_bound(request):
    worst = Fraction(0)
    for cond in ("", "1", "101"):
        cache = enumerate_programs(Mode.SELF_DELIM, 16, 10_000, cond)
        lengths = sorted(len(p) for p in cache.shortest.values())
        for u in range(17):
            count = sum(1 for n in lengths if n <= u)
            worst = max(worst, Fraction(count, 2 ** (u + 1)))
            assert count < 2 ** (u + 1), (cond, u, count)
    detail(request, f"largest count / 2^(u+1) = {worst}")


@pytest.mark.criterion(3, "monotone refinement of K^t, C^t, m^t, Omega^t, M^t over t in 10..10^4 at L = 14")
def test_criterion_03_monotone_refinement(request):
    L = 14
    caches = {mode: [enumerate_programs(mode, L, t) for t in BUDGETS] for mode in (Mode.SELF_DELIM, Mode.END_MARKED)}
    for mode, series in caches.items():
        outputs = set().union(*(c.shortest for c in series))
        for x in outputs:
            vals = [c.complexity(x) for c in series]
            for a, b in zip(vals, vals[1:]):
                assert a is None or (b is not None and b <= a), (mode, x, vals)
    omegas = [omega_t(L, t) for t in BUDGETS]
    assert omegas == sorted(omegas) and omegas[-1] <= 1
    outputs = set(caches[Mode.SELF_DELIM][-1].shortest)
    for x in outputs:
        vals = [m_t(x, L, t) for t in BUDGETS]
        assert vals == sorted(vals), x
    for t, om in zip(BUDGETS, omegas):
        assert m_t_table(L, t).total == om
    prefixes = {o.output[:k] for o in enumerate_programs(Mode.MONOTONE, L, BUDGETS[-1]).entries.values() for k in range(6)}
    for x in prefixes:
        vals = [monotone_m(x, L, t) for t in BUDGETS]
        assert vals == sorted(vals), x
    detail(request, f"Omega^t = {', '.join(str(o) for o in omegas)}; {len(outputs)} outputs, {len(prefixes)} prefixes")


@pytest.mark.criterion(4, "Kraft and Shannon-Fano constructions on 1000 random inputs each; invalid inputs rejected")
def test_criterion_04_code_constructions(request):
    rng = random.Random(f"{SEED}:4")
    for _ in range(1000):
        lengths = instances.kraft_lengths(rng)
        words = kraft_construct(lengths).codewords
        assert [len(w) for w in words] == lengths
        assert sorted_prefix_free(words) and len(set(words)) == len(words)
        assert kraft(words) <= 1
    for _ in range(1000):
        ws = instances.weights(rng)
        words = shannon_fano(ws).codewords
        assert sorted_prefix_free(words)
        assert list(words) == sorted(words)
        for w, p in zip(ws, words):
            ceil_neg_log = next(k for k in range(200) if pow2(-k) <= w)  # exact: least k with 2**-k <= w
            assert len(p) <= ceil_neg_log + 2
    rejected = 0
    for _ in range(200):
        with pytest.raises(KraftError):
            kraft_construct(instances.invalid_kraft_lengths(rng))
        ws = instances.weights(rng)
        with pytest.raises(KraftError):
            shannon_fano(ws + [Fraction(1)])
        with pytest.raises(CodecError):
            shannon_fano(ws + [Fraction(0)])
        rejected += 3
    detail(request, f"2000 constructions, {rejected} invalid inputs rejected")


@pytest.mark.criterion(5, "cnv injective per length and s^|z| <= s r^|x|, exhaustive |x| <= 8, (r,s) in {2,3,4,10}^2")
def test_criterion_05_cnv(request):
    rng = random.Random(f"{SEED}:5")
    checked = interval_words = sampled = 0
    chunk = 10_000_000
    for r in (2, 3, 4, 10):
        for s in (2, 3, 4, 10):
            for n in range(9):
                R = r**n
                top = max(m for m in range(64) if s**m <= s * R)
                pow_s = np.array([s**m for m in range(top + 1)], dtype=np.int64)
                for lo in range(0, R, chunk):
                    hi = min(R, lo + chunk)
                    m, j = cnv_batch(r, s, n, lo, hi)
                    N = np.arange(lo, hi, dtype=np.int64)
                    # length bound: s**m <= s * r**n, exact
                    assert int(m.max()) <= top and all(s ** int(v) <= s * R for v in np.unique(m))
                    S = pow_s[m]
                    assert bool(np.all((0 <= j) & (j < S)))
                    # the word's left end j / s**m lies in [N / R, (N + 1) / R): distinct words per length
                    assert bool(np.all(j * R >= N * S)) and bool(np.all(j * R < (N + 1) * S))
                    # words that are genuine sub-intervals of [x]_r
                    interval_words += int(np.count_nonzero((j + 1) * R <= (N + 1) * S))
                    checked += hi - lo
                    for v in rng.sample(range(lo, hi), min(50, hi - lo)):
                        z = cnv(r, s, digits_to_str(v, n, r))
                        assert z == digits_to_str(int(j[v - lo]), int(m[v - lo]), s)
                        sampled += 1
    detail(
        request,
        f"{checked} words, {interval_words} largest-interval words, {checked - interval_words} bound fallbacks, "
        f"{sampled} scalar cross-checks",
    )


@pytest.mark.criterion(6, "LLN test integrable: sum_x 2^-n 2^d(x) <= 1 exhaustively for n <= 12")
def test_criterion_06_lln(request):
    sums = []
    for n in range(1, 13):
        total = sum((lln_test(x).payoff for x in strings_of_length(n)), Fraction(0)) / 2**n
        assert total <= 1, (n, total)
        sums.append(total)
    detail(request, f"largest sum {max(sums)} (n = 1), n = 12 sum ~ {float(sums[-1]):.6f}")


@pytest.mark.criterion(7, "Bernoulli extension keeps 200 random tables valid; gap function passes on p-grid, n <= 30")
def test_criterion_07_bernoulli(request):
    rng = random.Random(f"{SEED}:7")
    for _ in range(200):
        n = rng.randint(0, 7)
        f = instances.bernoulli_table(rng, n)
        assert bernoulli_validate(f).ok
        g = bernoulli_extend(f)
        assert g.n == n + 1 <= 8 and bernoulli_validate(g).ok
        assert g.restrict(n) == f
    n_max = 30

    def D(n, k):
        return (n * (n + 1) - 1).bit_length()  # ceil(log2(n(n+1)))

    # 2**-D(n,k) <= 1/(n(n+1)) for every n, so the tail beyond n_max telescopes to 1/(n_max+1)
    for n in range(1, 10_000):
        assert 2 ** D(n, 0) >= n * (n + 1) and 2 ** (D(n, 0) - 1) < n * (n + 1)
    tail = Fraction(1, n_max + 1)
    assert sum(Fraction(1, n * (n + 1)) for n in range(1, n_max + 1)) + tail == 1
    grid = [Fraction(i, 10) for i in range(11)]
    v = gap_check(D, grid, n_max, tail)
    assert v.ok
    detail(request, f"largest partial sum + tail {max(s for _, s in v.sums)}")


@pytest.mark.criterion(8, "conservation: pulled-back test sum_x P(x) 2^d_P(x) <= 1 for 3 maps, Uniform(n), n <= 10, L = 14")
def test_criterion_08_conservation(request):
    worst = Fraction(0)
    for name in ("identity", "drop-last", "parity-extend"):
        for n in range(1, 11):
            P = DistributionSpec.uniform(n)
            rep = conservation_report(NAMED_MAPS[name], P, 14, 10_000)
            direct = sum((px * rep.pulled_back[x] for x, px in P.items()), Fraction(0))
            assert direct == rep.expectation <= 1, (name, n)
            worst = max(worst, direct)
    detail(request, f"largest expectation {worst}")


@pytest.mark.criterion(9, "entropy <= expected K^t for measures on outputs reachable at L = 14, t = 10^4")
def test_criterion_09_entropy_vs_complexity(request):
    rng = random.Random(f"{SEED}:9")
    shortest = enumerate_programs(Mode.SELF_DELIM, 14, 10_000).shortest
    outputs = sorted(shortest, key=lambda x: (len(x), x))
    measures = [FiniteMeasure((x,), (Fraction(1),)) for x in outputs]
    measures.append(FiniteMeasure(tuple(outputs), tuple([Fraction(1, len(outputs))] * len(outputs))))
    # the tight case: P proportional to 2**-K, where H and E[K] differ only by the normalising log
    weights = [pow2(-len(shortest[x])) for x in outputs]
    measures.append(FiniteMeasure(tuple(outputs), tuple(w / sum(weights) for w in weights)))
    for _ in range(1000):
        pts = rng.sample(outputs, rng.randint(2, min(12, len(outputs))))
        measures.append(FiniteMeasure(tuple(pts), tuple(instances.probability(rng, len(pts), zeros=False))))
    statuses = [expected_complexity(P, 14, 10_000).status for P in measures]
    detail(request, f"{len(measures)} measures on {len(outputs)} reachable outputs, statuses {sorted(set(statuses))}")
    assert all(s == "pass" for s in statuses)


@pytest.mark.criterion(10, "coding-theorem builder: 1000 random streams give prefix-free words of length <= k_t + 3")
def test_criterion_10_coding_builder(request):
    rng = random.Random(f"{SEED}:10")
    items = 0
    for _ in range(1000):
        s = instances.stream(rng)
        words = [w for _, w in coding_intervals(s)]
        assert sorted_prefix_free(words) and len(set(words)) == len(words)
        assert all(len(w) <= k + 3 for w, (_, k) in zip(words, s.items))
        items += len(words)
    detail(request, f"{items} stream items")


@pytest.mark.criterion(11, "Prokhorov and Wasserstein match brute force; W <= (M+1) rho and rho^2 <= W on 500 pairs")
def test_criterion_11_distances(request):
    rng = random.Random(f"{SEED}:11")
    for _ in range(300):
        P, Q = instances.measure_pair(rng, rng.randint(1, 6))
        m = instances.metric(rng, P.points)
        assert prokhorov(P, Q, m) == prokhorov_brute(P, Q, m)
    for _ in range(60):
        P, Q = instances.measure_pair(rng, rng.randint(1, 4))
        m = instances.metric(rng, P.points)
        assert transport(P, Q, m).cost == wasserstein_brute(P, Q, m)
    tight = 0
    for _ in range(500):
        P, Q = instances.measure_pair(rng, rng.randint(1, 6))
        m = instances.metric(rng, P.points)
        rho, W = prokhorov(P, Q, m), wasserstein(P, Q, m)
        assert rho * rho <= W <= (m.diameter + 1) * rho
        tight += rho * rho == W
    detail(request, f"300 Prokhorov and 60 Wasserstein oracle comparisons, {tight} of 500 pairs with rho^2 = W")


@pytest.mark.criterion(12, "relative entropy <= 0 on 1000 random pairs, zero exactly when the measures are equal")
def test_criterion_12_kl(request):
    rng = random.Random(f"{SEED}:12")
    counts = {}
    for i in range(1000):
        size = rng.randint(1, 8)
        P = FiniteMeasure(tuple(range(size)), tuple(instances.probability(rng, size)))
        Q = P if i % 10 == 0 else FiniteMeasure(P.points, tuple(instances.probability(rng, size)))
        v = kl_verdict(P, Q)
        counts[v.status] = counts.get(v.status, 0) + 1
        assert v.status in ("zero", "negative", "-inf")
        assert (v.status == "zero") == (P.masses == Q.masses)
    detail(request, ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))


@pytest.mark.criterion(13, "two full suite runs give byte-identical reports (elapsed masked)")
def test_criterion_13_determinism(request, tmp_path):
    data = json.loads(bundled_config("full").read_text())
    texts = []
    out = tmp_path / "report.json"  # the config, including this path, is echoed in the report
    for _ in range(2):
        clear_memo()
        report = run_experiment(ExperimentConfig.from_dict({**data, "report": str(out)}))
        assert report.ok
        texts.append(report.to_json(mask_elapsed=True).encode())
    assert texts[0] == texts[1]
    detail(request, f"{len(texts[0])} bytes, {len(report.records)} records")
