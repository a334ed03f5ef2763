import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ait import instances
from ait.bits import pow2, strings_up_to
from ait.codec import prefix_free_check
from ait.machine import enumerate_programs, run
from ait.semimeasure import (
    EnumerationStream,
    SemimeasureError,
    SemimeasureTable,
    bernoulli_cylinder,
    coding_code,
    coding_intervals,
    is_dyadic_table,
    km,
    m_t,
    m_t_table,
    mixture,
    monotone_m,
    omega_t,
    seq_test_dprime,
    uniform_cylinder,
)


def test_m_t_and_omega_examples():
    assert m_t("", 3, 10) == Fraction(1, 8)
    assert all(m_t(x, 8, 0) == 0 for x in ["", "1"])
    assert omega_t(3, 10) == Fraction(1, 8)
    assert omega_t(0, 10) == 0


def test_sum_of_m_t_is_omega():
    for L, t in [(8, 10), (12, 100)]:
        table = m_t_table(L, t)
        assert table.total == omega_t(L, t) <= 1
        assert is_dyadic_table(table)


def test_m_t_matches_direct_sum():
    cache = enumerate_programs("sd", 10, 100)
    for x in ["", "1", "0", "11", "0101"]:
        direct = sum(Fraction(1, 2 ** len(p)) for p in cache.domain if cache.entries[p].output == x)
        assert m_t(x, 10, 100) == direct


def test_m_t_nondecreasing_in_budget():
    for x in ["", "1", "10", "111"]:
        vals = [m_t(x, 12, t) for t in (1, 10, 100, 1000)]
        assert vals == sorted(vals)


# -- mixtures ---------------------------------------------------------------------------


def test_mixture_examples():
    a = SemimeasureTable({"0": Fraction(1)})
    b = SemimeasureTable({"1": Fraction(1)})
    mix = mixture([a, b], [Fraction(1, 2), Fraction(1, 2)])
    assert dict(mix.masses) == {"0": Fraction(1, 2), "1": Fraction(1, 2)}
    with pytest.raises(SemimeasureError):
        mixture([a, b], [Fraction(3, 4), Fraction(1, 2)])


@given(st.lists(st.integers(0, 8), min_size=1, max_size=4), st.integers(0, 2**16))
def test_mixture_dominates_components(exps, seed):
    rng = random.Random(seed)
    tables = [SemimeasureTable({x: Fraction(1, 8) for x in rng.sample(list(strings_up_to(3)), 4)}) for _ in exps]
    ws = [pow2(-e - 2) for e in exps]
    mix = mixture(tables, ws)
    assert mix.total <= 1
    for tab, w in zip(tables, ws):
        assert all(mix(x) >= w * tab(x) for x in strings_up_to(3))


def test_table_rejects_excess_mass():
    with pytest.raises(SemimeasureError):
        SemimeasureTable({"0": Fraction(3, 4), "1": Fraction(1, 2)})


def test_table_json_roundtrip():
    t = SemimeasureTable({"": Fraction(1, 2), "01": Fraction(3, 16)})
    assert SemimeasureTable.from_json(t.to_json()) == t


# -- coding construction -------------------------------------------------------------------


def test_coding_examples():
    book = coding_code(EnumerationStream((("a", 1), ("b", 2))))
    assert dict(zip(book.labels, book.codewords)) == {"a": "00", "b": "010"}
    book = coding_code(EnumerationStream((("a", 0),)))
    assert dict(zip(book.labels, book.codewords)) == {"a": "0"}


def test_stream_rejects_mass_two():
    with pytest.raises(SemimeasureError):
        EnumerationStream((("a", 0), ("b", 0)))


def test_stream_file(tmp_path):
    f = tmp_path / "s.tsv"
    f.write_text("a\t1\nb\t2\n")
    assert EnumerationStream.from_file(f).items == (("a", 1), ("b", 2))


@given(st.integers(0, 2**32))
def test_coding_code_property(seed):
    s = instances.stream(random.Random(seed))
    words = [w for _, w in coding_intervals(s)]
    assert prefix_free_check(words)
    assert all(len(w) <= k + 3 for w, (_, k) in zip(words, s.items))
    assert prefix_free_check(coding_code(s).codewords)


# -- monotone machine -------------------------------------------------------------------------


def monotone_oracle(x, L, t):
    """Sum over programs whose output extends x while no proper prefix's output does."""
    total = Fraction(0)
    for p in strings_up_to(L):
        if run("mono", p, "", t).output.startswith(x) and not any(
            run("mono", p[:i], "", t).output.startswith(x) for i in range(len(p))
        ):
            total += pow2(-len(p))
    return total


def test_monotone_m_matches_oracle():
    for x in ["", "0", "1", "11", "01"]:
        assert monotone_m(x, 9, 50) == monotone_oracle(x, 9, 50)


def test_monotone_examples():
    assert monotone_m("", 10, 100) == 1
    assert monotone_m("1", 10, 100) >= Fraction(1, 8)
    assert km("", 10, 100).contains(0)


def test_monotone_is_a_semimeasure():
    for x in strings_up_to(5):
        assert monotone_m(x, 12, 100) >= monotone_m(x + "0", 12, 100) + monotone_m(x + "1", 12, 100)


def test_km_nonincreasing_in_budget():
    for x in ["1", "11", "0101"]:
        vals = [monotone_m(x, 12, t) for t in (1, 10, 100)]
        assert vals == sorted(vals)


def test_dprime():
    assert seq_test_dprime("", uniform_cylinder, 10, 100).ratio == 1
    b = seq_test_dprime("1111", uniform_cylinder, 10, 100)
    assert b.ratio >= 1 and b.log2.lo >= 0
    with pytest.raises(SemimeasureError):
        seq_test_dprime("1", bernoulli_cylinder(Fraction(0)), 10, 100)
