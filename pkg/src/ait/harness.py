"""Experiment configuration, the check registry, reports and cache lifecycle.

A config names one experiment. Running it evaluates a list of named checks,
each returning exact values as strings, and collects them into a report that
serializes to JSON (sorted keys) and a CSV summary. Nothing in a verdict
depends on wall-clock time; ``elapsed`` is recorded beside it and is masked
when reports are compared.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping

import mpmath

from ait import codec, instances, machine, oracles, randomness, semimeasure
from ait import measures as ms
from ait.bits import (
    EMPTY,
    BitString,
    ceil_neg_log2,
    check_bits,
    format_dyadic,
    format_rational,
    pow2,
    strings_of_length,
    strings_up_to,
)
from ait.intervals import DEFAULT_BITS
from ait.machine import MAX_ENUM_LEN, Mode, ResourceCapError, enumerate_programs

DEFAULT_SEED = 20_240_601
STATUSES = ("pass", "fail", "inconclusive", "report-only")


class ConfigError(ValueError):
    """The config file is not well formed."""


class UnwritablePathError(OSError):
    """An output path cannot be created."""


# -- configuration --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    max_len: int
    budget: int
    mode: Mode = Mode.SELF_DELIM
    targets: tuple[BitString, ...] = ()
    distributions: tuple[randomness.DistributionSpec, ...] = ()
    precision: int = DEFAULT_BITS
    seed: int = DEFAULT_SEED
    samples: int = 50
    checks: tuple[str, ...] | None = None  # None runs every registered check
    params: Mapping[str, int] = field(default_factory=dict)
    report: str | None = None
    csv: str | None = None
    cache_dir: str | None = None
    cap: int = MAX_ENUM_LEN

    def param(self, name: str) -> int:
        return int(self.params.get(name, DEFAULT_PARAMS[name]))

    @property
    def budgets(self) -> list[int]:
        """Budget schedule for refinement checks: powers of ten below ``t``, then ``t``."""
        out = [10**i for i in range(1, 8) if 10**i < self.budget]
        return out + [self.budget]

    def validate(self) -> None:
        if self.max_len > self.cap:
            raise ResourceCapError(self.max_len, self.cap)
        for path in (self.report, self.csv):
            if path is not None:
                _check_writable(Path(path))
        if self.cache_dir is not None:
            _check_writable(Path(self.cache_dir) / ".probe", create_parent=True)

    @property
    def enumeration_estimate(self) -> int:
        """``L * 2**L`` instruction fetches (the dominant enumeration cost)."""
        return self.max_len * 2**self.max_len

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "mode": self.mode.value,
            "L": self.max_len,
            "t": self.budget,
            "targets": list(self.targets),
            "distributions": [d.to_dict() for d in self.distributions],
            "precision": self.precision,
            "seed": self.seed,
            "samples": self.samples,
            "checks": None if self.checks is None else list(self.checks),
            "params": dict(sorted(self.params.items())),
            "report": self.report,
            "csv": self.csv,
            "cache_dir": self.cache_dir,
            "cap": self.cap,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        if not isinstance(d, Mapping):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("id", "L", "t"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        try:
            checks = d.get("checks")
            params = dict(d.get("params") or {})
            bad = set(params) - set(DEFAULT_PARAMS)
            if bad:
                raise ConfigError(f"unknown params: {sorted(bad)}")
            cfg = cls(
                id=str(d["id"]),
                max_len=_nat(d["L"], "L"),
                budget=_nat(d["t"], "t"),
                mode=Mode.parse(d.get("mode", "sd")),
                targets=tuple(check_bits(x) for x in d.get("targets", ())),
                distributions=tuple(randomness.DistributionSpec.from_dict(x) for x in d.get("distributions", ())),
                precision=_nat(d.get("precision", DEFAULT_BITS), "precision"),
                seed=_nat(d.get("seed", DEFAULT_SEED), "seed"),
                samples=_nat(d.get("samples", 50), "samples"),
                checks=None if checks is None else tuple(str(c) for c in checks),
                params={k: _nat(v, k) for k, v in sorted(params.items())},
                report=d.get("report"),
                csv=d.get("csv"),
                cache_dir=d.get("cache_dir"),
                cap=_nat(d.get("cap", MAX_ENUM_LEN), "cap"),
            )
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        if cfg.seed >= 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if cfg.checks is not None:
            missing = [c for c in cfg.checks if c not in CHECKS]
            if missing:
                raise ConfigError(f"unknown checks: {missing}")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


_CONFIG_KEYS = {
    "id", "mode", "L", "t", "targets", "distributions", "precision", "seed", "samples",
    "checks", "params", "report", "csv", "cache_dir", "cap",
}

DEFAULT_PARAMS = {
    "cnv_len": 4,  # exhaustive cnv sweep length
    "pair_bound": 10_000,  # pair/unpair checked on k < pair_bound
    "elias_max": 2_000,
    "lln_n": 8,
    "bernoulli_n": 6,
    "gap_n": 30,
    "conserve_n": 6,
    "sep_samples": 1_000,
    "points": 5,  # largest measure instance for distance checks
    "wasserstein_points": 3,  # largest instance for the coupling brute force
}


def _nat(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ConfigError(f"{name} must be a nonnegative integer, got {v!r}")
    return v


def _check_writable(path: Path, create_parent: bool = False) -> None:
    parent = path.parent
    if create_parent:
        try:
            parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UnwritablePathError(f"cannot create {parent}: {exc}") from exc
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise UnwritablePathError(f"cannot write {path}: directory {parent} is missing or read-only")
    if path.exists() and not os.access(path, os.W_OK):
        raise UnwritablePathError(f"cannot write {path}: file is read-only")


# -- reports ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckRecord:
    name: str
    status: str
    values: dict[str, str]
    elapsed: float = 0.0

    @property
    def asserted(self) -> bool:
        return self.status != "report-only"

    def to_dict(self, mask_elapsed: bool = False) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "values": dict(sorted(self.values.items())),
            "elapsed": None if mask_elapsed else round(self.elapsed, 6),
        }


@dataclass(frozen=True)
class Report:
    experiment: str
    records: tuple[CheckRecord, ...]
    config: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.status == "pass" for r in self.records if r.asserted)

    def counts(self) -> dict[str, int]:
        return {s: sum(1 for r in self.records if r.status == s) for s in STATUSES}

    def record(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self, mask_elapsed: bool = False) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "checks": [r.to_dict(mask_elapsed) for r in self.records],
            "summary": self.counts(),
            "ok": self.ok,
        }

    def to_json(self, mask_elapsed: bool = False) -> str:
        return json.dumps(self.to_dict(mask_elapsed), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "status", "values", "elapsed"])
        for r in self.records:
            vals = "; ".join(f"{k}={v}" for k, v in sorted(r.values.items()))
            w.writerow([r.name, r.status, vals, f"{r.elapsed:.6f}"])
        return buf.getvalue()


# -- check registry -----------------------------------------------------------------------------

Check = Callable[["Context"], "tuple[str, dict[str, str]]"]
CHECKS: dict[str, Check] = {}


def check(name: str):
    def register(fn: Check) -> Check:
        CHECKS[name] = fn
        return fn

    return register


@dataclass
class Context:
    cfg: ExperimentConfig
    name: str

    def rng(self) -> random.Random:
        # str seeds are hashed deterministically, independent of PYTHONHASHSEED
        return random.Random(f"{self.cfg.seed}:{self.name}")

    @property
    def L(self) -> int:
        return self.cfg.max_len

    @property
    def t(self) -> int:
        return self.cfg.budget


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _prefix_free_by_lookup(words) -> bool:
    """No word has a proper prefix in the set (independent of the codec's sorted test)."""
    ws = set(words)
    return all(w[:i] not in ws for w in ws for i in range(len(w)))


# machine ---------------------------------------------------------------------------------


@check("machine.domain_prefix_free")
def _(ctx):
    vals, ok = {}, True
    for t in ctx.cfg.budgets:
        dom = enumerate_programs(Mode.SELF_DELIM, ctx.L, t).domain
        pf = _prefix_free_by_lookup(dom)
        ok &= pf
        vals[f"t={t}"] = f"{len(dom)} programs, prefix-free={pf}"
    return _verdict(ok), vals


@check("machine.kraft")
def _(ctx):
    vals, ok = {}, True
    for t in ctx.cfg.budgets:
        s = machine.kraft_of_domain(ctx.L, t)
        ok &= s <= 1
        vals[f"t={t}"] = format_dyadic(s)
    return _verdict(ok), vals


@check("machine.counting_bound")
def _(ctx):
    vals, ok = {}, True
    for name, y in (("empty", EMPTY), ("1", "1"), ("beta5", codec.beta(5))):
        counts = [machine.stats_count_below(u, y, ctx.L, ctx.t) for u in range(ctx.L + 1)]
        ok &= all(c < 2 ** (u + 1) for u, c in enumerate(counts))
        vals[f"cond={name}"] = ",".join(map(str, counts))
    return _verdict(ok), vals


@check("machine.monotone_refinement")
def _(ctx):
    grid = [(L, t) for L in sorted({max(ctx.L - 2, 0), ctx.L}) for t in ctx.cfg.budgets]
    bad = 0
    for mode in (Mode.SELF_DELIM, Mode.END_MARKED):
        tables = {(L, t): enumerate_programs(mode, L, t).shortest for L, t in grid}
        for a in grid:
            for b in grid:
                if a[0] <= b[0] and a[1] <= b[1]:
                    for x, p in tables[a].items():
                        q = tables[b].get(x)
                        if q is None or len(q) > len(p):
                            bad += 1
    return _verdict(bad == 0), {"grid": str(grid), "violations": str(bad)}


@check("machine.determinism")
def _(ctx):
    rng = ctx.rng()
    cache = enumerate_programs(Mode.SELF_DELIM, ctx.L, ctx.t)
    progs = sorted(cache.entries)
    sample = [rng.choice(progs) for _ in range(ctx.cfg.samples)]
    bad = 0
    for p in sample:
        for mode in Mode:
            a = machine.run(mode, p, "1", ctx.t)
            if a != machine.run(mode, p, "1", ctx.t):
                bad += 1
        if machine.run(Mode.SELF_DELIM, p, EMPTY, ctx.t) != cache.entries[p]:
            bad += 1
    return _verdict(bad == 0), {"sampled": str(len(sample)), "mismatches": str(bad)}


@check("machine.c_le_k")
def _(ctx):
    bad = both = 0
    for y in (EMPTY, "1"):
        k = enumerate_programs(Mode.SELF_DELIM, ctx.L, ctx.t, y).shortest
        c = enumerate_programs(Mode.END_MARKED, ctx.L, ctx.t, y).shortest
        for x in k.keys() & c.keys():
            both += 1
            bad += len(c[x]) > len(k[x])
    return _verdict(bad == 0), {"compared": str(both), "violations": str(bad)}


@check("machine.cache_lifecycle")
def _(ctx):
    import tempfile

    L = min(ctx.L, 8)
    small = enumerate_programs(Mode.SELF_DELIM, L, 2)
    big = enumerate_programs(Mode.SELF_DELIM, L, ctx.t)
    with tempfile.TemporaryDirectory() as d:
        machine.save_cache(big, Path(d) / "c.tsv")
        back = machine.load_cache(Path(d) / "c.tsv")
    roundtrip = back.entries == {p: machine.RunOutcome(o.status, o.output, o.consumed, o.steps) for p, o in big.entries.items()}
    same = machine.merge_caches([back, back]).entries == back.entries
    merged = machine.merge_caches([small, back])
    keeps = all(merged.entries[p].halted for c in (small, back) for p, o in c.entries.items() if o.halted)
    try:
        machine.merge_caches([back, enumerate_programs(Mode.END_MARKED, L, 2)])
        refuses = False
    except machine.CacheMismatchError:
        refuses = True
    ok = roundtrip and same and keeps and refuses
    return _verdict(ok), {
        "roundtrip": str(roundtrip), "idempotent": str(same), "halted_kept": str(keeps), "mismatch_refused": str(refuses)
    }


# semimeasure -----------------------------------------------------------------------------


@check("semimeasure.omega_identity")
def _(ctx):
    vals, ok = {}, True
    for t in ctx.cfg.budgets:
        om = semimeasure.omega_t(ctx.L, t)
        total = semimeasure.m_t_table(ctx.L, t).total
        ok &= om == total and om <= 1
        vals[f"t={t}"] = f"omega={format_dyadic(om)} sum_m={format_dyadic(total)}"
    return _verdict(ok), vals


@check("semimeasure.monotone_refinement")
def _(ctx):
    grid = [(L, t) for L in sorted({max(ctx.L - 2, 0), ctx.L}) for t in ctx.cfg.budgets]
    bad = 0
    for a in grid:
        for b in grid:
            if a == b or not (a[0] <= b[0] and a[1] <= b[1]):
                continue
            ma, mb = semimeasure._discrete_masses(*a, EMPTY), semimeasure._discrete_masses(*b, EMPTY)
            bad += sum(1 for x, v in ma.items() if mb.get(x, 0) < v)
            bad += semimeasure.omega_t(*a) > semimeasure.omega_t(*b)
            Ma, Mb = semimeasure._monotone_masses(*a), semimeasure._monotone_masses(*b)
            bad += sum(1 for x, v in Ma.items() if Mb.get(x, 0) < v)
    return _verdict(bad == 0), {"grid": str(grid), "violations": str(bad)}


@check("semimeasure.coding_code")
def _(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.cfg.samples):
        stream = instances.stream(rng)
        book = semimeasure.coding_code(stream)
        words = dict(zip(book.labels, book.codewords))
        if not _prefix_free_by_lookup(book.codewords) or len(set(book.codewords)) != len(book.codewords):
            bad += 1
        best_k = {}
        for z, k in stream.items:
            best_k[z] = min(k, best_k.get(z, k))
        bad += sum(1 for z, k in best_k.items() if len(words[z]) > k + 3)
    return _verdict(bad == 0), {"streams": str(ctx.cfg.samples), "violations": str(bad)}


@check("semimeasure.seq_semimeasure")
def _(ctx):
    table = semimeasure.monotone_table(ctx.L, ctx.t, ctx.L)
    v = ms.semimeasure_validate(table)
    return _verdict(v.ok), {"prefixes": str(len(table.masses)), "violation": str(v.violation)}


@check("semimeasure.mixture")
def _(ctx):
    rng = ctx.rng()
    tabs = [semimeasure.m_t_table(ctx.L, t) for t in ctx.cfg.budgets]
    tabs.append(semimeasure.SemimeasureTable({x: pow2(-2 * len(x) - 1) for x in strings_up_to(4)}))
    bad = 0
    for _ in range(ctx.cfg.samples):
        a, b, c = (rng.choice(tabs) for _ in range(3))
        w = [pow2(-rng.randint(1, 4)) for _ in range(4)]
        u, v = w[0], 1 - w[0]
        # (a, b) mixed by (w1, w2), then mixed with c by (u, v)
        left = semimeasure.mixture([semimeasure.mixture([a, b], [w[1], w[2]]), c], [u, v])
        flat = semimeasure.mixture([a, b, c], [u * w[1], u * w[2], v])
        same = {k: x for k, x in left.masses.items() if x} == {k: x for k, x in flat.masses.items() if x}
        bad += not (same and left.residual == flat.residual and left.total <= 1)
        bad += not semimeasure.is_dyadic_table(left)
    return _verdict(bad == 0), {"mixtures": str(ctx.cfg.samples), "violations": str(bad)}


# codec -----------------------------------------------------------------------------------


@check("codec.kraft_construct")
def _(ctx):
    rng = ctx.rng()
    bad = rejected = 0
    for _ in range(ctx.cfg.samples):
        lengths = instances.kraft_lengths(rng)
        book = codec.kraft_construct(lengths)
        ok = [len(w) for w in book.codewords] == lengths
        ok &= _prefix_free_by_lookup(book.codewords) and len(set(book.codewords)) == len(lengths)
        ok &= codec.kraft_sum(book) <= 1
        bad += not ok
        try:
            codec.kraft_construct(instances.invalid_kraft_lengths(rng))
        except codec.KraftError:
            rejected += 1
    ok = bad == 0 and rejected == ctx.cfg.samples
    return _verdict(ok), {"samples": str(ctx.cfg.samples), "violations": str(bad), "invalid_rejected": str(rejected)}


@check("codec.shannon_fano")
def _(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.cfg.samples):
        ws = instances.weights(rng)
        words = codec.shannon_fano(ws).codewords
        ok = _prefix_free_by_lookup(words) and len(set(words)) == len(words)
        ok &= codec.kraft_sum(list(words)) <= 1
        ok &= all(len(p) <= ceil_neg_log2(w) + 2 for p, w in zip(words, ws))
        ok &= all(a < b for a, b in zip(words, words[1:]))
        bad += not ok
    rejected = 0
    for invalid in ([Fraction(2, 3), Fraction(2, 3)], [Fraction(1, 2), Fraction(0)], [Fraction(-1, 2)]):
        try:
            codec.shannon_fano(invalid)
        except codec.CodecError:
            rejected += 1
    return _verdict(bad == 0 and rejected == 3), {"samples": str(ctx.cfg.samples), "violations": str(bad), "invalid_rejected": str(rejected)}


@check("codec.cnv")
def _(ctx):
    n_max = ctx.cfg.param("cnv_len")
    vals, ok = {}, True
    for r in (2, 3, 4, 10):
        for s in (2, 3, 4, 10):
            checked = 0
            for n in range(n_max + 1):
                if r**n > 20_000:
                    break
                seen = set()
                for v in range(r**n):
                    x = codec.digits_to_str(v, n, r)
                    z = codec.cnv(r, s, x)
                    ok &= z not in seen and s ** len(z) <= s * r**n
                    seen.add(z)
                    checked += 1
            vals[f"r={r},s={s}"] = str(checked)
    return _verdict(ok), vals


@check("codec.pad_roundtrip")
def _(ctx):
    bad = 0
    for x in strings_up_to(6):
        if not x:
            continue
        for y in strings_up_to(3):
            bad += codec.parse_pad_terminated(codec.pad_terminate(x) + y) != (x, y)
    return _verdict(bad == 0), {"violations": str(bad)}


@check("codec.pairing")
def _(ctx):
    bound = ctx.cfg.param("pair_bound")
    ok = all(codec.pair(*codec.unpair(k)) == k for k in range(bound))
    # the diagonals i + j <= D cover exactly the first (D+1)(D+2)/2 codes
    D = math.isqrt(2 * bound)
    image = sorted(codec.pair(i, s - i) for s in range(D + 1) for i in range(s + 1))
    ok &= image == list(range((D + 1) * (D + 2) // 2))
    return _verdict(ok), {"k_checked": str(bound), "diagonals": str(D)}


@check("codec.elias_prefix_free")
def _(ctx):
    top = ctx.cfg.param("elias_max")
    words = [codec.elias_delta(n) for n in range(1, top + 1)]
    ok = _prefix_free_by_lookup(words) and len(set(words)) == len(words)
    ok &= all(codec.elias_delta_decode(w + "1") == (n, "1") for n, w in enumerate(words, 1))
    return _verdict(ok), {"n_max": str(top)}


@check("codec.log_star_partial_sums")
def _(ctx):
    grid = [1, 2, 3, 4, 5, 16, 17, 100, 1000]
    sums = [codec.log_star_partial_sum(N, 20) for N in grid]
    ok = all(a.lo <= b.hi for a, b in zip(sums, sums[1:]))
    ok &= all(math.isfinite(float(s)) for s in sums)
    return _verdict(ok), {f"N={N}": str(s) for N, s in zip(grid, sums)}


# randomness ------------------------------------------------------------------------------


@check("randomness.lln_integrable")
def _(ctx):
    vals, ok = {}, True
    for n in range(1, ctx.cfg.param("lln_n") + 1):
        e = sum((randomness.lln_payoff(x) for x in strings_of_length(n)), Fraction(0)) / 2**n
        ok &= e <= 1 and e == randomness.lln_expectation(n)
        vals[f"n={n}"] = format_rational(e)
    return _verdict(ok), vals


@check("randomness.integrable_implies_ml")
def _(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.cfg.samples):
        n = rng.randint(1, 5)
        P = rng.choice([randomness.DistributionSpec.uniform(n), randomness.DistributionSpec.bernoulli(Fraction(rng.randint(0, 8), 8), n)])
        tab = instances.integrable_table(rng, P)
        if randomness.integrable_check(tab, P).ok:
            bad += not randomness.ml_check(tab, P).ok
            lam = Fraction(rng.randint(1, 12), 4)
            try:
                randomness.markov_tail(P, tab, lam)
            except randomness.InvariantError:
                bad += 1
    return _verdict(bad == 0), {"tables": str(ctx.cfg.samples), "violations": str(bad)}


@check("randomness.bernoulli_extend")
def _(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.cfg.samples):
        f = instances.bernoulli_table(rng, rng.randint(0, ctx.cfg.param("bernoulli_n")))
        bad += not randomness.bernoulli_validate(f).ok
        bad += not randomness.bernoulli_validate(randomness.bernoulli_extend(f)).ok
    return _verdict(bad == 0), {"tables": str(ctx.cfg.samples), "violations": str(bad)}


def gap_D(n: int, k: int) -> int:
    """``ceil(log2(n (n + 1)))``."""
    return (n * (n + 1) - 1).bit_length()


@check("randomness.gap_function")
def _(ctx):
    n_max = ctx.cfg.param("gap_n")
    # sum_{n > N} 2**-D(n) <= sum_{n > N} 1/(n(n+1)) = 1/(N+1), telescoping
    tail = Fraction(1, n_max + 1)
    cut = 4 * n_max
    tail_ok = all(pow2(-gap_D(n, 0)) <= Fraction(1, n * (n + 1)) for n in range(n_max + 1, cut))
    tail_ok &= sum((Fraction(1, n * (n + 1)) for n in range(n_max + 1, cut)), Fraction(0)) == tail - Fraction(1, cut)
    grid = [Fraction(i, 10) for i in range(11)]
    v = randomness.gap_check(gap_D, grid, n_max, tail)
    vals = {f"p={format_rational(p)}": format_rational(s) for p, s in v.sums}
    vals["tail_bound"] = format_rational(tail)
    return _verdict(v.ok and tail_ok), vals


@check("randomness.conservation")
def _(ctx):
    vals, ok = {}, True
    for name, f in sorted(randomness.NAMED_MAPS.items()):
        for n in range(1, ctx.cfg.param("conserve_n") + 1):
            rep = randomness.conservation_report(f, randomness.DistributionSpec.uniform(n), ctx.L, ctx.t)
            ok &= rep.ok
            vals[f"{name},n={n}"] = f"E={format_rational(rep.expectation)} missing={rep.missing}"
    return _verdict(ok), vals


@check("randomness.deficiency_kraft")
def _(ctx):
    shortest = enumerate_programs(Mode.SELF_DELIM, ctx.L, ctx.t).shortest
    total = sum((pow2(-len(p)) for p in shortest.values()), Fraction(0))
    ok = _prefix_free_by_lookup(shortest.values()) and total <= 1
    return _verdict(ok), {"witnesses": str(len(shortest)), "sum": format_dyadic(total)}


def _separating_float(prefix: str, p: Fraction) -> int:
    best, k = 0, 0
    with mpmath.workdps(60):
        pm = mpmath.mpf(p.numerator) / p.denominator
        while (1 << k) <= len(prefix):
            delta = abs(prefix[: 1 << k].count("1") - (1 << k) * pm)
            if delta > mpmath.power(2, mpmath.mpf(3) * k / 5):
                best = k
            k += 1
    return best


@check("randomness.separating_cross_check")
def _(ctx):
    rng = ctx.rng()
    n = ctx.cfg.param("sep_samples")
    bad = 0
    for _ in range(n):
        p = Fraction(rng.randint(0, 16), 16)
        bias = rng.random()
        x = "".join("1" if rng.random() < bias else "0" for _ in range(rng.randint(0, 64)))
        bad += randomness.separating_gp(x, p) != _separating_float(x, p)
    return _verdict(bad == 0), {"cases": str(n), "disagreements": str(bad)}


# measures --------------------------------------------------------------------------------


@check("measures.kl_nonpositive")
def _(ctx):
    rng = ctx.rng()
    bad = inconclusive = 0
    for i in range(ctx.cfg.samples):
        size = rng.randint(1, 6)
        P, Q = instances.measure_pair(rng, size)
        if i % 5 == 0:
            Q = P
        v = ms.kl_verdict(P, Q, ctx.cfg.precision)
        if v.status == "inconclusive":
            inconclusive += 1
        elif (v.status == "zero") != (P.masses == Q.masses):
            bad += 1
    status = "fail" if bad else ("inconclusive" if inconclusive else "pass")
    return status, {"pairs": str(ctx.cfg.samples), "violations": str(bad), "inconclusive": str(inconclusive)}


@check("measures.entropy_permutation")
def _(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.cfg.samples):
        P, _unused = instances.measure_pair(rng, rng.randint(1, 6))
        order = list(range(len(P.points)))
        rng.shuffle(order)
        Pp = ms.FiniteMeasure(tuple(P.points[i] for i in order), tuple(P.masses[i] for i in order))
        bad += ms.entropy(P, ctx.cfg.precision) != ms.entropy(Pp, ctx.cfg.precision)
    return _verdict(bad == 0), {"samples": str(ctx.cfg.samples), "violations": str(bad)}


@check("measures.metric_axioms")
def _(ctx):
    rng = ctx.rng()
    size_cap = ctx.cfg.param("points")
    bad = 0
    for _ in range(ctx.cfg.samples):
        size = rng.randint(1, size_cap)
        P, Q = instances.measure_pair(rng, size)
        R = ms.FiniteMeasure(P.points, tuple(instances.probability(rng, size)))
        m = instances.metric(rng, P.points)
        for dist in (lambda a, b: ms.tv_distance(a, b), lambda a, b: ms.prokhorov(a, b, m), lambda a, b: ms.wasserstein(a, b, m)):
            pq, qp, pr, rq = dist(P, Q), dist(Q, P), dist(P, R), dist(R, Q)
            bad += pq != qp
            bad += (pq == 0) != (P.masses == Q.masses)
            bad += dist(P, P) != 0
            bad += pq > pr + rq
    return _verdict(bad == 0), {"triples": str(ctx.cfg.samples), "violations": str(bad)}


@check("measures.distance_oracles")
def _(ctx):
    rng = ctx.rng()
    bad = 0
    certified = 0
    for _ in range(ctx.cfg.samples):
        size = rng.randint(1, ctx.cfg.param("points"))
        P, Q = instances.measure_pair(rng, size)
        m = instances.metric(rng, P.points)
        bad += ms.prokhorov(P, Q, m) != oracles.prokhorov_brute(P, Q, m)
        plan = ms.transport(P, Q, m)
        certified += ms.dual_certificate_ok(P, Q, m, plan)
        if size <= ctx.cfg.param("wasserstein_points"):
            bad += plan.cost != oracles.wasserstein_brute(P, Q, m)
    ok = bad == 0 and certified == ctx.cfg.samples
    return _verdict(ok), {"instances": str(ctx.cfg.samples), "disagreements": str(bad), "dual_certified": str(certified)}


@check("measures.w_rho_equivalence")
def _(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.cfg.samples):
        size = rng.randint(1, ctx.cfg.param("points"))
        P, Q = instances.measure_pair(rng, size)
        m = instances.metric(rng, P.points)
        W, rho = ms.wasserstein(P, Q, m), ms.prokhorov(P, Q, m)
        bad += not (W <= (m.diameter + 1) * rho and rho * rho <= W)
    return _verdict(bad == 0), {"pairs": str(ctx.cfg.samples), "violations": str(bad)}


@check("measures.entropy_vs_complexity")
def _(ctx):
    rng = ctx.rng()
    reachable = sorted(enumerate_programs(Mode.SELF_DELIM, ctx.L, ctx.t).shortest, key=lambda s: (len(s), s))
    counts = {"pass": 0, "fail": 0, "inconclusive": 0, "insufficient budget": 0}
    supports = [reachable] + [rng.sample(reachable, rng.randint(1, min(6, len(reachable)))) for _ in range(ctx.cfg.samples)]
    for pts in supports:
        masses = instances.probability(rng, len(pts), zeros=False) if len(pts) <= 6 else [Fraction(1, len(pts))] * len(pts)
        res = ms.expected_complexity(ms.FiniteMeasure(tuple(pts), tuple(masses)), ctx.L, ctx.t, ctx.cfg.precision)
        counts[res.status] += 1
    status = "fail" if counts["fail"] or counts["insufficient budget"] else ("inconclusive" if counts["inconclusive"] else "pass")
    return status, {k.replace(" ", "_"): str(v) for k, v in counts.items()}


@check("measures.semimeasure_validate")
def _(ctx):
    good = ms.semimeasure_validate(semimeasure.m_t_table(ctx.L, ctx.t)).ok
    bad_rejected = not ms.semimeasure_validate({"0": Fraction(3, 4), "1": Fraction(1, 2)}).ok
    seq_rejected = not ms.semimeasure_validate(
        semimeasure.SeqSemimeasureTable({"": Fraction(1, 2), "0": Fraction(1, 2), "1": Fraction(1, 4)})
    ).ok
    ok = good and bad_rejected and seq_rejected
    return _verdict(ok), {"m_t_valid": str(good), "overfull_rejected": str(bad_rejected), "seq_violation_rejected": str(seq_rejected)}


# report-only statistics --------------------------------------------------------------------


@check("stats.machine")
def _(ctx):
    cache = enumerate_programs(Mode.SELF_DELIM, ctx.L, ctx.t)
    vals = {
        "domain_size": str(len(cache.domain)),
        "omega": format_dyadic(semimeasure.omega_t(ctx.L, ctx.t)),
        "g": ",".join(str(machine.stats_gn(n, ctx.L, ctx.t)) for n in range(ctx.L + 1)),
        "d": ",".join(str(machine.stats_dn(n, ctx.L, ctx.t)) for n in range(ctx.L + 1)),
        "h_c1": ",".join(format_rational(machine.stats_hn(n, 1, ctx.L, ctx.t)) for n in range(ctx.L + 1)),
        "kplus": ",".join(_fmt(machine.kplus(n, ctx.L, ctx.t)) for n in range(8)),
    }
    return "report-only", vals


def _fmt(v) -> str:
    if v is None:
        return "absent"
    if isinstance(v, Fraction):
        return format_rational(v)
    return str(v)


def _target_values(ctx, x: BitString) -> dict[str, str]:
    L, t = ctx.L, ctx.t
    vals = {
        "K": _fmt(machine.complexity_K(x, EMPTY, L, t)),
        "C": _fmt(machine.complexity_C(x, EMPTY, L, t)),
        "d0": _fmt(machine.d0(x, L, t)),
        "m_t": _fmt(semimeasure.m_t(x, L, t)),
        "M_t": _fmt(semimeasure.monotone_m(x, L, t)),
        "KM_t": _fmt(semimeasure.km(x, L, t, ctx.cfg.precision)),
        "dprime_uniform": _fmt(semimeasure.seq_test_dprime(x, semimeasure.uniform_cylinder, L, t, ctx.cfg.precision).ratio),
    }
    if x:
        vals["lln_payoff"] = _fmt(randomness.lln_payoff(x))
    for i, P in enumerate(ctx.cfg.distributions):
        if P.prob(x) > 0:
            bar = randomness.deficiency_bar(x, P, L, t, ctx.cfg.precision)
            vals[f"dbar_payoff[{i}]"] = "absent" if bar is None else format_rational(bar.payoff)
    return vals


def _distribution_values(ctx, P: randomness.DistributionSpec) -> dict[str, str]:
    pts = P.support()
    fm = ms.FiniteMeasure(tuple(pts), tuple(P.prob(x) for x in pts))
    res = ms.expected_complexity(fm, ctx.L, ctx.t, ctx.cfg.precision)
    return {
        "spec": json.dumps(P.to_dict(), sort_keys=True),
        "entropy": str(res.entropy),
        "expected_K": _fmt(res.value),
        "status": res.status,
    }


# -- invariant coverage manifest ---------------------------------------------------------------

INVARIANTS: dict[str, tuple[str, ...]] = {
    "codec: constructed codes are prefix-free with Kraft sum <= 1": ("codec.kraft_construct", "codec.shannon_fano"),
    "codec: kraft_construct reproduces lengths; Shannon-Fano length bound": ("codec.kraft_construct", "codec.shannon_fano"),
    "codec: Shannon-Fano preserves order": ("codec.shannon_fano",),
    "codec: cnv injective per length with the length bound": ("codec.cnv",),
    "codec: pad_terminate roundtrip": ("codec.pad_roundtrip",),
    "codec: pair/unpair bijection": ("codec.pairing",),
    "codec: Elias delta prefix-free": ("codec.elias_prefix_free",),
    "codec: log* partial sums monotone and finite": ("codec.log_star_partial_sums",),
    "machine: SELF_DELIM domain prefix-free": ("machine.domain_prefix_free",),
    "machine: Kraft sum of the domain <= 1": ("machine.kraft",),
    "machine: counting bound": ("machine.counting_bound",),
    "machine: K and C nonincreasing in t and L": ("machine.monotone_refinement",),
    "machine: determinism": ("machine.determinism",),
    "machine: C <= K": ("machine.c_le_k",),
    "machine: cache merge keeps Halted entries, idempotent, refuses mismatches": ("machine.cache_lifecycle",),
    "semimeasure: sum of m_t equals omega_t": ("semimeasure.omega_identity",),
    "semimeasure: m_t, omega_t, M_t nondecreasing": ("semimeasure.monotone_refinement",),
    "semimeasure: coding code prefix-free with lengths <= k + 3": ("semimeasure.coding_code",),
    "semimeasure: monotone table is a sequence semimeasure": ("semimeasure.seq_semimeasure",),
    "semimeasure: mixture bound and associativity": ("semimeasure.mixture",),
    "randomness: LLN test integrable": ("randomness.lln_integrable",),
    "randomness: integrable tables pass the ML check": ("randomness.integrable_implies_ml",),
    "randomness: bernoulli_extend preserves validity": ("randomness.bernoulli_extend",),
    "randomness: gap function sum with tail bound <= 1": ("randomness.gap_function",),
    "randomness: conservation identity": ("randomness.conservation",),
    "randomness: witness masses sum to <= 1": ("randomness.deficiency_kraft",),
    "randomness: separating_gp exact vs high precision": ("randomness.separating_cross_check",),
    "measures: relative entropy <= 0, zero iff equal": ("measures.kl_nonpositive",),
    "measures: entropy permutation invariant": ("measures.entropy_permutation",),
    "measures: distances are metrics": ("measures.metric_axioms",),
    "measures: Prokhorov and Wasserstein match brute force": ("measures.distance_oracles",),
    "measures: W <= (M+1) rho and rho^2 <= W": ("measures.w_rho_equivalence",),
    "measures: entropy <= expected complexity": ("measures.entropy_vs_complexity",),
    "measures: semimeasure validation": ("measures.semimeasure_validate",),
}


# -- running -------------------------------------------------------------------------------------


def _timed(name: str, fn: Callable[[], tuple[str, dict[str, str]]]) -> CheckRecord:
    start = time.perf_counter()
    try:
        status, values = fn()
    except Exception as exc:  # a crashing check is a failing check
        status, values = "fail", {"error": f"{type(exc).__name__}: {exc}"}
    if status not in STATUSES:
        raise ValueError(f"check {name} returned unknown status {status!r}")
    return CheckRecord(name, status, values, time.perf_counter() - start)


def _cache_path(cache_dir: Path, c: machine.EnumerationCache) -> Path:
    cond = c.condition or "none"
    return cache_dir / f"isa{c.isa}-{c.mode.value}-L{c.max_len}-t{c.budget}-c{cond}.tsv"


def load_caches(cache_dir: str | Path) -> int:
    """Register every cache file in ``cache_dir``; returns how many were loaded."""
    n = 0
    for path in sorted(Path(cache_dir).glob("*.tsv")):
        c = machine.load_cache(path)
        if c.isa == machine.ISA_VERSION:
            machine.register_cache(c)
            n += 1
    return n


def save_caches(cache_dir: str | Path) -> int:
    """Persist memoised enumerations not yet on disk."""
    d = Path(cache_dir)
    d.mkdir(parents=True, exist_ok=True)
    n = 0
    for c in machine.memoised():
        path = _cache_path(d, c)
        if not path.exists():
            machine.save_cache(c, path)
            n += 1
    return n


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Evaluate the configured checks and per-target statistics; write report files if configured."""
    cfg.validate()
    if cfg.cache_dir is not None and Path(cfg.cache_dir).is_dir():
        load_caches(cfg.cache_dir)
    names = list(CHECKS) if cfg.checks is None else list(cfg.checks)
    records = []
    for name in names:
        ctx = Context(cfg, name)
        records.append(_timed(name, lambda: CHECKS[name](ctx)))
    for x in cfg.targets:
        ctx = Context(cfg, f"target:{x}")
        records.append(_timed(ctx.name, lambda: ("report-only", _target_values(ctx, x))))
    for i, P in enumerate(cfg.distributions):
        ctx = Context(cfg, f"distribution:{i}")
        records.append(_timed(ctx.name, lambda: ("report-only", _distribution_values(ctx, P))))
    report = Report(cfg.id, tuple(records), cfg.to_dict())
    if cfg.report is not None:
        Path(cfg.report).write_text(report.to_json())
    if cfg.csv is not None:
        Path(cfg.csv).write_text(report.to_csv())
    if cfg.cache_dir is not None:
        save_caches(cfg.cache_dir)
    return report


def cache_merge(paths, out: str | Path | None = None) -> machine.EnumerationCache:
    """Merge cache files (same ISA version, mode and condition); optionally write the result."""
    caches = [machine.load_cache(p) for p in paths]
    isas = {c.isa for c in caches}
    if len(isas) > 1:
        raise machine.CacheMismatchError(f"ISA versions differ: {sorted(isas)}")
    merged = machine.merge_caches(caches)
    if out is not None:
        machine.save_cache(merged, out)
    return merged


def bundled_config(name: str) -> Path:
    return Path(__file__).parent / "configs" / f"{name}.json"
