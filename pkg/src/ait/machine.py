"""A toy bit-stream machine, exhaustive enumeration, and bounded complexities.

Programs are bit strings read left to right on demand. Instructions are 3-bit
opcodes, some followed by operand bits:

    000 HALT   001 OUT0   010 OUT1   011 CPYC (copy the rest of the condition)
    100 RPT k  (4 operand bits, big-endian; repeat the last output bit k times)
    101 RDC    (copy one condition bit)
    110 NOP    111 SKPZ b (1 operand bit; if b == 1 and the last output bit
                          is 0, skip the next instruction)

Each executed instruction costs one step; operand fetches and skipped
instructions are free. The machine has no backward jumps, so every run stops
after at most ``|p| / 3`` steps.

Three modes share the instruction set:

* ``SELF_DELIM``: bits are delivered on demand; ``p`` is in the domain iff the
  run executes HALT having consumed exactly ``|p|`` bits.
* ``END_MARKED``: running out of bits at an instruction boundary halts.
* ``MONOTONE``: as ``SELF_DELIM``, but the emission timeline is recorded.
"""

from __future__ import annotations

import enum
import functools
import threading
from collections import Counter, OrderedDict, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from ait.bits import EMPTY, BitString, check_bits, pow2, strings_up_to
from ait.codec import beta

ISA_VERSION = 1
MAX_ENUM_LEN = 22


class Mode(enum.Enum):
    SELF_DELIM = "sd"
    END_MARKED = "em"
    MONOTONE = "mono"

    @classmethod
    def parse(cls, s: "str | Mode") -> "Mode":
        if isinstance(s, Mode):
            return s
        return cls(s)


class Status(enum.Enum):
    HALTED = "H"
    FAULT = "F"
    OUT_OF_FUEL = "O"


class ResourceCapError(RuntimeError):
    def __init__(self, requested: int, cap: int):
        self.requested = requested
        self.cap = cap
        super().__init__(f"enumeration up to length {requested} refused: cap is {cap}")


class CacheMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class RunOutcome:
    status: Status
    output: BitString
    consumed: int
    steps: int
    reason: str = ""
    trace: tuple[tuple[int, int], ...] | None = None

    @property
    def halted(self) -> bool:
        return self.status is Status.HALTED


_OPERAND_BITS = {"100": 4, "111": 1}


def run(mode: Mode | str, program: BitString, condition: BitString = EMPTY, budget: int = 10_000) -> RunOutcome:
    """Execute ``program`` on ``condition`` for at most ``budget`` instructions."""
    mode = Mode.parse(mode)
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    p = program
    n = len(p)
    end_marked = mode is Mode.END_MARKED
    trace: list[tuple[int, int]] | None = [] if mode is Mode.MONOTONE else None
    out: list[str] = []
    pos = cpos = steps = 0

    def done(status: Status, reason: str = "") -> RunOutcome:
        return RunOutcome(status, "".join(out), pos, steps, reason, None if trace is None else tuple(trace))

    while True:
        if pos == n and end_marked:
            return done(Status.HALTED, "end of program")
        if steps >= budget:
            return done(Status.OUT_OF_FUEL)
        if pos + 3 > n:
            return done(Status.FAULT, "input exhausted" if pos == n else "truncated fetch")
        op = p[pos:pos + 3]
        pos += 3
        steps += 1
        emitted = False
        if op == "000":
            return done(Status.HALTED, "halt")
        elif op == "001":
            out.append("0")
            emitted = True
        elif op == "010":
            out.append("1")
            emitted = True
        elif op == "011":
            if cpos < len(condition):
                out.append(condition[cpos:])
                cpos = len(condition)
                emitted = True
        elif op == "100":
            if pos + 4 > n:
                return done(Status.FAULT, "truncated operand")
            k = int(p[pos:pos + 4], 2)
            pos += 4
            if not out:
                return done(Status.FAULT, "repeat on empty output")
            if k:
                out.append(out[-1][-1] * k)
                emitted = True
        elif op == "101":
            if cpos >= len(condition):
                return done(Status.FAULT, "condition exhausted")
            out.append(condition[cpos])
            cpos += 1
            emitted = True
        elif op == "111":
            if pos + 1 > n:
                return done(Status.FAULT, "truncated operand")
            b = p[pos]
            pos += 1
            if b == "1":
                if not out:
                    return done(Status.FAULT, "skip test on empty output")
                if out[-1][-1] == "0":
                    if pos == n and end_marked:
                        continue
                    if pos + 3 > n:
                        return done(Status.FAULT, "input exhausted" if pos == n else "truncated fetch")
                    skipped = p[pos:pos + 3]
                    pos += 3
                    extra = _OPERAND_BITS.get(skipped, 0)
                    if pos + extra > n:
                        return done(Status.FAULT, "truncated operand")
                    pos += extra
        # 110 NOP falls through
        if emitted and trace is not None:
            trace.append((pos, sum(map(len, out))))


def in_domain(mode: Mode, program: BitString, outcome: RunOutcome) -> bool:
    """Membership of ``program`` in the (bounded) domain of the machine."""
    return outcome.status is Status.HALTED and outcome.consumed == len(program)


@dataclass
class EnumerationCache:
    """Outcomes of every program of length ``<= max_len`` at one budget.

    Treated as read-only once built; derived indices are memoised.
    """

    mode: Mode
    max_len: int
    budget: int
    condition: BitString = EMPTY
    entries: dict[BitString, RunOutcome] = field(default_factory=dict)
    isa: int = ISA_VERSION

    @functools.cached_property
    def domain(self) -> list[BitString]:
        """Domain programs, shortest first then lexicographic."""
        return [p for p, o in self.entries.items() if in_domain(self.mode, p, o)]

    @functools.cached_property
    def shortest(self) -> dict[BitString, BitString]:
        """Output -> shortest domain program producing it (lexicographically first on ties)."""
        best: dict[BitString, BitString] = {}
        for p in sorted(self.domain, key=lambda q: (len(q), q)):
            best.setdefault(self.entries[p].output, p)
        return best

    @functools.cached_property
    def length_counts(self) -> dict[tuple[BitString, int], int]:
        """``(output, n) -> number of domain programs of length n with that output``."""
        return dict(Counter((self.entries[p].output, len(p)) for p in self.domain))

    def complexity(self, x: BitString) -> int | None:
        p = self.shortest.get(x)
        return None if p is None else len(p)

    def halted(self) -> dict[BitString, RunOutcome]:
        return {p: o for p, o in self.entries.items() if o.halted}

    def key(self) -> tuple:
        return (self.isa, self.mode, self.max_len, self.budget, self.condition)


def _check_cap(L: int, cap: int) -> None:
    if L > cap:
        raise ResourceCapError(L, cap)


def enumerate_programs(
    mode: Mode | str, max_len: int, budget: int, condition: BitString = EMPTY, cap: int = MAX_ENUM_LEN
) -> EnumerationCache:
    """Run every program of length ``<= max_len``.

    Results are memoised in-process by ``(isa, mode, L, t, condition)``;
    :func:`register_cache` seeds the memo from a persisted cache.
    """
    mode = Mode.parse(mode)
    if max_len < 0 or budget < 0:
        raise ValueError("max_len and budget must be nonnegative")
    _check_cap(max_len, cap)
    check_bits(condition)
    key = (ISA_VERSION, mode, max_len, budget, condition)
    with _MEMO_LOCK:
        hit = _MEMO.get(key)
        if hit is not None:
            _MEMO.move_to_end(key)
            return hit
    entries = {p: run(mode, p, condition, budget) for p in strings_up_to(max_len)}
    return register_cache(EnumerationCache(mode, max_len, budget, condition, entries))


_MEMO: OrderedDict[tuple, EnumerationCache] = OrderedDict()
_MEMO_LOCK = threading.Lock()
_MEMO_SIZE = 24


def register_cache(cache: EnumerationCache) -> EnumerationCache:
    """Make ``cache`` the answer for its key; returns the memoised instance."""
    with _MEMO_LOCK:
        cache = _MEMO.setdefault(cache.key(), cache)
        _MEMO.move_to_end(cache.key())
        while len(_MEMO) > _MEMO_SIZE:
            _MEMO.popitem(last=False)
    return cache


def memoised() -> list[EnumerationCache]:
    with _MEMO_LOCK:
        return list(_MEMO.values())


def clear_memo() -> None:
    with _MEMO_LOCK:
        _MEMO.clear()


# -- cache persistence --------------------------------------------------------------

_HEADER = "# ait-cache"


def save_cache(cache: EnumerationCache, path: str | Path) -> None:
    lines = [
        f"{_HEADER}\tisa={cache.isa}\tmode={cache.mode.value}\tL={cache.max_len}\tt={cache.budget}\tcond={cache.condition}"
    ]
    for p in sorted(cache.entries, key=lambda q: (len(q), q)):
        o = cache.entries[p]
        lines.append(f"{p}\t{o.status.value}\t{o.output}\t{o.consumed}\t{o.steps}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_cache(path: str | Path) -> EnumerationCache:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(_HEADER):
        raise ValueError(f"{path}: not an ait cache file")
    meta = dict(f.split("=", 1) for f in text[0].split("\t")[1:])
    entries = {}
    for line in text[1:]:
        if not line.strip():
            continue
        prog, status, output, consumed, steps = line.split("\t")
        entries[prog] = RunOutcome(Status(status), output, int(consumed), int(steps))
    return EnumerationCache(
        Mode(meta["mode"]), int(meta["L"]), int(meta["t"]), meta.get("cond", ""), entries, int(meta["isa"])
    )


def merge_caches(caches: Iterable[EnumerationCache]) -> EnumerationCache:
    """Union of caches; Halted entries win, otherwise the larger-budget entry wins."""
    caches = list(caches)
    if not caches:
        raise ValueError("nothing to merge")
    first = caches[0]
    for c in caches[1:]:
        if (c.isa, c.mode, c.condition) != (first.isa, first.mode, first.condition):
            raise CacheMismatchError(
                f"cannot merge caches with (isa, mode, cond) {(first.isa, first.mode.value, first.condition)}"
                f" and {(c.isa, c.mode.value, c.condition)}"
            )
    merged: dict[BitString, tuple[bool, int, RunOutcome]] = {}
    for c in caches:
        for p, o in c.entries.items():
            rank = (o.halted, c.budget)
            if p not in merged or rank > merged[p][:2]:
                merged[p] = (*rank, o)
    entries = {p: merged[p][2] for p in sorted(merged, key=lambda q: (len(q), q))}
    return EnumerationCache(
        first.mode,
        max(c.max_len for c in caches),
        max(c.budget for c in caches),
        first.condition,
        entries,
        first.isa,
    )


# -- bounded complexities -------------------------------------------------------------


def complexity_K(x: BitString, condition: BitString = EMPTY, L: int = 12, t: int = 10_000) -> int | None:
    """Length of the shortest self-delimiting program (``|p| <= L``) printing ``x`` within ``t`` steps."""
    return enumerate_programs(Mode.SELF_DELIM, L, t, condition).complexity(x)


def complexity_C(x: BitString, condition: BitString = EMPTY, L: int = 12, t: int = 10_000) -> int | None:
    """As :func:`complexity_K` for the end-marked machine."""
    return enumerate_programs(Mode.END_MARKED, L, t, condition).complexity(x)


def d0(x: BitString, L: int = 12, t: int = 10_000) -> int | None:
    """``|x| - C(x | |x|)``; a lower bound on the deficiency since ``C^t >= C``."""
    c = complexity_C(x, beta(len(x)), L, t)
    return None if c is None else len(x) - c


def stats_count_below(u: int, condition: BitString = EMPTY, L: int = 12, t: int = 10_000) -> int:
    """Number of objects whose bounded complexity is at most ``u``."""
    if u > L:
        raise ValueError("u must not exceed L")
    cache = enumerate_programs(Mode.SELF_DELIM, L, t, condition)
    return sum(1 for p in cache.shortest.values() if len(p) <= u)


def stats_fxn(x: BitString, n: int, L: int, t: int, condition: BitString = EMPTY) -> int:
    """Number of domain programs of length exactly ``n`` printing ``x``."""
    if n > L:
        raise ValueError("n must not exceed L")
    return enumerate_programs(Mode.SELF_DELIM, L, t, condition).length_counts.get((x, n), 0)


def stats_dn(n: int, L: int, t: int, condition: BitString = EMPTY) -> int:
    if n > L:
        raise ValueError("n must not exceed L")
    cache = enumerate_programs(Mode.SELF_DELIM, L, t, condition)
    return sum(1 for p in cache.domain if len(p) == n)


def kraft_of_domain(L: int, t: int, condition: BitString = EMPTY) -> Fraction:
    cache = enumerate_programs(Mode.SELF_DELIM, L, t, condition)
    return sum((pow2(-len(p)) for p in cache.domain), Fraction(0))


def stats_gn(n: int, L: int, t: int) -> int:
    """Number of objects of bounded complexity exactly ``n``."""
    cache = enumerate_programs(Mode.SELF_DELIM, L, t)
    return sum(1 for p in cache.shortest.values() if len(p) == n)


def stats_hn(n: int, c: int, L: int, t: int) -> Fraction:
    """Moving average of ``g`` over the window ``n - c .. n + c``."""
    if n < 0 or c < 0:
        raise ValueError("n and c must be nonnegative")
    hist: dict[int, int] = defaultdict(int)
    for p in enumerate_programs(Mode.SELF_DELIM, L, t).shortest.values():
        hist[len(p)] += 1
    return Fraction(sum(hist[i] for i in range(n - c, n + c + 1)), 2 * c + 1)


def kplus(n: int, L: int, t: int) -> int | None:
    """Running maximum of ``K(beta(k))`` over ``k <= n``; None if any term is undefined."""
    best = None
    for k in range(n + 1):
        v = complexity_K(beta(k), EMPTY, L, t)
        if v is None:
            return None
        best = v if best is None else max(best, v)
    return best
