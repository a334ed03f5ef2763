"""Prefix-free and universal codes.

Everything here works on bit strings (``str`` over ``'01'``) and exact
rationals. Interval constructions identify a string ``x`` of length ``n`` with
the binary interval ``[N / 2**n, (N + 1) / 2**n)`` where ``N`` is the integer
that ``x`` spells.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

from ait.bits import EMPTY, BitString, check_bits, format_dyadic, pow2
from ait.intervals import DEFAULT_BITS, Interval, log2_interval

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


class CodecError(ValueError):
    pass


class ParseError(CodecError):
    pass


class KraftError(CodecError):
    """Raised when requested lengths or weights overflow the unit interval."""

    def __init__(self, total: Fraction, what: str = "Kraft sum"):
        self.total = Fraction(total)
        super().__init__(f"{what} {self.total} exceeds 1")


# -- elementary string codes --------------------------------------------------


def beta(n: int) -> BitString:
    """Binary notation of ``n`` without leading zeros; ``beta(0) == '0'``."""
    if n < 0:
        raise CodecError("beta is defined on natural numbers")
    return format(n, "b")


def unbeta(x: BitString) -> int:
    if not x or (len(x) > 1 and x[0] == "0"):
        raise ParseError(f"{x!r} is not a canonical binary numeral")
    return int(x, 2)


def pad_terminate(x: BitString) -> BitString:
    """Follow every bit of ``x`` by 0, except the last, which is followed by 1."""
    check_bits(x)
    if not x:
        raise CodecError("pad_terminate is undefined on the empty string")
    return "".join(b + "0" for b in x[:-1]) + x[-1] + "1"


def parse_pad_terminated(p: BitString) -> tuple[BitString, BitString]:
    """Split ``p`` as ``pad_terminate(head) + rest``."""
    head = []
    for i in range(0, len(p), 2):
        if i + 1 >= len(p):
            break
        head.append(p[i])
        if p[i + 1] == "1":
            return "".join(head), p[i + 2:]
    raise ParseError(f"no terminating pair in {p!r}")


def wrap(x: BitString) -> BitString:
    """``110 x1 0 x2 0 ... xn 0 11``, length ``2|x| + 5``."""
    check_bits(x)
    return "110" + "".join(b + "0" for b in x) + "11"


def unwrap(p: BitString) -> tuple[BitString, BitString]:
    if not p.startswith("110"):
        raise ParseError("missing wrap header")
    body = []
    i = 3
    while True:
        if p[i:i + 2] == "11":
            return "".join(body), p[i + 2:]
        if i + 1 >= len(p) or p[i + 1] != "0":
            raise ParseError(f"malformed wrapped string {p!r}")
        body.append(p[i])
        i += 2


def length_prefix(x: BitString) -> BitString:
    """Self-delimiting code ``pad_terminate(beta(|x|)) + x``."""
    check_bits(x)
    return pad_terminate(beta(len(x))) + x


def length_prefix_nat(n: int) -> BitString:
    return length_prefix(beta(n))


def read_length_prefixed(p: BitString) -> tuple[BitString, BitString]:
    """Inverse of :func:`length_prefix` on a stream: returns ``(x, rest)``."""
    head, rest = parse_pad_terminated(p)
    n = unbeta(head)
    if len(rest) < n:
        raise ParseError(f"frame announces {n} bits, only {len(rest)} remain")
    return rest[:n], rest[n:]


def tuple_encode(xs: Sequence[BitString]) -> BitString:
    """Count frame followed by one length-prefixed frame per element."""
    return length_prefix_nat(len(xs)) + "".join(length_prefix(x) for x in xs)


def read_tuple(p: BitString) -> tuple[list[BitString], BitString]:
    count, rest = read_length_prefixed(p)
    k = unbeta(count)
    out = []
    for _ in range(k):
        x, rest = read_length_prefixed(rest)
        out.append(x)
    return out, rest


def tuple_decode(p: BitString) -> list[BitString]:
    xs, rest = read_tuple(p)
    if rest:
        raise ParseError(f"{len(rest)} trailing bits after tuple")
    return xs


# -- pairing ------------------------------------------------------------------


def pair(i: int, j: int) -> int:
    """Cantor pairing ``(i + j)(i + j + 1)/2 + j``."""
    if i < 0 or j < 0:
        raise CodecError("pair is defined on natural numbers")
    s = i + j
    return s * (s + 1) // 2 + j


def unpair(k: int) -> tuple[int, int]:
    if k < 0:
        raise CodecError("unpair is defined on natural numbers")
    w = (math.isqrt(8 * k + 1) - 1) // 2
    j = k - w * (w + 1) // 2
    return w - j, j


# -- Elias delta ----------------------------------------------------------------


def elias_gamma(n: int) -> BitString:
    if n < 1:
        raise CodecError("Elias codes need n >= 1")
    b = beta(n)
    return "0" * (len(b) - 1) + b


def elias_delta(n: int) -> BitString:
    if n < 1:
        raise CodecError("Elias codes need n >= 1")
    b = beta(n)
    return elias_gamma(len(b)) + b[1:]


def elias_delta_decode(p: BitString) -> tuple[int, BitString]:
    """Read one delta codeword from the front of ``p``; returns ``(n, rest)``."""
    z = len(p) - len(p.lstrip("0"))
    if 2 * z + 1 > len(p):
        raise ParseError("truncated Elias delta codeword")
    length = int(p[z:2 * z + 1], 2)
    start = 2 * z + 1
    if start + length - 1 > len(p):
        raise ParseError("truncated Elias delta codeword")
    return int("1" + p[start:start + length - 1], 2), p[start + length - 1:]


def elias_delta_length(n: int) -> int:
    lg = n.bit_length() - 1
    return lg + 2 * ((lg + 1).bit_length() - 1) + 1


# -- code books -------------------------------------------------------------------


def prefix_free_check(words: Sequence[BitString]) -> bool:
    # in sorted order any word that prefixes another prefixes its successor
    ws = sorted(words)
    return not any(b.startswith(a) for a, b in zip(ws, ws[1:]))


def kraft_total(lengths: Sequence[int]) -> Fraction:
    return sum((pow2(-n) for n in lengths), Fraction(0))


@dataclass(frozen=True)
class CodeBook:
    codewords: tuple[BitString, ...]
    labels: tuple[Hashable, ...]

    def __post_init__(self):
        if len(self.codewords) != len(self.labels):
            raise CodecError("codewords and labels differ in length")
        for w in self.codewords:
            check_bits(w)
        if not prefix_free_check(self.codewords):
            raise CodecError("code book is not prefix-free")

    @classmethod
    def from_words(cls, words: Sequence[BitString], labels: Sequence[Hashable] | None = None) -> "CodeBook":
        return cls(tuple(words), tuple(range(len(words)) if labels is None else labels))

    def __len__(self) -> int:
        return len(self.codewords)

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.codewords))

    def encode(self, label: Hashable) -> BitString:
        return self.codewords[self.labels.index(label)]

    def decode(self, p: BitString) -> tuple[Hashable, BitString]:
        for w, label in zip(self.codewords, self.labels):
            if p.startswith(w):
                return label, p[len(w):]
        raise ParseError("no codeword is a prefix of the input")

    def to_json(self) -> str:
        return json.dumps([{"label": lab, "codeword": w} for lab, w in zip(self.labels, self.codewords)])

    @classmethod
    def from_json(cls, text: str) -> "CodeBook":
        items = json.loads(text)
        return cls(tuple(d["codeword"] for d in items), tuple(d["label"] for d in items))


def kraft_sum(cb: CodeBook | Sequence[BitString]) -> Fraction:
    words = cb.codewords if isinstance(cb, CodeBook) else cb
    return kraft_total([len(w) for w in words])


def kraft_sum_str(cb: CodeBook) -> str:
    return format_dyadic(kraft_sum(cb))


def digits_to_str(value: int, ndigits: int, base: int) -> str:
    out = []
    for _ in range(ndigits):
        value, d = divmod(value, base)
        out.append(DIGITS[d])
    return "".join(reversed(out))


def leftmost_largest_subinterval(lo: Fraction, hi: Fraction, base: int = 2, min_digits: int = 0) -> str:
    """The word of the largest base-``base`` interval inside ``[lo, hi)``, leftmost on ties."""
    if not lo < hi:
        raise CodecError("empty interval")
    m = min_digits
    scale = base**m
    while True:
        j = math.ceil(lo * scale)
        if j + 1 <= hi * scale:
            return digits_to_str(j, m, base)
        m += 1
        scale *= base


def kraft_construct(lengths: Sequence[int]) -> CodeBook:
    """Prefix code with the given codeword lengths, by chopping adjacent intervals."""
    if any(n < 0 for n in lengths):
        raise CodecError("negative codeword length")
    total = kraft_total(lengths)
    if total > 1:
        raise KraftError(total)
    order = sorted(range(len(lengths)), key=lambda i: lengths[i])
    words: list[BitString] = [EMPTY] * len(lengths)
    left = Fraction(0)
    for i in order:
        n = lengths[i]
        # nondecreasing lengths keep every left end on the 2**-n grid
        words[i] = digits_to_str(int(left * (1 << n)), n, 2)
        left += pow2(-n)
    return CodeBook.from_words(words)


def shannon_fano(weights: Sequence[Fraction]) -> CodeBook:
    """Order-preserving prefix code with ``|p_j| <= -log w_j + 2``.

    Codeword ``j`` names the leftmost longest binary interval inside the
    ``j``-th of consecutive intervals of lengths ``w_j`` cut from ``[0, 1)``.
    The empty word is never used.
    """
    ws = [Fraction(w) for w in weights]
    if any(w <= 0 for w in ws):
        raise CodecError("weights must be positive")
    total = sum(ws, Fraction(0))
    if total > 1:
        raise KraftError(total, "weight sum")
    words = []
    left = Fraction(0)
    for w in ws:
        words.append(leftmost_largest_subinterval(left, left + w, 2, min_digits=1))
        left += w
    return CodeBook.from_words(words)


# -- base conversion ----------------------------------------------------------------


def _base_value(r: int, s: int, x: str) -> int:
    if not (2 <= r <= len(DIGITS) and 2 <= s <= len(DIGITS)):
        raise CodecError("bases must lie in 2..36")
    value = 0
    for ch in x:
        d = DIGITS.find(ch)
        if not 0 <= d < r:
            raise CodecError(f"invalid base-{r} digit {ch!r}")
        value = value * r + d
    return value


def cnv_max_len(r: int, s: int, n: int) -> int:
    """Largest ``m`` with ``s**m <= s * r**n``, i.e. ``m <= n log_s r + 1``."""
    m, S, top = 0, 1, s * r**n
    while S * s <= top:
        m, S = m + 1, S * s
    return m


def cnv_interval(r: int, s: int, x: str) -> str:
    """The leftmost largest base-``s`` interval inside the base-``r`` interval ``[x]_r``."""
    scale = r ** len(x)
    value = _base_value(r, s, x)
    return leftmost_largest_subinterval(Fraction(value, scale), Fraction(value + 1, scale), s)


def cnv(r: int, s: int, x: str) -> str:
    """Injective map from base-``r`` words to base-``s`` words with
    ``|cnv(x)| <= |x| log_s r + 1``.

    This is :func:`cnv_interval` whenever that word is short enough. Otherwise
    no base-``s`` interval of the allowed length ``m`` fits inside ``[x]_r``,
    and the word is the first ``m``-digit cell whose left end lies in ``[x]_r``.
    Since ``s**-m < r**-|x|`` those left ends are distinct, and no such cell
    lies inside any other ``[x']_r`` of the same length, so the map stays
    injective on each length.
    """
    n = len(x)
    z = cnv_interval(r, s, x)
    m = cnv_max_len(r, s, n)
    if len(z) <= m:
        return z
    R, S = r**n, s**m
    j = -(-_base_value(r, s, x) * S // R)
    return digits_to_str(j, m, s)


def cnv_bound_holds(r: int, s: int, x: str, z: str) -> bool:
    """``|z| log s <= |x| log r + log s`` in integer form ``s**|z| <= s * r**|x|``."""
    return s ** len(z) <= s * r ** len(x)


def cnv_batch(r: int, s: int, n: int, lo: int = 0, hi: int | None = None):
    """``cnv`` for the base-``r`` words of length ``n`` with values in ``[lo, hi)``.

    Returns numpy arrays ``(m, j)``: the image of the word with value ``N`` is
    the ``m``-digit base-``s`` word of value ``j``. Integer arithmetic only.
    """
    import numpy as np

    R = r**n
    hi = R if hi is None else hi
    if not 0 <= lo <= hi <= R:
        raise CodecError("value range outside the word domain")
    if s * R * R >= 2**62:
        raise CodecError("domain too large for 64-bit batch arithmetic")
    top = cnv_max_len(r, s, n)
    N = np.arange(lo, hi, dtype=np.int64)
    out_m = np.full(N.shape, top, dtype=np.int64)
    out_j = -((-N * s**top) // R)  # the fallback cell; overwritten where an interval fits
    # no base-s interval longer than r**-n fits, so start at the first m with s**m >= r**n
    m, S = 0, 1
    while S < R:
        m, S = m + 1, S * s
    todo = np.arange(N.size)
    while todo.size and m <= top:
        Nt = N[todo]
        j = (Nt * S + R - 1) // R
        fit = (j + 1) * R <= (Nt + 1) * S
        out_m[todo[fit]] = m
        out_j[todo[fit]] = j[fit]
        todo = todo[~fit]
        m, S = m + 1, S * s
    return out_m, out_j


# -- real-valued helpers -------------------------------------------------------------


def J(u: float) -> float:
    """``u + 2 log2 u`` for ``u >= 1``."""
    if u < 1:
        raise ValueError("J is defined for u >= 1")
    return u + 2 * math.log2(u)


# tower(j): 1, 2, 4, 16, 65536, ...; log2 iterated j times is > 0 iff n > tower(j - 1)
def _positive_log_terms(n: int) -> int:
    count, tower = 0, 1
    while n > tower:
        count += 1
        if tower.bit_length() > 64:
            break
        tower = 1 << tower
    return count


def _iterated_logs(n: int, bits: int) -> list[Interval]:
    """Enclosures of the positive iterated logarithms ``log n, log log n, ...``."""
    out: list[Interval] = []
    cur = Interval.exact(n)
    for _ in range(_positive_log_terms(n)):
        cur = log2_interval(cur, bits)
        out.append(cur)
    return out


def log_star(n: int, bits: int = DEFAULT_BITS) -> Interval:
    """``log n + log log n + ...`` summed over the positive terms."""
    if n < 1:
        raise ValueError("log* is defined for n >= 1")
    total = Interval.exact(0)
    for term in _iterated_logs(n, bits):
        total = total + term
    return total


def log_star_weight(n: int, bits: int = DEFAULT_BITS) -> Interval:
    """Enclosure of ``2**-log*(n)``, i.e. ``1 / (n * log n * ... )`` over all but the last term."""
    logs = _iterated_logs(n, bits)
    denom = Interval.exact(n) if logs else Interval.exact(1)
    for term in logs[:-1]:
        denom = denom * term
    return Interval(1 / denom.hi, 1 / denom.lo)


def log_star_partial_sum(N: int, width_bits: int = DEFAULT_BITS) -> Interval:
    """Enclosure of ``sum_{n <= N} 2**-log*(n)`` of width at most ``2**-width_bits``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    bits = width_bits + N.bit_length() + 8
    while True:
        total = Interval.exact(0)
        for n in range(1, N + 1):
            total = (total + log_star_weight(n, bits)).round_out(bits + 8)
        if total.width <= Fraction(1, 1 << width_bits):
            return total
        bits += 16
