"""Polynomials over GF(2) and arithmetic in GF(2^m).

A polynomial is stored as a non-negative integer whose bit ``i`` is the
coefficient of ``x^i``.  :class:`BinPoly` is a thin ``int`` subclass adding a
degree, a text form and exponent iteration; every function here accepts plain
ints as well and returns :class:`BinPoly`.

The field functions (:func:`gf_mul`, :func:`gf_inv`, ...) are deliberately
simple and serve as the classical oracle against which circuits are checked.
"""

from __future__ import annotations

import enum
import itertools
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .errors import ParseError, PatternParityMismatch, ZeroInverse, ZeroModulus

__all__ = [
    "BinPoly",
    "PatternKind",
    "PolyPattern",
    "Reducer",
    "find_pattern_polys",
    "format_poly",
    "gf_inv",
    "gf_mul",
    "gf_pow",
    "gf_sqr",
    "is_irreducible",
    "iter_pattern_candidates",
    "parse_poly",
    "poly_clsquare",
    "poly_divmod",
    "poly_gcd",
    "poly_mod",
    "poly_mul",
    "poly_shape",
    "small_irreducibles",
]


class BinPoly(int):
    """Polynomial over GF(2); bit ``i`` is the coefficient of ``x^i``."""

    def __new__(cls, value: int | str = 0):
        if isinstance(value, str):
            return parse_poly(value)
        if value < 0:
            raise ValueError("polynomial bit-vector must be non-negative")
        return super().__new__(cls, value)

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> "BinPoly":
        v = 0
        for e in exponents:
            v ^= 1 << e
        return cls(v)

    @property
    def degree(self) -> int | None:
        """Index of the highest set bit, or ``None`` for the zero polynomial."""
        return self.bit_length() - 1 if self else None

    def coeff(self, i: int) -> int:
        return (self >> i) & 1

    def exponents(self) -> list[int]:
        """Set exponents in descending order."""
        return sorted(_bits(self), reverse=True)

    @property
    def weight(self) -> int:
        return bin(self).count("1")

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"BinPoly('{format_poly(self)}')"


def _bits(v: int) -> Iterator[int]:
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


# ---------------------------------------------------------------------------
# text form


_TERM = re.compile(r"^(?:1|x|x\^(\d+))$")


def format_poly(p: int) -> str:
    if not p:
        return "0"
    terms = []
    for e in sorted(_bits(p), reverse=True):
        terms.append("1" if e == 0 else "x" if e == 1 else f"x^{e}")
    return "+".join(terms)


def parse_poly(text: str) -> BinPoly:
    """Parse ``x^163+x^7+x^6+x^3+1`` or a hex bit-vector ``0x...``.

    Repeated terms cancel, as they would in GF(2)[x].
    """
    s = "".join(text.split())
    if not s:
        raise ParseError("empty polynomial")
    if s.lower().startswith("0x"):
        try:
            return BinPoly(int(s, 16))
        except ValueError as exc:
            raise ParseError(f"bad hex polynomial {text!r}") from exc
    if s == "0":
        return BinPoly(0)
    v = 0
    for term in s.split("+"):
        m = _TERM.match(term)
        if m is None:
            raise ParseError(f"bad term {term!r} in {text!r}")
        e = 0 if term == "1" else 1 if term == "x" else int(m.group(1))
        v ^= 1 << e
    return BinPoly(v)


# ---------------------------------------------------------------------------
# GF(2)[x] arithmetic


def _clmul(a: int, b: int) -> int:
    if a.bit_length() < b.bit_length():
        a, b = b, a
    if not b:
        return 0
    if b.bit_length() <= 16 or bin(b).count("1") <= 12:
        r = 0
        for e in _bits(b):
            r ^= a << e
        return r
    # 4-bit windows over b
    table = [0] * 16
    for k in range(1, 16):
        low = k & -k
        table[k] = table[k ^ low] ^ (a << (low.bit_length() - 1))
    r = 0
    shift = 0
    while b:
        nib = b & 15
        if nib:
            r ^= table[nib] << shift
        b >>= 4
        shift += 4
    return r


_SPREAD_MASKS: dict[int, list[tuple[int, int]]] = {}


def _spread_masks(width: int) -> list[tuple[int, int]]:
    masks = _SPREAD_MASKS.get(width)
    if masks is None:
        masks = []
        full = (1 << (2 * width)) - 1
        s = width // 2
        while s >= 1:
            # ones in the low half of every 2s-bit block
            pattern = (1 << s) - 1
            span = 2 * s
            while span < 2 * width:
                pattern |= pattern << span
                span *= 2
            masks.append((s, pattern & full))
            s //= 2
        _SPREAD_MASKS[width] = masks
    return masks


def poly_clsquare(a: int) -> BinPoly:
    """Carry-less square: bit ``i`` of ``a`` moves to bit ``2i``."""
    n = a.bit_length()
    if n <= 1:
        return BinPoly(a)
    width = 1 << (n - 1).bit_length()
    x = a
    for s, mask in _spread_masks(width):
        x = (x | (x << s)) & mask
    return BinPoly(x)


def poly_mul(a: int, b: int) -> BinPoly:
    """Carry-less product of two polynomials."""
    return BinPoly(_clmul(a, b))


def _divmod(a: int, b: int) -> tuple[int, int]:
    if not b:
        raise ZeroModulus("division by the zero polynomial")
    db = b.bit_length()
    q = 0
    while True:
        shift = a.bit_length() - db
        if shift < 0:
            return q, a
        a ^= b << shift
        q |= 1 << shift


def poly_divmod(a: int, b: int) -> tuple[BinPoly, BinPoly]:
    q, r = _divmod(a, b)
    return BinPoly(q), BinPoly(r)


def poly_mod(a: int, p: int) -> BinPoly:
    """Remainder of ``a`` modulo ``p``; raises :class:`ZeroModulus` for p = 0."""
    if not p:
        raise ZeroModulus("reduction modulo the zero polynomial")
    if a.bit_length() < p.bit_length():
        return BinPoly(a)
    return BinPoly(Reducer(p).reduce(a))


def _gcd(a: int, b: int) -> int:
    while b:
        db = b.bit_length()
        while a.bit_length() >= db:
            a ^= b << (a.bit_length() - db)
        a, b = b, a
    return a


def poly_gcd(a: int, b: int) -> BinPoly:
    return BinPoly(_gcd(a, b))


def _runs(v: int) -> list[tuple[int, int]]:
    """Maximal runs of set bits as ``(start, length)`` pairs."""
    out = []
    while v:
        start = (v & -v).bit_length() - 1
        shifted = v >> start
        length = (~shifted & (shifted + 1)).bit_length() - 1
        out.append((start, length))
        v ^= ((1 << length) - 1) << start
    return out


def _mul_run(a: int, length: int) -> int:
    """``a * (1 + x + ... + x^(length-1))`` by block doubling."""
    res = 0
    offset = 0
    block = a
    size = 1
    while length:
        if length & 1:
            res ^= block << offset
            offset += size
        length >>= 1
        if length:
            block ^= block << size
            size <<= 1
    return res


class Reducer:
    """Fast reduction modulo a fixed polynomial.

    The part of ``p`` below its leading term is stored as runs of consecutive
    exponents, so the fold ``hi * (p - x^m)`` costs a few shifts per run
    rather than one per term.  Sparse and run-structured moduli (the shapes
    the circuit constructions want) reduce in a handful of big-int operations.
    """

    __slots__ = ("p", "m", "mask", "runs")

    def __init__(self, p: int):
        if not p:
            raise ZeroModulus("reduction modulo the zero polynomial")
        self.p = p
        self.m = p.bit_length() - 1
        self.mask = (1 << self.m) - 1
        self.runs = _runs(p & self.mask)

    def reduce(self, r: int) -> int:
        m, mask, runs = self.m, self.mask, self.runs
        if m == 0:
            return 0
        while r >> m:
            hi = r >> m
            r &= mask
            for start, length in runs:
                if length == 1:
                    r ^= hi << start
                else:
                    r ^= _mul_run(hi, length) << start
        return r

    def mul(self, a: int, b: int) -> int:
        return self.reduce(_clmul(a, b))

    def sqr(self, a: int) -> int:
        return self.reduce(poly_clsquare(a))


# ---------------------------------------------------------------------------
# GF(2^m)


def gf_mul(a: int, b: int, p: int) -> BinPoly:
    """Field product ``a*b mod p``."""
    return BinPoly(Reducer(p).mul(a, b))


def gf_sqr(a: int, p: int) -> BinPoly:
    return BinPoly(Reducer(p).sqr(a))


def gf_pow(a: int, e: int, p: int) -> BinPoly:
    if e < 0:
        raise ValueError("negative exponent")
    red = Reducer(p)
    result = red.reduce(1)
    base = red.reduce(a)
    while e:
        if e & 1:
            result = red.mul(result, base)
        e >>= 1
        if e:
            base = red.sqr(base)
    return BinPoly(result)


def gf_inv(b: int, p: int) -> BinPoly:
    """Inverse of ``b`` in GF(2)[x]/p as ``b^(2^m - 2)``."""
    red = Reducer(p)
    b = red.reduce(b)
    if not b:
        raise ZeroInverse("zero has no multiplicative inverse")
    return gf_pow(b, (1 << red.m) - 2, p)


# ---------------------------------------------------------------------------
# irreducibility


def _naive_irreducible(p: int) -> bool:
    d = p.bit_length() - 1
    if d < 1:
        return False
    for q in range(2, 1 << (d // 2 + 1)):
        if _divmod(p, q)[1] == 0:
            return False
    return True


@lru_cache(maxsize=None)
def small_irreducibles(count: int = 100) -> tuple[BinPoly, ...]:
    """First ``count`` irreducible polynomials ordered by degree, then value."""
    found: list[int] = []
    q = 2
    while len(found) < count:
        if all(_divmod(q, f)[1] for f in found if 2 * (f.bit_length() - 1) <= q.bit_length() - 1):
            found.append(q)
        q += 1
    return tuple(BinPoly(f) for f in found)


@lru_cache(maxsize=None)
def _prefilter_tables(count: int = 100):
    """Per small irreducible ``q``: prefix sums ``sum_{i<k} x^i mod q`` over
    one period of ``x``.  The full-period sum vanishes, so the table is
    periodic and any run of exponents costs two lookups."""
    tables = []
    for q in small_irreducibles(count):
        if q <= 3:
            continue  # x and x+1 are handled directly
        red = Reducer(q)
        prefix = [0]
        cur = 1
        while True:
            prefix.append(prefix[-1] ^ cur)
            cur = red.reduce(cur << 1)
            if cur == 1:
                break
        order = len(prefix) - 1
        tables.append((int(q), prefix[:order], order))
    return tuple(tables)


def _has_small_factor(p: int) -> bool:
    """True if ``p`` has an irreducible factor among the small ones (and is
    not that factor itself)."""
    if not p & 1:
        return p != 2  # divisible by x
    if bin(p).count("1") % 2 == 0:
        return p != 3  # divisible by x+1
    runs = _runs(p)
    for q, prefix, order in _prefilter_tables():
        if p == q:
            return False
        if q.bit_length() >= p.bit_length():
            break
        r = 0
        for start, length in runs:
            r ^= prefix[start % order] ^ prefix[(start + length) % order]
        if not r:
            return True
    return False


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(p: int) -> bool:
    """Irreducibility over GF(2).

    Trial division by the 100 smallest irreducibles, then Rabin's test:
    ``x^(2^m) = x (mod p)`` and ``gcd(x^(2^(m/q)) - x, p) = 1`` for every
    prime ``q | m``.
    """
    m = p.bit_length() - 1
    if m < 1:
        raise ValueError("irreducibility is defined for degree >= 1")
    if m == 1:
        return True
    if _has_small_factor(p):
        return False
    red = Reducer(p)
    checkpoints = {m // q for q in _prime_factors(m)}
    r = 2
    for i in range(1, m + 1):
        r = red.reduce(poly_clsquare(r))
        if i in checkpoints and _gcd(p, r ^ 2) != 1:
            return False
    return r == 2


# ---------------------------------------------------------------------------
# pattern-constrained search


class PatternKind(enum.Enum):
    EVEN_TRINOMIAL = "even-trinomial"
    EVEN_CLUSTERED = "even-clustered"
    ODD_TRINOMIAL = "odd-trinomial"
    ODD_GENERAL = "odd-general"
    ODD_RUNS = "odd-runs"
    DIVISION_FRIENDLY = "division-friendly"


_PARITY = {
    PatternKind.EVEN_TRINOMIAL: 0,
    PatternKind.EVEN_CLUSTERED: 0,
    PatternKind.ODD_TRINOMIAL: 1,
    PatternKind.ODD_GENERAL: 1,
    PatternKind.ODD_RUNS: 1,
    PatternKind.DIVISION_FRIENDLY: None,
}


@dataclass(frozen=True)
class PolyPattern:
    """Shape of the irreducible polynomials a construction wants.

    ``terms`` is the number of middle exponents for the clustered, general
    and division-friendly kinds (``None`` lets the search try 3, 5, ...
    for the first two and 2, 4, ... for the last).  ``max_spread`` bounds
    ``l_1 - l_k`` for the clustered kind.
    """

    kind: PatternKind
    terms: int | None = None
    max_spread: int = 8

    @classmethod
    def of(cls, kind: str | PatternKind, **params) -> "PolyPattern":
        if isinstance(kind, str):
            key = kind.strip().lower().replace("_", "-")
            for k in PatternKind:
                if key in (k.value, k.value.replace("-", "")):
                    kind = k
                    break
            else:
                raise ValueError(f"unknown pattern {kind!r}")
        return cls(kind, **params)


def _descending(k: int, lo: int, hi: int) -> Iterator[tuple[int, ...]]:
    """Tuples ``hi > t_1 > ... > t_k >= lo`` in ascending lexicographic order."""
    if k == 0:
        yield ()
        return
    for top in range(lo + k - 1, hi):
        for rest in _descending(k - 1, lo, top):
            yield (top,) + rest


def _term_counts(pattern: PolyPattern, start: int) -> Iterable[int]:
    if pattern.terms is not None:
        return (pattern.terms,)
    return itertools.count(start, 2)


def iter_pattern_candidates(m: int, pattern: PolyPattern) -> Iterator[tuple[int, list[int]]]:
    """Yield ``(poly, exponents)`` for every candidate in enumeration order.

    Within one term count candidates ascend by value, i.e. lexicographically
    on the descending tuple of free exponents.  Clustered candidates are
    ordered by ``l_1 - l_k`` first, so the tightest clusters come first.
    """
    parity = _PARITY[pattern.kind]
    if parity is not None and m % 2 != parity:
        raise PatternParityMismatch(f"{pattern.kind.value} needs {'odd' if parity else 'even'} m, got {m}")
    n = m // 2
    top = 1 << m
    kind = pattern.kind

    def emit(exps):
        v = top | 1
        for e in exps:
            v ^= 1 << e
        return v, [m, *exps, 0]

    if kind in (PatternKind.EVEN_TRINOMIAL, PatternKind.ODD_TRINOMIAL):
        # odd m admits l = n, where 1 + x^(n+1) collapses to x^(-n)
        hi = n + 1 if kind is PatternKind.ODD_TRINOMIAL else n
        for l in range(1, hi):
            yield emit([l])
    elif kind is PatternKind.EVEN_CLUSTERED:
        for k in _term_counts(pattern, 3):
            if k > n - 1:
                return
            # tightest clusters first, then ascending value
            for spread in range(k - 1, pattern.max_spread + 1):
                for low in range(1, n - spread):
                    for inner in _descending(k - 2, low + 1, low + spread):
                        yield emit([low + spread, *inner, low])
            if pattern.terms is None and k > pattern.max_spread:
                return
    elif kind is PatternKind.ODD_GENERAL:
        for k in _term_counts(pattern, 3):
            if k > n - 1:
                return
            for exps in _descending(k, 1, n):
                yield emit(list(exps))
    elif kind is PatternKind.ODD_RUNS:
        # x^m + (x^(n-1) + ... + x^(n-l1)) + (x^l2 + ... + 1), n - l1 > l2
        for l1 in range(0, n + 1):
            for l2 in range(0, n - l1):
                high = list(range(n - 1, n - l1 - 1, -1))
                low = list(range(l2, 0, -1))
                if not high and not low:
                    continue
                yield emit(high + low)
    elif kind is PatternKind.DIVISION_FRIENDLY:
        # x^m + x + 1 + sum x^(2 l_i) with 1 <= l_k < ... < l_1
        for k in _term_counts(pattern, 2):
            if 2 * k + 2 > m:
                return
            for ls in _descending(k, 1, (m + 1) // 2):
                evens = [2 * l for l in ls]
                if evens[0] >= m:
                    continue
                yield emit(evens + [1])
    else:  # pragma: no cover
        raise ValueError(kind)


def _irreducible_with_exps(item: tuple[int, list[int]]) -> bool:
    return is_irreducible(item[0])


def find_pattern_polys(m: int, pattern: PolyPattern, limit: int = 5, jobs: int = 1,
                       max_candidates: int | None = None) -> list[BinPoly]:
    """First ``limit`` irreducible polynomials of the given shape.

    Results follow the deterministic candidate order of
    :func:`iter_pattern_candidates` regardless of ``jobs``.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    found: list[BinPoly] = []
    candidates = iter_pattern_candidates(m, pattern)
    if max_candidates is not None:
        candidates = itertools.islice(candidates, max_candidates)
    if jobs <= 1:
        for item in candidates:
            if _irreducible_with_exps(item):
                found.append(BinPoly(item[0]))
                if len(found) >= limit:
                    break
        return found
    batch = 64 * jobs
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        while len(found) < limit:
            chunk = list(itertools.islice(candidates, batch))
            if not chunk:
                break
            for item, ok in zip(chunk, pool.map(_irreducible_with_exps, chunk)):
                if ok and len(found) < limit:
                    found.append(BinPoly(item[0]))
    return found


def poly_shape(p: int) -> tuple[int, list[int]]:
    """``(m, [l_1, ..., l_k])``: degree and the middle exponents, descending."""
    exps = BinPoly(p).exponents()
    return exps[0], [e for e in exps[1:] if e != 0]
