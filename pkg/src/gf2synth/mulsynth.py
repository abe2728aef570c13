"""Ancilla-free multipliers for GF(2^m) and GF(2)[x].

Registers are ``a`` and ``b`` (operands, restored) and ``c`` (target).  The
recursive constructions add unreduced sub-products into slices of the
target and move the target between additions with invertible linear maps,
so no scratch wires are needed.  Inside the recursion the maps are
truncated power-series multiplications; at the reduced top level they are
multiplications modulo the field polynomial.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .bitmatrix import BitMatrix
from .circuit import (
    CNOT_KIND,
    SWAP_KIND,
    TOF_KIND,
    Circuit,
    CircuitBuilder,
    CostModel,
    CostReport,
    Gate,
    Role,
    absorb_permutation,
    cost,
    defer_swaps,
    peephole_optimize,
    permutation_swaps,
)
from .constmul import synth_constmul
from .errors import FormulaInvalid, ParseError, UnsupportedGate
from .linalg2 import lu_synth, pmh_synth
from .polyfield import poly_divmod, poly_gcd, poly_mod, poly_mul, poly_shape

__all__ = [
    "FORMULA_K2",
    "FORMULA_K3",
    "BUILTIN_FORMULAS",
    "KaratsubaFormula",
    "MulPlan",
    "PCTOF",
    "ToomPointSet",
    "TOOM3_POINTS",
    "apply_pctofs",
    "format_formulas",
    "load_formulas",
    "multiplier_registers",
    "pareto_front",
    "parse_formulas",
    "pctof_extract",
    "pctof_optimize",
    "pctof_recompose",
    "pctof_reduce",
    "plan_costs",
    "synth_karatsuba",
    "synth_karatsuba_like",
    "synth_mastrovito",
    "synth_toom3",
    "toom3_toffoli_count",
]


def _bits(v: int) -> Iterable[int]:
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


# ---------------------------------------------------------------------------
# bilinear formulas


@dataclass(frozen=True)
class KaratsubaFormula:
    """``C = R[(T A) o (T B)]`` for operands split into ``k`` pieces.

    ``T`` has one int per product (bit ``i`` = piece ``i`` enters it) and
    ``R`` one int per output piece (bit ``j`` = product ``j`` feeds it).
    The bilinear identity is checked on construction.
    """

    k: int
    T: tuple[int, ...]
    R: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        k, p = self.k, len(self.T)
        if k < 2 or p == 0:
            raise FormulaInvalid("need k >= 2 and at least one product")
        if len(self.R) != 2 * k - 1:
            raise FormulaInvalid(f"R needs {2 * k - 1} rows, got {len(self.R)}")
        if any(t <= 0 or t >> k for t in self.T) or any(r < 0 or r >> p for r in self.R):
            raise FormulaInvalid("matrix entries out of range")
        for d in range(2 * k - 1):
            for i1 in range(k):
                for i2 in range(k):
                    acc = 0
                    for j in _bits(self.R[d]):
                        acc ^= (self.T[j] >> i1) & (self.T[j] >> i2) & 1
                    if acc != (i1 + i2 == d):
                        raise FormulaInvalid(
                            f"{self.name or 'formula'}: coefficient of A{i1}B{i2} in C{d} is wrong")

    @property
    def p(self) -> int:
        return len(self.T)

    def column_poly(self, j: int) -> int:
        """How product ``j`` enters the result, as a polynomial in ``y = x^n``."""
        return sum(((r >> j) & 1) << d for d, r in enumerate(self.R))

    def terms(self) -> list[tuple[int, int, int]]:
        """``(product, shift, base)`` with column = ``y^shift * base`` and
        ``base(0) = 1``; unused products are skipped."""
        out = []
        for j in range(self.p):
            col = self.column_poly(j)
            if col:
                s = (col & -col).bit_length() - 1
                out.append((j, s, col >> s))
        return out


FORMULA_K2 = KaratsubaFormula(2, (0b01, 0b11, 0b10), (0b001, 0b111, 0b100), "karatsuba-2")
# A0B0, A1B1, A2B2, (A0+A1)(B0+B1), (A0+A2)(B0+B2), (A1+A2)(B1+B2)
FORMULA_K3 = KaratsubaFormula(
    3,
    (0b001, 0b010, 0b100, 0b011, 0b101, 0b110),
    (0b000001, 0b001011, 0b010111, 0b100110, 0b000100),
    "karatsuba-3",
)
BUILTIN_FORMULAS = (FORMULA_K2, FORMULA_K3)


def parse_formulas(text: str) -> list[KaratsubaFormula]:
    """Read blocks ``K k P p`` followed by ``p`` rows of ``k`` bits (T) and
    ``2k-1`` rows of ``p`` bits (R).  Blank lines and ``#`` comments are ignored."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].split()
        if body:
            lines.append((lineno, body))
    out = []
    pos = 0

    def bits_row(expected: int) -> int:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("formula truncated")
        lineno, toks = lines[pos]
        pos += 1
        if len(toks) != expected or any(t not in ("0", "1") for t in toks):
            raise ParseError(f"expected {expected} bits", lineno)
        return sum(int(t) << i for i, t in enumerate(toks))

    while pos < len(lines):
        lineno, toks = lines[pos]
        pos += 1
        if len(toks) != 4 or toks[0].upper() != "K" or toks[2].upper() != "P":
            raise ParseError("expected header 'K <k> P <p>'", lineno)
        try:
            k, p = int(toks[1]), int(toks[3])
        except ValueError:
            raise ParseError("non-integer k or p", lineno) from None
        if k < 2 or p < 1:
            raise ParseError("k must be >= 2 and p >= 1", lineno)
        T = tuple(bits_row(k) for _ in range(p))
        R = tuple(bits_row(p) for _ in range(2 * k - 1))
        out.append(KaratsubaFormula(k, T, R, f"file-k{k}-p{p}"))
    return out


def load_formulas(path: str | Path) -> list[KaratsubaFormula]:
    return parse_formulas(Path(path).read_text())


def format_formulas(formulas: Iterable[KaratsubaFormula]) -> str:
    chunks = []
    for f in formulas:
        rows = [f"K {f.k} P {f.p}"]
        rows += [" ".join(str((t >> i) & 1) for i in range(f.k)) for t in f.T]
        rows += [" ".join(str((r >> j) & 1) for j in range(f.p)) for r in f.R]
        chunks.append("\n".join(rows))
    return "\n\n".join(chunks) + "\n"


# ---------------------------------------------------------------------------
# recursion plans


def _piece_sizes(n_total: int, k: int) -> list[int] | None:
    n = _ceil_div(n_total, k)
    last = n_total - (k - 1) * n
    if last < 1:
        return None
    return [n] * (k - 1) + [last]


def _product_sizes(f: KaratsubaFormula, sizes: list[int]) -> list[int]:
    return [sizes[(t & -t).bit_length() - 1] for t in f.T]


def _fits_unreduced(f: KaratsubaFormula, n_total: int) -> bool:
    sizes = _piece_sizes(n_total, f.k)
    if sizes is None:
        return False
    n, span = sizes[0], 2 * n_total - 1
    psize = _product_sizes(f, sizes)
    return all(s * n + 2 * psize[j] - 1 <= span for j, s, _ in f.terms())


def _fits_reduced(f: KaratsubaFormula, m: int) -> bool:
    sizes = _piece_sizes(m, f.k)
    return sizes is not None and 2 * sizes[0] - 1 <= m


def _adds_cost(f: KaratsubaFormula, sizes: list[int]) -> int:
    """CNOTs for forming and unforming every product's operand sums."""
    total = 0
    for t in f.T:
        dest = (t & -t).bit_length() - 1
        total += 4 * sum(sizes[i] for i in _bits(t) if i != dest)
    return total


def _series_gates(g: int, step: int, length: int) -> int:
    """CNOTs to multiply a length-``length`` register by ``g(x^step)`` mod x^length."""
    return sum(max(0, length - d * step) for d in _bits(g) if d)


SCHOOLBOOK = 0  # plan code for the quadratic product
LEAF = 1        # single Toffoli


@dataclass(frozen=True)
class MulPlan:
    """Chosen split per sub-product size.

    ``top`` is the formula index used at the reduced level (``SCHOOLBOOK``
    for Mastrovito); ``inner`` maps each unreduced size to a formula index
    or to ``SCHOOLBOOK``/``LEAF``.  Formula indices are offset by 2.
    """

    m: int
    top: int
    inner: dict[int, int] = field(compare=False)
    formulas: tuple[KaratsubaFormula, ...] = field(compare=False)

    def formula(self, code: int) -> KaratsubaFormula | None:
        return self.formulas[code - 2] if code >= 2 else None

    def k_sequence(self) -> list[int]:
        """Split counts along the branch that always follows the largest piece."""
        seq = []
        f = self.formula(self.top)
        if f is None:
            return [self.m]
        size = _piece_sizes(self.m, f.k)[0]
        seq.append(f.k)
        while size > 1:
            f = self.formula(self.inner[size])
            if f is None:
                seq.append(size)
                break
            seq.append(f.k)
            size = _piece_sizes(size, f.k)[0]
        return seq


def _weighted(model: CostModel, tof: int, cnot: int):
    return model.toffoli_weight * tof + model.cnot_weight * cnot


def _unreduced_table(nmax: int, formulas: Sequence[KaratsubaFormula], model: CostModel,
                     schoolbook_max: int, forced: Callable[[int], int | None] | None = None,
                     ) -> dict[int, tuple[int, int, int]]:
    """Best ``(code, toffoli, cnot)`` for every unreduced size up to ``nmax``."""
    table: dict[int, tuple[int, int, int]] = {1: (LEAF, 1, 0)}
    for size in range(2, nmax + 1):
        options = []
        if size <= schoolbook_max:
            options.append((SCHOOLBOOK, size * size, 0))
        for idx, f in enumerate(formulas):
            if not _fits_unreduced(f, size):
                continue
            sizes = _piece_sizes(size, f.k)
            tof = cnot = 0
            for s in _product_sizes(f, sizes):
                tof += table[s][1]
                cnot += table[s][2]
            cnot += _adds_cost(f, sizes)
            span = 2 * size - 1
            for g in {g for _, _, g in f.terms() if g != 1}:
                cnot += 2 * _series_gates(g, sizes[0], span)
            options.append((idx + 2, tof, cnot))
        if not options:
            raise ValueError(f"no formula or base case covers size {size}")
        want = forced(size) if forced else None
        pick = [o for o in options if o[0] == want] if want is not None else []
        table[size] = pick[0] if pick else min(
            options, key=lambda o: (_weighted(model, o[1], o[2]), o[1], o[0]))
    return table


# ---------------------------------------------------------------------------
# linear maps on the reduced target


class _FieldMaps:
    """Cached CNOT circuits for multiplication by constants mod ``p``."""

    def __init__(self, m: int, p: int):
        self.m, self.p = m, p
        self.mids = poly_shape(p)[1]
        self._cache: dict[int, Circuit] = {}

    def shift_cost(self, steps: int) -> int:
        return abs(steps) * len(self.mids)

    def mul(self, g: int) -> Circuit:
        g = poly_mod(g, self.p)
        if g not in self._cache:
            m = self.m
            half = (m + 1) // 2
            if half < m and g == 1 | (1 << half):
                c = synth_constmul(m, self.p, model=CostModel(free_permutation=True))
            else:
                cols = [poly_mod(poly_mul(g, 1 << j), self.p) for j in range(m)]
                mat = BitMatrix.from_columns(cols, m)
                c = min((pmh_synth(mat), lu_synth(mat)), key=len)
            self._cache[g] = c
        return self._cache[g]

    def mul_cost(self, g: int) -> int:
        g = poly_mod(g, self.p)
        return 0 if g == 1 else cost(self.mul(g), CostModel(free_permutation=True)).cnot


# ---------------------------------------------------------------------------
# circuit emission


class _Emitter:
    def __init__(self, width_regs: list[tuple[str, int, Role]]):
        self.cb = CircuitBuilder()
        self.regs = [self.cb.add_register(name, n, role) for name, n, role in width_regs]
        self.gates = self.cb.gates

    # target-register maps ------------------------------------------------

    def series_mul(self, h: Sequence[int], g: int, step: int, inverse: bool = False) -> None:
        gates = []
        exps = [d * step for d in _bits(g) if d]
        for i in range(len(h) - 1, -1, -1):
            for e in exps:
                if i - e >= 0:
                    gates.append(Gate(CNOT_KIND, h[i - e], h[i]))
        if inverse:
            gates.reverse()
        self.gates.extend(gates)

    def field_shift(self, t: Sequence[int], mids: Sequence[int], steps: int) -> None:
        """Multiply the reduced target by ``x^steps`` (negative allowed)."""
        if not steps:
            return
        m = len(t)
        pos = list(range(m))  # pos[i]: local wire holding coefficient i
        for _ in range(abs(steps)):
            if steps > 0:
                pos = [pos[-1]] + pos[:-1]
                for e in mids:
                    self.gates.append(Gate(CNOT_KIND, t[pos[0]], t[pos[e]]))
            else:
                for e in mids:
                    self.gates.append(Gate(CNOT_KIND, t[pos[0]], t[pos[e]]))
                pos = pos[1:] + [pos[0]]
        for g in permutation_swaps(pos):
            self.gates.append(Gate(SWAP_KIND, t[g.a], t[g.b]))

    def linear(self, c: Circuit, wires: Sequence[int], inverse: bool = False) -> None:
        gates = reversed(c.gates) if inverse else c.gates
        for g in gates:
            self.gates.append(Gate(g.kind, wires[g.a], wires[g.b]))

    # products -------------------------------------------------------------

    def operand_sum(self, a: Sequence[int], sizes: list[int], support: int) -> tuple[list[int], list[Gate]]:
        n = sizes[0]
        dest = (support & -support).bit_length() - 1
        adds = []
        for i in _bits(support):
            if i != dest:
                adds += [Gate(CNOT_KIND, a[i * n + q], a[dest * n + q]) for q in range(sizes[i])]
        return list(a[dest * n: dest * n + sizes[dest]]), adds

    def schoolbook(self, a: Sequence[int], b: Sequence[int], h: Sequence[int]) -> None:
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                self.gates.append(Gate(TOF_KIND, ai, bj, h[i + j]))

    def unreduced(self, a: Sequence[int], b: Sequence[int], h: Sequence[int],
                  choose: Callable[[int], int], formulas: Sequence[KaratsubaFormula]) -> None:
        size = len(a)
        code = choose(size)
        if code == LEAF:
            self.gates.append(Gate(TOF_KIND, a[0], b[0], h[0]))
            return
        if code == SCHOOLBOOK:
            self.schoolbook(a, b, h)
            return
        f = formulas[code - 2]
        sizes = _piece_sizes(size, f.k)
        n = sizes[0]
        span = h[:2 * size - 1]
        groups: dict[int, list[tuple[int, int]]] = {}
        for j, s, g in f.terms():
            groups.setdefault(g, []).append((j, s))
        for g in sorted(groups):
            if g != 1:
                self.series_mul(span, g, n, inverse=True)
            for j, s in groups[g]:
                self.product(a, b, sizes, f.T[j], span[s * n:], choose, formulas)
            if g != 1:
                self.series_mul(span, g, n)

    def product(self, a, b, sizes, support, h, choose, formulas) -> None:
        fa, adds_a = self.operand_sum(a, sizes, support)
        fb, adds_b = self.operand_sum(b, sizes, support)
        undo = adds_a + adds_b
        self.gates.extend(undo)
        self.unreduced(fa, fb, h[:2 * len(fa) - 1], choose, formulas)
        self.gates.extend(reversed(undo))

    def build(self) -> Circuit:
        return self.cb.build()


def multiplier_registers(m: int, target: int | None = None) -> list[tuple[str, int, Role]]:
    return [("a", m, Role.INPUT_A), ("b", m, Role.INPUT_B),
            ("c", m if target is None else target, Role.TARGET)]


def _finish(c: Circuit, model: CostModel, optimize: bool) -> Circuit:
    c = defer_swaps(c)
    if optimize:
        c = peephole_optimize(c)
    if model.free_permutation:
        return c
    folded = absorb_permutation(c)
    if optimize:
        folded = peephole_optimize(folded)
    return folded if cost(folded, model).cnot < cost(c, model).cnot else c


# ---------------------------------------------------------------------------
# Mastrovito


def synth_mastrovito(m: int, p: int, model: CostModel | None = None) -> Circuit:
    """Schoolbook multiplier ``|a,b,c> -> |a,b,c+ab>`` with ``m^2`` Toffolis.

    Horner's rule on ``a``: the target is pre-multiplied by ``x^-(m-1)``
    and multiplied by ``x`` between rows, so each partial product lands on a
    single wire.
    """
    deg, mids = poly_shape(p)
    if deg != m:
        raise ValueError(f"polynomial degree must equal m = {m}")
    em = _Emitter(multiplier_registers(m))
    a, b, t = (list(r.wires) for r in em.regs)
    em.field_shift(t, mids, -(m - 1))
    for i in range(m - 1, -1, -1):
        for j in range(m):
            em.gates.append(Gate(TOF_KIND, a[i], b[j], t[j]))
        if i:
            em.field_shift(t, mids, 1)
    return _finish(em.build(), model or CostModel(), optimize=False)


# ---------------------------------------------------------------------------
# Karatsuba family


def _order_cost(order, n: int, maps: _FieldMaps, out_of_place: bool) -> int:
    y = lambda g: sum(1 << (d * n) for d in _bits(g))  # noqa: E731
    total = 0
    if out_of_place:
        _, s0, g0 = order[0]
        total += maps.mul_cost(y(g0)) + maps.shift_cost(s0 * n)
    for (_, ps, pg), (_, s, g) in zip(order, order[1:]):
        if pg != g:
            total += maps.mul_cost(y(pg)) + maps.mul_cost(y(g))
        total += maps.shift_cost((ps - s) * n)
    _, ps, pg = order[-1]
    return total + maps.mul_cost(y(pg)) + maps.shift_cost(ps * n)


def _top_order(f: KaratsubaFormula, m: int, maps: _FieldMaps,
               out_of_place: bool) -> tuple[list[tuple[int, int, int]], int]:
    """Order of the top-level products with the cheapest linear maps between them."""
    n = _piece_sizes(m, f.k)[0]
    # grouped by base, descending shift: the only order tried for large formulas
    start = sorted(f.terms(), key=lambda t: (t[2] != 1, t[2], -t[1]))
    best = (_order_cost(start, n, maps, out_of_place), start)
    if len(start) <= 6:
        for order in itertools.permutations(start):
            c = _order_cost(order, n, maps, out_of_place)
            if c < best[0]:
                best = (c, list(order))
    return best[1], best[0]


def _predict_top(f: KaratsubaFormula | None, m: int, table, maps: _FieldMaps) -> tuple[int, int]:
    if f is None:
        return m * m, 2 * (m - 1) * len(maps.mids)
    sizes = _piece_sizes(m, f.k)
    tof = cnot = 0
    for s in _product_sizes(f, sizes):
        tof += table[s][1]
        cnot += table[s][2]
    return tof, cnot + _adds_cost(f, sizes) + _top_order(f, m, maps, False)[1]


def _resolve_formulas(formulas) -> tuple[KaratsubaFormula, ...]:
    if formulas is None:
        return BUILTIN_FORMULAS
    formulas = tuple(formulas)
    if not any(f.k == 2 for f in formulas):
        raise FormulaInvalid("the formula library must contain a k=2 formula")
    return formulas


def _make_plan(m: int, p: int, formulas: tuple[KaratsubaFormula, ...], model: CostModel,
               schoolbook_max: int, plan: str | Sequence[int], maps: _FieldMaps) -> tuple[MulPlan, int, int]:
    explicit = None if plan == "auto" else list(plan)
    by_k = {}
    for idx, f in enumerate(formulas):
        by_k.setdefault(f.k, idx + 2)

    top_opts = []
    if m <= schoolbook_max:
        top_opts.append(SCHOOLBOOK)
    top_opts += [i + 2 for i, f in enumerate(formulas) if _fits_reduced(f, m)]
    if explicit:
        want = by_k.get(explicit[0])
        if want in top_opts:
            top_opts = [want]
    nmax = _ceil_div(m, 2)
    # an explicit sequence is applied by depth along the largest branch
    forced_sizes: dict[int, int] = {}
    if explicit:
        size = m
        f = formulas[top_opts[0] - 2] if top_opts[0] >= 2 else None
        for k in explicit[1:]:
            if f is None:
                break
            size = _piece_sizes(size, f.k)[0]
            code = by_k.get(k)
            if code is None or not _fits_unreduced(formulas[code - 2], size):
                break
            forced_sizes[size] = code
            f = formulas[code - 2]
    table = _unreduced_table(nmax, formulas, model, schoolbook_max, forced_sizes.get)
    best = None
    for code in top_opts:
        f = formulas[code - 2] if code >= 2 else None
        tof, cnot = _predict_top(f, m, table, maps)
        key = (_weighted(model, tof, cnot), tof, code)
        if best is None or key < best[0]:
            best = (key, code, tof, cnot)
    _, code, tof, cnot = best
    inner = {size: entry[0] for size, entry in table.items()}
    return MulPlan(m, code, inner, formulas), tof, cnot


def _emit_karatsuba(m: int, p: int, plan: MulPlan, maps: _FieldMaps,
                    out_of_place: bool) -> Circuit:
    em = _Emitter(multiplier_registers(m))
    a, b, t = (list(r.wires) for r in em.regs)
    f = plan.formula(plan.top)
    if m == 1:
        em.gates.append(Gate(TOF_KIND, a[0], b[0], t[0]))
        return em.build()
    sizes = _piece_sizes(m, f.k)
    n = sizes[0]
    y = lambda g: sum(1 << (d * n) for d in _bits(g))  # noqa: E731
    choose = plan.inner.__getitem__
    terms, _ = _top_order(f, m, maps, out_of_place)
    cb = em.cb
    if out_of_place:
        _, s0, g0 = terms[0]
        cb.begin("premap")
        if g0 != 1:
            em.linear(maps.mul(y(g0)), t, inverse=True)
        em.field_shift(t, maps.mids, -s0 * n)
        cb.end()
    prev = None
    for j, s, g in terms:
        if prev is not None:
            ps, pg = prev
            cb.begin("target maps")
            if pg != g:
                if pg != 1:
                    em.linear(maps.mul(y(pg)), t)
                em.linear(maps.mul(y(g)), t, inverse=True)
            em.field_shift(t, maps.mids, (ps - s) * n)
            cb.end()
        cb.begin("products")
        em.product(a, b, sizes, f.T[j], t, choose, plan.formulas)
        cb.end()
        prev = (s, g)
    ps, pg = prev
    cb.begin("target maps")
    if pg != 1:
        em.linear(maps.mul(y(pg)), t)
    em.field_shift(t, maps.mids, ps * n)
    cb.end()
    return em.build()


def synth_karatsuba(m: int, p: int, model: CostModel | None = None, out_of_place: bool = False,
                    optimize: bool = True) -> Circuit:
    """Recursive two-way Karatsuba multiplier ``|a,b,0> -> |a,b,ab>``.

    For ``m = 2^k`` the Toffoli count is ``3^k``.  The target is
    multiplied by ``x^ceil(m/2)`` along the way, so a nonzero starting
    target ``c`` ends as ``c x^ceil(m/2) + ab``; ``out_of_place`` prepends
    the inverse shift to give ``c + ab``.
    """
    return synth_karatsuba_like(m, p, (FORMULA_K2,), plan="auto", model=model,
                                out_of_place=out_of_place, optimize=optimize, schoolbook_max=0)


def synth_karatsuba_like(m: int, p: int, formulas: Iterable[KaratsubaFormula] | None = None,
                         plan: str | Sequence[int] = "auto", model: CostModel | None = None,
                         out_of_place: bool = False, optimize: bool = True,
                         schoolbook_max: int = 3) -> Circuit:
    """Multiplier built from a library of (T,R) formulas.

    ``plan="auto"`` picks, for every sub-product size, the formula (or the
    schoolbook base for sizes up to ``schoolbook_max``) with the lowest
    predicted weighted cost.  An explicit list of split counts forces the
    top level and the largest branch level by level.
    """
    deg, _ = poly_shape(p)
    if deg != m:
        raise ValueError(f"polynomial degree must equal m = {m}")
    model = model or CostModel()
    formulas = _resolve_formulas(formulas)
    maps = _FieldMaps(m, p)
    if m == 1:
        em = _Emitter(multiplier_registers(1))
        em.gates.append(Gate(TOF_KIND, 0, 1, 2))
        return em.build()
    mplan, _, _ = _make_plan(m, p, formulas, model, schoolbook_max, plan, maps)
    if mplan.top == SCHOOLBOOK:
        return synth_mastrovito(m, p, model)
    c = _emit_karatsuba(m, p, mplan, maps, out_of_place)
    return _finish(c, model, optimize)


def plan_costs(m: int, const_mul_cost: int, squaring_cost: int = 0, weight: int = 3,
               formulas: Iterable[KaratsubaFormula] | None = None,
               model: CostModel | None = None, schoolbook_max: int = 3,
               divide: bool = False) -> tuple[MulPlan, CostReport]:
    """Predicted cost of the best multiplier from the tuple
    ``(const_mul, squaring, weight)`` without building any circuit.

    The top level uses the two-way split, whose only linear maps are the
    constant multiplication by ``1 + x^ceil(m/2)``, its inverse and a
    shift by ``x^ceil(m/2)`` costing ``weight - 2`` CNOTs per step.  The
    Toffoli count is exact; the CNOT count is an upper bound (it includes
    ``3(m-1)`` for a final wire permutation).  With ``divide`` the cost of
    a division is predicted instead: ``2c+1`` multiplications plus ``m``
    squarings, ``c`` being the addition-chain length.
    """
    model = model or CostModel()
    formulas = _resolve_formulas(formulas)
    k2 = next(i for i, f in enumerate(formulas) if f.k == 2) + 2
    if m == 1:
        tof, cnot = 1, 0
        mplan = MulPlan(1, LEAF, {}, formulas)
    else:
        table = _unreduced_table(_ceil_div(m, 2), formulas, model, schoolbook_max)
        sizes = _piece_sizes(m, 2)
        tof = cnot = 0
        for s in _product_sizes(formulas[k2 - 2], sizes):
            tof += table[s][1]
            cnot += table[s][2]
        cnot += _adds_cost(formulas[k2 - 2], sizes)
        cnot += 2 * const_mul_cost + sizes[0] * max(weight - 2, 0)
        cnot += 0 if model.free_permutation else 3 * (m - 1)
        mplan = MulPlan(m, k2, {s: e[0] for s, e in table.items()}, formulas)
    if divide:
        chain = _chain_mults(m)
        tof *= 2 * chain + 1
        cnot = cnot * (2 * chain + 1) + 2 * m * squaring_cost
    return mplan, CostReport(tof, cnot, _weighted(model, tof, cnot), {}, 0)


def _chain_mults(m: int) -> int:
    if m <= 2:
        return 0
    e = m - 1
    return e.bit_length() - 1 + bin(e).count("1") - 1


def pareto_front(tuples: Iterable[tuple]) -> list[tuple]:
    """Cost tuples not dominated componentwise by another tuple."""
    items = sorted(set(tuples))
    front = []
    for t in items:
        if not any(all(o <= v for o, v in zip(other, t)) and other != t for other in items):
            front.append(t)
    return front


# ---------------------------------------------------------------------------
# Toom-3 over GF(2)[x]


def _poly_pow(a: int, e: int) -> int:
    out = 1
    for _ in range(e):
        out = poly_mul(out, a)
    return out


class _Frac:
    """Element of GF(2)(x) kept in lowest terms."""

    __slots__ = ("num", "den")

    def __init__(self, num: int, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        g = poly_gcd(num, den) if num else den
        self.num = poly_divmod(num, g)[0]
        self.den = poly_divmod(den, g)[0]

    def __add__(self, o: "_Frac") -> "_Frac":
        return _Frac(poly_mul(self.num, o.den) ^ poly_mul(o.num, self.den), poly_mul(self.den, o.den))

    def __mul__(self, o: "_Frac") -> "_Frac":
        return _Frac(poly_mul(self.num, o.num), poly_mul(self.den, o.den))

    def inv(self) -> "_Frac":
        return _Frac(self.den, self.num)

    def __bool__(self) -> bool:
        return bool(self.num)


def _split_x(v: int) -> tuple[int, int]:
    s = (v & -v).bit_length() - 1
    return s, v >> s


@dataclass(frozen=True)
class ToomPointSet:
    """Evaluation points ``(A, B)`` as polynomial pairs; a piece list
    ``f_0..f_{k-1}`` evaluates to ``sum f_j A^j B^(k-1-j)``."""

    points: tuple[tuple[int, int], ...]

    @property
    def k(self) -> int:
        return (len(self.points) + 1) // 2

    def vandermonde(self) -> list[list[int]]:
        deg = 2 * self.k - 2
        return [[poly_mul(_poly_pow(A, d), _poly_pow(B, deg - d)) for d in range(deg + 1)]
                for A, B in self.points]

    def coefficients(self, n: int) -> list[tuple[int, int, int]]:
        """``C = e V^-1`` for ``e = [1, x^n, x^2n, ...]``, each entry as
        ``(shift, N, D)`` meaning ``x^shift N(x) / D(x)`` with ``N(0) = D(0) = 1``."""
        return _toom_coefficients(self.points, n)


@lru_cache(maxsize=None)
def _toom_coefficients(points: tuple[tuple[int, int], ...], n: int) -> list[tuple[int, int, int]]:
    size = len(points)
    deg = size - 1
    V = [[poly_mul(_poly_pow(A, d), _poly_pow(B, deg - d)) for d in range(deg + 1)] for A, B in points]
    # solve C V = e, i.e. V^T C^T = e^T
    rows = [[_Frac(V[i][d]) for i in range(size)] + [_Frac(1 << (d * n))] for d in range(size)]
    for col in range(size):
        piv = next((r for r in range(col, size) if rows[r][col]), None)
        if piv is None:
            raise ValueError("evaluation points give a singular Vandermonde matrix")
        rows[col], rows[piv] = rows[piv], rows[col]
        scale = rows[col][col].inv()
        rows[col] = [v * scale for v in rows[col]]
        for r in range(size):
            if r != col and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [v + factor * w for v, w in zip(rows[r], rows[col])]
    out = []
    for r in range(size):
        c = rows[r][size]
        if not c:
            out.append((0, 0, 1))
            continue
        s_num, num = _split_x(c.num)
        s_den, den = _split_x(c.den)
        if s_num < s_den:
            raise ValueError("coefficient has a pole at x = 0")
        out.append((s_num - s_den, num, den))
    return out


TOOM3_POINTS = ToomPointSet(((0, 1), (1, 1), (1, 0), (0b10, 1), (1, 0b10)))


def _toom_evaluation(point: tuple[int, int], sizes: list[int]) -> tuple[list[int], list[tuple[int, int]], int]:
    """Wire layout for evaluating the pieces at ``point`` in place.

    Returns ``(hosts, adds, length)``: ``hosts[c]`` is the input position
    holding coefficient ``c`` of the evaluation, ``adds`` are
    ``(source, host)`` position pairs to XOR, and positions are offsets
    into the operand register.
    """
    A, B = point
    k = len(sizes)
    n = sizes[0]
    contrib: dict[int, list[int]] = {}
    for j in range(k):
        mono = poly_mul(_poly_pow(A, j), _poly_pow(B, k - 1 - j))
        if not mono:
            continue
        if mono & (mono - 1):
            raise ValueError("only monomial evaluations are supported")
        e = mono.bit_length() - 1
        for q in range(sizes[j]):
            contrib.setdefault(q + e, []).append(j * n + q)
    length = max(contrib) + 1
    if len(contrib) != length:
        raise ValueError("evaluation has a gap")
    hosts, adds = [], []
    for c in range(length):
        srcs = contrib[c]
        hosts.append(srcs[0])
        adds += [(s, srcs[0]) for s in srcs[1:]]
    return hosts, adds, length


def _toom_subsizes(size: int) -> list[int] | None:
    sizes = _piece_sizes(size, 3)
    if sizes is None or size < 5:
        return None
    return [_toom_evaluation(pt, sizes)[2] for pt in TOOM3_POINTS.points]


@lru_cache(maxsize=None)
def toom3_toffoli_count(m: int) -> int:
    """Toffoli count of :func:`synth_toom3` from its size recurrence."""
    subs = _toom_subsizes(m)
    if subs is None:
        return _karatsuba_unreduced_toffoli(m)
    return sum(toom3_toffoli_count(s) for s in subs)


def _karatsuba_unreduced_toffoli(size: int) -> int:
    if size == 1:
        return 1
    lo = _ceil_div(size, 2)
    return 2 * _karatsuba_unreduced_toffoli(lo) + _karatsuba_unreduced_toffoli(size - lo)


def _series_fraction_gates(num: int, den: int, length: int) -> int:
    return _series_gates(num, 1, length) + _series_gates(den, 1, length)


def _toom_order(coeffs: list[tuple[int, int, int]], length: int) -> list[int]:
    """Product order minimizing the CNOTs of the maps between products."""
    live = [i for i, c in enumerate(coeffs) if c[1]]

    def ratio(a, b) -> _Frac:
        return _Frac(a[1], a[2]) * _Frac(b[2], b[1])

    best = None
    for order in itertools.permutations(live):
        total = 0
        first = coeffs[order[0]]
        fr = _Frac(first[2], first[1])
        total += _series_fraction_gates(fr.num, fr.den, length)
        for x, y in zip(order, order[1:]):
            fr = ratio(coeffs[x], coeffs[y])
            total += _series_fraction_gates(fr.num, fr.den, length)
        last = coeffs[order[-1]]
        total += _series_fraction_gates(last[1], last[2], length)
        if best is None or total < best[0]:
            best = (total, order)
    return list(best[1])


def _emit_series_fraction(em: _Emitter, h: Sequence[int], num: int, den: int) -> None:
    """Multiply ``h`` by ``num/den`` as a truncated power series."""
    if num != 1:
        em.series_mul(h, num, 1)
    if den != 1:
        em.series_mul(h, den, 1, inverse=True)


def _emit_toom(em: _Emitter, f: Sequence[int], g: Sequence[int], h: Sequence[int],
               karatsuba_choose) -> None:
    size = len(f)
    if _toom_subsizes(size) is None:
        em.unreduced(f, g, h, karatsuba_choose, (FORMULA_K2,))
        return
    sizes = _piece_sizes(size, 3)
    n = sizes[0]
    span = list(h[:2 * size - 1])
    coeffs = _toom_coefficients(TOOM3_POINTS.points, n)
    order = _toom_order(coeffs, len(span))
    prev = None
    for i in order:
        s, num, den = coeffs[i]
        fr = _Frac(den, num) if prev is None else _Frac(prev[1], prev[2]) * _Frac(den, num)
        _emit_series_fraction(em, span, fr.num, fr.den)
        hosts, adds, length = _toom_evaluation(TOOM3_POINTS.points[i], sizes)
        if s + 2 * length - 1 > len(span):
            raise ValueError(f"Toom-3 product does not fit at size {size}")
        undo = [Gate(CNOT_KIND, f[x], f[y]) for x, y in adds] + [Gate(CNOT_KIND, g[x], g[y]) for x, y in adds]
        em.gates.extend(undo)
        _emit_toom(em, [f[x] for x in hosts], [g[x] for x in hosts], span[s:s + 2 * length - 1],
                   karatsuba_choose)
        em.gates.extend(reversed(undo))
        prev = (s, num, den)
    _emit_series_fraction(em, span, prev[1], prev[2])


def synth_toom3(m: int, optimize: bool = False) -> Circuit:
    """Unreduced product ``|f,g,h> -> |f,g,h+fg>`` with ``2m-1`` target wires.

    Evaluation at ``0, 1, inf, x, 1/x``; sizes below five fall back to the
    two-way split.  Each evaluation is formed in place on the operand wires.
    """
    if m < 3:
        raise ValueError("Toom-3 needs m >= 3")
    em = _Emitter(multiplier_registers(m, 2 * m - 1))
    f, g, h = (list(r.wires) for r in em.regs)
    _emit_toom(em, f, g, h, lambda s: LEAF if s == 1 else 2)
    c = em.build()
    return peephole_optimize(c) if optimize else c


# ---------------------------------------------------------------------------
# parity-controlled Toffoli normal form


@dataclass(frozen=True)
class PCTOF:
    """``t ^= parity(c1) * parity(c2)`` for every wire ``t`` in ``targets``."""

    c1: frozenset[int]
    c2: frozenset[int]
    targets: frozenset[int]

    def __post_init__(self):
        for name in ("c1", "c2", "targets"):
            v = getattr(self, name)
            if not isinstance(v, frozenset):
                object.__setattr__(self, name, frozenset(v))
        if not (self.c1 and self.c2 and self.targets):
            raise ValueError("PCTOF wire sets must be non-empty")


def _mask(ws: Iterable[int]) -> int:
    out = 0
    for w in ws:
        out |= 1 << w
    return out


def pctof_extract(c: Circuit) -> tuple[Circuit, list[PCTOF]]:
    """Split ``c`` into a PCTOF layer followed by a linear circuit.

    The PCTOF controls and targets are expressed over the input wires, so
    running the PCTOFs first and the returned CNOT/SWAP circuit second
    reproduces ``c``.  The linear part is every linear gate of ``c`` in
    order.
    """
    n = c.width
    rows = [1 << i for i in range(n)]   # current wire values over frame variables
    inv_cols = [1 << i for i in range(n)]  # columns of the inverse map
    linear: list[Gate] = []
    pctofs: list[PCTOF] = []
    for g in c.gates:
        if g.kind == CNOT_KIND:
            rows[g.b] ^= rows[g.a]
            inv_cols[g.a] ^= inv_cols[g.b]
            linear.append(g)
        elif g.kind == SWAP_KIND:
            rows[g.a], rows[g.b] = rows[g.b], rows[g.a]
            inv_cols[g.a], inv_cols[g.b] = inv_cols[g.b], inv_cols[g.a]
            linear.append(g)
        elif g.kind == TOF_KIND:
            pctofs.append(PCTOF(frozenset(_bits(rows[g.a])), frozenset(_bits(rows[g.b])),
                                frozenset(_bits(inv_cols[g.c]))))
        else:
            raise UnsupportedGate(f"cannot extract PCTOFs through gate kind {g.kind!r}")
    return Circuit(n, tuple(linear), c.registers), pctofs


def apply_pctofs(pctofs: Iterable[PCTOF], slices: list[int]) -> list[int]:
    """Bit-sliced simulation of a PCTOF layer (in place on ``slices``)."""
    for q in pctofs:
        x = 0
        for w in q.c1:
            x ^= slices[w]
        y = 0
        for w in q.c2:
            y ^= slices[w]
        v = x & y
        for w in q.targets:
            slices[w] ^= v
    return slices


def pctof_reduce(pctofs: Sequence[PCTOF]) -> list[PCTOF]:
    """Rank reduction of a commuting PCTOF layer.

    Applies only when the unions of first controls, second controls and
    targets are pairwise disjoint (otherwise the input is returned).  Each
    gate's bilinear form is vectorized over ``|C1| x |C2|`` positions; a
    greedy basis is kept and every dependent gate's targets are folded into
    the basis gates it decomposes into.
    """
    pctofs = list(pctofs)
    C1 = set().union(*(q.c1 for q in pctofs)) if pctofs else set()
    C2 = set().union(*(q.c2 for q in pctofs)) if pctofs else set()
    T = set().union(*(q.targets for q in pctofs)) if pctofs else set()
    if C1 & C2 or C1 & T or C2 & T:
        return pctofs
    i1 = {w: i for i, w in enumerate(sorted(C1))}
    i2 = {w: i for i, w in enumerate(sorted(C2))}
    width = len(C2)
    basis_targets: list[int] = []
    basis_gate: list[PCTOF] = []
    pivots: dict[int, tuple[int, int]] = {}  # pivot bit -> (reduced form, combination of basis ids)
    for q in pctofs:
        m2 = 0
        for w in q.c2:
            m2 |= 1 << i2[w]
        form = 0
        for w in q.c1:
            form |= m2 << (i1[w] * width)
        comb = 0
        while form:
            top = form.bit_length() - 1
            hit = pivots.get(top)
            if hit is None:
                break
            form ^= hit[0]
            comb ^= hit[1]
        tmask = _mask(q.targets)
        if form:
            idx = len(basis_gate)
            basis_gate.append(q)
            basis_targets.append(tmask)
            pivots[form.bit_length() - 1] = (form, comb ^ (1 << idx))
        else:
            for b in _bits(comb):
                basis_targets[b] ^= tmask
    out = []
    for q, t in zip(basis_gate, basis_targets):
        if t:
            out.append(PCTOF(q.c1, q.c2, frozenset(_bits(t))))
    return out


def pctof_recompose(linear: Circuit, pctofs: Sequence[PCTOF]) -> Circuit:
    """CNOT/Toffoli circuit for the PCTOF layer followed by ``linear``.

    Each PCTOF folds its control parities onto one wire of each set,
    fans its target set onto one target, applies a single Toffoli and
    undoes the folding.
    """
    gates: list[Gate] = []
    for q in pctofs:
        if q.c1 & q.c2 or (q.c1 | q.c2) & q.targets:
            raise ValueError("cannot emit a PCTOF whose wire sets overlap")
        a, *ra = sorted(q.c1)
        b, *rb = sorted(q.c2)
        t, *rt = sorted(q.targets)
        pre = [Gate(CNOT_KIND, w, a) for w in ra] + [Gate(CNOT_KIND, w, b) for w in rb]
        fan = [Gate(CNOT_KIND, t, w) for w in rt]
        gates += pre + fan + [Gate(TOF_KIND, a, b, t)] + fan[::-1] + pre[::-1]
    return Circuit(linear.width, tuple(gates) + linear.gates, linear.registers)


def pctof_optimize(c: Circuit, model: CostModel | None = None) -> Circuit:
    """Rank-reduce the Toffolis of ``c``; returns ``c`` unless the rebuilt
    circuit has strictly fewer Toffolis and no higher weighted cost."""
    model = model or CostModel()
    linear, layer = pctof_extract(c)
    reduced = pctof_reduce(layer)
    if len(reduced) >= len(layer):
        return c
    rebuilt = pctof_recompose(linear, reduced)
    return rebuilt if cost(rebuilt, model).weighted <= cost(c, model).weighted else c
