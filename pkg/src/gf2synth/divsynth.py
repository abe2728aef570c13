"""Field squaring, repeated squaring, inversion and division circuits.

Squaring is linear, so every batch ``a -> a^(2^k)`` is a CNOT circuit.
Inversion follows the Itoh-Tsujii addition chain for ``2^m - 2``; division
is inversion, one multiplication into the target, and uncomputation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .bitmatrix import BitMatrix
from .circuit import (
    Circuit,
    CircuitBuilder,
    CostModel,
    DEFAULT_MODEL,
    Role,
    absorb_permutation,
    cost,
    defer_swaps,
    invert,
    peephole_optimize,
)
from .linalg2 import Reduction, build_squaring_matrix, lu_synth, pmh_synth
from .mulsynth import pctof_extract, pctof_recompose, synth_karatsuba, synth_karatsuba_like
from .polyfield import BinPoly, Reducer, is_irreducible, poly_shape


class SquareMethod(str, enum.Enum):
    ITERATE = "iterate"
    LU = "lu"
    PMH = "pmh"


def _check(m: int, p: int) -> None:
    if m < 2 or BinPoly(p).degree != m:
        raise ValueError(f"need a degree-{m} polynomial with m >= 2")
    if not is_irreducible(p):
        raise ValueError("polynomial is not irreducible")


def is_division_friendly(p: int) -> bool:
    """True for ``x^m + x + 1`` plus any number of even-exponent terms."""
    _, mids = poly_shape(p)
    return bool(p & 1) and bool(mids) and mids[-1] == 1 and all(e % 2 == 0 for e in mids[:-1])


def _measure(c: Circuit, model: CostModel) -> int:
    return cost(c, model).cnot


def _polish(c: Circuit, model: CostModel) -> Circuit:
    c = peephole_optimize(defer_swaps(c))
    if model.free_permutation:
        return c
    folded = peephole_optimize(absorb_permutation(c))
    return folded if _measure(folded, model) < _measure(c, model) else c


def _cheapest(cands: list[Circuit], model: CostModel) -> Circuit:
    return min(cands, key=lambda c: (_measure(c, model), len(c)))


def square_bound(m: int, p: int) -> int:
    """Gate budget of the structured squaring circuit for a division-friendly ``p``."""
    _, mids = poly_shape(p)
    l1 = mids[0] // 2 if len(mids) > 1 else 0
    return m * l1 // 2 + (m - l1) * l1 + l1 * l1 + 3 * (m - 1)


def _square_structured(m: int, p: int) -> Circuit:
    """Column-clear the even rows with the unit columns, then eliminate the
    odd-row block left by the upper columns."""
    red = Reduction(build_squaring_matrix(m, p))
    half = (m + 1) // 2
    for i in range(half):
        row = 2 * i
        for j in list(_bits(red.rows[row] & ~(1 << i))):
            red.add_col(i, j)
    odd = set(range(1, m, 2))
    pending = set(range(half, m))
    while pending:
        # the column whose sparsest holder is lightest goes first
        best = None
        for j in pending:
            holders = list(_bits(red.cols[j]))
            piv = min((r for r in holders if r in odd), key=lambda r: (bin(red.rows[r]).count("1"), r))
            key = (bin(red.rows[piv]).count("1"), len(holders), j)
            if best is None or key < best[0]:
                best = (key, j, piv, holders)
        _, j, piv, holders = best
        for r in holders:
            if r != piv:
                red.add_row(piv, r)
        odd.remove(piv)
        pending.remove(j)
    return red.to_circuit()


def _bits(v: int):
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


def synth_square(m: int, p: int, model: CostModel | None = None, method: str = "auto") -> Circuit:
    """CNOT circuit for ``a -> a^2 mod p``.

    ``method`` is ``"structured"`` (division-friendly polynomials only),
    ``"lu"``, ``"pmh"`` or ``"auto"`` (cheapest applicable).
    """
    _check(m, p)
    model = model or DEFAULT_MODEL
    if method == "structured":
        if not is_division_friendly(p):
            raise ValueError("structured squaring needs x^m + x + 1 + even terms")
        return _polish(_square_structured(m, p), model)
    mat = build_squaring_matrix(m, p)
    if method == "lu":
        return _polish(lu_synth(mat), model)
    if method == "pmh":
        return _polish(pmh_synth(mat), model)
    if method != "auto":
        raise ValueError(f"unknown squaring method {method!r}")
    cands = [_polish(lu_synth(mat), model), _polish(pmh_synth(mat), model)]
    if is_division_friendly(p):
        cands.insert(0, _polish(_square_structured(m, p), model))
    return _cheapest(cands, model)


def frobenius_matrix(m: int, p: int, k: int) -> BitMatrix:
    """Matrix of ``a -> a^(2^k)``: column ``j`` is ``x^(j 2^k) mod p``."""
    red = Reducer(p)
    step = red.reduce(1 << 1)
    for _ in range(k):
        step = red.mul(step, step)
    cols = [1]
    for _ in range(m - 1):
        cols.append(red.mul(cols[-1], step))
    return BitMatrix.from_columns(cols, m)


def _repeated_candidates(m: int, p: int, k: int, model: CostModel) -> dict[SquareMethod, Circuit]:
    one = synth_square(m, p, model)
    mat = frobenius_matrix(m, p, k)
    iterated = Circuit(m, one.gates * k)
    return {
        SquareMethod.ITERATE: _polish(iterated, model),
        SquareMethod.LU: _polish(lu_synth(mat), model),
        SquareMethod.PMH: _polish(pmh_synth(mat), model),
    }


def synth_repeated_square(m: int, p: int, k: int, model: CostModel | None = None) -> Circuit:
    """CNOT circuit for ``a -> a^(2^k)``, the cheapest of iterating the
    single squaring, LU and PMH on the ``k``-th power matrix."""
    return _repeated_square(m, p, k, model)[0]


def _repeated_square(m: int, p: int, k: int, model: CostModel | None = None) -> tuple[Circuit, SquareMethod]:
    if not 1 <= k <= m:
        raise ValueError(f"power count must be in 1..{m}")
    _check(m, p)
    model = model or DEFAULT_MODEL
    if k == m:
        return Circuit(m), SquareMethod.LU
    cands = _repeated_candidates(m, p, k, model)
    method = min(cands, key=lambda s: (_measure(cands[s], model), len(cands[s])))
    return cands[method], method


# ---------------------------------------------------------------------------
# addition chain


def chain_steps(m: int) -> list[tuple[str, int]]:
    """Itoh-Tsujii steps from ``b^(2^1-1)`` to ``b^(2^(m-1)-1)``.

    ``("double", e)`` turns exponent ``e`` into ``2e`` with a batch of ``e``
    squarings; ``("add", e)`` turns ``e`` into ``e + 1`` with one squaring.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    steps = []
    e = 1
    for bit in bin(m - 1)[3:]:
        steps.append(("double", e))
        e *= 2
        if bit == "1":
            steps.append(("add", e))
            e += 1
    return steps


def chain_multiplications(m: int) -> int:
    """``floor(log2(m-1)) + wt(m-1) - 1``."""
    return len(chain_steps(m))


@dataclass(frozen=True)
class SquaringPlan:
    m: int
    poly: int
    batches: tuple[int, ...]
    methods: tuple[SquareMethod, ...] = field(default=())


def squaring_plan(m: int, p: int, model: CostModel | None = None) -> SquaringPlan:
    """Batch sizes used by the inversion chain and the method picked for each."""
    batches = [e if kind == "double" else 1 for kind, e in chain_steps(m)] + [1]
    methods = tuple(_repeated_square(m, p, k, model)[1] for k in batches)
    return SquaringPlan(m, p, tuple(batches), methods)


# ---------------------------------------------------------------------------
# inversion and division


class _Chain:
    """Computes ``b^(2^(m-1) - 1)`` into work registers.

    Nothing is cleaned up on the way: squarings stay in place and each
    doubling gets its own scratch copy, so the caller undoes the whole
    forward pass at once.
    """

    def __init__(self, b: CircuitBuilder, m: int, p: int, src: list[int], model: CostModel):
        self.b, self.m, self.p, self.model = b, m, p, model
        self.src = src
        self.steps = chain_steps(m)
        self.work = []
        self.scratch = []
        for i, (kind, _) in enumerate(self.steps):
            if kind == "double":
                self.scratch.append(list(b.add_register(f"z{i}", m, Role.ANCILLA).wires))
            else:
                self.scratch.append(None)
            self.work.append(list(b.add_register(f"w{i}", m, Role.ANCILLA).wires))
        self._squares: dict[int, Circuit] = {}
        self._mul: dict[bool, Circuit] = {}

    def square(self, k: int) -> Circuit:
        if k not in self._squares:
            self._squares[k] = synth_repeated_square(self.m, self.p, k, self.model)
        return self._squares[k]

    def multiplier(self, out_of_place: bool = False) -> Circuit:
        if out_of_place not in self._mul:
            self._mul[out_of_place] = best_multiplier(self.m, self.p, self.model, out_of_place)
        return self._mul[out_of_place]

    def result(self) -> list[int]:
        return self.work[-1] if self.work else self.src

    def forward(self) -> None:
        b = self.b
        cur = self.src
        for (kind, e), out, z in zip(self.steps, self.work, self.scratch):
            if kind == "double":
                b.begin("copy")
                for s, t in zip(cur, z):
                    b.cnot(s, t)
                b.end()
                b.append_circuit(self.square(e), z, "square")
                b.append_circuit(self.multiplier(), cur + z + out, "multiply")
            else:
                # cur is never read again, so its square is left in place
                b.append_circuit(self.square(1), cur, "square")
                b.append_circuit(self.multiplier(), cur + self.src + out, "multiply")
            cur = out


def best_multiplier(m: int, p: int, model: CostModel | None = None, out_of_place: bool = False) -> Circuit:
    """Cheaper of the planned Karatsuba-like and the plain Karatsuba multiplier."""
    model = model or DEFAULT_MODEL
    cands = [synth_karatsuba_like(m, p, model=model, out_of_place=out_of_place),
             synth_karatsuba(m, p, model=model, out_of_place=out_of_place)]
    return min(cands, key=lambda c: (cost(c, model).weighted, len(c)))


def _rebuilt(c: Circuit, model: CostModel) -> Circuit:
    """Re-emit the Toffoli layer from its parity-controlled form when that is
    cheaper; only small circuits ever qualify."""
    try:
        linear, pctofs = pctof_extract(c)
        alt = peephole_optimize(pctof_recompose(linear, pctofs))
    except ValueError:
        return c
    alt = Circuit(alt.width, alt.gates, c.registers)
    better = (cost(alt, model).toffoli <= cost(c, model).toffoli
              and cost(alt, model).weighted < cost(c, model).weighted)
    return alt if better else c


def _assemble(m: int, p: int, model: CostModel, optimize: bool, divide: bool) -> Circuit:
    b = CircuitBuilder()
    if divide:
        a = list(b.add_register("a", m, Role.INPUT_A).wires)
    src = list(b.add_register("b", m, Role.INPUT_B).wires)
    tgt = list(b.add_register("c" if divide else "inv", m, Role.TARGET).wires)
    chain = _Chain(b, m, p, src, model)
    chain.forward()
    last = chain.result()
    # b^-1 = (b^(2^(m-1) - 1))^2
    b.append_circuit(chain.square(1), last, "square")
    forward = Circuit(b.width, tuple(b.gates))
    if divide:
        b.append_circuit(chain.multiplier(True), a + last + tgt, "multiply")
    else:
        b.begin("copy")
        for s, t in zip(last, tgt):
            b.cnot(s, t)
        b.end()
    b.append_circuit(invert(forward), None, "uncompute")
    c = b.build()
    if not optimize:
        return c
    c = _polish(c, model)
    if m <= 4:
        c = _rebuilt(c, model)
    return c


def synth_inverse_flt(m: int, p: int, model: CostModel | None = None, optimize: bool = True) -> Circuit:
    """``|b, t, 0...> -> |b, t + b^-1, 0...>`` with ``b^-1 = b^(2^m - 2)``
    (zero maps to zero)."""
    _check(m, p)
    return _assemble(m, p, model or DEFAULT_MODEL, optimize, divide=False)


def synth_divide(m: int, p: int, model: CostModel | None = None, optimize: bool = True) -> Circuit:
    """``|a, b, c, 0...> -> |a, b, c + a b^-1, 0...>``.

    Uses ``2 * chain_multiplications(m) + 1`` multiplier calls; all work
    registers are returned to zero.
    """
    _check(m, p)
    return _assemble(m, p, model or DEFAULT_MODEL, optimize, divide=True)
