"""CNOT circuits for in-place multiplication by ``1 + x^ceil(m/2)`` in GF(2^m).

Each construction drives the multiplication matrix to the identity with
row and column additions on a :class:`~gf2synth.linalg2.Reduction`, which
then turns the recorded operations into a circuit.  The choice of
construction depends only on the parity of ``m`` and the shape of the
irreducible polynomial.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .circuit import Circuit, CostModel, absorb_permutation, cost, invert
from .errors import NoPolynomialFound, StrategyShapeMismatch
from .linalg2 import Reduction, build_constmul_matrix, lu_synth
from .polyfield import PatternKind, PolyPattern, find_pattern_polys, is_irreducible, poly_shape

__all__ = [
    "ConstMulStrategy",
    "ConstMulResult",
    "applicable_strategies",
    "best_constmul",
    "best_constmul_both",
    "candidate_polys",
    "search_candidates",
    "synth_constdiv",
    "synth_constmul",
    "strategy_bound",
]


class ConstMulStrategy(str, enum.Enum):
    ALG1_EVEN_TRINOMIAL = "Alg1_EvenTrinomial"
    ALG2_EVEN_CLUSTERED = "Alg2_EvenClustered"
    ALG3_ODD_TRINOMIAL = "Alg3_OddTrinomial"
    ALG4_ODD_GENERAL = "Alg4_OddGeneral"
    ALG56_ODD_RUNS = "Alg56_OddRuns"
    LU_FALLBACK = "LU_Fallback"

    @classmethod
    def parse(cls, text: str) -> "ConstMulStrategy":
        key = text.strip().lower().replace("-", "_")
        for s in cls:
            if key in (s.value.lower(), s.name.lower(), s.value.lower().split("_")[0]):
                return s
        raise ValueError(f"unknown strategy {text!r}")


# cheapest asymptotic class first
PRIORITY = (
    ConstMulStrategy.ALG1_EVEN_TRINOMIAL,
    ConstMulStrategy.ALG56_ODD_RUNS,
    ConstMulStrategy.ALG3_ODD_TRINOMIAL,
    ConstMulStrategy.ALG2_EVEN_CLUSTERED,
    ConstMulStrategy.ALG4_ODD_GENERAL,
    ConstMulStrategy.LU_FALLBACK,
)



def _bits(v: int):
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


def _odd_runs_shape(m: int, mids: list[int]) -> tuple[int, int] | None:
    """``(l1, l2)`` if the middle exponents are ``n-1..n-l1`` then ``l2..1``."""
    n = m // 2
    for split in range(len(mids) + 1):
        high, low = mids[:split], mids[split:]
        l1, l2 = len(high), len(low)
        if high != list(range(n - 1, n - l1 - 1, -1)) or low != list(range(l2, 0, -1)):
            continue
        if n - l1 > l2:
            return l1, l2
    return None


def applicable_strategies(m: int, p: int) -> list[ConstMulStrategy]:
    """Constructions whose shape requirements ``p`` meets, in priority order."""
    deg, mids = poly_shape(p)
    if deg != m:
        raise ValueError(f"polynomial degree {deg} != m = {m}")
    n = m // 2
    out = []
    if m > 2:
        l1 = mids[0] if mids else 0
        if m % 2 == 0:
            if len(mids) == 1 and l1 < n:
                out.append(ConstMulStrategy.ALG1_EVEN_TRINOMIAL)
            if l1 < n:
                out.append(ConstMulStrategy.ALG2_EVEN_CLUSTERED)
        else:
            if _odd_runs_shape(m, mids) is not None:
                out.append(ConstMulStrategy.ALG56_ODD_RUNS)
            if len(mids) == 1 and l1 <= n:
                out.append(ConstMulStrategy.ALG3_ODD_TRINOMIAL)
            if l1 < n:
                out.append(ConstMulStrategy.ALG4_ODD_GENERAL)
    out.append(ConstMulStrategy.LU_FALLBACK)
    return sorted(out, key=PRIORITY.index)


def strategy_bound(strategy: ConstMulStrategy, m: int, p: int) -> int | None:
    """Proven gate-count ceiling (SWAP counted as 3 CNOTs), or None for LU."""
    _, mids = poly_shape(p)
    n = m // 2
    k = len(mids)
    l1 = mids[0] if mids else 0
    lk = mids[-1] if mids else 0
    if strategy is ConstMulStrategy.ALG1_EVEN_TRINOMIAL:
        return 3 * m - l1
    if strategy is ConstMulStrategy.ALG2_EVEN_CLUSTERED:
        return n * (k + l1 - lk + 5) + l1 * k - 3
    if strategy is ConstMulStrategy.ALG3_ODD_TRINOMIAL:
        if l1 == n:
            # n additions plus a rotation of all m wires
            return n + 3 * (m - 1)
        return n * (l1 + 6) - 3 * l1
    if strategy is ConstMulStrategy.ALG4_ODD_GENERAL:
        return n * (2 * l1 + 5) - l1 * l1 - l1 + sum(mids)
    if strategy is ConstMulStrategy.ALG56_ODD_RUNS:
        return (11 * m) // 2 + 13
    return None


# ---------------------------------------------------------------------------
# shared pieces


def _finish_block(red: Reduction, split: int) -> None:
    """Clear a residual ``[[I, C], [0, D]]`` (``I`` of size ``split``): ``C``
    with column additions from the identity part, then ``D`` by Gaussian
    elimination on the trailing rows."""
    low = (1 << split) - 1
    for r, row in enumerate(red.rows):
        part = row & low
        if part != (1 << r if r < split else 0):
            raise AssertionError(f"residual is not block upper triangular at row {r}")
    for r in range(split):
        for c in _bits(red.rows[r] >> split):
            red.add_col(r, split + c)
    red.gaussian_rows(range(split, red.n))


def _clear_top_right(red: Reduction, n: int, lo: int) -> None:
    """Zero rows ``< n`` in columns ``>= lo`` using the identity columns ``< n``."""
    for i in range(n):
        for j in _bits(red.rows[i] >> lo):
            red.add_col(i, lo + j)


# ---------------------------------------------------------------------------
# even m


def _alg1(m: int, p: int) -> Reduction:
    n = m // 2
    _, (l,) = poly_shape(p)
    red = Reduction(build_constmul_matrix(m, p))
    for i in range(n):
        red.add_row(i, n + i)
    for i in range(n):
        red.add_col(i, n + i)
    for i in range(l, n):
        red.add_row(n + i, i)
    # the bottom half is now a cyclic shift, left to the trailing SWAP network
    return red


def _alg2(m: int, p: int) -> Reduction:
    n = m // 2
    _, mids = poly_shape(p)
    lk = mids[-1]
    red = Reduction(build_constmul_matrix(m, p))
    for i in range(n):
        red.add_row(i, n + i)
    for i in range(n):
        red.add_row(n + i, i)
    _clear_top_right(red, n, n)
    # bottom-right block is circulant; rotate its rows so the diagonal is set
    red.permute_rows(list(range(n)) + [n + (i + lk) % n for i in range(n)])
    for j in range(n, m):
        for li in mids[:-1]:
            if j + li - lk < m:
                red.add_row(j, j + li - lk)
    _finish_block(red, m - (mids[0] - lk))
    return red


# ---------------------------------------------------------------------------
# odd m


def _alg3_special(m: int, p: int) -> Reduction:
    # x^(2n+1) + x^n + 1: the constant equals x^-n, a rotation plus n additions
    n = m // 2
    red = Reduction(build_constmul_matrix(m, p, strict=False))
    for i in range(n):
        red.add_row(n + 1 + i, i)
    return red


def _alg3(m: int, p: int) -> Reduction:
    n = m // 2
    _, (l,) = poly_shape(p)
    if l == n:
        return _alg3_special(m, p)
    red = Reduction(build_constmul_matrix(m, p))
    for i in range(n):
        red.add_row(i, n + i + 1)
    for i in range(n):
        red.add_col(i, n + i)
    for i in range(l, n):
        red.add_col(i, n - l + i)
    for i in range(n - l):
        red.add_row(n + i, n + i + 1)
        red.add_row(n + i, n + i + l + 1)
    _finish_block(red, 2 * n - l)
    return red


def _alg4(m: int, p: int) -> Reduction:
    n = m // 2
    _, mids = poly_shape(p)
    l1 = mids[0]
    red = Reduction(build_constmul_matrix(m, p))
    for i in range(n):
        red.add_row(i, n + i + 1)
    for i in range(n):
        red.add_row(n + i + 1, i)
    _clear_top_right(red, n, n)
    for j in range(n, m - l1 - 1):
        for li in mids:
            red.add_row(j, j + li + 1)
        red.add_row(j, j + 1)
    _finish_block(red, 2 * n - l1)
    return red


def _tree_reduce(red: Reduction, lo: int) -> None:
    """Finish a block (rows and columns ``lo..``) whose first columns have
    weight 2 and whose last column is odd: bring the last column to a single
    1, then peel the weight-2 columns along the spanning tree they form."""
    n = red.n
    size = n - lo
    last = n - 1
    adj: list[list[tuple[int, int]]] = [[] for _ in range(size)]
    for c in range(lo, last):
        col = red.cols[c]
        ends = [b - lo for b in _bits(col)]
        if len(ends) != 2 or min(ends) < 0:
            raise AssertionError(f"column {c} is not a weight-2 block column")
        u, v = ends
        adj[u].append((v, c))
        adj[v].append((u, c))
    targets = [b - lo for b in _bits(red.cols[last])]
    if min(targets) < 0 or len(targets) % 2 == 0:
        raise AssertionError("last block column has the wrong form")
    # root the tree at 0; odd[v]: parity of targets in the subtree below v
    parent = [-1] * size
    via = [-1] * size
    order = [0]
    seen = [False] * size
    seen[0] = True
    for u in order:
        for v, c in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v], via[v] = u, c
                order.append(v)
    if len(order) != size:
        raise AssertionError("weight-2 columns do not span the block")
    odd = [0] * size
    for t in targets:
        odd[t] ^= 1
    for v in reversed(order[1:]):
        odd[parent[v]] ^= odd[v]
    # choose the surviving position that needs the fewest column additions
    best = [0] * size
    best[0] = sum(odd[v] for v in order[1:])
    for v in order[1:]:
        best[v] = best[parent[v]] - odd[v] + (1 - odd[v])
    root = min(range(size), key=lambda v: (best[v], v))
    # with the chosen root, edge (v, parent) is used iff v's side holds an odd count
    sub = [0] * size
    for t in targets:
        sub[t] ^= 1
    sub[root] ^= 1
    parent2 = [-1] * size
    via2 = [-1] * size
    order2 = [root]
    seen = [False] * size
    seen[root] = True
    for u in order2:
        for v, c in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent2[v], via2[v] = u, c
                order2.append(v)
    for v in reversed(order2[1:]):
        if sub[v]:
            red.add_col(via2[v], last)
            sub[parent2[v]] ^= 1
    if red.cols[last] != 1 << (lo + root):
        raise AssertionError("last column did not reduce to weight 1")
    # peel: every edge column next to a resolved position becomes weight 1
    holder = {root: last}
    for v in order2[1:]:
        red.add_col(holder[parent2[v]], via2[v])
        holder[v] = via2[v]


def _alg5_rows(m: int, p: int) -> Reduction:
    """Row phase of the odd-runs construction: leaves ``I_n`` beside a
    circulant block on the last ``n + 1`` rows and columns."""
    n = m // 2
    red = Reduction(build_constmul_matrix(m, p))
    for i in range(n):
        red.add_row(i, n + i + 1)
    for i in range(n):
        red.add_row(n + i + 1, i)
    return red


def _alg56(m: int, p: int, fused: bool = True) -> Reduction:
    n = m // 2
    red = _alg5_rows(m, p)
    if fused:
        # consecutive column differences of the circulant block
        for i in range(1, n + 1):
            red.add_col(n + i, n + i - 1)
        _clear_top_right(red, n, n)
    else:
        top = (1 << n) - 1
        touched = []
        for i in range(n - 1, -1, -1):
            if red.cols[n + i] & top:
                red.add_col(n + i, n + i + 1)
                touched.append(i)
        _clear_top_right(red, n, n)
        for i in reversed(touched):
            red.add_col(n + i, n + i + 1)
        for i in range(1, n + 1):
            red.add_col(n + i, n + i - 1)
    _tree_reduce(red, n)
    return red


_BUILDERS = {
    ConstMulStrategy.ALG1_EVEN_TRINOMIAL: _alg1,
    ConstMulStrategy.ALG2_EVEN_CLUSTERED: _alg2,
    ConstMulStrategy.ALG3_ODD_TRINOMIAL: _alg3,
    ConstMulStrategy.ALG4_ODD_GENERAL: _alg4,
    ConstMulStrategy.ALG56_ODD_RUNS: _alg56,
}


def _synth_one(m: int, p: int, strategy: ConstMulStrategy, fused: bool,
               model: CostModel) -> Circuit:
    if strategy is ConstMulStrategy.LU_FALLBACK:
        return lu_synth(build_constmul_matrix(m, p, strict=False))
    if strategy is ConstMulStrategy.ALG56_ODD_RUNS:
        c = _alg56(m, p, fused).to_circuit()
    else:
        c = _BUILDERS[strategy](m, p).to_circuit()
    if model.free_permutation:
        return c
    # the trailing permutation costs full price here, so fold what we can
    folded = absorb_permutation(c)
    return folded if cost(folded, model).cnot <= cost(c, model).cnot else c


def synth_constmul(m: int, p: int, strategy: ConstMulStrategy | str = "auto",
                   fused: bool = True, model: CostModel | None = None) -> Circuit:
    """CNOT/SWAP circuit computing ``a -> a (1 + x^ceil(m/2)) mod p`` in place.

    ``auto`` builds every applicable construction and keeps the one with
    the fewest CNOTs under ``model`` (ties go to the higher-priority one).
    ``fused`` only affects the odd-runs construction.
    """
    if poly_shape(p)[0] != m:
        raise ValueError(f"polynomial degree must equal m = {m}")
    if strategy == "auto":
        model = model or CostModel()
        best = None
        for s in applicable_strategies(m, p):
            if s is ConstMulStrategy.LU_FALLBACK and best is not None:
                break
            c = _synth_one(m, p, s, fused, model)
            key = cost(c, model).cnot
            if best is None or key < best[0]:
                best = (key, c)
        return best[1]
    if isinstance(strategy, str):
        strategy = ConstMulStrategy.parse(strategy)
    if strategy not in applicable_strategies(m, p):
        raise StrategyShapeMismatch(f"{strategy.value} does not apply to {poly_shape(p)}")
    return _synth_one(m, p, strategy, fused, model or CostModel())


def synth_constdiv(m: int, p: int, strategy: ConstMulStrategy | str = "auto") -> Circuit:
    """Division by ``1 + x^ceil(m/2)``: the multiplication circuit reversed."""
    return invert(synth_constmul(m, p, strategy))


# ---------------------------------------------------------------------------
# candidate polynomials


CENTER_TRINOMIAL = "center-trinomial"
_KIND_STRATEGY = {
    CENTER_TRINOMIAL: ConstMulStrategy.ALG3_ODD_TRINOMIAL,
    PatternKind.ODD_RUNS.value: ConstMulStrategy.ALG56_ODD_RUNS,
    PatternKind.ODD_TRINOMIAL.value: ConstMulStrategy.ALG3_ODD_TRINOMIAL,
    PatternKind.ODD_GENERAL.value: ConstMulStrategy.ALG4_ODD_GENERAL,
    PatternKind.EVEN_TRINOMIAL.value: ConstMulStrategy.ALG1_EVEN_TRINOMIAL,
    PatternKind.EVEN_CLUSTERED.value: ConstMulStrategy.ALG2_EVEN_CLUSTERED,
}
_ODD_KINDS = (CENTER_TRINOMIAL, "odd-runs", "odd-trinomial", "odd-general")
_EVEN_KIND_NAMES = ("even-trinomial", "even-clustered")

CACHE_PATH = Path(__file__).with_name("data") / "constmul_candidates.txt"


def search_candidates(m: int, limit: int = 5) -> dict[str, list[int]]:
    """Up to ``limit`` irreducible polynomials per construction-friendly shape.

    For odd ``m`` the trinomial ``x^m + x^((m-1)/2) + 1`` gets its own
    entry: when irreducible the constant is ``x^(-(m-1)/2)``, the cheapest
    case of all.
    """
    if m < 3:
        return {}
    out: dict[str, list[int]] = {}
    kinds = _ODD_KINDS if m % 2 else _EVEN_KIND_NAMES
    for kind in kinds:
        if kind == CENTER_TRINOMIAL:
            p = (1 << m) | (1 << (m // 2)) | 1
            out[kind] = [p] if is_irreducible(p) else []
            continue
        try:
            out[kind] = [int(q) for q in find_pattern_polys(m, PolyPattern.of(kind), limit=limit)]
        except NoPolynomialFound:
            out[kind] = []
    return out


@lru_cache(maxsize=1)
def _load_cache(path: Path = CACHE_PATH) -> dict[int, tuple[int, dict[str, list[int]]]]:
    table: dict[int, tuple[int, dict[str, list[int]]]] = {}
    if not path.exists():
        return table
    for line in path.read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split()
        m, limit, kind = int(fields[0]), int(fields[1]), fields[2]
        entry = table.setdefault(m, (limit, {}))
        entry[1][kind] = [int(h, 16) for h in fields[3:]]
    return table


def candidate_polys(m: int, limit: int = 5, use_cache: bool = True) -> dict[str, list[int]]:
    """Like :func:`search_candidates`, served from the bundled cache when it
    covers ``m`` with at least ``limit`` entries per shape."""
    if use_cache:
        hit = _load_cache().get(m)
        if hit is not None and hit[0] >= limit:
            return {k: v[:limit] for k, v in hit[1].items()}
    return search_candidates(m, limit)


def write_cache(entries: dict[int, dict[str, list[int]]], limit: int, path: Path = CACHE_PATH) -> None:
    """Merge ``entries`` into the cache file (one line per ``m`` and shape)."""
    table = {m: (lim, dict(kinds)) for m, (lim, kinds) in _load_cache(path).items()}
    for m, kinds in entries.items():
        table[m] = (limit, kinds)
    lines = ["# m limit shape polynomials(hex) -- regenerate with `gf2synth find-poly --cache`"]
    for m in sorted(table):
        lim, kinds = table[m]
        for kind, polys in kinds.items():
            lines.append(" ".join([str(m), str(lim), kind] + [format(q, "x") for q in polys]))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    _load_cache.cache_clear()


@dataclass(frozen=True)
class ConstMulResult:
    poly: int
    strategy: ConstMulStrategy
    circuit: Circuit
    cnot: int


# candidates whose proven ceiling exceeds this multiple of the best count so
# far are not built (large-l trinomials produce millions of gates)
PRUNE_FACTOR = 16


def _ranked_candidates(m: int, candidates: int, use_cache: bool) -> list[tuple[int, int, ConstMulStrategy]]:
    out = []
    for kind, polys in candidate_polys(m, candidates, use_cache).items():
        strategy = _KIND_STRATEGY[kind]
        for p in polys:
            if strategy in applicable_strategies(m, p):
                out.append((strategy_bound(strategy, m, p), p, strategy))
    return sorted(out, key=lambda t: (t[0], t[1]))


def _lu_result(m: int, model: CostModel) -> ConstMulResult:
    p = next(q for q in range(1 << m, 1 << (m + 1)) if is_irreducible(q))
    c = _synth_one(m, p, ConstMulStrategy.LU_FALLBACK, True, model)
    return ConstMulResult(p, ConstMulStrategy.LU_FALLBACK, c, cost(c, model).cnot)


def best_constmul(m: int, candidates: int = 5, model: CostModel | None = None,
                  use_cache: bool = True) -> ConstMulResult:
    """Cheapest circuit over up to ``candidates`` polynomials of each
    suitable shape for this parity of ``m`` (ties go to the smaller polynomial).

    Candidates are built in order of their proven ceiling; one whose
    ceiling exceeds ``PRUNE_FACTOR`` times the best count so far is skipped.
    Falls back to LU on the smallest irreducible polynomial when no shape
    matches, which only happens for tiny ``m``.
    """
    model = model or CostModel()
    best: ConstMulResult | None = None
    for bound, p, strategy in _ranked_candidates(m, candidates, use_cache):
        if best is not None and bound > PRUNE_FACTOR * best.cnot:
            break
        c = _synth_one(m, p, strategy, True, model)
        n_cnot = cost(c, model).cnot
        if best is None or (n_cnot, p) < (best.cnot, best.poly):
            best = ConstMulResult(p, strategy, c, n_cnot)
    return best if best is not None else _lu_result(m, model)


def best_constmul_both(m: int, candidates: int = 5,
                       use_cache: bool = True) -> tuple[ConstMulResult, ConstMulResult]:
    """:func:`best_constmul` under the free-permutation and the default
    model at once, building each candidate circuit a single time."""
    free, full = CostModel(free_permutation=True), CostModel()
    best_free: ConstMulResult | None = None
    best_full: ConstMulResult | None = None
    for bound, p, strategy in _ranked_candidates(m, candidates, use_cache):
        if best_free is not None and bound > PRUNE_FACTOR * min(best_free.cnot, best_full.cnot):
            break
        raw = _synth_one(m, p, strategy, True, free)
        n_free = cost(raw, free).cnot
        if best_free is None or (n_free, p) < (best_free.cnot, best_free.poly):
            best_free = ConstMulResult(p, strategy, raw, n_free)
        folded = absorb_permutation(raw)
        pick = folded if cost(folded, full).cnot <= cost(raw, full).cnot else raw
        n_full = cost(pick, full).cnot
        if best_full is None or (n_full, p) < (best_full.cnot, best_full.poly):
            best_full = ConstMulResult(p, strategy, pick, n_full)
    if best_free is None:
        return _lu_result(m, free), _lu_result(m, full)
    return best_free, best_full
