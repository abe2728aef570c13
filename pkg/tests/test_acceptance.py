"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.  A criterion that is not
met records FAIL and is reported as xfail, so the gap stays visible without
turning the whole run red.
"""
import time

import pytest

from conftest import P, bilinear_failures, record_acceptance
from gf2synth.circuit import Circuit, CostModel, cost, invert, pack_samples, peephole_optimize, simulate_linear, simulate_slices
from gf2synth.constmul import best_constmul, best_constmul_both
from gf2synth.divsynth import best_multiplier, chain_multiplications, synth_divide, synth_repeated_square, synth_square
from gf2synth.linalg2 import RootFamily, build_constmul_matrix, build_root_family, build_squaring_matrix, cyclic_shift_offset, lu_gate_count
from gf2synth.mulsynth import (
    pctof_extract,
    pctof_optimize,
    pctof_reduce,
    synth_karatsuba,
    synth_karatsuba_like,
    synth_mastrovito,
    synth_toom3,
    toom3_toffoli_count,
)
from gf2synth.polyfield import PolyPattern, find_pattern_polys, is_irreducible

FREE = CostModel(free_permutation=True)

SMALL = {
    2: "x^2+x+1",
    3: "x^3+x+1",
    4: "x^4+x+1",
    5: "x^5+x^2+1",
    6: "x^6+x+1",
}

# published multiplier rows: polynomial, Toffoli, CNOT
MUL_TABLE = {
    2: ("x^2+x+1", 3, 7),
    4: ("x^4+x+1", 9, 41),
    8: ("x^8+x^4+x^3+x+1", 27, 177),
    16: ("x^16+x^5+x^3+x+1", 81, 615),
    32: ("x^32+x^13+x^12+x^11+1", 243, 2004),
    64: ("x^64+x^4+x^3+x^2+1", 729, 6117),
    128: ("x^128+x^21+x^20+x^19+1", 2187, 18894),
    256: ("x^256+x^33+x^32+x^31+1", 6561, 57434),
}
DIV_TABLE = {2: 3, 4: 45, 8: 243, 16: 1053}
TOOM_TABLE = {3: 7, 9: 67, 27: 351, 81: 1783}
SAMPLED_LARGE = (1500, 2000, 3001, 4096, 6159, 8191, 10000)


def report(ok: bool, label: str, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    record_acceptance(line)
    print(line)
    if not ok:
        pytest.xfail(line)


def _exhaustive_equal(c1: Circuit, c2: Circuit) -> bool:
    s = pack_samples(list(range(1 << c1.width)), c1.width)
    return simulate_slices(c1, s) == simulate_slices(c2, s)


# --- 1 ----------------------------------------------------------------------


def test_1_karatsuba_toffoli_powers_of_two():
    start = time.perf_counter()
    got = {m: cost(synth_karatsuba(m, P(MUL_TABLE[m][0]))).toffoli for m in MUL_TABLE}
    elapsed = time.perf_counter() - start
    ok = all(got[m] == 3 ** (m.bit_length() - 1) for m in got) and elapsed < 60
    report(ok, "1 Karatsuba Toffoli = 3^k", f"{list(got.values())} in {elapsed:.1f}s")


# --- 2 ----------------------------------------------------------------------


def test_2_division_toffoli_identity():
    got, ok = {}, True
    for m, want in DIV_TABLE.items():
        p = P(MUL_TABLE[m][0])
        mult = cost(best_multiplier(m, p)).toffoli
        got[m] = cost(synth_divide(m, p)).toffoli
        ok &= got[m] == (2 * chain_multiplications(m) + 1) * mult == want
    report(ok, "2 division Toffoli identity", str(got))


# --- 3 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def constmul_sweep():
    """(m, free-permutation best, default-model best) for m = 2..1000 and
    the sampled large sizes; every circuit checked against its matrix."""
    rows = []
    for m in list(range(2, 1001)) + list(SAMPLED_LARGE):
        free, full = best_constmul_both(m, candidates=5 if m <= 1000 else 1)
        matrices = {p: build_constmul_matrix(m, p, strict=False) for p in {free.poly, full.poly}}
        for r in {id(free.circuit): free, id(full.circuit): full}.values():
            assert simulate_linear(r.circuit) == matrices[r.poly], m
        rows.append((m, free, full))
    return rows


def test_3a_constmul_hard_bound(constmul_sweep):
    over = [(m, full.cnot) for m, _, full in constmul_sweep if full.cnot > 5.5 * m + 13]
    worst = max(constmul_sweep, key=lambda r: r[2].cnot - 5.5 * r[0])
    report(not over, "3 constmul <= 5.5m+13 (swap = 3 CNOT)",
           f"{len(constmul_sweep)} sizes, {len(over)} over {over[:6]}, worst m={worst[0]} {worst[2].cnot}")


def test_3b_constmul_practical_bound(constmul_sweep):
    over = [(m, free.cnot, round(free.cnot / m, 3)) for m, free, _ in constmul_sweep if free.cnot > 4.16 * m]
    worst = max((r for r in constmul_sweep if r[0] >= 16), key=lambda r: r[1].cnot / r[0])
    report(not over, "3 constmul <= 4.16m (free permutation)",
           f"{len(over)} over {over[:8]}, worst ratio {worst[1].cnot / worst[0]:.3f} at m={worst[0]}")


def test_3c_constmul_spot_value(constmul_sweep):
    free = next(f for m, f, _ in constmul_sweep if m == 6159)
    report(free.cnot <= 6158, "3 constmul m=6159 <= 6158", f"{free.cnot} CNOT with {free.strategy.value}")


def test_3d_lu_baseline_ratio():
    ratios = {}
    for m in (2000, 4096):
        r = best_constmul(m, candidates=1)
        ratios[m] = lu_gate_count(build_constmul_matrix(m, r.poly, strict=False)) / r.cnot
    ok = all(v >= 100 for v in ratios.values())
    report(ok, "3 LU baseline >= 100x for m >= 2000", ", ".join(f"m={m} {v:.1f}x" for m, v in ratios.items()))


# --- 4 ----------------------------------------------------------------------


def test_4_exhaustive_oracles_small():
    variants = {
        "mastrovito": lambda m, p: synth_mastrovito(m, p),
        "karatsuba": lambda m, p: synth_karatsuba(m, p),
        "karatsuba-out": lambda m, p: synth_karatsuba(m, p, out_of_place=True),
        "karatsuba-like": lambda m, p: synth_karatsuba_like(m, p),
        "karatsuba-like-out": lambda m, p: synth_karatsuba_like(m, p, out_of_place=True),
    }
    bad = {}
    for m, text in SMALL.items():
        p = P(text)
        for name, build in variants.items():
            bad[name, m] = bilinear_failures(build(m, p), m, p)
        bad["divide", m] = bilinear_failures(synth_divide(m, p), m, p, op="div")
        bad["divide-raw", m] = bilinear_failures(synth_divide(m, p, optimize=False), m, p, op="div")
        if m >= 3:
            bad["toom3", m] = bilinear_failures(synth_toom3(m), m, None, op="poly")
    failing = {k: v for k, v in bad.items() if v}
    report(not failing, "4 exhaustive oracles m<=6", f"{len(bad)} circuits, failing {failing}")


def test_4_linear_matrix_oracles():
    checked = 0
    for m in (3, 8, 64, 163, 233):
        ps = find_pattern_polys(m, PolyPattern.of("division-friendly"), limit=1) if m > 8 else []
        p = int(ps[0]) if ps else P(SMALL.get(m) or MUL_TABLE[8][0])
        sq = build_squaring_matrix(m, p)
        assert simulate_linear(synth_square(m, p)) == sq, m
        checked += 1
        if m > 163:
            continue
        for k in sorted({1, 2, m // 3, m // 2}):
            if 1 <= k <= m:
                assert simulate_linear(synth_repeated_square(m, p, k)) == sq.power(k), (m, k)
                checked += 1
    report(True, "4 matrix oracles for linear circuits",
           f"{checked} square/repeated-square circuits; constmul checked at every criterion-3 size up to 10000")


# --- 5 ----------------------------------------------------------------------


def test_5_multiplier_cnot_bands():
    rows, ok = [], True
    for m in (4, 16, 32, 64, 128, 256):
        text, _, ref = MUL_TABLE[m]
        n = cost(synth_karatsuba_like(m, P(text))).cnot
        rows.append(f"m={m} {n}/{ref} ({n / ref - 1:+.1%})")
        ok &= n <= 1.15 * ref
    report(ok, "5 multiplier CNOT within +15%", ", ".join(rows))


def test_5_toom3_toffoli_bands():
    got = {m: cost(synth_toom3(m)).toffoli for m in TOOM_TABLE}
    ok = all(TOOM_TABLE[m] <= got[m] <= 1.3 * TOOM_TABLE[m] for m in got)
    ok &= all(got[m] == toom3_toffoli_count(m) for m in got)
    ratios = [toom3_toffoli_count(3 * m) / toom3_toffoli_count(m) for m in (81, 243, 729, 2187, 6561)]
    ok &= max(ratios) <= 5.2
    report(ok, "5 Toom-3 Toffoli band and growth", f"{got}, max growth {max(ratios):.3f}")


# --- 6 ----------------------------------------------------------------------


def test_6_pctof_safety():
    ok, notes = True, []
    for m in (4, 8, 16, 32):
        p = P(MUL_TABLE[m][0])
        c = synth_karatsuba(m, p)
        _, layer = pctof_extract(c)
        noop = len(pctof_reduce(layer)) == len(layer) and pctof_optimize(c) == c
        ok &= noop
        notes.append(f"m={m} no-op={noop}")
    equivalent = 0
    for m, text in SMALL.items():
        p = P(text)
        for c in (synth_karatsuba(m, p), synth_mastrovito(m, p), synth_karatsuba_like(m, p, optimize=False)):
            d = pctof_optimize(c)
            ok &= cost(d).toffoli <= cost(c).toffoli
            if c.width <= 18:
                same = _exhaustive_equal(c, d)
                ok &= same
                equivalent += same
    report(ok, "6 PCTOF safety", f"{', '.join(notes)}, {equivalent} exhaustive equivalences")


# --- 7 ----------------------------------------------------------------------


def test_7_root_families():
    ok, count = True, 0
    for n in (4, 6, 8, 10):
        for t in range(1, n):
            if t == n // 2:
                continue
            mat = build_root_family(RootFamily.A, n=n, t=t)
            sq = mat @ mat
            ok &= cyclic_shift_offset(sq) is not None and not sq.is_identity()
            ok &= n - 1 in mat.row_weights()
            count += 1
    for prime in (3, 5, 7):
        mat = build_root_family(RootFamily.B, p=prime)
        sq = mat @ mat
        ok &= cyclic_shift_offset(sq) not in (None, 0) and not sq.is_identity()
        ok &= prime in mat.row_weights()
        count += 1
    report(ok, "7 root families", f"{count} members checked")


# --- 8 ----------------------------------------------------------------------


def _necklace(m: int) -> int:
    def mobius(n):
        out, k = 1, 2
        while k * k <= n:
            if n % k == 0:
                n //= k
                if n % k == 0:
                    return 0
                out = -out
            k += 1
        return -out if n > 1 else out
    return sum(mobius(d) * 2 ** (m // d) for d in range(1, m + 1) if m % d == 0) // m


def test_8_property_suite():
    import random

    rng = random.Random(8)
    ok, circuits = True, 0
    cases = [(m, P(SMALL[m])) for m in (3, 4, 5)] + [(8, P(MUL_TABLE[8][0])), (16, P(MUL_TABLE[16][0]))]
    for m, p in cases:
        for c in (synth_karatsuba(m, p, optimize=False), synth_karatsuba_like(m, p, optimize=False),
                  synth_mastrovito(m, p)):
            inputs = [rng.getrandbits(c.width) for _ in range(200)]
            s = pack_samples(inputs, c.width)
            ref = simulate_slices(c, s)
            ok &= simulate_slices(peephole_optimize(c), s) == ref
            ok &= simulate_slices(pctof_optimize(c), s) == ref
            ok &= simulate_slices(invert(c), ref) == s
            circuits += 1
    counts_ok = all(
        sum(1 for q in range(1 << m, 1 << (m + 1)) if is_irreducible(q)) == _necklace(m) for m in range(1, 17)
    )
    ok &= counts_ok
    report(ok, "8 property suite", f"{circuits} circuits x 200 inputs, necklace counts m<=16 {counts_ok}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
