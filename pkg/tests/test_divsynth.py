import math

import pytest

from conftest import P, bilinear_failures
from gf2synth.circuit import CostModel, cost, pack_samples, simulate_linear, simulate_slices, unpack_samples
from gf2synth.divsynth import (
    SquareMethod,
    _repeated_candidates,
    _repeated_square,
    best_multiplier,
    chain_multiplications,
    chain_steps,
    frobenius_matrix,
    is_division_friendly,
    square_bound,
    squaring_plan,
    synth_divide,
    synth_inverse_flt,
    synth_repeated_square,
    synth_square,
)
from gf2synth.linalg2 import build_squaring_matrix
from gf2synth.polyfield import PolyPattern, find_pattern_polys, gf_inv, gf_mul

FIELDS = {
    2: "x^2+x+1",
    3: "x^3+x+1",
    4: "x^4+x+1",
    5: "x^5+x^2+1",
    6: "x^6+x+1",
    7: "x^7+x+1",
    8: "x^8+x^4+x^3+x+1",
}


def friendly(m, limit=1):
    try:
        return [int(q) for q in find_pattern_polys(m, PolyPattern.of("division-friendly"), limit=limit)]
    except Exception:
        return []


# --- squaring ---------------------------------------------------------------


def test_m2_square_is_one_cnot():
    c = synth_square(2, P("x^2+x+1"))
    assert len(c.gates) == 1 and cost(c).cnot == 1
    assert simulate_linear(c).to_lists() == [[1, 1], [0, 1]]


@pytest.mark.parametrize("m", sorted(FIELDS))
def test_square_basis_oracle(m):
    p = P(FIELDS[m])
    c = synth_square(m, p)
    assert all(g.kind != "TOF" for g in c.gates)
    inputs = list(range(1 << m))
    outs = unpack_samples(simulate_slices(c, pack_samples(inputs, m)), len(inputs))
    assert outs == [gf_mul(a, a, p) for a in inputs]


def test_division_friendly_shape():
    assert is_division_friendly(P("x^7+x+1"))
    assert is_division_friendly(P("x^9+x^4+x+1"))
    assert not is_division_friendly(P("x^8+x^4+x^3+x+1"))
    assert not is_division_friendly(P("x^5+x^2+1"))


@pytest.mark.parametrize("method", ["structured", "lu", "pmh", "auto"])
def test_square_methods_match_matrix(method):
    for m in (9, 15, 33, 64):
        for p in friendly(m, 2):
            c = synth_square(m, p, method=method)
            assert simulate_linear(c) == build_squaring_matrix(m, p)


def test_structured_square_rejects_other_shapes():
    with pytest.raises(ValueError):
        synth_square(8, P(FIELDS[8]), method="structured")
    with pytest.raises(ValueError):
        synth_square(8, P(FIELDS[8]), method="magic")


def test_structured_square_within_bound():
    for m in range(3, 200):
        for p in friendly(m):
            c = synth_square(m, p, method="structured")
            assert cost(c).cnot <= square_bound(m, p), (m, hex(p))


def test_structured_square_is_linearithmic():
    # constant fixed once over 16..1024 (measured maximum 1.17)
    for m in (16, 31, 64, 100, 127, 256, 400, 512, 700, 1024):
        ps = friendly(m)
        if not ps:
            continue
        n = cost(synth_square(m, ps[0], method="structured")).cnot
        assert n <= 1.5 * m * math.log2(m), (m, n)


def test_non_friendly_falls_back_to_generic():
    m, p = 8, P(FIELDS[8])
    c = synth_square(m, p)
    assert simulate_linear(c) == build_squaring_matrix(m, p)


# --- repeated squaring ------------------------------------------------------


def test_frobenius_matrix_powers():
    for m, text in [(5, FIELDS[5]), (8, FIELDS[8]), (11, "x^11+x^2+1")]:
        p = P(text)
        sq = build_squaring_matrix(m, p)
        for k in range(0, m + 1):
            assert frobenius_matrix(m, p, k) == sq.power(k)
        assert frobenius_matrix(m, p, m).is_identity()


def test_repeated_square_full_order_is_empty():
    for m, text in [(4, FIELDS[4]), (7, FIELDS[7]), (16, "x^16+x^5+x^3+x+1")]:
        p = P(text)
        assert len(synth_repeated_square(m, p, m).gates) == 0


def test_repeated_square_single_step_equals_square():
    for m in (5, 8):
        p = P(FIELDS[m])
        assert simulate_linear(synth_repeated_square(m, p, 1)) == simulate_linear(synth_square(m, p))
        assert cost(synth_repeated_square(m, p, 1)).cnot <= cost(synth_square(m, p)).cnot


def test_repeated_square_m16_k8():
    p = P("x^16+x^5+x^3+x+1")
    c = synth_repeated_square(16, p, 8)
    assert simulate_linear(c) == build_squaring_matrix(16, p).power(8)


def test_repeated_square_picks_cheapest_candidate():
    model = CostModel()
    for m, p in [(16, P("x^16+x^5+x^3+x+1")), (33, friendly(33)[0]), (41, friendly(41)[0])]:
        for k in (1, 2, 4, 8, m // 2):
            chosen, method = _repeated_square(m, p, k, model)
            cands = _repeated_candidates(m, p, k, model)
            assert cost(chosen).cnot == min(cost(c).cnot for c in cands.values())
            assert isinstance(method, SquareMethod)
            assert simulate_linear(chosen) == frobenius_matrix(m, p, k)


def test_repeated_square_power_range():
    with pytest.raises(ValueError):
        synth_repeated_square(5, P(FIELDS[5]), 0)
    with pytest.raises(ValueError):
        synth_repeated_square(5, P(FIELDS[5]), 6)


# --- addition chain ---------------------------------------------------------


@pytest.mark.parametrize("m", range(2, 300))
def test_chain_length_formula(m):
    e = m - 1
    want = 0 if m == 2 else e.bit_length() - 1 + bin(e).count("1") - 1
    assert chain_multiplications(m) == want


def test_chain_reaches_target_exponent():
    for m in range(2, 200):
        e = 1
        for kind, cur in chain_steps(m):
            assert cur == e
            e = 2 * e if kind == "double" else e + 1
        assert e == m - 1


def test_squaring_plan_batches():
    plan = squaring_plan(16, P("x^16+x^5+x^3+x+1"))
    # 15 = 1111b: double 1, add, double 3, add, double 7, add, final square
    assert plan.batches == (1, 1, 3, 1, 7, 1, 1)
    assert len(plan.methods) == len(plan.batches)


# --- inversion and division -------------------------------------------------


def inverse_failures(c, m, p):
    rb, rt = (list(r.wires) for r in c.registers[:2])
    inputs = []
    for bval in range(1 << m):
        v = 0
        for i, w in enumerate(rb):
            v |= ((bval >> i) & 1) << w
        inputs.append(v)
    outs = unpack_samples(simulate_slices(c, pack_samples(inputs, c.width)), len(inputs))
    bad = 0
    for bval, v, o in zip(range(1 << m), inputs, outs):
        inv = int(gf_inv(bval, p)) if bval else 0
        want = v
        for i, w in enumerate(rt):
            want |= ((inv >> i) & 1) << w
        bad += o != want
    return bad


def test_m2_inverse_is_linear():
    c = synth_inverse_flt(2, P("x^2+x+1"))
    assert cost(c).toffoli == 0
    assert inverse_failures(c, 2, P("x^2+x+1")) == 0


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_inverse_exhaustive(m):
    p = P(FIELDS[m])
    assert inverse_failures(synth_inverse_flt(m, p), m, p) == 0


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_divide_exhaustive(m):
    p = P(FIELDS[m])
    assert bilinear_failures(synth_divide(m, p), m, p, op="div") == 0


def test_divide_random_target():
    m, p = 5, P(FIELDS[5])
    assert bilinear_failures(synth_divide(m, p), m, p, op="div", samples=500, random_target=True, seed=2) == 0


def test_divide_unoptimized_agrees():
    m, p = 4, P(FIELDS[4])
    assert bilinear_failures(synth_divide(m, p, optimize=False), m, p, op="div") == 0


@pytest.mark.parametrize("m,text,expected", [
    (2, "x^2+x+1", 3),
    (4, "x^4+x+1", 45),
    (8, "x^8+x^4+x^3+x+1", 243),
    (16, "x^16+x^5+x^3+x+1", 1053),
])
def test_division_toffoli_identity(m, text, expected):
    p = P(text)
    mult = cost(best_multiplier(m, p)).toffoli
    div = cost(synth_divide(m, p)).toffoli
    assert div == (2 * chain_multiplications(m) + 1) * mult == expected


def test_m2_division_counts():
    c = synth_divide(2, P("x^2+x+1"))
    assert cost(c).toffoli == 3 and cost(c).cnot <= 7


def test_m8_division_sampled():
    m, p = 8, P(FIELDS[8])
    assert bilinear_failures(synth_divide(m, p), m, p, op="div", samples=1000, seed=8) == 0


def test_rejects_reducible():
    with pytest.raises(ValueError):
        synth_divide(4, P("x^4+1"))
