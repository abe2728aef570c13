import random

import pytest

from gf2synth.bitmatrix import BitMatrix
from gf2synth.circuit import pack_samples, simulate_slices, unpack_samples
from gf2synth.polyfield import gf_inv, gf_mul, parse_poly, poly_mul

# worked example: multiplication by 1 + x^5 modulo x^10 + x^3 + 1
WORKED_M10 = BitMatrix.from_lists([
    "1000010000",
    "0100001000",
    "0010000100",
    "0001010010",
    "0000101001",
    "1000010100",
    "0100001010",
    "0010000101",
    "0001000010",
    "0000100001",
])

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def P(text: str) -> int:
    return int(parse_poly(text))


def _embed(value: int, wires) -> int:
    out = 0
    for i, w in enumerate(wires):
        out |= ((value >> i) & 1) << w
    return out


def bilinear_failures(c, m, p, op="mul", samples=None, seed=0, random_target=False):
    """Count inputs where ``c`` disagrees with ``c + a*b`` (or ``a/b``, or
    the plain polynomial product for ``op="poly"``).  Every wire outside the
    three registers must come back unchanged (zero)."""
    ra, rb, rc = (list(r.wires) for r in c.registers[:3])
    rng = random.Random(seed)
    lo = 1 if op == "div" else 0
    if samples is None:
        pairs = [(a, b) for a in range(1 << m) for b in range(lo, 1 << m)]
    else:
        pairs = []
        while len(pairs) < samples:
            a, b = rng.getrandbits(m), rng.getrandbits(m)
            if b >= lo:
                pairs.append((a, b))
    targets = [rng.getrandbits(len(rc)) if random_target else 0 for _ in pairs]
    inputs = [_embed(a, ra) | _embed(b, rb) | _embed(t, rc) for (a, b), t in zip(pairs, targets)]
    outs = unpack_samples(simulate_slices(c, pack_samples(inputs, c.width)), len(inputs))
    bad = 0
    for (a, b), t, o in zip(pairs, targets, outs):
        if op == "mul":
            r = int(gf_mul(a, b, p))
        elif op == "div":
            r = int(gf_mul(a, gf_inv(b, p), p))
        else:
            r = int(poly_mul(a, b))
        want = _embed(a, ra) | _embed(b, rb) | _embed(t ^ r, rc)
        bad += o != want
    return bad


@pytest.fixture
def worked_matrix():
    return WORKED_M10.copy()
