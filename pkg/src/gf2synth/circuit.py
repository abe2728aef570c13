"""Reversible circuit IR over CNOT, Toffoli and SWAP gates.

Gates are small named tuples; a :class:`Circuit` is an immutable gate
sequence on ``width`` wires plus optional named registers and phase labels.
Simulation is bit-sliced: each wire holds a Python int whose bit ``k`` is the
wire value in sample ``k``, so thousands of inputs are pushed through a
circuit in one pass.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .bitmatrix import BitMatrix
from .errors import NonlinearGate, ParseError, WidthMismatch

CNOT_KIND = "CNOT"
TOF_KIND = "TOF"
SWAP_KIND = "SWAP"
PERMUTATION_PHASE = "permutation"


class Gate(NamedTuple):
    """One gate.  For CNOT ``(a, b)`` is (control, target); for TOF ``c`` is
    the target; for SWAP ``a`` and ``b`` are exchanged."""

    kind: str
    a: int
    b: int
    c: int = -1

    @property
    def wires(self) -> tuple[int, ...]:
        return (self.a, self.b) if self.kind != TOF_KIND else (self.a, self.b, self.c)

    @property
    def target(self) -> int:
        return self.c if self.kind == TOF_KIND else self.b

    @property
    def controls(self) -> tuple[int, ...]:
        if self.kind == CNOT_KIND:
            return (self.a,)
        if self.kind == TOF_KIND:
            return (self.a, self.b)
        return ()

    def __str__(self) -> str:
        return " ".join([self.kind, *map(str, self.wires)])


def CNOT(control: int, target: int) -> Gate:
    if control == target:
        raise ValueError("CNOT wires must be distinct")
    return Gate(CNOT_KIND, control, target)


def TOFFOLI(c1: int, c2: int, target: int) -> Gate:
    if len({c1, c2, target}) != 3:
        raise ValueError("Toffoli wires must be distinct")
    return Gate(TOF_KIND, c1, c2, target)


def SWAP(a: int, b: int) -> Gate:
    if a == b:
        raise ValueError("SWAP wires must be distinct")
    return Gate(SWAP_KIND, a, b)


class Role(str, enum.Enum):
    INPUT_A = "input_a"
    INPUT_B = "input_b"
    TARGET = "target"
    ANCILLA = "ancilla"


@dataclass(frozen=True)
class Register:
    name: str
    start: int
    length: int
    role: Role

    @property
    def wires(self) -> range:
        return range(self.start, self.start + self.length)


@dataclass(frozen=True, eq=False)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    registers: tuple[Register, ...] = ()
    # (label, first gate index, end index); not part of equality or text form
    phases: tuple[tuple[str, int, int], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not isinstance(self.gates, tuple):
            object.__setattr__(self, "gates", tuple(self.gates))
        if not isinstance(self.registers, tuple):
            object.__setattr__(self, "registers", tuple(self.registers))
        taken = set()
        for reg in self.registers:
            if reg.start < 0 or reg.start + reg.length > self.width:
                raise WidthMismatch(f"register {reg.name} exceeds width {self.width}")
            span = set(reg.wires)
            if span & taken:
                raise ValueError(f"register {reg.name} overlaps another register")
            taken |= span

    def validate(self) -> None:
        for k, g in enumerate(self.gates):
            if max(g.wires) >= self.width or min(g.wires) < 0:
                raise WidthMismatch(f"gate {k} ({g}) outside width {self.width}")
            if len(set(g.wires)) != len(g.wires):
                raise ValueError(f"gate {k} ({g}) repeats a wire")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.width, self.gates, self.registers) == (other.width, other.gates, other.registers)

    def __hash__(self) -> int:
        return hash((self.width, self.gates, self.registers))

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if self.width != other.width:
            raise WidthMismatch("cannot concatenate circuits of different width")
        off = len(self.gates)
        phases = self.phases + tuple((lab, s + off, e + off) for lab, s, e in other.phases)
        return Circuit(self.width, self.gates + other.gates, self.registers or other.registers, phases)

    def register(self, name: str) -> Register:
        for reg in self.registers:
            if reg.name == name:
                return reg
        raise KeyError(name)

    def by_role(self, role: Role | str) -> list[Register]:
        role = Role(role)
        return [r for r in self.registers if r.role is role]

    def is_linear(self) -> bool:
        return all(g.kind != TOF_KIND for g in self.gates)

    def counts(self) -> dict[str, int]:
        out = {CNOT_KIND: 0, TOF_KIND: 0, SWAP_KIND: 0}
        for g in self.gates:
            out[g.kind] += 1
        return out

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.width, tuple(gates), self.registers)

    def remap(self, wire_map: Sequence[int], width: int | None = None) -> "Circuit":
        """Relabel wire ``i`` as ``wire_map[i]``."""
        wm = wire_map
        gates = []
        for g in self.gates:
            if g.kind == TOF_KIND:
                gates.append(Gate(TOF_KIND, wm[g.a], wm[g.b], wm[g.c]))
            else:
                gates.append(Gate(g.kind, wm[g.a], wm[g.b]))
        return Circuit(self.width if width is None else width, tuple(gates), (), self.phases)


class CircuitBuilder:
    """Mutable gate list used while synthesizing; ``build()`` freezes it."""

    def __init__(self, width: int = 0):
        self.width = width
        self.gates: list[Gate] = []
        self.registers: list[Register] = []
        self.phases: list[tuple[str, int, int]] = []
        self._phase_stack: list[tuple[str, int]] = []

    def add_register(self, name: str, length: int, role: Role | str) -> Register:
        reg = Register(name, self.width, length, Role(role))
        self.width += length
        self.registers.append(reg)
        return reg

    def cnot(self, control: int, target: int) -> None:
        self.gates.append(Gate(CNOT_KIND, control, target))

    def toffoli(self, c1: int, c2: int, target: int) -> None:
        self.gates.append(Gate(TOF_KIND, c1, c2, target))

    def swap(self, a: int, b: int) -> None:
        self.gates.append(Gate(SWAP_KIND, a, b))

    def extend(self, gates: Iterable[Gate]) -> None:
        self.gates.extend(gates)

    def append_circuit(self, c: Circuit, wire_map: Sequence[int] | None = None, label: str | None = None) -> None:
        start = len(self.gates)
        if wire_map is None:
            self.gates.extend(c.gates)
        else:
            self.gates.extend(c.remap(wire_map).gates)
        if label is not None:
            self.phases.append((label, start, len(self.gates)))

    def begin(self, label: str) -> None:
        self._phase_stack.append((label, len(self.gates)))

    def end(self) -> None:
        label, start = self._phase_stack.pop()
        if not self._phase_stack:
            self.phases.append((label, start, len(self.gates)))

    def build(self) -> Circuit:
        return Circuit(self.width, tuple(self.gates), tuple(self.registers), tuple(self.phases))


# ---------------------------------------------------------------------------
# simulation


def _run(gates: Iterable[Gate], w: list[int]) -> list[int]:
    for kind, a, b, c in gates:
        if kind == CNOT_KIND:
            w[b] ^= w[a]
        elif kind == TOF_KIND:
            w[c] ^= w[a] & w[b]
        else:
            w[a], w[b] = w[b], w[a]
    return w


def simulate_slices(c: Circuit, wires: Sequence[int]) -> list[int]:
    """Bit-sliced simulation: ``wires[i]`` packs the values of wire ``i``
    across independent samples (bit ``k`` = sample ``k``)."""
    if len(wires) != c.width:
        raise WidthMismatch(f"expected {c.width} wire slices, got {len(wires)}")
    return _run(c.gates, list(wires))


def simulate_full(c: Circuit, bits):
    """Classical simulation of one input.

    ``bits`` is either an int bit-vector (bit ``i`` = wire ``i``, returned as
    an int) or a sequence of 0/1 of length ``width`` (returned as a list).
    """
    if isinstance(bits, int):
        if bits >> c.width:
            raise WidthMismatch(f"input has bits above width {c.width}")
        w = _run(c.gates, [(bits >> i) & 1 for i in range(c.width)])
        return sum(v << i for i, v in enumerate(w))
    if len(bits) != c.width:
        raise WidthMismatch(f"input length {len(bits)} != width {c.width}")
    return _run(c.gates, [int(b) & 1 for b in bits])


def pack_samples(samples: Sequence[int], width: int) -> list[int]:
    """Transpose int bit-vector samples into per-wire slices."""
    slices = [0] * width
    for k, s in enumerate(samples):
        while s:
            low = s & -s
            slices[low.bit_length() - 1] |= 1 << k
            s ^= low
    return slices


def unpack_samples(slices: Sequence[int], count: int) -> list[int]:
    out = [0] * count
    for i, sl in enumerate(slices):
        bit = 1 << i
        while sl:
            low = sl & -sl
            out[low.bit_length() - 1] |= bit
            sl ^= low
    return out


def simulate_linear(c: Circuit) -> BitMatrix:
    """Matrix ``M`` with ``output = M @ input`` for a CNOT/SWAP circuit."""
    w = [1 << i for i in range(c.width)]
    for kind, a, b, _ in c.gates:
        if kind == CNOT_KIND:
            w[b] ^= w[a]
        elif kind == SWAP_KIND:
            w[a], w[b] = w[b], w[a]
        else:
            raise NonlinearGate("simulate_linear needs a CNOT/SWAP-only circuit")
    return BitMatrix(c.width, c.width, w)


def gate_labels(c: Circuit) -> list[str | None]:
    """Phase label of every gate (the innermost phase wins)."""
    labels: list[str | None] = [None] * len(c.gates)
    for label, s, e in sorted(c.phases, key=lambda ph: ph[1] - ph[2]):
        for i in range(s, e):
            labels[i] = label
    return labels


def phases_from_labels(labels: Sequence[str | None]) -> tuple[tuple[str, int, int], ...]:
    out = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            if labels[start] is not None:
                out.append((labels[start], start, i))
            start = i
    return tuple(out)


def permutation_swaps(src_of: Sequence[int]) -> list[Gate]:
    """At most ``n - 1`` SWAPs moving the value on wire ``src_of[i]`` to wire ``i``."""
    n = len(src_of)
    held = list(range(n))  # held[w]: original wire whose value sits on w
    where = list(range(n))
    gates = []
    for i in range(n):
        j = where[src_of[i]]
        if j != i:
            gates.append(Gate(SWAP_KIND, i, j))
            a, b = held[i], held[j]
            held[i], held[j] = b, a
            where[a], where[b] = j, i
    return gates


def defer_swaps(c: Circuit) -> Circuit:
    """Equivalent circuit with every SWAP relabeled away and one combined
    SWAP network at the end."""
    loc = list(range(c.width))
    out = []
    labels = []
    for g, lab in zip(c.gates, gate_labels(c)):
        if g.kind == SWAP_KIND:
            loc[g.a], loc[g.b] = loc[g.b], loc[g.a]
            continue
        if g.kind == CNOT_KIND:
            out.append(Gate(CNOT_KIND, loc[g.a], loc[g.b]))
        else:
            out.append(Gate(g.kind, loc[g.a], loc[g.b], loc[g.c]))
        labels.append(lab)
    tail = permutation_swaps(loc)
    out.extend(tail)
    labels.extend([PERMUTATION_PHASE if c.phases else None] * len(tail))
    return Circuit(c.width, tuple(out), c.registers, phases_from_labels(labels))


def absorb_permutation(c: Circuit) -> Circuit:
    """Fold SWAPs into CNOTs on the same wire pair.

    All SWAPs are gathered into one permutation which is then walked from
    the end of the circuit to the front.  Whenever the gate it passes is a
    CNOT whose two wires lie in one cycle of the permutation, a transposition
    is split off and the pair CNOT+SWAP is rewritten as two CNOTs (a saving
    of two under the usual SWAP = 3 CNOT accounting).  What remains of the
    permutation is emitted at the front.
    """
    deferred = defer_swaps(c)
    tagged = list(zip(deferred.gates, gate_labels(deferred)))
    body = [(g, lab) for g, lab in tagged if g.kind != SWAP_KIND]
    tail = [g for g, _ in tagged if g.kind == SWAP_KIND]
    if not tail:
        return deferred
    n = c.width
    at = list(range(n))  # at[w]: wire whose value the trailing SWAPs bring to w
    for g in tail:
        at[g.a], at[g.b] = at[g.b], at[g.a]
    perm = _invert_perm(at)  # perm[x]: wire the value on x ends up on
    cycle = _cycle_ids(perm)
    fresh = n
    out: list[Gate] = []
    labels: list[str | None] = []
    for g, lab in reversed(body):
        labels.append(lab)
        if g.kind == CNOT_KIND and cycle[g.a] == cycle[g.b]:
            a, b = g.a, g.b
            perm[a], perm[b] = perm[b], perm[a]
            out.append(Gate(CNOT_KIND, perm[a], perm[b]))
            out.append(Gate(CNOT_KIND, perm[b], perm[a]))
            labels.append(lab)
            # the cycle split in two; relabel the shorter half
            for x in _shorter_cycle(perm, a, b):
                cycle[x] = fresh
            fresh += 1
        elif g.kind == CNOT_KIND:
            out.append(Gate(CNOT_KIND, perm[g.a], perm[g.b]))
        else:
            out.append(Gate(g.kind, perm[g.a], perm[g.b], perm[g.c]))
    src_of = [0] * n
    for x, y in enumerate(perm):
        src_of[y] = x
    front = permutation_swaps(src_of)
    labels = [PERMUTATION_PHASE if c.phases else None] * len(front) + labels[::-1]
    return Circuit(c.width, tuple(front) + tuple(reversed(out)), c.registers, phases_from_labels(labels))


def _invert_perm(perm: list[int]) -> list[int]:
    inv = [0] * len(perm)
    for x, y in enumerate(perm):
        inv[y] = x
    return inv


def _shorter_cycle(perm: list[int], a: int, b: int) -> list[int]:
    xs, ys = [a], [b]
    x, y = perm[a], perm[b]
    while True:
        if x == a:
            return xs
        if y == b:
            return ys
        xs.append(x)
        ys.append(y)
        x, y = perm[x], perm[y]


def _cycle_ids(perm: list[int]) -> list[int]:
    ids = [-1] * len(perm)
    for start in range(len(perm)):
        if ids[start] < 0:
            x = start
            while ids[x] < 0:
                ids[x] = start
                x = perm[x]
    return ids


def invert(c: Circuit) -> Circuit:
    """Every gate here is self-inverse, so inversion reverses the order."""
    n = len(c.gates)
    phases = tuple((lab, n - e, n - s) for lab, s, e in reversed(c.phases))
    return Circuit(c.width, c.gates[::-1], c.registers, phases)


def equivalent(c1: Circuit, c2: Circuit, samples: int = 1000, seed: int = 0) -> bool:
    """Functional equality: exact matrices for linear circuits, exhaustive
    simulation up to 18 wires, random sampling above."""
    if c1.width != c2.width:
        return False
    if c1.is_linear() and c2.is_linear():
        return simulate_linear(c1) == simulate_linear(c2)
    inputs = sample_inputs(c1.width, samples, seed)
    for chunk in _chunks(inputs, 4096):
        sl = pack_samples(chunk, c1.width)
        if _run(c1.gates, list(sl)) != _run(c2.gates, list(sl)):
            return False
    return True


def sample_inputs(width: int, samples: int = 1000, seed: int = 0) -> list[int]:
    if width <= 18:
        return list(range(1 << width))
    rng = random.Random(seed)
    return [rng.getrandbits(width) for _ in range(samples)]


def _chunks(seq, size):
    for i in range(0, len(seq), size):
        yield seq[i:i + size]


# ---------------------------------------------------------------------------
# cost accounting


@dataclass(frozen=True)
class CostModel:
    toffoli_weight: Fraction | int = 10
    cnot_weight: Fraction | int = 1
    swap_as_cnots: bool = True
    free_permutation: bool = False

    def __post_init__(self):
        for w in (self.toffoli_weight, self.cnot_weight):
            if w < 0:
                raise ValueError("cost weights must be non-negative")


DEFAULT_MODEL = CostModel()


@dataclass(frozen=True)
class CostReport:
    toffoli: int
    cnot: int
    weighted: Fraction | int
    phases: dict = field(default_factory=dict, compare=False)
    swaps: int = 0

    def csv_row(self, m: int, poly: str) -> str:
        return f"{m},{poly},{self.toffoli},{self.cnot},{_fmt_num(self.weighted)}"


CSV_HEADER = "m,poly,toffoli,cnot,weighted"


def _fmt_num(x) -> str:
    if isinstance(x, Fraction) and x.denominator == 1:
        return str(x.numerator)
    return str(x)


def _count(gates: Sequence[Gate], model: CostModel, free_from: int) -> tuple[int, int, int]:
    tof = cnot = swaps = 0
    for k, g in enumerate(gates):
        if g.kind == TOF_KIND:
            tof += 1
        elif g.kind == CNOT_KIND:
            cnot += 1
        elif k < free_from:
            swaps += 1
    if model.swap_as_cnots:
        cnot += 3 * swaps
    return tof, cnot, swaps


def cost(c: Circuit, model: CostModel = DEFAULT_MODEL) -> CostReport:
    """Gate counts under ``model``.

    SWAPs count as three CNOTs by default; with ``free_permutation`` a
    trailing run of SWAPs is a relabeling and costs nothing.
    """
    gates = c.gates
    free_from = len(gates)
    if model.free_permutation:
        while free_from and gates[free_from - 1].kind == SWAP_KIND:
            free_from -= 1
    tof, cnot, swaps = _count(gates, model, free_from)
    phases = {}
    for label, s, e in c.phases:
        t, n, _ = _count(gates[s:e], model, min(max(free_from - s, 0), e - s))
        pt, pn = phases.get(label, (0, 0))
        phases[label] = (pt + t, pn + n)
    weighted = model.toffoli_weight * tof + model.cnot_weight * cnot
    return CostReport(tof, cnot, weighted, phases, swaps)


# ---------------------------------------------------------------------------
# peephole optimization


def _commute(g: Gate, h: Gate) -> bool:
    if g.kind == SWAP_KIND or h.kind == SWAP_KIND:
        return g == h or not (set(g.wires) & set(h.wires))
    gt, ht = g.target, h.target
    return gt not in h.controls and ht not in g.controls


def _same_gate(g: Gate, h: Gate) -> bool:
    if g.kind != h.kind:
        return False
    if g.kind == CNOT_KIND:
        return g.a == h.a and g.b == h.b
    if g.kind == TOF_KIND:
        return g.c == h.c and {g.a, g.b} == {h.a, h.b}
    return {g.a, g.b} == {h.a, h.b}


def _cancel_pass(gates: list[tuple[Gate, str | None]], window: int) -> tuple[list[tuple[Gate, str | None]], bool]:
    out: list[tuple[Gate, str | None] | None] = []
    live: list[int] = []  # indices into out of surviving gates, in order
    changed = False
    for item in gates:
        g = item[0]
        gw = set(g.wires)
        cancelled = False
        seen = 0
        for pos in range(len(live) - 1, -1, -1):
            h = out[live[pos]][0]
            if gw.isdisjoint(h.wires):
                continue
            seen += 1
            if seen > window:
                break
            if _same_gate(g, h):
                out[live[pos]] = None
                del live[pos]
                cancelled = True
                break
            if not _commute(g, h):
                break
        if cancelled:
            changed = True
            continue
        live.append(len(out))
        out.append(item)
    return [item for item in out if item is not None], changed


def _merge_pass(gates: list[tuple[Gate, str | None]], window: int) -> tuple[list[tuple[Gate, str | None]], bool]:
    """Conjugation templates on adjacent CNOT triples:
    CNOT(a,b) CNOT(b,c) CNOT(a,b) -> CNOT(a,c) CNOT(b,c) and
    CNOT(a,b) CNOT(c,a) CNOT(a,b) -> CNOT(c,a) CNOT(c,b)."""
    out: list[tuple[Gate, str | None]] = []
    changed = False
    for item in gates:
        out.append(item)
        if len(out) >= 3:
            (x, lab), (y, _), (z, _) = out[-3], out[-2], out[-1]
            if x.kind == y.kind == z.kind == CNOT_KIND and x == z:
                a, b = x.a, x.b
                if y.a == b and y.b not in (a, b):
                    cnew = y.b
                    out[-3:] = [(Gate(CNOT_KIND, a, cnew), lab), (Gate(CNOT_KIND, b, cnew), lab)]
                    changed = True
                elif y.b == a and y.a not in (a, b):
                    # CNOT(a,b) CNOT(c,a) CNOT(a,b) = CNOT(c,a) CNOT(c,b)
                    cnew = y.a
                    out[-3:] = [(Gate(CNOT_KIND, cnew, a), lab), (Gate(CNOT_KIND, cnew, b), lab)]
                    changed = True
    return out, changed


def peephole_optimize(c: Circuit, window: int = 64, max_passes: int = 8) -> Circuit:
    """Local rewriting with equivalence-preserving templates.

    Self-inverse pairs separated only by commuting gates cancel; CNOT triples
    ``g h g`` where ``h`` touches ``g`` in one wire shrink to two gates.  Every
    template strictly removes CNOT-equivalent cost, so cost never grows.
    """
    items = list(zip(c.gates, gate_labels(c)))
    for _ in range(max_passes):
        items, ch1 = _cancel_pass(items, window)
        items, ch2 = _merge_pass(items, window)
        if not (ch1 or ch2):
            break
    gates = tuple(g for g, _ in items)
    return Circuit(c.width, gates, c.registers, phases_from_labels([lab for _, lab in items]))


# ---------------------------------------------------------------------------
# text form


def export_text(c: Circuit) -> str:
    lines = [f"WIDTH {c.width}"]
    for r in c.registers:
        lines.append(f"REG {r.name} {r.start} {r.length} {r.role.value}")
    lines.extend(str(g) for g in c.gates)
    return "\n".join(lines) + "\n"


_ARITY = {CNOT_KIND: 2, TOF_KIND: 3, SWAP_KIND: 2}


def parse_text(text: str) -> Circuit:
    width = None
    regs: list[Register] = []
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0].upper()
        try:
            if head == "WIDTH":
                if width is not None or len(parts) != 2:
                    raise ParseError("duplicate or malformed WIDTH", lineno)
                width = int(parts[1])
                continue
            if width is None:
                raise ParseError("WIDTH header must come first", lineno)
            if head == "REG":
                if len(parts) != 5:
                    raise ParseError("REG needs name start len role", lineno)
                regs.append(Register(parts[1], int(parts[2]), int(parts[3]), Role(parts[4])))
                continue
            if head == "TOFFOLI":
                head = TOF_KIND
            if head not in _ARITY:
                raise ParseError(f"unknown gate {parts[0]!r}", lineno)
            wires = [int(x) for x in parts[1:]]
            if len(wires) != _ARITY[head]:
                raise ParseError(f"{head} takes {_ARITY[head]} wires", lineno)
            if len(set(wires)) != len(wires) or min(wires) < 0 or max(wires) >= width:
                raise ParseError(f"bad wires in {line!r}", lineno)
            gates.append(Gate(head, *wires))
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
    if width is None:
        raise ParseError("missing WIDTH header")
    try:
        return Circuit(width, tuple(gates), tuple(regs))
    except (ValueError, WidthMismatch) as exc:
        raise ParseError(str(exc)) from exc
