"""GF(2) linear algebra for CNOT synthesis.

Builders for the constant-multiplication and squaring matrices, generic
synthesis (Gauss-Jordan and Patel-Markov-Hayes), a row/column reduction
workspace that records the operations used to reach the identity, and two
circulant families whose square is a cyclic shift.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable

import numpy as np

from .bitmatrix import BitMatrix
from .circuit import CNOT_KIND, SWAP_KIND, Circuit, Gate, defer_swaps, permutation_swaps
from .errors import BadFamilyParam, PolyShapeUnsupported, SingularMatrix
from .polyfield import BinPoly, poly_shape

__all__ = [
    "BitMatrix",
    "Reduction",
    "RootFamily",
    "build_constmul_matrix",
    "build_root_family",
    "build_squaring_matrix",
    "circulant",
    "cyclic_shift_offset",
    "lu_synth",
    "pmh_synth",
    "row_ops_circuit",
]


def _mulx_columns(m: int, p: int, first: int, step: int) -> list[int]:
    """Columns ``first * x^(step*j) mod p`` for ``j < m``."""
    top = 1 << m
    cols = []
    cur = first
    for _ in range(m):
        cols.append(cur)
        for _ in range(step):
            cur <<= 1
            if cur & top:
                cur ^= p
    return cols


def build_constmul_matrix(m: int, p: int, strict: bool = True) -> BitMatrix:
    """Matrix of ``a -> a * (1 + x^ceil(m/2)) mod p``.

    With ``strict`` the second-highest exponent of ``p`` must be below
    ``m - ceil(m/2)``, the shape every linear-cost construction assumes.
    Degrees up to 2 are exempt; they only ever use the generic synthesis.
    """
    deg, mids = poly_shape(p)
    if deg != m:
        raise ValueError(f"polynomial degree {deg} != m = {m}")
    half = (m + 1) // 2
    if strict and m > 2 and mids and mids[0] >= m - half:
        raise PolyShapeUnsupported(
            f"second-highest exponent {mids[0]} must be < {m - half} for this constant")
    first = 1 | (1 << half) if half < m else 1 ^ (p ^ (1 << m))
    return BitMatrix.from_columns(_mulx_columns(m, p, first, 1), m)


def build_squaring_matrix(m: int, p: int) -> BitMatrix:
    """Matrix of the Frobenius map ``a -> a^2 mod p``."""
    if BinPoly(p).degree != m:
        raise ValueError("polynomial degree must equal m")
    return BitMatrix.from_columns(_mulx_columns(m, p, 1, 2), m)


# ---------------------------------------------------------------------------
# reduction workspace


def _bits(v: int):
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


class Reduction:
    """A matrix being driven to the identity by row and column operations.

    Rows and columns are both kept as bit-vectors so either kind of
    operation is proportional to the weight of the line being added.  Row
    operations correspond to gates at the end of the circuit, column
    operations to gates at the beginning; :meth:`to_circuit` assembles them
    so that ``simulate_linear`` of the result equals the starting matrix.
    """

    def __init__(self, mat: BitMatrix):
        if mat.nrows != mat.ncols:
            raise ValueError("square matrix required")
        self.n = mat.nrows
        self.rows = list(mat.rows)
        self.cols = mat.transpose().rows
        self.row_ops: list[tuple[str, int, int]] = []
        self.col_ops: list[tuple[str, int, int]] = []

    # elementary moves

    def add_row(self, src: int, dst: int) -> None:
        if src == dst:
            raise ValueError("row added to itself")
        r = self.rows[src]
        self.rows[dst] ^= r
        bit = 1 << dst
        cols = self.cols
        for k in _bits(r):
            cols[k] ^= bit
        self.row_ops.append((CNOT_KIND, src, dst))

    def add_col(self, src: int, dst: int) -> None:
        if src == dst:
            raise ValueError("column added to itself")
        c = self.cols[src]
        self.cols[dst] ^= c
        bit = 1 << dst
        rows = self.rows
        for k in _bits(c):
            rows[k] ^= bit
        self.col_ops.append((CNOT_KIND, src, dst))

    def swap_rows(self, a: int, b: int) -> None:
        if a == b:
            return
        rows = self.rows
        flip = (1 << a) | (1 << b)
        for k in _bits(rows[a] ^ rows[b]):
            self.cols[k] ^= flip
        rows[a], rows[b] = rows[b], rows[a]
        self.row_ops.append((SWAP_KIND, a, b))

    def swap_cols(self, a: int, b: int) -> None:
        if a == b:
            return
        cols = self.cols
        flip = (1 << a) | (1 << b)
        for k in _bits(cols[a] ^ cols[b]):
            self.rows[k] ^= flip
        cols[a], cols[b] = cols[b], cols[a]
        self.col_ops.append((SWAP_KIND, a, b))

    def permute_rows(self, new_from_old: list[int]) -> None:
        """Reorder rows so that new row ``i`` is current row ``new_from_old[i]``,
        using one SWAP per cycle element beyond the first."""
        self._permute(new_from_old, self.swap_rows)

    def permute_cols(self, new_from_old: list[int]) -> None:
        self._permute(new_from_old, self.swap_cols)

    @staticmethod
    def _permute(new_from_old: list[int], swap) -> None:
        n = len(new_from_old)
        done = [False] * n
        for start in range(n):
            if done[start]:
                continue
            done[start] = True
            i = start
            j = new_from_old[i]
            # walking the cycle: position i should receive the content now at j
            while j != start:
                swap(i, j)
                done[j] = True
                i = j
                j = new_from_old[j]

    # queries

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def is_identity(self) -> bool:
        return all(r == 1 << i for i, r in enumerate(self.rows))

    def is_permutation(self) -> bool:
        return all(r and not r & (r - 1) for r in self.rows) and all(
            c and not c & (c - 1) for c in self.cols)

    def matrix(self) -> BitMatrix:
        return BitMatrix(self.n, self.n, self.rows)

    def finish_permutation(self) -> None:
        """Clear a remaining permutation matrix with row SWAPs."""
        if not self.is_permutation():
            raise ValueError("residual matrix is not a permutation")
        # new row i must be the row whose single 1 sits in column i
        owner = [0] * self.n
        for i, r in enumerate(self.rows):
            owner[r.bit_length() - 1] = i
        self.permute_rows(owner)

    def gaussian_rows(self, indices: Iterable[int]) -> None:
        """Gauss-Jordan on the square sub-block ``indices x indices`` with row
        operations among those rows only.  Those rows must already be zero
        outside the block, and the block must be invertible."""
        idx = list(indices)
        for pos, c in enumerate(idx):
            bit = 1 << c
            if not self.rows[c] & bit:
                piv = next((r for r in idx[pos + 1:] if self.rows[r] & bit), None)
                if piv is None:
                    raise SingularMatrix("sub-block is singular")
                self.add_row(piv, c)
            for r in idx:
                if r != c and self.rows[r] & bit:
                    self.add_row(c, r)

    def gate_count(self) -> int:
        return sum(3 if k == SWAP_KIND else 1 for k, _, _ in self.row_ops + self.col_ops)

    def to_circuit(self) -> Circuit:
        """Circuit for the starting matrix.

        A residual permutation is allowed.  All SWAPs, recorded or residual,
        are merged into one trailing SWAP network.
        """
        if not self.is_permutation():
            raise ValueError("reduction incomplete: residual is not a permutation")
        src_of = [r.bit_length() - 1 for r in self.rows]
        gates: list[Gate] = []
        for kind, s, d in self.col_ops:
            # M <- M (I + E_sd) is undone by CNOT(control=d, target=s) at the start
            gates.append(Gate(kind, d, s) if kind == CNOT_KIND else Gate(SWAP_KIND, s, d))
        gates.extend(permutation_swaps(src_of))
        gates.extend(Gate(kind, s, d) for kind, s, d in reversed(self.row_ops))
        return defer_swaps(Circuit(self.n, tuple(gates)))


def row_ops_circuit(n: int, row_ops: list[tuple[int, int]]) -> Circuit:
    """Circuit for the matrix that the given row additions reduce to identity."""
    return Circuit(n, tuple(Gate(CNOT_KIND, s, d) for s, d in reversed(row_ops)))


# ---------------------------------------------------------------------------
# generic synthesis


def _packed(mat: BitMatrix) -> np.ndarray:
    nbytes = (mat.ncols + 7) // 8
    buf = b"".join(r.to_bytes(nbytes, "little") for r in mat.rows)
    return np.frombuffer(buf, dtype=np.uint8).reshape(mat.nrows, nbytes).copy()


def lu_synth(mat: BitMatrix) -> Circuit:
    """Gauss-Jordan elimination with row operations only (at most m^2 gates).

    The reference construction for comparison; runs on a bit-packed numpy
    array so that m in the thousands stays practical.
    """
    n = mat.nrows
    if n != mat.ncols:
        raise SingularMatrix("non-square matrix")
    a = _packed(mat)
    ops: list[tuple[int, np.ndarray]] = []
    for c in range(n):
        byte, shift = c >> 3, c & 7
        col = (a[:, byte] >> shift) & 1
        if not col[c]:
            below = np.flatnonzero(col[c + 1:])
            if not below.size:
                raise SingularMatrix("matrix is singular")
            r = c + 1 + int(below[0])
            a[c] ^= a[r]
            ops.append((r, np.array([c])))
            col = (a[:, byte] >> shift) & 1
        col[c] = 0
        targets = np.flatnonzero(col)
        if targets.size:
            a[targets] ^= a[c]
            ops.append((c, targets))
    gates: list[Gate] = []
    for src, targets in reversed(ops):
        for d in reversed(targets.tolist()):
            gates.append(Gate(CNOT_KIND, src, d))
    return Circuit(n, tuple(gates))


def lu_gate_count(mat: BitMatrix) -> int:
    """Gate count of :func:`lu_synth` without materializing the circuit."""
    n = mat.nrows
    a = _packed(mat)
    total = 0
    for c in range(n):
        byte, shift = c >> 3, c & 7
        col = (a[:, byte] >> shift) & 1
        if not col[c]:
            below = np.flatnonzero(col[c + 1:])
            if not below.size:
                raise SingularMatrix("matrix is singular")
            a[c] ^= a[c + 1 + int(below[0])]
            total += 1
            col = (a[:, byte] >> shift) & 1
        col[c] = 0
        targets = np.flatnonzero(col)
        if targets.size:
            a[targets] ^= a[c]
            total += int(targets.size)
    return total


def _lower_pass(rows: list[int], n: int, section: int) -> list[tuple[int, int]]:
    """Row additions making ``rows`` upper triangular, section by section,
    after first merging duplicate sub-rows inside each section."""
    ops: list[tuple[int, int]] = []
    for start in range(0, n, section):
        end = min(start + section, n)
        mask = (1 << (end - start)) - 1
        seen: dict[int, int] = {}
        for r in range(start, n):
            pat = (rows[r] >> start) & mask
            if not pat:
                continue
            if pat in seen:
                rows[r] ^= rows[seen[pat]]
                ops.append((seen[pat], r))
            else:
                seen[pat] = r
        for c in range(start, end):
            bit = 1 << c
            if not rows[c] & bit:
                piv = next((r for r in range(c + 1, n) if rows[r] & bit), None)
                if piv is None:
                    raise SingularMatrix("matrix is singular")
                rows[c] ^= rows[piv]
                ops.append((piv, c))
            for r in range(c + 1, n):
                if rows[r] & bit:
                    rows[r] ^= rows[c]
                    ops.append((c, r))
    return ops


def pmh_synth(mat: BitMatrix, section_size: int | None = None) -> Circuit:
    """Patel-Markov-Hayes synthesis, O(m^2 / log m) gates.

    A lower pass on the matrix leaves it upper triangular; a lower pass on
    the transpose of that result (i.e. column operations) finishes it.
    """
    n = mat.nrows
    if n != mat.ncols:
        raise SingularMatrix("non-square matrix")
    if section_size is None:
        section_size = max(1, math.ceil(math.log2(max(n, 2)) / 2))
    rows = list(mat.rows)
    row_ops = _lower_pass(rows, n, section_size)
    upper = BitMatrix(n, n, rows)
    col_ops = _lower_pass(upper.transpose().rows, n, section_size)
    gates = [Gate(CNOT_KIND, d, s) for s, d in col_ops]
    gates += [Gate(CNOT_KIND, s, d) for s, d in reversed(row_ops)]
    return Circuit(n, tuple(gates))


# ---------------------------------------------------------------------------
# circulant families


def circulant(first_row: int, n: int) -> BitMatrix:
    """Row ``i`` is the first row cyclically shifted right by ``i``."""
    full = (1 << n) - 1
    rows = []
    r = first_row & full
    for _ in range(n):
        rows.append(r)
        r = ((r << 1) | (r >> (n - 1))) & full
    return BitMatrix(n, n, rows)


def cyclic_shift_offset(mat: BitMatrix) -> int | None:
    """``d`` if ``mat`` maps row ``i`` to column ``(i + d) mod n`` for all ``i``."""
    n = mat.nrows
    if not mat.is_permutation():
        return None
    d = mat.rows[0].bit_length() - 1
    for i, r in enumerate(mat.rows):
        if r != 1 << ((i + d) % n):
            return None
    return d


class RootFamily(str, enum.Enum):
    A = "A"
    B = "B"


def _is_odd_prime(p: int) -> bool:
    return p > 2 and p % 2 == 1 and all(p % d for d in range(3, int(p ** 0.5) + 1, 2))


def build_root_family(kind: RootFamily | str, n: int | None = None, t: int | None = None,
                      p: int | None = None, shift: int = 0) -> BitMatrix:
    """Circulant matrices whose square is a non-trivial cyclic shift.

    Family ``A``: ``n`` even, first row all ones except a zero at ``t``
    (``t`` not 0 or ``n/2``).  Family ``B``: ``p`` an odd prime,
    ``n = p(p+1)``, first row with ones at ``0, p, ..., p^2 - p``
    rotated by ``shift``; rotations whose square is the identity are
    rejected.
    """
    kind = RootFamily(kind)
    if kind is RootFamily.A:
        if n is None or t is None or n < 4 or n % 2 or not 0 < t < n or t == n // 2:
            raise BadFamilyParam("family A needs even n >= 4 and t not in {0, n/2}")
        row = ((1 << n) - 1) ^ (1 << t)
    else:
        if p is None or not _is_odd_prime(p):
            raise BadFamilyParam("family B needs an odd prime p")
        n = p * (p + 1)
        if not 0 <= shift < n:
            raise BadFamilyParam("shift must lie in [0, n)")
        row = 0
        for k in range(p):
            row |= 1 << ((k * p + shift) % n)
    mat = circulant(row, n)
    if (mat @ mat).is_identity():
        raise BadFamilyParam("this member squares to the identity")
    return mat
