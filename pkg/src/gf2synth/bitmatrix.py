"""Dense square-or-rectangular matrices over GF(2).

Rows are Python ints (bit ``j`` of row ``i`` is entry ``(i, j)``), so row
addition is a single XOR regardless of size.  Column-vector convention: a
matrix acts on the left of a column vector whose entry 0 is the top.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import SingularMatrix


class BitMatrix:
    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows: int, ncols: int | None = None, rows: Iterable[int] | None = None):
        self.nrows = nrows
        self.ncols = nrows if ncols is None else ncols
        self.rows = [0] * nrows if rows is None else list(rows)
        if len(self.rows) != nrows:
            raise ValueError("row count mismatch")

    # construction ---------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def from_columns(cls, columns: Sequence[int], nrows: int | None = None) -> "BitMatrix":
        """Build from column bit-vectors (bit ``i`` of column ``j`` is entry ``(i, j)``)."""
        if nrows is None:
            nrows = len(columns)
        rows = [0] * nrows
        for j, col in enumerate(columns):
            bit = 1 << j
            while col:
                low = col & -col
                rows[low.bit_length() - 1] |= bit
                col ^= low
        return cls(nrows, len(columns), rows)

    @classmethod
    def from_lists(cls, data: Sequence[Sequence[int] | str]) -> "BitMatrix":
        """Build from nested 0/1 lists or '0101' strings, row by row."""
        rows = []
        ncols = len(data[0]) if data else 0
        for r in data:
            v = 0
            for j, b in enumerate(r):
                if int(b):
                    v |= 1 << j
            rows.append(v)
        return cls(len(rows), ncols, rows)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.nrows, self.ncols, self.rows)

    # access ---------------------------------------------------------------

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return (self.rows[i] >> j) & 1

    def __setitem__(self, ij: tuple[int, int], value: int) -> None:
        i, j = ij
        if value & 1:
            self.rows[i] |= 1 << j
        else:
            self.rows[i] &= ~(1 << j)

    def column(self, j: int) -> int:
        v = 0
        for i, r in enumerate(self.rows):
            if (r >> j) & 1:
                v |= 1 << i
        return v

    def columns(self) -> list[int]:
        return self.transpose().rows

    def transpose(self) -> "BitMatrix":
        cols = [0] * self.ncols
        for i, r in enumerate(self.rows):
            bit = 1 << i
            while r:
                low = r & -r
                cols[low.bit_length() - 1] |= bit
                r ^= low
        return BitMatrix(self.ncols, self.nrows, cols)

    def to_lists(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.ncols)] for r in self.rows]

    def dump(self) -> str:
        """Rows as 0/1 strings, one per line (column 0 first)."""
        return "\n".join("".join("1" if (r >> j) & 1 else "0" for j in range(self.ncols)) for r in self.rows)

    def __str__(self) -> str:
        return self.dump()

    def __repr__(self) -> str:
        return f"BitMatrix({self.nrows}x{self.ncols})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.nrows == other.nrows and self.ncols == other.ncols and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.nrows, self.ncols, tuple(self.rows)))

    def is_identity(self) -> bool:
        return self.nrows == self.ncols and all(r == 1 << i for i, r in enumerate(self.rows))

    def row_weights(self) -> list[int]:
        return [bin(r).count("1") for r in self.rows]

    def weight(self) -> int:
        return sum(self.row_weights())

    # elementary operations --------------------------------------------------

    def add_row(self, src: int, dst: int) -> None:
        self.rows[dst] ^= self.rows[src]

    def swap_rows(self, a: int, b: int) -> None:
        self.rows[a], self.rows[b] = self.rows[b], self.rows[a]

    def add_col(self, src: int, dst: int) -> None:
        bit = 1 << dst
        for i, r in enumerate(self.rows):
            if (r >> src) & 1:
                self.rows[i] = r ^ bit

    # algebra ----------------------------------------------------------------

    def apply(self, v: int) -> int:
        """Matrix times the column vector ``v`` (bit ``j`` = entry ``j``)."""
        out = 0
        for i, r in enumerate(self.rows):
            if bin(r & v).count("1") & 1:
                out |= 1 << i
        return out

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        orows = other.rows
        out = []
        for r in self.rows:
            acc = 0
            while r:
                low = r & -r
                acc ^= orows[low.bit_length() - 1]
                r ^= low
            out.append(acc)
        return BitMatrix(self.nrows, other.ncols, out)

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        return BitMatrix(self.nrows, self.ncols, [a ^ b for a, b in zip(self.rows, other.rows)])

    def power(self, k: int) -> "BitMatrix":
        result = BitMatrix.identity(self.nrows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            k >>= 1
            if k:
                base = base @ base
        return result

    def rank(self) -> int:
        rows = [r for r in self.rows if r]
        rank = 0
        pivots: dict[int, int] = {}
        for r in rows:
            while r:
                top = r.bit_length() - 1
                if top in pivots:
                    r ^= pivots[top]
                else:
                    pivots[top] = r
                    rank += 1
                    break
        return rank

    def is_invertible(self) -> bool:
        return self.nrows == self.ncols and self.rank() == self.nrows

    def inverse(self) -> "BitMatrix":
        n = self.nrows
        if n != self.ncols:
            raise SingularMatrix("non-square matrix")
        a = list(self.rows)
        inv = [1 << i for i in range(n)]
        for c in range(n):
            bit = 1 << c
            piv = next((i for i in range(c, n) if a[i] & bit), None)
            if piv is None:
                raise SingularMatrix("matrix is singular")
            if piv != c:
                a[c], a[piv] = a[piv], a[c]
                inv[c], inv[piv] = inv[piv], inv[c]
            ac, ic = a[c], inv[c]
            for i in range(n):
                if i != c and a[i] & bit:
                    a[i] ^= ac
                    inv[i] ^= ic
        return BitMatrix(n, n, inv)

    def is_permutation(self) -> bool:
        if self.nrows != self.ncols:
            return False
        seen = 0
        for r in self.rows:
            if not r or r & (r - 1):
                return False
            seen |= r
        return seen == (1 << self.ncols) - 1
