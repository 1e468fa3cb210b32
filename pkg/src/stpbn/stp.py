"""Semi-tensor product kernels.

Two representations live here. ``LogicalMatrix`` stores a column-selector
matrix as its row count plus a tuple of 1-based row indices, one per column
(the delta notation ``delta_p[i_1, ..., i_q]``). ``DenseMatrix`` stores exact
rationals and backs the general STP and the property tests. Every operation
on logical matrices has a dense twin, and the two must agree on dense
embeddings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class DimensionError(ValueError):
    pass


# --------------------------------------------------------------------------
# dense exact matrices
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DenseMatrix:
    rows: int
    cols: int
    entries: tuple  # row-major Fractions

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DimensionError(f"bad shape {self.rows}x{self.cols}")
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, got {len(self.entries)}"
            )
        object.__setattr__(self, "entries", tuple(Fraction(e) for e in self.entries))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "DenseMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise DimensionError("ragged rows")
        return cls(len(rows), ncols, tuple(e for r in rows for e in r))

    @classmethod
    def identity(cls, k: int) -> "DenseMatrix":
        return cls(k, k, tuple(int(i == j) for i in range(k) for j in range(k)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DenseMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple:
        return self.entries[j::self.cols]

    def to_rows(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def __matmul__(self, other: "DenseMatrix") -> "DenseMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        # row-sparse accumulation; most operands here are mostly zero
        orows = [[(j, b) for j, b in enumerate(other.row(k)) if b] for k in range(other.rows)]
        out = []
        for i in range(self.rows):
            acc = [0] * other.cols
            for k, a in enumerate(self.row(i)):
                if a:
                    for j, b in orows[k]:
                        acc[j] += a * b
            out.extend(acc)
        return DenseMatrix(self.rows, other.cols, tuple(out))

    def __add__(self, other: "DenseMatrix") -> "DenseMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return DenseMatrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "DenseMatrix") -> "DenseMatrix":
        return self + other.scale(-1)

    def scale(self, a) -> "DenseMatrix":
        a = Fraction(a)
        return DenseMatrix(self.rows, self.cols, tuple(a * e for e in self.entries))

    def hstack(self, other: "DenseMatrix") -> "DenseMatrix":
        if self.rows != other.rows:
            raise DimensionError("row counts differ")
        return DenseMatrix.from_rows([self.row(i) + other.row(i) for i in range(self.rows)])

    def inverse(self) -> "DenseMatrix":
        """Gauss-Jordan inverse over the rationals."""
        if self.rows != self.cols:
            raise DimensionError("only square matrices are invertible")
        k = self.rows
        a = [list(self.row(i)) + [Fraction(int(i == j)) for j in range(k)] for i in range(k)]
        for c in range(k):
            pivot = next((r for r in range(c, k) if a[r][c] != 0), None)
            if pivot is None:
                raise ZeroDivisionError("matrix is singular")
            a[c], a[pivot] = a[pivot], a[c]
            p = a[c][c]
            a[c] = [e / p for e in a[c]]
            for r in range(k):
                if r != c and a[r][c] != 0:
                    f = a[r][c]
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return DenseMatrix.from_rows([row[k:] for row in a])


def kron(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    out = []
    for i in range(a.rows):
        for k in range(b.rows):
            for j in range(a.cols):
                aij = a[i, j]
                for l in range(b.cols):
                    out.append(aij * b[k, l])
    return DenseMatrix(a.rows * b.rows, a.cols * b.cols, tuple(out))


def stp(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    """Left semi-tensor product ``(A (x) I_{t/n}) (B (x) I_{t/p})`` with t = lcm(n, p)."""
    t = math.lcm(a.cols, b.rows)
    left = a if t == a.cols else kron(a, DenseMatrix.identity(t // a.cols))
    right = b if t == b.rows else kron(b, DenseMatrix.identity(t // b.rows))
    return left @ right


def stp_chain(*mats: DenseMatrix) -> DenseMatrix:
    out = mats[0]
    for m in mats[1:]:
        out = stp(out, m)
    return out


def transpose(a: DenseMatrix) -> DenseMatrix:
    return DenseMatrix(a.cols, a.rows, tuple(a[i, j] for j in range(a.cols) for i in range(a.rows)))


def dense_khatri_rao(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.cols != b.cols:
        raise DimensionError(f"Khatri-Rao needs equal column counts, got {a.cols} and {b.cols}")
    cols = [kron(_column(a, j), _column(b, j)) for j in range(a.cols)]
    return DenseMatrix.from_rows(
        [[c.entries[i] for c in cols] for i in range(a.rows * b.rows)]
    )


def _column(a: DenseMatrix, j: int) -> DenseMatrix:
    return DenseMatrix(a.rows, 1, a.col(j))


# --------------------------------------------------------------------------
# logical matrices
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LogicalMatrix:
    """``delta_rows[cols]``: column j is the basis vector ``delta_rows^{cols[j]}``."""

    rows: int
    cols: tuple

    _zero_ok = False

    def __post_init__(self):
        cols = tuple(int(c) for c in self.cols)
        object.__setattr__(self, "cols", cols)
        if self.rows < 1:
            raise DimensionError(f"row count must be positive, got {self.rows}")
        if not cols:
            raise DimensionError("a matrix needs at least one column")
        lo = 0 if self._zero_ok else 1
        for c in cols:
            if not lo <= c <= self.rows:
                raise DimensionError(f"column index {c} outside {lo}..{self.rows}")

    @property
    def ncols(self) -> int:
        return len(self.cols)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, len(self.cols))

    @classmethod
    def identity(cls, k: int) -> "LogicalMatrix":
        return cls(k, tuple(range(1, k + 1)))

    def __getitem__(self, j: int) -> int:
        """1-based column access, returning the row index of that column."""
        return self.cols[j - 1]

    def to_dense(self) -> DenseMatrix:
        out = [0] * (self.rows * len(self.cols))
        q = len(self.cols)
        for j, c in enumerate(self.cols):
            if c:
                out[(c - 1) * q + j] = 1
        return DenseMatrix(self.rows, q, tuple(out))

    def __matmul__(self, other: "LogicalMatrix") -> "LogicalMatrix":
        return logical_compose(self, other)

    def __repr__(self) -> str:
        body = ",".join(map(str, self.cols)) if len(self.cols) <= 32 else f"{len(self.cols)} cols"
        return f"delta_{self.rows}[{body}]"


@dataclass(frozen=True, repr=False)
class ZeroExtendedLogicalMatrix(LogicalMatrix):
    """Logical matrix that may hold zero columns (index 0)."""

    _zero_ok = True


def is_zero_extended(a: LogicalMatrix) -> bool:
    return 0 in a.cols


def _like(*mats: LogicalMatrix):
    return ZeroExtendedLogicalMatrix if any(isinstance(m, ZeroExtendedLogicalMatrix) for m in mats) else LogicalMatrix


def from_dense(d: DenseMatrix, allow_zero: bool = False) -> LogicalMatrix:
    """Inverse of ``to_dense``; raises if ``d`` is not (zero-extended) logical."""
    cols = []
    for j in range(d.cols):
        col = d.col(j)
        ones = [i for i, e in enumerate(col) if e == 1]
        if any(e not in (0, 1) for e in col) or len(ones) > 1:
            raise ValueError(f"column {j + 1} is not a basis vector")
        if not ones:
            if not allow_zero:
                raise ValueError(f"column {j + 1} is zero")
            cols.append(0)
        else:
            cols.append(ones[0] + 1)
    cls = ZeroExtendedLogicalMatrix if allow_zero else LogicalMatrix
    return cls(d.rows, tuple(cols))


def logical_compose(a: LogicalMatrix, b: LogicalMatrix) -> LogicalMatrix:
    """Ordinary product ``A B`` of logical matrices; zero columns stay zero."""
    if a.ncols != b.rows:
        raise DimensionError(f"cannot compose {a.shape} with {b.shape}")
    ac = a.cols
    cols = tuple(ac[c - 1] if c else 0 for c in b.cols)
    return _like(a, b)(a.rows, cols)


def logical_kron(a: LogicalMatrix, b: LogicalMatrix) -> LogicalMatrix:
    p = b.rows
    cols = tuple(
        (ca - 1) * p + cb if ca and cb else 0
        for ca in a.cols
        for cb in b.cols
    )
    return _like(a, b)(a.rows * p, cols)


def khatri_rao(a: LogicalMatrix, b: LogicalMatrix) -> LogicalMatrix:
    """Column-wise Kronecker product; column j is ``Col_j(A) |x Col_j(B)``."""
    if a.ncols != b.ncols:
        raise DimensionError(f"Khatri-Rao needs equal column counts, got {a.ncols} and {b.ncols}")
    q = b.rows
    cols = tuple((ca - 1) * q + cb if ca and cb else 0 for ca, cb in zip(a.cols, b.cols))
    return _like(a, b)(a.rows * q, cols)


def khatri_rao_all(mats: Iterable[LogicalMatrix]) -> LogicalMatrix:
    mats = list(mats)
    if not mats:
        raise ValueError("need at least one factor")
    out = mats[0]
    for m in mats[1:]:
        out = khatri_rao(out, m)
    return out


def logical_stp(a: LogicalMatrix, b: LogicalMatrix) -> LogicalMatrix:
    t = math.lcm(a.ncols, b.rows)
    left = a if t == a.ncols else logical_kron(a, LogicalMatrix.identity(t // a.ncols))
    right = b if t == b.rows else logical_kron(b, LogicalMatrix.identity(t // b.rows))
    return logical_compose(left, right)


def logical_transpose(a: LogicalMatrix) -> LogicalMatrix:
    """Transpose of a permutation matrix, i.e. its inverse."""
    if not is_permutation(a):
        raise ValueError("only permutation matrices have a logical transpose")
    inv = [0] * a.rows
    for j, c in enumerate(a.cols, start=1):
        inv[c - 1] = j
    return LogicalMatrix(a.rows, tuple(inv))


def is_permutation(a: LogicalMatrix) -> bool:
    return a.rows == a.ncols and 0 not in a.cols and len(set(a.cols)) == a.rows


def hconcat(mats: Sequence[LogicalMatrix]) -> LogicalMatrix:
    rows = {m.rows for m in mats}
    if len(rows) != 1:
        raise DimensionError("blocks must share a row count")
    return _like(*mats)(rows.pop(), tuple(c for m in mats for c in m.cols))


def split_blocks(a: LogicalMatrix, k: int) -> list[LogicalMatrix]:
    """Split into ``k`` equal-width column blocks; block r equals ``A |x delta_k^r``."""
    if a.ncols % k:
        raise DimensionError(f"{a.ncols} columns do not split into {k} blocks")
    w = a.ncols // k
    cls = type(a)
    return [cls(a.rows, a.cols[r * w:(r + 1) * w]) for r in range(k)]


def swap_matrix(m: int, n: int) -> LogicalMatrix:
    """``W_[m,n] = [I_n (x) delta_m^1, ..., I_n (x) delta_m^m]``."""
    return LogicalMatrix(m * n, tuple((j - 1) * m + i for i in range(1, m + 1) for j in range(1, n + 1)))


def ones_row(k: int) -> LogicalMatrix:
    """``J_k^T`` as a 1 x k logical matrix."""
    return LogicalMatrix(1, (1,) * k)


# --------------------------------------------------------------------------
# vectors and the state encoding
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaVector:
    dim: int
    index: int

    def __post_init__(self):
        if not 1 <= self.index <= self.dim:
            raise DimensionError(f"delta_{self.dim}^{self.index} is out of range")

    def as_matrix(self) -> LogicalMatrix:
        return LogicalMatrix(self.dim, (self.index,))

    def to_dense(self) -> DenseMatrix:
        return self.as_matrix().to_dense()


@dataclass(frozen=True)
class OnesVector:
    dim: int

    def row(self) -> LogicalMatrix:
        return ones_row(self.dim)

    def to_dense(self) -> DenseMatrix:
        return DenseMatrix(self.dim, 1, (1,) * self.dim)


def delta(k: int, i: int) -> DeltaVector:
    return DeltaVector(k, i)


def state_index_encode(bits: Sequence[int]) -> DeltaVector:
    """Map a Boolean tuple to ``x_1 |x ... |x x_n`` with 1 ~ delta_2^1."""
    n = len(bits)
    if n < 1:
        raise ValueError("need at least one bit")
    idx = 1
    for b in bits:
        if b not in (0, 1, True, False):
            raise ValueError(f"not a bit: {b!r}")
        idx = 2 * idx - int(b)  # idx-1 <- 2(idx-1) + (1-b)
    return DeltaVector(1 << n, idx)


def state_index_decode(index: int | DeltaVector, n: int) -> tuple[int, ...]:
    if isinstance(index, DeltaVector):
        index = index.index
    if not 1 <= index <= (1 << n):
        raise DimensionError(f"index {index} outside 1..{1 << n}")
    k = index - 1
    return tuple(1 - ((k >> (n - 1 - i)) & 1) for i in range(n))
