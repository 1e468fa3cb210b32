"""Invariant subspaces of Boolean networks and their aggregated dynamics.

A subspace is carried as an ordered set of scalar logical functions, each a
2 x 2^n structure matrix ``G_i``; the subspace matrix is ``G = G_1 * ... * G_r``.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .stp import (
    DenseMatrix,
    LogicalMatrix,
    hconcat,
    khatri_rao,
    khatri_rao_all,
    logical_compose,
    logical_kron,
    state_index_decode,
    transpose,
)

DEFAULT_CAP = 4096
MAX_PRODUCT_BITS = 22


class ClosureCapExceeded(RuntimeError):
    def __init__(self, cap: int, size: int, frontier: int):
        super().__init__(f"closure grew past {cap} functions ({size} found, frontier of {frontier})")
        self.cap = cap
        self.size = size
        self.frontier = frontier


class UnattainedValueError(ValueError):
    """``Q Q^T`` is singular: some value of ``Q`` is never attained."""

    def __init__(self, missing: Sequence[int]):
        super().__init__(f"values {list(missing)[:10]} of Q are never attained")
        self.missing = tuple(missing)


# --------------------------------------------------------------------------
# function sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionSet:
    n: int
    funcs: tuple
    provenance: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        funcs, prov, names = [], [], []
        seen = set()
        given_prov = self.provenance or ("generator",) * len(self.funcs)
        given_names = self.names or tuple(f"z{i}" for i in range(1, len(self.funcs) + 1))
        for g, p, nm in zip(self.funcs, given_prov, given_names):
            if g.rows != 2 or g.ncols != 1 << self.n:
                raise ValueError(f"{nm}: expected a 2 x {1 << self.n} function, got {g.shape}")
            if g.cols in seen:
                continue
            seen.add(g.cols)
            funcs.append(g)
            prov.append(p)
            names.append(nm)
        object.__setattr__(self, "funcs", tuple(funcs))
        object.__setattr__(self, "provenance", tuple(prov))
        object.__setattr__(self, "names", tuple(names))

    @classmethod
    def of(cls, funcs: Iterable[LogicalMatrix], names: Sequence[str] = ()) -> "FunctionSet":
        funcs = tuple(funcs)
        if not funcs:
            raise ValueError("function set is empty")
        return cls(funcs[0].ncols.bit_length() - 1, funcs, (), tuple(names))

    def __len__(self):
        return len(self.funcs)

    def __iter__(self):
        return iter(self.funcs)

    def __getitem__(self, i):
        return self.funcs[i]

    def keys(self) -> frozenset:
        """Column vectors as a set; comparison ignores labels and order."""
        return frozenset(g.cols for g in self.funcs)


@dataclass(frozen=True)
class SubspaceMatrix:
    r: int
    G: LogicalMatrix


def combined_structure(fs: FunctionSet | Sequence[LogicalMatrix]) -> SubspaceMatrix:
    funcs = list(fs)
    if not funcs:
        raise ValueError("function set is empty")
    return SubspaceMatrix(len(funcs), khatri_rao_all(funcs))


def _as_matrix(Q) -> LogicalMatrix:
    return Q.G if isinstance(Q, SubspaceMatrix) else Q


def is_regular(Q: SubspaceMatrix | LogicalMatrix) -> bool:
    """Every value is attained by exactly ``2^(n-r)`` states."""
    Q = _as_matrix(Q)
    if Q.ncols % Q.rows:
        return False
    fiber = Q.ncols // Q.rows
    counts = Counter(Q.cols)
    return len(counts) == Q.rows and all(c == fiber for c in counts.values())


# --------------------------------------------------------------------------
# invariance certificates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceCertificate:
    Q: LogicalMatrix
    M: LogicalMatrix
    H: LogicalMatrix

    def __bool__(self):
        return True

    def check(self) -> bool:
        return logical_compose(self.Q, self.M) == logical_compose(self.H, self.Q)


@dataclass(frozen=True)
class Refusal:
    """``Q`` is not ``M``-invariant: ``Q x = Q x'`` but ``Q M x != Q M x'``."""

    witness: tuple  # (x, x')
    value: int  # the shared Q value
    images: tuple  # (QMx, QMx')

    def __bool__(self):
        return False


def h_star_counts(Q: LogicalMatrix, M: LogicalMatrix) -> DenseMatrix:
    """``Q M Q^T (Q Q^T)^{-1}`` by integer counting over the fibers of ``Q``."""
    Q, QM = _as_matrix(Q), logical_compose(_as_matrix(Q), M)
    k = Q.rows
    fiber = Counter(Q.cols)
    missing = [j for j in range(1, k + 1) if not fiber[j]]
    if missing:
        raise UnattainedValueError(missing)
    joint = Counter(zip(QM.cols, Q.cols))
    return DenseMatrix.from_rows(
        [[Fraction(joint[(i, j)], fiber[j]) for j in range(1, k + 1)] for i in range(1, k + 1)]
    )


def h_star_rational(Q: LogicalMatrix, M: LogicalMatrix) -> DenseMatrix:
    """``Q M Q^T (Q Q^T)^{-1}`` by exact dense linear algebra."""
    Qd = _as_matrix(Q).to_dense()
    QMd = logical_compose(_as_matrix(Q), M).to_dense()
    Qt = transpose(Qd)
    return QMd @ Qt @ (Qd @ Qt).inverse()


def invariance_certificate(Q: SubspaceMatrix | LogicalMatrix, M: LogicalMatrix):
    """Return an ``InvarianceCertificate`` with ``QM = HQ`` or a ``Refusal``.

    ``H`` is the fiber-count form of ``Q M Q^T (Q Q^T)^{-1}``; it is logical
    exactly when every fiber of ``Q`` is mapped into a single fiber.
    Raises ``UnattainedValueError`` when some value of ``Q`` has an empty fiber.
    """
    Q = _as_matrix(Q)
    attained = set(Q.cols)
    missing = [j for j in range(1, Q.rows + 1) if j not in attained]
    if missing:
        raise UnattainedValueError(missing)
    QM = logical_compose(Q, M)
    image: dict[int, tuple[int, int]] = {}  # Q value -> (first state, its QM value)
    for x, (q, qm) in enumerate(zip(Q.cols, QM.cols), start=1):
        if q not in image:
            image[q] = (x, qm)
        elif image[q][1] != qm:
            x0, qm0 = image[q]
            return Refusal((x0, x), q, (qm0, qm))
    H = LogicalMatrix(Q.rows, tuple(image[j][1] for j in range(1, Q.rows + 1)))
    return InvarianceCertificate(Q, M, H)


@dataclass(frozen=True)
class UnionCertificate:
    G: LogicalMatrix
    H: LogicalMatrix
    M: LogicalMatrix

    def check(self) -> bool:
        return logical_compose(self.G, self.M) == logical_compose(self.H, self.G)


def union_invariant(G1: LogicalMatrix, H1: LogicalMatrix, G2: LogicalMatrix, H2: LogicalMatrix,
                    M: LogicalMatrix) -> UnionCertificate:
    """Certificate ``(G_1 * G_2) M = (H_1 (x) H_2)(G_1 * G_2)`` for two certified subspaces."""
    for i, (G, H) in enumerate(((G1, H1), (G2, H2)), start=1):
        if logical_compose(G, M) != logical_compose(H, G):
            raise ValueError(f"input {i} is not certified: G M != H G")
    cert = UnionCertificate(khatri_rao(G1, G2), logical_kron(H1, H2), M)
    assert cert.check()
    return cert


# --------------------------------------------------------------------------
# closure
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosureResult:
    closure: FunctionSet
    successor: dict  # block id (1-based) -> tuple of 1-based member indices
    generator_indices: tuple
    nblocks: int = 1

    @property
    def s(self) -> int:
        return len(self.closure)

    @property
    def scope(self) -> tuple:
        return tuple(sorted(self.successor))

    @property
    def G(self) -> LogicalMatrix:
        return combined_structure(self.closure).G


def _right_multiply(g: LogicalMatrix, B: LogicalMatrix) -> tuple:
    gc = g.cols
    return tuple(gc[c - 1] for c in B.cols)


def close_functions(
    generators: FunctionSet | Sequence[LogicalMatrix],
    blocks: Sequence[LogicalMatrix],
    scope: Iterable[int] | None = None,
    *,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> ClosureResult:
    """Smallest function set containing ``generators`` and closed under ``g -> g B`` for B in scope.

    Breadth-first: members are expanded in label order, each against the
    in-scope blocks in increasing order, and new functions are appended in
    discovery order. With ``workers > 1`` the products of a whole frontier are
    computed in a thread pool; the merge stays sequential, so labels are the
    same as in the single-threaded run.
    """
    gens = generators if isinstance(generators, FunctionSet) else FunctionSet.of(generators)
    scope = tuple(sorted(set(scope))) if scope is not None else tuple(range(1, len(blocks) + 1))
    for b in scope:
        if not 1 <= b <= len(blocks):
            raise ValueError(f"block {b} outside 1..{len(blocks)}")
    in_scope = [blocks[b - 1] for b in scope]
    funcs = list(gens.funcs)
    names = list(gens.names)
    prov = ["generator"] * len(funcs)
    index = {g.cols: i for i, g in enumerate(funcs)}
    succ = {b: [] for b in scope}
    if len(funcs) > cap:
        raise ClosureCapExceeded(cap, len(funcs), len(funcs))

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        start, level = 0, 0
        while start < len(funcs):
            frontier = funcs[start:]
            level += 1

            def expand(g):
                return [_right_multiply(g, B) for B in in_scope]

            products = list(pool.map(expand, frontier)) if pool else [expand(g) for g in frontier]
            start = len(funcs)
            for row in products:
                for b, cols in zip(scope, row):
                    j = index.get(cols)
                    if j is None:
                        j = len(funcs)
                        index[cols] = j
                        funcs.append(LogicalMatrix(2, cols))
                        names.append(f"z{j + 1}")
                        prov.append(f"derived-at-step-{level}")
                        if len(funcs) > cap:
                            raise ClosureCapExceeded(cap, len(funcs), len(funcs) - start)
                    succ[b].append(j + 1)
    finally:
        if pool:
            pool.shutdown()

    fs = FunctionSet(gens.n, tuple(funcs), tuple(prov), tuple(names))
    return ClosureResult(
        fs,
        {b: tuple(v) for b, v in succ.items()},
        tuple(range(1, len(gens) + 1)),
        len(blocks),
    )


def closure_bn(generators, M: LogicalMatrix, *, cap: int = DEFAULT_CAP, workers: int = 1) -> ClosureResult:
    return close_functions(generators, [M], cap=cap, workers=workers)


def is_closed(funcs: Iterable[LogicalMatrix], blocks: Sequence[LogicalMatrix]) -> bool:
    keys = {g.cols for g in funcs}
    return all(_right_multiply(LogicalMatrix(2, k), B) in keys for k in keys for B in blocks)


# --------------------------------------------------------------------------
# aggregated dynamics
# --------------------------------------------------------------------------


def selector_matrix(k: int, s: int) -> LogicalMatrix:
    """``J^T_{2^(k-1)} (x) I_2 (x) J^T_{2^(s-k)}``: reads factor ``k`` of ``z_1 |x ... |x z_s``."""
    if not 1 <= k <= s:
        raise ValueError(f"factor {k} outside 1..{s}")
    shift = s - k
    return LogicalMatrix(2, tuple(((c >> shift) & 1) + 1 for c in range(1 << s)))


def product_form(positions: Sequence[int], s: int) -> LogicalMatrix:
    """``S_p1 * S_p2 * ... * S_pk`` for selectors ``S`` over ``z = z_1 |x ... |x z_s``.

    Column ``c`` holds the state whose k-th factor is factor ``positions[k]``
    of ``c``. With ``positions = sigma`` this is the aggregated transition
    matrix; with the output positions it is the output matrix.
    """
    if s > MAX_PRODUCT_BITS:
        raise ValueError(f"product form over {s} functions is too large (limit {MAX_PRODUCT_BITS})")
    p = len(positions)
    v = np.arange(1 << s, dtype=np.int64)
    out = np.zeros_like(v)
    for k, src in enumerate(positions, start=1):
        out |= ((v >> (s - src)) & 1) << (p - k)
    return LogicalMatrix(1 << p, tuple((out + 1).tolist()))


@dataclass(frozen=True)
class AggregatedSystem:
    """Aggregated dynamics ``z(t+1) = H_r z(t)`` on ``z = z_1 |x ... |x z_s``.

    ``H_blocks`` maps a block id to its 2^s x 2^s product-form matrix. The
    reduced form lists the value vectors ``G x`` actually attained (ordered by
    first appearance over x = 1..2^n) and the transitions between them.
    """

    s: int
    H_blocks: dict
    G: LogicalMatrix
    nblocks: int = 1
    classes: tuple = field(default=())  # product-state index of each attained class
    class_of_state: tuple = field(default=(), repr=False)
    reduced_blocks: dict = field(default_factory=dict)
    output: LogicalMatrix | None = None

    @property
    def scope(self) -> tuple:
        return tuple(sorted(self.H_blocks))

    @property
    def H(self) -> LogicalMatrix:
        """``[H_1, ..., H_k]``; only defined when every block is in scope."""
        if self.scope != tuple(range(1, self.nblocks + 1)):
            raise ValueError("not every control block is in scope")
        return hconcat([self.H_blocks[b] for b in self.scope])

    @property
    def q(self) -> int:
        return len(self.classes)

    def class_vectors(self) -> list[tuple]:
        return [state_index_decode(z, self.s) for z in self.classes]


def reduced_form(G: LogicalMatrix, H_blocks: dict):
    classes: list[int] = []
    pos: dict[int, int] = {}
    class_of_state = []
    for z in G.cols:
        if z not in pos:
            pos[z] = len(classes) + 1
            classes.append(z)
        class_of_state.append(pos[z])
    reduced = {}
    for b, H in H_blocks.items():
        cols = []
        for z in classes:
            t = H[z]
            if t not in pos:
                raise AssertionError(f"block {b}: class {pos[z]} leaves the attained set")
            cols.append(pos[t])
        reduced[b] = LogicalMatrix(len(classes), tuple(cols))
    return tuple(classes), tuple(class_of_state), reduced


def aggregated_dynamics(cl: ClosureResult) -> AggregatedSystem:
    """Product-form dynamics of a closure; satisfies ``G M_r = H_r G`` for each block in scope."""
    s = cl.s
    H_blocks = {b: product_form(sig, s) for b, sig in cl.successor.items()}
    G = cl.G
    classes, class_of_state, reduced = reduced_form(G, H_blocks)
    return AggregatedSystem(s, H_blocks, G, cl.nblocks, classes, class_of_state, reduced)


def successor_graph(cl: ClosureResult) -> LogicalMatrix:
    """Function-level map ``j -> sigma_r(j)`` for all blocks in scope, as ``delta_s[...]``."""
    return LogicalMatrix(cl.s, tuple(j for b in cl.scope for j in cl.successor[b]))
