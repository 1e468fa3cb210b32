"""Algebraic state-space forms of Boolean (control) networks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .formula import NetworkDef, structure_matrix
from .stp import (
    DeltaVector,
    DimensionError,
    LogicalMatrix,
    hconcat,
    is_permutation,
    khatri_rao_all,
    logical_compose,
    logical_transpose,
    split_blocks,
    state_index_decode,
)


@dataclass(frozen=True)
class BcnAssr:
    """``x(t+1) = L u(t) x(t)`` with ``L = [M_1, ..., M_{2^m}]``.

    A Boolean network without inputs is the ``m = 0`` case with one block.
    """

    n: int
    m: int
    L: LogicalMatrix
    componentwise: tuple = ()
    state_names: tuple = ()
    control_names: tuple = ()
    blocks: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.L.shape != (1 << self.n, 1 << (self.m + self.n)):
            raise DimensionError(
                f"L must be {1 << self.n} x {1 << (self.m + self.n)}, got {self.L.shape}"
            )
        object.__setattr__(self, "blocks", tuple(split_blocks(self.L, 1 << self.m)))
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(f"x{i}" for i in range(1, self.n + 1)))
        if not self.control_names and self.m:
            object.__setattr__(self, "control_names", tuple(f"u{i}" for i in range(1, self.m + 1)))

    @classmethod
    def from_blocks(cls, blocks: Sequence[LogicalMatrix], **kw) -> "BcnAssr":
        k = len(blocks)
        m = k.bit_length() - 1
        if 1 << m != k:
            raise DimensionError(f"number of blocks {k} is not a power of two")
        n = blocks[0].rows.bit_length() - 1
        return cls(n, m, hconcat(blocks), **kw)

    @property
    def nstates(self) -> int:
        return 1 << self.n

    @property
    def ncontrols(self) -> int:
        return 1 << self.m


class BnAssr(BcnAssr):
    """``x(t+1) = M x(t)``."""

    def __init__(self, n: int, M: LogicalMatrix, componentwise: tuple = (), state_names: tuple = ()):
        super().__init__(n, 0, M, tuple(componentwise), tuple(state_names), ())

    @property
    def M(self) -> LogicalMatrix:
        return self.L


@dataclass(frozen=True)
class OutputMap:
    """``y(t) = H x(t)`` with ``H = Xi_1 * ... * Xi_p``."""

    functions: tuple  # per-output 2 x 2^n structure matrices
    names: tuple = ()

    def __post_init__(self):
        if not self.functions:
            raise ValueError("an output map needs at least one output")
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"y{i}" for i in range(1, len(self.functions) + 1)))

    @property
    def p(self) -> int:
        return len(self.functions)

    @property
    def H(self) -> LogicalMatrix:
        return khatri_rao_all(self.functions)


@dataclass(frozen=True)
class CoordinateChange:
    T: LogicalMatrix

    def __post_init__(self):
        if not is_permutation(self.T):
            raise ValueError("coordinate change must be a permutation matrix")

    @property
    def inverse(self) -> LogicalMatrix:
        return logical_transpose(self.T)


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


def assemble_bn(net: NetworkDef) -> BnAssr:
    if net.m:
        raise ValueError("network has inputs; use assemble_bcn")
    comps = tuple(structure_matrix(f, net.state_vars) for f in net.update_rules)
    return BnAssr(net.n, khatri_rao_all(comps), comps, net.state_vars)


def assemble_bcn(net: NetworkDef) -> BcnAssr:
    """Controls are the outermost factors: variable order is ``u_1..u_m, x_1..x_n``."""
    if not net.m:
        return assemble_bn(net)
    order = net.control_vars + net.state_vars
    comps = tuple(structure_matrix(f, order) for f in net.update_rules)
    return BcnAssr(net.n, net.m, khatri_rao_all(comps), comps, net.state_vars, net.control_vars)


def assemble(net: NetworkDef) -> BcnAssr:
    return assemble_bcn(net) if net.m else assemble_bn(net)


def assemble_outputs(net: NetworkDef) -> OutputMap | None:
    if not net.output_rules:
        return None
    return OutputMap(
        tuple(structure_matrix(f, net.state_vars) for _, f in net.output_rules),
        tuple(name for name, _ in net.output_rules),
    )


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


def _idx(v, dim: int) -> int:
    if isinstance(v, DeltaVector):
        if v.dim != dim:
            raise DimensionError(f"expected a vector of dimension {dim}, got {v.dim}")
        return v.index
    if not 1 <= v <= dim:
        raise DimensionError(f"index {v} outside 1..{dim}")
    return int(v)


def step(sys: BcnAssr, x, u=1) -> DeltaVector:
    """One synchronous update: column ``x`` of block ``u``."""
    xi = _idx(x, sys.nstates)
    ui = _idx(u, sys.ncontrols)
    return DeltaVector(sys.nstates, sys.blocks[ui - 1][xi])


def trajectory(sys: BcnAssr, x0, controls: Sequence = ()) -> list[int]:
    """State indices visited from ``x0`` under ``controls`` (use ``[1] * k`` for a BN)."""
    x = _idx(x0, sys.nstates)
    out = [x]
    for u in controls:
        x = sys.blocks[_idx(u, sys.ncontrols) - 1][x]
        out.append(x)
    return out


def apply_coordinate_change(sys: BcnAssr, T: CoordinateChange | LogicalMatrix, outputs: OutputMap | None = None):
    """``L~ = T L (I (x) T^T)``, ``H~ = H T^T``. Returns the new system (and outputs if given)."""
    if not isinstance(T, CoordinateChange):
        T = CoordinateChange(T)
    if T.T.rows != sys.nstates:
        raise DimensionError("coordinate change has the wrong size")
    Tt = T.inverse
    blocks = [logical_compose(logical_compose(T.T, B), Tt) for B in sys.blocks]
    new = BcnAssr(sys.n, sys.m, hconcat(blocks), (), sys.state_names, sys.control_names)
    if sys.m == 0:
        new = BnAssr(sys.n, new.L, (), sys.state_names)
    if outputs is None:
        return new
    return new, OutputMap(tuple(logical_compose(f, Tt) for f in outputs.functions), outputs.names)


def find_attractors(sys: BcnAssr, block: int = 1) -> list[list[int]]:
    """All cycles of ``x -> M x``; each starts at its smallest state index."""
    M = sys.blocks[block - 1]
    color = [0] * (sys.nstates + 1)  # 0 unseen, 1 on current path, 2 done
    cycles = []
    for start in range(1, sys.nstates + 1):
        if color[start]:
            continue
        path = []
        x = start
        while not color[x]:
            color[x] = 1
            path.append(x)
            x = M[x]
        if color[x] == 1:
            cyc = path[path.index(x):]
            k = cyc.index(min(cyc))
            cycles.append(cyc[k:] + cyc[:k])
        for y in path:
            color[y] = 2
    cycles.sort(key=lambda c: (len(c), c[0]))
    return cycles


# --------------------------------------------------------------------------
# graph export
# --------------------------------------------------------------------------

DEFAULT_EDGE_CAP = 1 << 16


class GraphTooLarge(RuntimeError):
    pass


def transition_graph_dot(
    blocks: Sequence[LogicalMatrix],
    *,
    name: str = "stg",
    node_labels: Sequence[str] | None = None,
    cap: int = DEFAULT_EDGE_CAP,
) -> str:
    """DOT text with one node per state and one edge per (state, control) pair.

    Zero columns of zero-extended blocks produce no edge.
    """
    nstates = blocks[0].ncols
    nblocks = len(blocks)
    if nstates * nblocks > cap:
        raise GraphTooLarge(f"{nstates * nblocks} edges exceed the cap of {cap}")
    labels = node_labels or [str(i) for i in range(1, nstates + 1)]
    lines = [f"digraph {name} {{"]
    for i, lab in enumerate(labels, start=1):
        lines.append(f'  s{i} [label="{lab}"];')
    for x in range(1, nstates + 1):
        for r, B in enumerate(blocks, start=1):
            t = B[x]
            if not t:
                continue
            if nblocks == 1:
                lines.append(f"  s{x} -> s{t};")
            else:
                lines.append(f'  s{x} -> s{t} [label="u=d{nblocks}^{r}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def state_transition_graph(sys: BcnAssr, *, bits: bool = False, cap: int = DEFAULT_EDGE_CAP) -> str:
    labels = None
    if bits:
        labels = [
            f"{i}:" + "".join(map(str, state_index_decode(i, sys.n)))
            for i in range(1, sys.nstates + 1)
        ]
    return transition_graph_dot(sys.blocks, node_labels=labels, cap=cap)


def count_edges(dot: str) -> int:
    return sum(1 for line in dot.splitlines() if " -> " in line)
