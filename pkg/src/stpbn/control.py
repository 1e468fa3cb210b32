"""Control-invariant subspaces, input constraints and minimum realizations of BCNs."""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .invariant import (
    DEFAULT_CAP,
    AggregatedSystem,
    ClosureResult,
    FunctionSet,
    aggregated_dynamics,
    close_functions,
    product_form,
)
from .network import BcnAssr, CoordinateChange, OutputMap
from .stp import LogicalMatrix, ZeroExtendedLogicalMatrix, logical_compose

ControlClosure = ClosureResult


def closure_bcn(
    generators: FunctionSet | Sequence[LogicalMatrix],
    sys: BcnAssr,
    blocks_filter: Iterable[int] | None = None,
    *,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> ControlClosure:
    """Smallest function set containing ``generators`` closed under every block ``M_i``.

    ``blocks_filter`` restricts closure to the listed block ids (the partly
    control-invariant case); by default all ``2^m`` blocks are used.
    """
    return close_functions(generators, sys.blocks, blocks_filter, cap=cap, workers=workers)


def aggregated_bcn(cl: ControlClosure) -> AggregatedSystem:
    """``z(t+1) = [H_1, ..., H_{2^m}] u(t) z(t)`` with each ``H_i`` in product-selector form."""
    return aggregated_dynamics(cl)


# --------------------------------------------------------------------------
# constraints
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlConstraint:
    """Forbidden ``(class, control)`` pairs; ``forbidden[alpha]`` is the set of classes
    (1-based indices into the reduced form) where ``u = delta^alpha`` is not allowed."""

    forbidden: dict = field(default_factory=dict)
    source: str = ""

    def pairs(self) -> set[tuple[int, int]]:
        return {(k, a) for a, ks in self.forbidden.items() for k in ks}


class ConstraintError(ValueError):
    pass


_FORBID = re.compile(r"^\s*forbid\s+u\s*=\s*(\d+)\s+when\s+class\s+in\s*\{([^}]*)\}\s*$")


def parse_constraints(text: str) -> ControlConstraint:
    forbidden: dict[int, set[int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _FORBID.match(line)
        if not m:
            raise ConstraintError(f"line {lineno}: expected 'forbid u=<k> when class in {{...}}'")
        alpha = int(m.group(1))
        classes = {int(t) for t in re.split(r"[\s,]+", m.group(2).strip()) if t}
        forbidden.setdefault(alpha, set()).update(classes)
    return ControlConstraint({a: frozenset(ks) for a, ks in forbidden.items()}, text)


def constraints_to_text(c: ControlConstraint) -> str:
    return "".join(
        f"forbid u={a} when class in {{{','.join(map(str, sorted(ks)))}}}\n"
        for a, ks in sorted(c.forbidden.items())
    )


@dataclass(frozen=True)
class ConstrainedAggregatedBcn:
    """Zero-extended aggregated BCN ``z(t+1) = H^U u(t) z(t)``.

    ``reduced`` is q x (k q) over attained classes; ``full`` is 2^s x (k 2^s)
    over product states, zeroed only at columns of attained states in a
    forbidden class. Controls outside the closure's scope are forbidden everywhere.
    """

    reduced: ZeroExtendedLogicalMatrix
    full: ZeroExtendedLogicalMatrix
    nblocks: int
    constraint: ControlConstraint
    forbidden_pairs: frozenset

    @property
    def q(self) -> int:
        return self.reduced.rows

    def reduced_block(self, alpha: int) -> ZeroExtendedLogicalMatrix:
        q = self.q
        return ZeroExtendedLogicalMatrix(q, self.reduced.cols[(alpha - 1) * q:alpha * q])


def apply_constraints(agg: AggregatedSystem, c: ControlConstraint) -> ConstrainedAggregatedBcn:
    q, k = agg.q, agg.nblocks
    for alpha, classes in c.forbidden.items():
        if not 1 <= alpha <= k:
            raise ConstraintError(f"control index {alpha} outside 1..{k}")
        bad = sorted(x for x in classes if not 1 <= x <= q)
        if bad:
            raise ConstraintError(f"unknown class(es) {bad}; reduced system has {q} classes")
    pairs = set(c.pairs())
    red_cols, full_cols = [], []
    nz = 1 << agg.s
    class_at = {z: i for i, z in enumerate(agg.classes, start=1)}
    for alpha in range(1, k + 1):
        if alpha not in agg.H_blocks:
            pairs.update((cls, alpha) for cls in range(1, q + 1))
            red_cols.extend([0] * q)
            full_cols.extend([0] * nz)
            continue
        R = agg.reduced_blocks[alpha]
        red_cols.extend(0 if (cls, alpha) in pairs else R[cls] for cls in range(1, q + 1))
        H = agg.H_blocks[alpha]
        for z in range(1, nz + 1):
            cls = class_at.get(z)
            full_cols.append(0 if cls is not None and (cls, alpha) in pairs else H[z])
    return ConstrainedAggregatedBcn(
        ZeroExtendedLogicalMatrix(q, tuple(red_cols)),
        ZeroExtendedLogicalMatrix(nz, tuple(full_cols)),
        k,
        c,
        frozenset(pairs),
    )


def simulate_constrained(sys: ConstrainedAggregatedBcn, class0: int, controls: Sequence[int]):
    """Run the reduced constrained system. Returns ``(visited classes, status)``.

    Status is ``"ok"`` or ``"forbidden"``; on ``"forbidden"`` the run stops at
    the class where the next control was not allowed.
    """
    path = [class0]
    c = class0
    for u in controls:
        t = sys.reduced_block(u)[c]
        if t == 0:
            return path, "forbidden"
        c = t
        path.append(c)
    return path, "ok"


# --------------------------------------------------------------------------
# realization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Realization:
    """``z(t+1) = H u(t) z(t)``, ``y(t) = Xi z(t)`` on the output-seeded closure."""

    closure: ControlClosure
    system: AggregatedSystem
    output: LogicalMatrix  # Xi over product states z
    output_positions: tuple  # closure index of each output function

    @property
    def s(self) -> int:
        return self.closure.s

    @property
    def G(self) -> LogicalMatrix:
        return self.system.G

    @property
    def H(self) -> LogicalMatrix:
        return self.system.H

    @property
    def reduced_output(self) -> LogicalMatrix:
        """Output value of each attained class."""
        return LogicalMatrix(self.output.rows, tuple(self.output[z] for z in self.system.classes))

    def reduced_bcn(self) -> BcnAssr | None:
        """Reduced form as a BCN when the class count is a power of two."""
        q = self.system.q
        if q & (q - 1):
            return None
        blocks = [self.system.reduced_blocks[b] for b in self.system.scope]
        return BcnAssr.from_blocks(blocks)


def min_realization(sys: BcnAssr, outputs: OutputMap, *, cap: int = DEFAULT_CAP, workers: int = 1) -> Realization:
    gens = FunctionSet.of(outputs.functions, outputs.names)
    cl = closure_bcn(gens, sys, cap=cap, workers=workers)
    agg = aggregated_bcn(cl)
    keys = {g.cols: i for i, g in enumerate(cl.closure.funcs, start=1)}
    positions = tuple(keys[f.cols] for f in outputs.functions)
    xi = product_form(positions, cl.s)
    agg = AggregatedSystem(agg.s, agg.H_blocks, agg.G, agg.nblocks, agg.classes,
                           agg.class_of_state, agg.reduced_blocks, xi)
    return Realization(cl, agg, xi, positions)


@dataclass(frozen=True)
class Counterexample:
    x0: int
    word: tuple  # controls applied, 1-based block ids
    t: int  # first time the outputs differ
    y_source: int
    y_realization: int


@dataclass(frozen=True)
class IOCheck:
    equivalent: bool
    counterexample: Counterexample | None
    runs: int
    exhaustive: bool

    def __bool__(self):
        return self.equivalent


class VerificationCapExceeded(RuntimeError):
    pass


def _run(sys_blocks, H_out, r_blocks, Xi, x, z, word):
    y0, y1 = H_out[x], Xi[z]
    if y0 != y1:
        return 0, y0, y1
    for t, u in enumerate(word, start=1):
        x = sys_blocks[u - 1][x]
        z = r_blocks[u - 1][z]
        y0, y1 = H_out[x], Xi[z]
        if y0 != y1:
            return t, y0, y1
    return None


def verify_io_equivalence(
    sys: BcnAssr,
    outputs: OutputMap,
    real: Realization,
    horizon: int,
    *,
    cap: int = 1 << 22,
    samples: int | None = None,
    seed: int = 0,
) -> IOCheck:
    """Compare output sequences of ``sys`` from ``x0`` and ``real`` from ``G x0``.

    Every initial state and every control word of length ``horizon`` is run
    (prefixes cover the shorter words) when ``2^n * 2^(m*horizon) <= cap``.
    Beyond the cap, ``samples`` random (state, word) pairs drawn with ``seed``
    are run instead; without ``samples`` the cap raises.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    H_out, Xi, G = outputs.H, real.output, real.G
    k = sys.ncontrols
    r_blocks = [real.system.H_blocks[b] for b in range(1, k + 1)]
    total = sys.nstates * k ** horizon
    if total <= cap:
        runs = 0
        for x0 in range(1, sys.nstates + 1):
            for word in itertools.product(range(1, k + 1), repeat=horizon):
                runs += 1
                bad = _run(sys.blocks, H_out, r_blocks, Xi, x0, G[x0], word)
                if bad:
                    t, y0, y1 = bad
                    return IOCheck(False, Counterexample(x0, word[:t], t, y0, y1), runs, True)
        return IOCheck(True, None, runs, True)
    if samples is None:
        raise VerificationCapExceeded(f"{total} runs exceed the cap of {cap}; pass samples= to sample")
    rng = random.Random(seed)
    for i in range(samples):
        x0 = rng.randint(1, sys.nstates)
        word = tuple(rng.randint(1, k) for _ in range(horizon))
        bad = _run(sys.blocks, H_out, r_blocks, Xi, x0, G[x0], word)
        if bad:
            t, y0, y1 = bad
            return IOCheck(False, Counterexample(x0, word[:t], t, y0, y1), i + 1, False)
    return IOCheck(True, None, samples, False)


def corrupt(real: Realization, block: int, column: int, target: int) -> Realization:
    """Copy of ``real`` with one column of ``H_block`` redirected (fault injection)."""
    H = real.system.H_blocks[block]
    cols = list(H.cols)
    cols[column - 1] = target
    blocks = dict(real.system.H_blocks)
    blocks[block] = LogicalMatrix(H.rows, tuple(cols))
    agg = real.system
    agg = AggregatedSystem(agg.s, blocks, agg.G, agg.nblocks, agg.classes, agg.class_of_state,
                           agg.reduced_blocks, agg.output)
    return Realization(real.closure, agg, real.output, real.output_positions)


# --------------------------------------------------------------------------
# block-diagonal structure under a coordinate change
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockCheck:
    ok: bool
    witness: tuple | None = None  # (block id, column, row) of an off-block entry

    def __bool__(self):
        return self.ok


def verify_block_structure(sys: BcnAssr, T: CoordinateChange | LogicalMatrix,
                           partition: Sequence[int]) -> BlockCheck:
    """True iff ``T M_i T^T`` is block diagonal with the given block sizes for every i."""
    if not isinstance(T, CoordinateChange):
        T = CoordinateChange(T)
    if any(p < 1 for p in partition) or sum(partition) != sys.nstates:
        raise ValueError(f"partition {list(partition)} does not split {sys.nstates} states")
    owner = []
    for b, size in enumerate(partition):
        owner.extend([b] * size)
    Tt = T.inverse
    for i, M in enumerate(sys.blocks, start=1):
        C = logical_compose(logical_compose(T.T, M), Tt)
        for j, row in enumerate(C.cols, start=1):
            if owner[row - 1] != owner[j - 1]:
                return BlockCheck(False, (i, j, row))
    return BlockCheck(True)
