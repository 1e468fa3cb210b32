import itertools
import random

import pytest

from stpbn.corpus import EX315_M, ex315_network
from stpbn.formula import _compile, parse_network
from stpbn.network import (
    BcnAssr,
    BnAssr,
    CoordinateChange,
    GraphTooLarge,
    OutputMap,
    apply_coordinate_change,
    assemble,
    assemble_outputs,
    count_edges,
    find_attractors,
    state_transition_graph,
    step,
    trajectory,
    transition_graph_dot,
)
from stpbn.stp import (
    DeltaVector,
    DimensionError,
    LogicalMatrix,
    ZeroExtendedLogicalMatrix,
    delta,
    logical_stp,
    state_index_decode,
    state_index_encode,
)

import _gen

# Next state of every x in 1..16, from plain Python evaluation of the four rules.
EX317_ORACLE = (12, 2, 12, 2, 11, 14, 15, 10, 2, 2, 2, 2, 10, 16, 14, 12)


def test_single_node_identity():
    sys = assemble(parse_network("x1 <- x1\n"))
    assert isinstance(sys, BnAssr)
    assert sys.M == LogicalMatrix.identity(2)


def test_example_network_compiles_to_oracle():
    sys = assemble(ex315_network())
    assert sys.M.cols == EX317_ORACLE


def test_published_matrix_differs_only_in_last_coordinate():
    sys = assemble(ex315_network())
    for j in range(1, 17):
        ours, theirs = state_index_decode(sys.M[j], 4), state_index_decode(EX315_M[j], 4)
        assert ours[:3] == theirs[:3]


def test_copy_control_system():
    sys = assemble(parse_network("inputs: u1\nx1 <- u1\n"))
    assert sys.L == LogicalMatrix(2, (1, 1, 2, 2))
    assert sys.m == 1 and len(sys.blocks) == 2


def test_blocks_are_l_times_control():
    rng = random.Random(0)
    for n, m in itertools.product(range(1, 4), range(1, 3)):
        sys = _gen.bcn(rng, n, m)
        for r in range(1, sys.ncontrols + 1):
            assert logical_stp(sys.L, delta(sys.ncontrols, r).as_matrix()) == sys.blocks[r - 1]
            for x in range(1, sys.nstates + 1):
                ux = logical_stp(delta(sys.ncontrols, r).as_matrix(), delta(sys.nstates, x).as_matrix())
                assert logical_stp(sys.L, ux)[1] == sys.blocks[r - 1][x]


def test_controls_are_outermost():
    sys = assemble(parse_network("inputs: u\nx1 <- u & x2\nx2 <- x1\n"))
    for u, (a, b) in itertools.product((1, 0), itertools.product((1, 0), repeat=2)):
        r = 2 - u
        x = state_index_encode((a, b)).index
        assert step(sys, x, r) == state_index_encode((u & b, a))


def test_step_examples():
    ident = BnAssr(3, LogicalMatrix.identity(8))
    assert all(step(ident, x).index == x for x in range(1, 9))
    published = BnAssr(4, EX315_M)
    assert step(published, DeltaVector(16, 6)) == DeltaVector(16, 13)
    with pytest.raises(DimensionError):
        step(published, DeltaVector(8, 1))
    with pytest.raises(DimensionError):
        step(published, 1, 2)


def _random_net(rng, n, m):
    names = [f"x{i}" for i in range(1, n + 1)]
    ctrls = [f"u{i}" for i in range(1, m + 1)]
    pool = names + ctrls
    ops = ["&", "|", "^", "->", "<->"]
    lines = [f"inputs: {' '.join(ctrls)}"] if m else []
    for v in names:
        a, b, c = (rng.choice(pool) for _ in range(3))
        lines.append(f"{v} <- ({a} {rng.choice(ops)} !{b}) {rng.choice(ops)} {c}")
    return parse_network("\n".join(lines) + "\n")


def test_stepping_agrees_with_formula_evaluation():
    rng = random.Random(1)
    for _ in range(20):
        n, m = rng.randint(1, 6), rng.randint(0, 2)
        net = _random_net(rng, n, m)
        sys = assemble(net)
        order = net.control_vars + net.state_vars
        fns = [_compile(f, {v: i for i, v in enumerate(order)}) for f in net.update_rules]
        for _ in range(100):
            ubits = tuple(rng.randint(0, 1) for _ in range(m))
            xbits = tuple(rng.randint(0, 1) for _ in range(n))
            expect = tuple(f(ubits + xbits) for f in fns)
            u = state_index_encode(ubits).index if m else 1
            assert step(sys, state_index_encode(xbits).index, u) == state_index_encode(expect)


def test_khatri_rao_assembly_law_n10():
    net = _random_net(random.Random(2), 10, 0)
    sys = assemble(net)
    for x in range(1, 1025):
        comps = tuple(2 - c[x] for c in sys.componentwise)  # 1 -> True
        assert state_index_decode(sys.M[x], 10) == comps


def test_output_map():
    net = parse_network("x1 <- x2\nx2 <- x1\ny1 = x1\ny2 = x1 & x2\n")
    out = assemble_outputs(net)
    assert out.p == 2 and out.names == ("y1", "y2")
    assert out.H == LogicalMatrix(4, (1, 2, 4, 4))
    assert assemble_outputs(parse_network("x <- x\n")) is None


def test_coordinate_change():
    rng = random.Random(3)
    sys = _gen.bcn(rng, 3, 1)
    same = apply_coordinate_change(sys, LogicalMatrix.identity(8))
    assert same.L == sys.L
    T = _gen.permutation(rng, 8)
    moved = apply_coordinate_change(sys, T)
    back = apply_coordinate_change(moved, CoordinateChange(T).inverse)
    assert back.L == sys.L
    with pytest.raises(ValueError):
        CoordinateChange(LogicalMatrix(2, (1, 1)))


def test_coordinate_change_trajectory_equivariance():
    rng = random.Random(4)
    for _ in range(30):
        n, m = rng.randint(1, 6), rng.randint(0, 2)
        sys = _gen.bcn(rng, n, m)
        T = _gen.permutation(rng, 1 << n)
        outs = OutputMap((_gen.function(rng, n),))
        new, new_out = apply_coordinate_change(sys, T, outs)
        word = [rng.randint(1, 1 << m) for _ in range(8)]
        x0 = rng.randint(1, 1 << n)
        xs = trajectory(sys, x0, word)
        zs = trajectory(new, T[x0], word)
        assert zs == [T[x] for x in xs]
        assert [outs.H[x] for x in xs] == [new_out.H[z] for z in zs]


def test_coordinate_change_preserves_cycle_lengths():
    rng = random.Random(5)
    for _ in range(20):
        sys = _gen.bcn(rng, 4, 0)
        new = apply_coordinate_change(sys, _gen.permutation(rng, 16))
        assert sorted(map(len, find_attractors(sys))) == sorted(map(len, find_attractors(new)))


def _brute_cycles(M):
    cycles = set()
    for x in range(1, M.ncols + 1):
        for _ in range(M.ncols):
            x = M[x]
        cyc, y = [x], M[x]
        while y != x:
            cyc.append(y)
            y = M[y]
        k = cyc.index(min(cyc))
        cycles.add(tuple(cyc[k:] + cyc[:k]))
    return sorted(cycles)


def test_attractors():
    assert find_attractors(BnAssr(3, LogicalMatrix.identity(8))) == [[i] for i in range(1, 9)]
    assert find_attractors(BnAssr(3, LogicalMatrix(8, (1,) * 8))) == [[1]]
    for M in (EX315_M, assemble(ex315_network()).M):
        got = find_attractors(BnAssr(4, M))
        assert sorted(map(tuple, got)) == _brute_cycles(M)
    rng = random.Random(6)
    for _ in range(30):
        M = _gen.logical(rng, 32, 32)
        assert sorted(map(tuple, find_attractors(BnAssr(5, M)))) == _brute_cycles(M)


def test_stg_identity_single_node():
    dot = state_transition_graph(BnAssr(1, LogicalMatrix.identity(2)))
    assert count_edges(dot) == 2
    assert "s1 -> s1;" in dot and "s2 -> s2;" in dot


def test_stg_edge_counts_and_labels():
    rng = random.Random(7)
    sys = _gen.bcn(rng, 3, 2)
    dot = state_transition_graph(sys, bits=True)
    assert count_edges(dot) == 32
    assert 'label="u=d4^3"' in dot and 's1 [label="1:111"]' in dot
    z = ZeroExtendedLogicalMatrix(4, (2, 0, 0, 1))
    assert count_edges(transition_graph_dot([z, LogicalMatrix.identity(4)])) == 6
    with pytest.raises(GraphTooLarge):
        state_transition_graph(sys, cap=31)


def test_from_blocks_validates():
    with pytest.raises(DimensionError):
        BcnAssr.from_blocks([LogicalMatrix.identity(4)] * 3)
    with pytest.raises(DimensionError):
        BcnAssr(2, 1, LogicalMatrix.identity(4))
