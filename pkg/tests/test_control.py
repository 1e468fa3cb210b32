import random

import pytest

from stpbn.control import (
    ConstraintError,
    ControlConstraint,
    VerificationCapExceeded,
    aggregated_bcn,
    apply_constraints,
    closure_bcn,
    constraints_to_text,
    corrupt,
    min_realization,
    parse_constraints,
    simulate_constrained,
    verify_block_structure,
    verify_io_equivalence,
)
from stpbn.corpus import (
    EX55_BLOCKS,
    EX55_LSTAR,
    EX55_XI,
    EX55_Y1,
    EX55_Y2,
    EX55_Y3,
    GRID_S,
    appendix_matrix,
)
from stpbn.formula import SubsetSpec, index_function
from stpbn.invariant import is_closed
from stpbn.network import BcnAssr, BnAssr, OutputMap
from stpbn.stp import LogicalMatrix, ZeroExtendedLogicalMatrix, hconcat, logical_compose

import _gen


def ex55(n=3):
    """Example system padded with identity on states 4..2^n."""
    k = 1 << n
    blocks = [LogicalMatrix(k, B.cols[:3] + tuple(range(4, k + 1))) for B in EX55_BLOCKS]
    y1 = LogicalMatrix(2, EX55_Y1.cols[:3] + (2,) * (k - 3))
    return BcnAssr.from_blocks(blocks), OutputMap((y1,))


def grid_controlled():
    return BcnAssr.from_blocks([appendix_matrix("ii"), appendix_matrix("i")])


def g1():
    return index_function(SubsetSpec(9, frozenset(GRID_S)))


# closure ------------------------------------------------------------------------


def test_closure_fixed_by_all_blocks():
    sys = BcnAssr.from_blocks([LogicalMatrix.identity(4), LogicalMatrix(4, (2, 1, 3, 4))])
    cl = closure_bcn([LogicalMatrix(2, (1, 1, 2, 2))], sys)
    assert cl.s == 1 and cl.successor == {1: (1,), 2: (1,)}
    agg = aggregated_bcn(cl)
    assert all(H == LogicalMatrix.identity(2) for H in agg.H_blocks.values())


def test_example_closure_and_successors():
    sys, out = ex55()
    cl = closure_bcn([out.functions[0]], sys)
    assert cl.closure.funcs == (EX55_Y1, EX55_Y2, EX55_Y3)
    assert cl.successor == {1: (2, 3, 1), 2: (2, 1, 3), 3: (1, 2, 3), 4: (1, 3, 2)}
    assert aggregated_bcn(cl).H == EX55_LSTAR


def test_controlled_grid_closure_is_closed():
    sys = grid_controlled()
    cl = closure_bcn([g1()], sys)
    assert is_closed(cl.closure.funcs, sys.blocks)
    assert cl.closure.keys() == _gen.naive_closure([g1()], sys.blocks)
    agg = aggregated_bcn(cl)
    for b, M in enumerate(sys.blocks, start=1):
        assert logical_compose(agg.G, M) == logical_compose(agg.H_blocks[b], agg.G)


def test_partial_closure_monotone():
    rng = random.Random(0)
    done = 0
    while done < 20:
        sys = _gen.bcn(rng, rng.randint(2, 4), 2)
        gen = [_gen.function(rng, sys.n)]
        try:
            full = closure_bcn(gen, sys, cap=200)
        except Exception:
            continue
        done += 1
        for U in ([1], [2, 3], [1, 2, 4]):
            part = closure_bcn(gen, sys, U)
            assert part.scope == tuple(U)
            assert part.closure.keys() <= full.closure.keys()
            assert part.closure.keys() == _gen.naive_closure(gen, [sys.blocks[u - 1] for u in U])


def test_aggregated_bcn_random():
    rng = random.Random(1)
    done = 0
    while done < 30:
        n, m = rng.randint(1, 6), rng.randint(1, 2)
        sys = _gen.bcn(rng, n, m)
        cl = _gen.small_closure(rng, sys.blocks, n, cap=12)
        if cl is None:
            continue
        done += 1
        agg = aggregated_bcn(cl)
        for b, M in enumerate(sys.blocks, start=1):
            assert logical_compose(agg.G, M) == logical_compose(agg.H_blocks[b], agg.G)


# constraints ------------------------------------------------------------------------


def grid_agg():
    return aggregated_bcn(closure_bcn([g1()], grid_controlled()))


def test_empty_constraint_is_identity():
    agg = grid_agg()
    con = apply_constraints(agg, ControlConstraint())
    assert con.reduced.cols == hconcat([agg.reduced_blocks[1], agg.reduced_blocks[2]]).cols
    assert con.full.cols == agg.H.cols
    assert not con.forbidden_pairs


def test_forbidding_on_classes():
    agg = grid_agg()
    c = parse_constraints("forbid u=2 when class in {3,4,5,6}\n")
    con = apply_constraints(agg, c)
    q = agg.q
    zeros = {(k, a) for a in (1, 2) for k in range(1, q + 1) if con.reduced_block(a)[k] == 0}
    assert zeros == {(3, 2), (4, 2), (5, 2), (6, 2)}
    for a in (1, 2):
        for k in range(1, q + 1):
            if (k, a) not in zeros:
                assert con.reduced_block(a)[k] == agg.reduced_blocks[a][k]
    # full form: exactly the attained states of those classes are zeroed
    nz = 1 << agg.s
    full_zeros = {(z, 1 + i // nz) for i, c in enumerate(con.full.cols) for z in [i % nz + 1] if c == 0}
    assert full_zeros == {(agg.classes[k - 1], 2) for k in (3, 4, 5, 6)}


def test_forbid_everything():
    agg = grid_agg()
    allk = ",".join(map(str, range(1, agg.q + 1)))
    con = apply_constraints(agg, parse_constraints(f"forbid u=1 when class in {{{allk}}}\nforbid u=2 when class in {{{allk}}}\n"))
    assert set(con.reduced.cols) == {0}


def test_constraint_errors():
    agg = grid_agg()
    with pytest.raises(ConstraintError):
        apply_constraints(agg, parse_constraints(f"forbid u=1 when class in {{{agg.q + 1}}}"))
    with pytest.raises(ConstraintError):
        apply_constraints(agg, parse_constraints("forbid u=3 when class in {1}"))
    with pytest.raises(ConstraintError):
        parse_constraints("forbid everything")


def test_constraint_text_roundtrip():
    c = parse_constraints("# c\nforbid u=2 when class in {6, 3,4}\nforbid u=1 when class in {1}\n")
    assert parse_constraints(constraints_to_text(c)).forbidden == c.forbidden


def test_constrained_simulation_halts_exactly_at_forbidden_pairs():
    agg = grid_agg()
    con = apply_constraints(agg, parse_constraints("forbid u=2 when class in {3,4,5,6}"))
    rng = random.Random(2)
    for _ in range(300):
        c0 = rng.randint(1, agg.q)
        word = [rng.randint(1, 2) for _ in range(6)]
        path, status = simulate_constrained(con, c0, word)
        # replay on the unconstrained reduced system
        c = c0
        for t, u in enumerate(word):
            if (c, u) in con.forbidden_pairs:
                assert status == "forbidden" and path[-1] == c and len(path) == t + 1
                break
            c = agg.reduced_blocks[u][c]
            assert path[t + 1] == c
        else:
            assert status == "ok"


def test_out_of_scope_controls_are_forbidden():
    sys = grid_controlled()
    agg = aggregated_bcn(closure_bcn([g1()], sys, [1]))
    con = apply_constraints(agg, ControlConstraint())
    assert set(con.reduced_block(2).cols) == {0}
    assert 0 not in con.reduced_block(1).cols


# realization --------------------------------------------------------------------------


def test_example_realization():
    sys, out = ex55()
    real = min_realization(sys, out)
    assert real.s == 3 and real.output_positions == (1,)
    assert real.H == EX55_LSTAR
    assert real.output == EX55_XI
    assert real.system.q == 4
    check = verify_io_equivalence(sys, out, real, 6)
    assert check and check.exhaustive and check.runs == 8 * 4 ** 6


def test_example_realization_smaller_than_source():
    for n in (4, 5):
        sys, out = ex55(n)
        real = min_realization(sys, out)
        assert real.H == EX55_LSTAR and real.system.q == 4 < 1 << n
        assert verify_io_equivalence(sys, out, real, 4)


def test_identity_outputs_give_isomorphic_realization():
    rng = random.Random(3)
    for _ in range(10):
        n, m = rng.randint(1, 2), rng.randint(0, 2)
        sys = _gen.bcn(rng, n, m)
        coords = tuple(LogicalMatrix(2, tuple(2 - ((j - 1) >> (n - 1 - i) & 1 == 0) for j in range(1, (1 << n) + 1)))
                       for i in range(n))
        out = OutputMap(coords)
        assert out.H == LogicalMatrix.identity(1 << n)
        real = min_realization(sys, out, cap=16)
        agg = real.system
        assert agg.q == 1 << n
        cls = agg.class_of_state
        for b, M in enumerate(sys.blocks, start=1):
            for x in range(1, (1 << n) + 1):
                assert agg.reduced_blocks[b][cls[x - 1]] == cls[M[x] - 1]
        assert verify_io_equivalence(sys, out, real, 3)


def test_random_realizations_are_io_equivalent_and_minimal():
    rng = random.Random(4)
    done = 0
    while done < 25:
        n, m = rng.randint(1, 6), rng.randint(0, 2)
        sys = _gen.bcn(rng, n, m)
        out = OutputMap((_gen.function(rng, n),))
        try:
            real = min_realization(sys, out, cap=12)
        except Exception:
            continue
        done += 1
        res = verify_io_equivalence(sys, out, real, 4, cap=1 << 16, samples=2000, seed=done)
        assert res, res.counterexample
        funcs = real.closure.closure.funcs
        gens = set(real.closure.generator_indices)
        for j in range(1, len(funcs) + 1):
            if j in gens:
                continue
            rest = [g for i, g in enumerate(funcs, start=1) if i != j]
            assert not is_closed(rest, sys.blocks)


def test_observe_based_realization_of_bn():
    rng = random.Random(5)
    done = 0
    while done < 10:
        n = rng.randint(2, 6)
        sys = BnAssr(n, _gen.logical(rng, 1 << n, 1 << n))
        out = OutputMap((_gen.function(rng, n),))
        try:
            real = min_realization(sys, out, cap=12)
        except Exception:
            continue
        done += 1
        assert logical_compose(real.G, sys.M) == logical_compose(real.system.H_blocks[1], real.G)
        assert verify_io_equivalence(sys, out, real, 8)


def test_corrupted_realization_is_rejected():
    sys, out = ex55()
    real = min_realization(sys, out)
    z = real.system.classes[0]
    target = next(t for t in range(1, 9) if real.output[t] != real.output[real.system.H_blocks[1][z]])
    bad = corrupt(real, 1, z, target)
    res = verify_io_equivalence(sys, out, bad, 2)
    assert not res
    ce = res.counterexample
    assert ce.t <= 2 and ce.y_source != ce.y_realization


def test_verification_cap_and_sampling():
    sys, out = ex55()
    real = min_realization(sys, out)
    with pytest.raises(VerificationCapExceeded):
        verify_io_equivalence(sys, out, real, 6, cap=100)
    a = verify_io_equivalence(sys, out, real, 6, cap=100, samples=500, seed=7)
    assert a and not a.exhaustive and a.runs == 500
    with pytest.raises(ValueError):
        verify_io_equivalence(sys, out, real, 0)


def test_original_system_is_its_own_realization():
    sys, out = ex55()
    real = min_realization(sys, out)
    assert verify_io_equivalence(sys, out, real, 1)


# block structure ---------------------------------------------------------------------


def test_block_structure():
    sys, _ = ex55()
    I8 = LogicalMatrix.identity(8)
    assert verify_block_structure(sys, I8, [8])
    assert verify_block_structure(sys, I8, [3, 5])
    assert not verify_block_structure(sys, I8, [2, 6])
    rng = random.Random(6)
    found = 0
    for _ in range(20):
        T = _gen.permutation(rng, 8)
        res = verify_block_structure(sys, T, [3, 5])
        if not res:
            found += 1
            b, j, row = res.witness
            C = logical_compose(logical_compose(T, sys.blocks[b - 1]), _transpose(T))
            assert C[j] == row and (row <= 3) != (j <= 3)
    assert found
    with pytest.raises(ValueError):
        verify_block_structure(sys, I8, [3, 4])


def _transpose(T):
    inv = [0] * T.rows
    for j, c in enumerate(T.cols, start=1):
        inv[c - 1] = j
    return LogicalMatrix(T.rows, tuple(inv))


def test_zero_extended_type():
    agg = grid_agg()
    con = apply_constraints(agg, parse_constraints("forbid u=2 when class in {3}"))
    assert isinstance(con.reduced, ZeroExtendedLogicalMatrix)
