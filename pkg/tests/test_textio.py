import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from stpbn.control import min_realization
from stpbn.corpus import EX55_BLOCKS, EX55_Y1
from stpbn.invariant import closure_bn, aggregated_dynamics
from stpbn.network import BcnAssr, OutputMap
from stpbn.stp import DenseMatrix, LogicalMatrix, ZeroExtendedLogicalMatrix
from stpbn.textio import (
    FormatError,
    assr_to_text,
    closure_to_text,
    format_matrix,
    parse_document,
    parse_function_file,
    read_matrices,
    realization_from_text,
    realization_to_text,
    system_from_document,
)

import _gen


@given(st.data())
def test_logical_roundtrip(data):
    p = data.draw(st.integers(1, 9))
    cols = data.draw(st.lists(st.integers(1, p), min_size=1, max_size=12))
    a = LogicalMatrix(p, tuple(cols))
    assert read_matrices(format_matrix(a)) == [a]


def test_zero_extended_roundtrip_keeps_type():
    a = ZeroExtendedLogicalMatrix(4, (1, 0, 3, 0))
    text = format_matrix(a)
    assert text.startswith("delta 4 4 zeroext")
    (b,) = read_matrices(text)
    assert isinstance(b, ZeroExtendedLogicalMatrix) and b.cols == a.cols


def test_dense_roundtrip():
    rng = random.Random(0)
    for _ in range(20):
        a = _gen.dense(rng, rng.randint(1, 4), rng.randint(1, 4))
        assert read_matrices(format_matrix(a)) == [a]
    a = DenseMatrix.from_rows([[Fraction(1, 3), Fraction(-2)]])
    assert format_matrix(a) == "dense 1 2\n1/3 -2/1\n"


def test_headers_meta_and_lines():
    doc = parse_document(
        "# c\nmeta n 3\nname: A\nsection: H\nblock: 2\ndelta 2 2\n2 1\n"
        "successor 1: 2 -> 3\nclass 1: 0 1 1\ndelta 2 1\n1\n"
    )
    assert doc.meta == {"n": "3"}
    assert doc.successors == {1: {2: 3}}
    assert doc.classes == {1: (0, 1, 1)}
    assert doc.select(section="H", block=2)[0].attrs["name"] == "A"
    assert doc.entries[1].attrs == {}


@pytest.mark.parametrize(
    "text, line",
    [
        ("delta 2 3\n1 2\n", 2),
        ("delta 2 2\n1 x\n", 2),
        ("delta 2 2\n1 0\n", 2),
        ("delta 2 2\n1 3\n", 1),
        ("\n\ndelta two 2\n", 3),
        ("dense 2 2\n1 2\n3\n", 3),
        ("meta n\n", 1),
        ("hello world\n", 1),
    ],
)
def test_format_errors_carry_line(text, line):
    with pytest.raises(FormatError) as e:
        parse_document(text)
    assert e.value.line == line


def test_missing_body():
    with pytest.raises(FormatError, match="missing"):
        parse_document("delta 2 2\n")


def test_assr_text_roundtrip():
    sys = BcnAssr.from_blocks(EX55_BLOCKS)
    doc = parse_document(assr_to_text(sys, "overall"))
    back = system_from_document(doc)
    assert back.L == sys.L and back.m == 2


def test_system_from_blocks_and_errors():
    text = "".join(format_matrix(B) for B in EX55_BLOCKS)
    assert system_from_document(parse_document(text)).blocks == tuple(EX55_BLOCKS)
    with pytest.raises(FormatError):
        system_from_document(parse_document("delta 3 3\n1 2 3\n"))
    with pytest.raises(FormatError):
        system_from_document(parse_document("delta 2 2\n1 2\ndelta 4 4\n1 2 3 4\n"))


def test_closure_text_is_deterministic():
    rng = random.Random(1)
    done = 0
    while done < 10:
        n = rng.randint(2, 5)
        M = _gen.logical(rng, 1 << n, 1 << n)
        g = _gen.function(rng, n)
        try:
            a = closure_bn([g], M, cap=10)
        except Exception:
            continue
        b = closure_bn([g], M, cap=10, workers=4)
        done += 1
        assert closure_to_text(a, aggregated_dynamics(a)) == closure_to_text(b, aggregated_dynamics(b))


def test_realization_roundtrip():
    sys = BcnAssr.from_blocks(EX55_BLOCKS)
    real = min_realization(sys, OutputMap((EX55_Y1,)))
    back = realization_from_text(realization_to_text(real))
    assert back.G == real.G and back.output == real.output
    assert back.system.H_blocks == real.system.H_blocks
    assert back.system.reduced_blocks == real.system.reduced_blocks
    assert back.output_positions == real.output_positions
    assert realization_to_text(back) == realization_to_text(real)


def test_function_file_formats():
    fs = parse_function_file("a = x1 & x2\nb = !x1  # note\n", ("x1", "x2"))
    assert fs.names == ("a", "b")
    assert fs.funcs[0] == LogicalMatrix(2, (1, 2, 2, 2))
    fs = parse_function_file("name: g\ndelta 2 4\n1 2 2 2\n", ("x1", "x2"))
    assert fs.funcs == (LogicalMatrix(2, (1, 2, 2, 2)),)
    with pytest.raises(FormatError):
        parse_function_file("delta 2 2\n1 2\n", ("x1", "x2"))
    with pytest.raises(FormatError):
        parse_function_file("# nothing\n", ("x1",))
