"""Fixture builders for the worked examples.

Each builder returns a :class:`CorpusCase`: a set of named text files (network
DSL, function sets, expected matrices) and a list of discrepancy records
comparing what the library derives with the published numbers. Transcribed
tables are never trusted over the derivation; mismatches go to the report.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .formula import NetworkDef, SubsetSpec, dnf_from_matrix, index_function, parse_formula, support
from .invariant import aggregated_dynamics, closure_bn, combined_structure, invariance_certificate
from .network import BcnAssr, assemble
from .stp import LogicalMatrix, hconcat, logical_compose, state_index_decode, state_index_encode
from .textio import format_matrix, parse_document

CORPUS_NAMES = ("example-3.1.5", "grid-9", "grid-9-controlled", "example-5.5")


class UnknownCorpus(KeyError):
    pass


@dataclass
class CorpusCase:
    name: str
    files: dict = field(default_factory=dict)  # file name -> text
    report: list = field(default_factory=list)  # discrepancy records

    def report_text(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.report)

    def write(self, outdir) -> list[Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for fname, text in sorted(self.files.items()):
            (out / fname).write_text(text, encoding="utf-8")
            written.append(out / fname)
        if self.report:
            p = out / f"{self.name}.discrepancies.jsonl"
            p.write_text(self.report_text(), encoding="utf-8")
            written.append(p)
        return written


def build(name: str) -> CorpusCase:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownCorpus(f"unknown corpus {name!r}; choose from {', '.join(CORPUS_NAMES)}") from None
    return builder()


def _named(mat, name: str) -> str:
    return f"name: {name}\n" + format_matrix(mat)


def compare_matrices(generated: LogicalMatrix, published: LogicalMatrix, label: str) -> list[dict]:
    """One record per differing column plus a summary record."""
    recs = [
        {"kind": "matrix-entry", "matrix": label, "column": j, "generated": a, "appendix": b}
        for j, (a, b) in enumerate(zip(generated.cols, published.cols), start=1)
        if a != b
    ]
    recs.append({"kind": "summary", "matrix": label, "columns": generated.ncols, "mismatches": len(recs)})
    return recs


# --------------------------------------------------------------------------
# example 3.1.5
# --------------------------------------------------------------------------

EX315_RULES = (
    ("x1", "(x1 & x2 & !x4) | (!x1 & x2)"),
    ("x2", "x2 | (x3 <-> x4)"),
    ("x3", "(x1 & !x4) | (!x1 & x2) | (!x1 & !x2 & x4)"),
    ("x4", "x1 & !x2 & x4"),
)
EX315_FUNCS = (("z1", "x1 ^ x4"), ("z2", "!x2"), ("z3", "x3 <-> !x4"))
EX315_M = LogicalMatrix(16, (11, 1, 11, 1, 11, 13, 15, 9, 1, 2, 1, 2, 9, 15, 13, 11))
EX315_Q = LogicalMatrix(8, (8, 3, 7, 4, 6, 1, 5, 2, 4, 7, 3, 8, 2, 5, 1, 6))
EX315_HSTAR = LogicalMatrix(8, (2, 4, 8, 8, 1, 3, 3, 3))


def ex315_network() -> NetworkDef:
    names = tuple(n for n, _ in EX315_RULES)
    return NetworkDef(names, (), tuple(parse_formula(r, names) for _, r in EX315_RULES))


def ex315_functions() -> list[LogicalMatrix]:
    from .formula import structure_matrix

    names = tuple(n for n, _ in EX315_RULES)
    return [structure_matrix(parse_formula(f, names), names) for _, f in EX315_FUNCS]


def _example_315() -> CorpusCase:
    net = ex315_network()
    sys = assemble(net)
    Q = combined_structure(ex315_functions()).G
    case = CorpusCase("example-3.1.5")
    case.files["example-3.1.5.bn"] = net.to_text()
    case.files["example-3.1.5.funcs"] = "".join(f"{n} = {f}\n" for n, f in EX315_FUNCS)
    case.files["example-3.1.5.M.delta"] = _named(EX315_M, "M")
    case.files["example-3.1.5.Q.delta"] = _named(EX315_Q, "Q")
    case.files["example-3.1.5.Hstar.delta"] = _named(EX315_HSTAR, "Hstar")
    case.report.extend(compare_matrices(sys.L, EX315_M, "M"))
    case.report.extend(compare_matrices(Q, EX315_Q, "Q"))
    for label, M in (("published M", EX315_M), ("compiled M", sys.L)):
        cert = invariance_certificate(Q, M)
        rec = {"kind": "claim", "item": f"Q invariant under {label}", "holds": bool(cert)}
        if cert:
            rec["H"] = list(cert.H.cols)
            rec["matches_published_Hstar"] = cert.H == EX315_HSTAR
        else:
            rec["witness"] = list(cert.witness)
            rec["images"] = list(cert.images)
        case.report.append(rec)
    return case


# --------------------------------------------------------------------------
# 3 x 3 majority grid
# --------------------------------------------------------------------------

GRID_S = (43, 143, 165)
GRID_S_TUPLES = ((1, 1, 1, 0, 1, 0, 1, 0, 0), (1, 0, 1, 1, 0, 1, 1, 1, 1), (1, 0, 1, 0, 1, 1, 0, 1, 1))
GRID_G2_CLAIM = (22, 89, 150, 278)


def _grid_neighbours(r: int, c: int, controlled: bool) -> list[str]:
    """Self, up, down, left, right as names or constants '0'/'1'."""

    def at(rr, cc):
        if rr < 0 or rr > 2:
            return "1"
        if cc < 0:
            return "u" if controlled and rr == 1 else "0"
        if cc > 2:
            return "0"
        return f"x{3 * rr + cc + 1}"

    return [at(r, c), at(r - 1, c), at(r + 1, c), at(r, c - 1), at(r, c + 1)]


def _at_least(k: int, names: list[str]) -> str:
    if k <= 0:
        return "1"
    if k > len(names):
        return "0"
    terms = [" & ".join(combo) for combo in itertools.combinations(names, k)]
    return " | ".join(f"({t})" if k > 1 and len(terms) > 1 else t for t in terms)


def grid_network_text(controlled: bool = False) -> str:
    """Majority-of-five rule on the inner 3x3 grid, as DSL text."""
    lines = ["# 3x3 majority grid; rows above/below fixed at 1, columns left/right fixed at 0"]
    if controlled:
        lines.append("inputs: u")
    for r in range(3):
        for c in range(3):
            nb = _grid_neighbours(r, c, controlled)
            ones = nb.count("1")
            names = [v for v in nb if v not in ("0", "1")]
            lines.append(f"x{3 * r + c + 1} <- {_at_least(3 - ones, names)}")
    return "\n".join(lines) + "\n"


def simulate_grid(bits, u: int | None = None) -> tuple:
    """Direct neighbour count on the grid; independent of the DSL and compiler."""
    g = [bits[3 * r:3 * r + 3] for r in range(3)]
    nxt = []
    for r in range(3):
        for c in range(3):
            up = g[r - 1][c] if r > 0 else 1
            down = g[r + 1][c] if r < 2 else 1
            left = g[r][c - 1] if c > 0 else (u if (u is not None and r == 1) else 0)
            right = g[r][c + 1] if c < 2 else 0
            nxt.append(int(g[r][c] + up + down + left + right >= 3))
    return tuple(nxt)


def grid_matrix_by_simulation(u: int | None = None) -> LogicalMatrix:
    return LogicalMatrix(
        512, tuple(state_index_encode(simulate_grid(state_index_decode(j, 9), u)).index for j in range(1, 513))
    )


def appendix_matrix(which: str) -> LogicalMatrix:
    """``"i"`` for the uncontrolled grid M, ``"ii"`` for the u = 1 block N."""
    fname = {"i": "appendix_i.delta", "ii": "appendix_ii.delta"}[which]
    text = resources.files("stpbn").joinpath("data", fname).read_text(encoding="utf-8")
    return parse_document(text).entries[0].matrix


def _support(g) -> list[int]:
    return sorted(support(g))


def _grid_claims(M: LogicalMatrix) -> list[dict]:
    recs = []
    for claimed, tup in zip(GRID_S, GRID_S_TUPLES):
        got = state_index_encode(tup).index
        if got != claimed:
            recs.append({"kind": "claim", "item": "state tuple encoding", "tuple": list(tup),
                         "published_index": claimed, "encoded_index": got})
    g1 = index_function(SubsetSpec(9, frozenset(GRID_S)))
    g2 = logical_compose(g1, M)
    recs.append({"kind": "claim", "item": "support of G1 M", "published": list(GRID_G2_CLAIM),
                 "derived": _support(g2),
                 "appendix_columns": {str(j): M[j] for j in sorted(set(GRID_G2_CLAIM) ^ set(_support(g2)))}})
    g3 = logical_compose(g2, M)
    recs.append({"kind": "claim", "item": "G2 M equals G1", "holds": g3 == g1,
                 "published_G1": list(GRID_S), "derived_G2M": _support(g3)})
    for S in (GRID_S, tuple(_support(g3))):
        cl = closure_bn([index_function(SubsetSpec(9, frozenset(S)))], M)
        agg = aggregated_dynamics(cl)
        rec = {"kind": "closure", "generator_support": list(S), "size": cl.s,
               "sigma": list(cl.successor[1]), "supports": [_support(g) for g in cl.closure]}
        if cl.s <= 3:
            rec["H"] = list(agg.H_blocks[1].cols)
        recs.append(rec)
    return recs


def _grid_9() -> CorpusCase:
    case = CorpusCase("grid-9")
    net_text = grid_network_text(False)
    from .formula import parse_network

    sys = assemble(parse_network(net_text))
    appx = appendix_matrix("i")
    case.files["grid-9.bn"] = net_text
    case.files["grid-9.M.delta"] = _named(sys.L, "M")
    case.files["grid-9.appendix_i.delta"] = _named(appx, "M")
    case.files["grid-9.g1.delta"] = _named(index_function(SubsetSpec(9, frozenset(GRID_S))), "g1")
    case.report.extend(compare_matrices(sys.L, appx, "M"))
    case.report.extend(_grid_claims(appx))
    return case


# Example 4.3 as published: supports of G1..G7 and the 7-state successor table.
EX43_SUPPORTS = (
    (43, 143, 165),
    (22, 89, 150, 278),
    (43, 47, 143, 164, 229, 420),
    (59, 118, 278),
    (164, 299, 420),
    (278,),
    (),
)
EX43_HU = (6, 3, 4, 5, 7, 5, 7, 2, 1, 0, 0, 0, 0, 7)
EX43_CHAIN = (  # (j, block, k): G_j B = G_k with block 1 = N, 2 = M
    (1, 1, 3), (3, 1, 4), (4, 1, 5), (5, 1, 7), (2, 1, 6), (6, 1, 5), (7, 2, 7), (7, 1, 7),
)
EX43_W = (3, 4, 5, 6)


def _nearest(target: tuple, funcs) -> tuple[int, list, list]:
    """Closure member (1-based) whose support differs least from ``target``."""
    t = set(target)
    best = min(range(len(funcs)), key=lambda i: (len(t ^ support(funcs[i])), -len(t & support(funcs[i])), i))
    s = support(funcs[best])
    return best + 1, sorted(t - s), sorted(s - t)


def ex43_comparison(cl) -> list[dict]:
    """Match each published G_j to a derived closure member and compare successors."""
    funcs = cl.closure.funcs
    match = {}
    recs = []
    for j, sup in enumerate(EX43_SUPPORTS, start=1):
        k, only_pub, only_der = _nearest(sup, funcs)
        match[j] = k
        recs.append({"kind": "function-match", "published": j, "derived": k,
                     "exact": not only_pub and not only_der,
                     "only_published": only_pub, "only_derived": only_der})
    back = {}
    for j, k in match.items():
        back.setdefault(k, j)

    def derived_target(j, block):
        k = cl.successor[block][match[j] - 1]
        return back.get(k)  # None: successor is not among the published seven

    for pos, t in enumerate(EX43_HU):
        block, j = divmod(pos, 7)
        block += 1
        j += 1
        got = derived_target(j, block)
        rec = {"kind": "HU-entry", "block": block, "class": j, "published": t, "derived": got,
               "agrees": t == 0 or t == got}
        if t == 0:
            rec["note"] = "forbidden in the published table"
        recs.append(rec)
    for j, block, k in EX43_CHAIN:
        got = derived_target(j, block)
        recs.append({"kind": "chain", "relation": f"G{j} {'N' if block == 1 else 'M'} = G{k}",
                     "derived": got, "agrees": got == k})
    return recs


def _grid_9_controlled() -> CorpusCase:
    from .control import closure_bcn
    from .formula import parse_network

    case = CorpusCase("grid-9-controlled")
    net_text = grid_network_text(True)
    sys = assemble(parse_network(net_text))
    N_app, M_app = appendix_matrix("ii"), appendix_matrix("i")
    case.files["grid-9-controlled.bn"] = net_text
    case.files["grid-9-controlled.L.delta"] = _named(sys.L, "L")
    case.files["grid-9-controlled.appendix_ii.delta"] = _named(N_app, "N")
    case.files["grid-9-controlled.appendix_i.delta"] = _named(M_app, "M")
    case.files["grid-9-controlled.g1.delta"] = _named(index_function(SubsetSpec(9, frozenset(GRID_S))), "g1")
    case.files["grid-9-controlled.constraints"] = "forbid u=2 when class in {3,4,5,6}\n"
    case.report.extend(compare_matrices(sys.blocks[0], N_app, "N"))
    case.report.extend(compare_matrices(sys.blocks[1], M_app, "M"))
    app_sys = BcnAssr.from_blocks([N_app, M_app])
    cl = closure_bcn([index_function(SubsetSpec(9, frozenset(GRID_S)))], app_sys)
    case.report.append({"kind": "closure", "blocks": "N,M", "size": cl.s,
                        "sigma_N": list(cl.successor[1]), "sigma_M": list(cl.successor[2]),
                        "supports": [_support(g) for g in cl.closure]})
    case.report.extend(ex43_comparison(cl))
    return case


# --------------------------------------------------------------------------
# example 5.5 (n = 3, uncertain block X = identity)
# --------------------------------------------------------------------------

EX55_BLOCKS = (
    LogicalMatrix(8, (2, 3, 1, 4, 5, 6, 7, 8)),
    LogicalMatrix(8, (2, 1, 3, 4, 5, 6, 7, 8)),
    LogicalMatrix(8, (1, 2, 3, 4, 5, 6, 7, 8)),
    LogicalMatrix(8, (3, 2, 1, 4, 5, 6, 7, 8)),
)
EX55_Y1 = LogicalMatrix(2, (1, 2, 1, 2, 2, 2, 2, 2))
EX55_LSTAR = LogicalMatrix(8, (1, 3, 5, 7, 2, 4, 6, 8, 1, 2, 5, 6, 3, 4, 7, 8,
                               1, 2, 3, 4, 5, 6, 7, 8, 1, 3, 2, 4, 5, 7, 6, 8))
EX55_XI = LogicalMatrix(2, (1, 1, 1, 1, 2, 2, 2, 2))
EX55_Y2 = LogicalMatrix(2, (2, 1, 1, 2, 2, 2, 2, 2))
EX55_Y3 = LogicalMatrix(2, (1, 1, 2, 2, 2, 2, 2, 2))


def ex55_network() -> NetworkDef:
    L = hconcat(EX55_BLOCKS)
    controls, states = ("u1", "u2"), ("x1", "x2", "x3")
    order = controls + states
    rules = []
    for i in range(3):
        # i-th coordinate of the next state, as a function of (u, x)
        comp = LogicalMatrix(2, tuple(2 - state_index_decode(t, 3)[i] for t in L.cols))
        rules.append(dnf_from_matrix(comp, order))
    return NetworkDef(states, controls, tuple(rules), (("y1", dnf_from_matrix(EX55_Y1, states)),))


def _example_55() -> CorpusCase:
    net = ex55_network()
    case = CorpusCase("example-5.5")
    case.files["example-5.5.bn"] = net.to_text()
    case.files["example-5.5.Lstar.delta"] = _named(EX55_LSTAR, "Lstar")
    case.files["example-5.5.Xi.delta"] = _named(EX55_XI, "Xi")
    case.files["example-5.5.closure.delta"] = "".join(
        _named(g, f"y{i}") for i, g in enumerate((EX55_Y1, EX55_Y2, EX55_Y3), start=1)
    )
    sys = assemble(net)
    case.report.extend(compare_matrices(sys.L, hconcat(EX55_BLOCKS), "L"))
    return case


_BUILDERS = {
    "example-3.1.5": _example_315,
    "grid-9": _grid_9,
    "grid-9-controlled": _grid_9_controlled,
    "example-5.5": _example_55,
}
