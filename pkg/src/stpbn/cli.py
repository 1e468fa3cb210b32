"""``stpbn`` command line.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 resource cap.
Every command is deterministic for fixed inputs and ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .control import (
    ConstraintError,
    VerificationCapExceeded,
    aggregated_bcn,
    apply_constraints,
    closure_bcn,
    min_realization,
    parse_constraints,
    verify_io_equivalence,
)
from .formula import FormulaError, SubsetSpec, index_function, parse_network
from .invariant import DEFAULT_CAP, ClosureCapExceeded, UnattainedValueError, combined_structure, invariance_certificate
from .network import DEFAULT_EDGE_CAP, GraphTooLarge, assemble, assemble_outputs, state_transition_graph, trajectory, transition_graph_dot
from .stp import DimensionError, state_index_decode, state_index_encode
from .textio import (
    FormatError,
    _is_matrix_text,
    assr_to_text,
    closure_to_text,
    format_matrix,
    parse_document,
    parse_function_file,
    realization_from_text,
    realization_to_text,
    system_from_document,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None


def _load(path: str):
    """(system, outputs, state names) from a .bn file or delta stanzas."""
    text = _read(path)
    if _is_matrix_text(text):
        sysm = system_from_document(parse_document(text))
        return sysm, None, sysm.state_names
    net = parse_network(text)
    return assemble(net), assemble_outputs(net), net.state_vars


def _blocks_arg(spec: str, nblocks: int):
    if spec == "all":
        return None
    try:
        ids = sorted({int(t) for t in spec.split(",") if t.strip()})
    except ValueError:
        raise InputError(f"--controls expects 'all' or a comma list of block ids, got {spec!r}") from None
    bad = [b for b in ids if not 1 <= b <= nblocks]
    if bad or not ids:
        raise InputError(f"control blocks {bad or ids} outside 1..{nblocks}")
    return ids


def _emit(args, fname: str, text: str) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / fname).write_text(text, encoding="utf-8")
        print(f"wrote {out / fname}")
    else:
        sys.stdout.write(text)


def _stem(path: str) -> str:
    return Path(path).stem


def _cap(args, default: int) -> int:
    return args.cap if args.cap is not None else default


def _int_list(spec: str, what: str) -> list[int]:
    try:
        return [int(t) for t in spec.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"{what} must be a comma-separated list of integers") from None


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_compile(args) -> int:
    sysm, _, _ = _load(args.network)
    if not sysm.componentwise and args.emit != "overall":
        raise InputError("componentwise matrices are only available when compiling a .bn file")
    _emit(args, f"{_stem(args.network)}.assr", assr_to_text(sysm, args.emit))
    return EXIT_OK


def _closure(args):
    sysm, _, names = _load(args.network)
    gens = parse_function_file(_read(args.functions), names)
    scope = _blocks_arg(args.controls, sysm.ncontrols)
    cl = closure_bcn(gens, sysm, scope, cap=_cap(args, DEFAULT_CAP), workers=args.workers)
    return sysm, cl


def _summary(cl) -> str:
    lines = [f"closure size {cl.s}"]
    for b in cl.scope:
        lines.append(f"sigma[{b}] = {list(cl.successor[b])}")
    return "\n".join(lines) + "\n"


def cmd_closure(args) -> int:
    _, cl = _closure(args)
    agg = aggregated_bcn(cl)
    sys.stderr.write(_summary(cl))
    for b in agg.scope:
        sys.stderr.write(f"H[{b}] = {agg.H_blocks[b]!r}\n" if cl.s <= 6 else "")
    _emit(args, f"{_stem(args.functions)}.closure", closure_to_text(cl, agg))
    return EXIT_OK


def cmd_invariant_check(args) -> int:
    sysm, _, names = _load(args.network)
    fs = parse_function_file(_read(args.functions), names)
    Q = combined_structure(fs).G
    block = args.block
    if not 1 <= block <= sysm.ncontrols:
        raise InputError(f"--block {block} outside 1..{sysm.ncontrols}")
    try:
        cert = invariance_certificate(Q, sysm.blocks[block - 1])
    except UnattainedValueError as e:
        raise InputError(str(e)) from None
    if not cert:
        x, x2 = cert.witness
        print(f"not invariant: states {x} and {x2} share Q value {cert.value} "
              f"but map to {cert.images[0]} and {cert.images[1]}")
        return EXIT_FAIL
    print(f"invariant: H = {cert.H!r}")
    if args.out:
        _emit(args, f"{_stem(args.functions)}.H.delta", "name: H\n" + format_matrix(cert.H))
    return EXIT_OK


def cmd_aggregate(args) -> int:
    _, cl = _closure(args)
    agg = aggregated_bcn(cl)
    text = closure_to_text(cl, agg)
    if args.constraints:
        con = apply_constraints(agg, parse_constraints(_read(args.constraints)))
        text += "section: constrained\nname: HU\n" + format_matrix(con.reduced)
        print(f"constrained reduced system: {con.reduced!r}", file=sys.stderr)
    print(f"{agg.q} attained classes", file=sys.stderr)
    _emit(args, f"{_stem(args.functions)}.aggregate", text)
    return EXIT_OK


def _class_dot(real) -> str:
    agg = real.system
    blocks = [agg.reduced_blocks[b] for b in agg.scope]
    labels = [
        "".join(map(str, state_index_decode(z, agg.s))) + f" / y={real.output[z]}" for z in agg.classes
    ]
    return transition_graph_dot(blocks, name="realization", node_labels=labels)


def cmd_minreal(args) -> int:
    sysm, outputs, _ = _load(args.network)
    if outputs is None:
        raise InputError("network has no output rules (y = ...)")
    real = min_realization(sysm, outputs, cap=_cap(args, DEFAULT_CAP), workers=args.workers)
    stem = _stem(args.network)
    print(f"realization: {real.s} functions, {real.system.q} attained classes", file=sys.stderr)
    _emit(args, f"{stem}.realization", realization_to_text(real))
    _emit(args, f"{stem}.realization.dot", _class_dot(real))
    return EXIT_OK


def cmd_verify(args) -> int:
    sysm, outputs, _ = _load(args.network)
    if outputs is None:
        raise InputError("network has no output rules (y = ...)")
    real = realization_from_text(_read(args.bundle))
    if real.G.ncols != sysm.nstates or real.system.nblocks != sysm.ncontrols:
        raise InputError("bundle does not match the network's dimensions")
    if real.system.scope != tuple(range(1, sysm.ncontrols + 1)):
        raise InputError("bundle lacks H blocks for some controls")
    cap = _cap(args, 1 << 22)
    try:
        res = verify_io_equivalence(sysm, outputs, real, args.horizon, cap=cap,
                                    samples=args.samples, seed=args.seed)
    except VerificationCapExceeded as e:
        print(str(e), file=sys.stderr)
        return EXIT_CAP
    mode = "exhaustive" if res.exhaustive else f"sampled (seed {args.seed})"
    if res:
        print(f"equivalent: {res.runs} runs, horizon {args.horizon}, {mode}")
        return EXIT_OK
    ce = res.counterexample
    trace = {"x0": ce.x0, "controls": list(ce.word), "t": ce.t,
             "y_source": ce.y_source, "y_realization": ce.y_realization,
             "x_trajectory": trajectory(sysm, ce.x0, ce.word)}
    print(f"NOT equivalent after {res.runs} runs ({mode}): x0={ce.x0} controls={list(ce.word)} "
          f"t={ce.t} y={ce.y_source} vs {ce.y_realization}")
    if args.out:
        _emit(args, "counterexample.json", json.dumps(trace, sort_keys=True) + "\n")
    return EXIT_FAIL


def _state_arg(spec: str, n: int) -> int:
    """A state given as an index, a bit string such as ``1011`` or a comma list of bits."""
    spec = spec.strip()
    if "," in spec:
        bits = _int_list(spec, "state")
    elif n > 1 and len(spec) == n and set(spec) <= {"0", "1"}:
        bits = [int(c) for c in spec]
    else:
        try:
            x = int(spec)
        except ValueError:
            raise InputError(f"bad state {spec!r}") from None
        if not 1 <= x <= 1 << n:
            raise InputError(f"state {x} outside 1..{1 << n}")
        return x
    if len(bits) != n or set(bits) - {0, 1}:
        raise InputError(f"state {spec!r} is not {n} bits")
    return state_index_encode(bits).index


def cmd_simulate(args) -> int:
    sysm, outputs, _ = _load(args.network)
    x0 = _state_arg(args.x0, sysm.n)
    controls = _int_list(args.controls, "--controls") if args.controls else [1] * args.steps
    if any(not 1 <= u <= sysm.ncontrols for u in controls):
        raise InputError(f"controls must lie in 1..{sysm.ncontrols}")
    path = trajectory(sysm, x0, controls)
    for t, x in enumerate(path):
        bits = "".join(map(str, state_index_decode(x, sysm.n)))
        y = f" y={outputs.H[x]}" if outputs else ""
        print(f"t={t} x={x} bits={bits}{y}")
    return EXIT_OK


def cmd_stg(args) -> int:
    sysm, _, _ = _load(args.network)
    dot = state_transition_graph(sysm, bits=args.bits, cap=_cap(args, DEFAULT_EDGE_CAP))
    _emit(args, f"{_stem(args.network)}.dot", dot)
    return EXIT_OK


def cmd_indexfn(args) -> int:
    if args.n < 1:
        raise InputError("--n must be positive")
    states = _int_list(args.states, "--states")
    try:
        g = index_function(SubsetSpec(args.n, frozenset(states)))
    except ValueError as e:
        raise InputError(str(e)) from None
    _emit(args, f"{args.name}.delta", f"name: {args.name}\n" + format_matrix(g))
    return EXIT_OK


def cmd_corpus(args) -> int:
    try:
        case = corpus_mod.build(args.name)
    except corpus_mod.UnknownCorpus as e:
        raise InputError(e.args[0]) from None
    out = Path(args.out or ".") / args.name
    for p in case.write(out):
        print(f"wrote {p}")
    summary = [r for r in case.report if r["kind"] == "summary"]
    for r in summary:
        print(f"{r['matrix']}: {r['mismatches']} of {r['columns']} columns differ from the published matrix")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stpbn", description="Boolean (control) networks in STP form.")
    p.add_argument("--cap", type=int, default=None, help="resource cap (closure size, graph edges, verification runs)")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled verification")
    p.add_argument("--out", default=None, help="output directory (default: stdout)")
    p.add_argument("--workers", type=int, default=1, help="threads for closure expansion")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("compile", help="compile a .bn file to delta matrices")
    s.add_argument("network")
    s.add_argument("--emit", choices=("componentwise", "overall", "both"), default="both")
    s.set_defaults(func=cmd_compile)

    for name, func, hlp in (("closure", cmd_closure, "smallest closed function set"),
                            ("aggregate", cmd_aggregate, "closure plus aggregated dynamics")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("network")
        s.add_argument("functions")
        s.add_argument("--controls", default="all", help="'all' or comma list of control blocks")
        if name == "aggregate":
            s.add_argument("--constraints", default=None, help="file of 'forbid u=k when class in {..}' lines")
        s.set_defaults(func=func)

    s = sub.add_parser("invariant-check", help="certify QM = HQ for a function set")
    s.add_argument("network")
    s.add_argument("functions")
    s.add_argument("--block", type=int, default=1)
    s.set_defaults(func=cmd_invariant_check)

    s = sub.add_parser("minreal", help="minimum realization from the output rules")
    s.add_argument("network")
    s.set_defaults(func=cmd_minreal)

    s = sub.add_parser("verify", help="bounded input-output equivalence check")
    s.add_argument("network")
    s.add_argument("bundle")
    s.add_argument("--horizon", type=int, default=6)
    s.add_argument("--samples", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="print a trajectory")
    s.add_argument("network")
    s.add_argument("--x0", required=True, help="state index or bit string")
    s.add_argument("--controls", default=None, help="comma list of control blocks")
    s.add_argument("--steps", type=int, default=10)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("stg", help="state transition graph as DOT")
    s.add_argument("network")
    s.add_argument("--bits", action="store_true", help="label nodes with bit tuples")
    s.set_defaults(func=cmd_stg)

    s = sub.add_parser("indexfn", help="index function of a state subset")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--states", required=True, help="comma list of state indices")
    s.add_argument("--name", default="g1")
    s.set_defaults(func=cmd_indexfn)

    s = sub.add_parser("corpus", help="write fixtures for a worked example")
    s.add_argument("name", choices=corpus_mod.CORPUS_NAMES)
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return args.func(args)
    except (ClosureCapExceeded, GraphTooLarge) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except (InputError, FormulaError, FormatError, ConstraintError, DimensionError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
