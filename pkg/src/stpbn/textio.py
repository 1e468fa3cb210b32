"""Plain-text formats.

A matrix stanza is either::

    delta <p> <q> [zeroext]
    i_1 i_2 ... i_q

or::

    dense <rows> <cols>
    a/b a/b ...        (one line per row)

Documents interleave stanzas with ``key: value`` headers (attached to the
next stanza), ``meta <key> <value>`` lines, ``successor <block>: j -> k``
lines and ``class <k>: <bits>`` lines. ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .invariant import AggregatedSystem, ClosureResult, FunctionSet, reduced_form
from .stp import DenseMatrix, LogicalMatrix, ZeroExtendedLogicalMatrix, state_index_decode


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


# --------------------------------------------------------------------------
# stanzas
# --------------------------------------------------------------------------


def format_matrix(a) -> str:
    if isinstance(a, DenseMatrix):
        rows = "\n".join(" ".join(_frac(e) for e in a.row(i)) for i in range(a.rows))
        return f"dense {a.rows} {a.cols}\n{rows}\n"
    tag = " zeroext" if isinstance(a, ZeroExtendedLogicalMatrix) else ""
    return f"delta {a.rows} {a.ncols}{tag}\n{' '.join(map(str, a.cols))}\n"


def _frac(e: Fraction) -> str:
    return f"{e.numerator}/{e.denominator}"


@dataclass
class Entry:
    attrs: dict
    matrix: object


@dataclass
class Document:
    entries: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    successors: dict = field(default_factory=dict)  # block -> {j: k}
    classes: dict = field(default_factory=dict)  # k -> bits

    def matrices(self, **where) -> list:
        return [e.matrix for e in self.select(**where)]

    def select(self, **where) -> list:
        return [e for e in self.entries if all(e.attrs.get(k) == str(v) for k, v in where.items())]


_HEADER = re.compile(r"^([A-Za-z_]+):\s*(.*)$")
_SUCC = re.compile(r"^successor\s+(\d+)\s*:\s*(\d+)\s*->\s*(\d+)$")
_CLASS = re.compile(r"^class\s+(\d+)\s*:\s*([01 ]+)$")


def parse_document(text: str) -> Document:
    doc = Document()
    pending: dict = {}
    lines = [(i, raw.split("#", 1)[0].strip()) for i, raw in enumerate(text.splitlines(), start=1)]
    lines = [(i, s) for i, s in lines if s]
    pos = 0

    def next_line(what: str, after: int):
        nonlocal pos
        if pos >= len(lines):
            raise FormatError(f"missing {what}", after)
        ln, s = lines[pos]
        pos += 1
        return ln, s

    while pos < len(lines):
        ln, s = lines[pos]
        pos += 1
        head = s.split()
        if head[0] == "delta":
            try:
                p, q = int(head[1]), int(head[2])
            except (IndexError, ValueError):
                raise FormatError("expected 'delta <p> <q>'", ln) from None
            zeroext = "zeroext" in head[3:]
            _, body = next_line("column indices", ln)
            try:
                cols = tuple(int(t) for t in body.split())
            except ValueError:
                raise FormatError("column indices must be integers", ln + 1) from None
            if len(cols) != q:
                raise FormatError(f"expected {q} column indices, got {len(cols)}", ln + 1)
            if 0 in cols and not zeroext:
                raise FormatError("zero column in a stanza not tagged zeroext", ln + 1)
            cls = ZeroExtendedLogicalMatrix if zeroext else LogicalMatrix
            try:
                mat = cls(p, cols)
            except ValueError as e:
                raise FormatError(str(e), ln) from None
            doc.entries.append(Entry(pending, mat))
            pending = {}
        elif head[0] == "dense":
            try:
                r, c = int(head[1]), int(head[2])
            except (IndexError, ValueError):
                raise FormatError("expected 'dense <rows> <cols>'", ln) from None
            rows = []
            for _ in range(r):
                rl, body = next_line("matrix row", ln)
                vals = [Fraction(t) for t in body.split()]
                if len(vals) != c:
                    raise FormatError(f"expected {c} entries", rl)
                rows.append(vals)
            doc.entries.append(Entry(pending, DenseMatrix.from_rows(rows)))
            pending = {}
        elif head[0] == "meta":
            if len(head) < 3:
                raise FormatError("expected 'meta <key> <value>'", ln)
            doc.meta[head[1]] = " ".join(head[2:])
        elif m := _SUCC.match(s):
            b, j, k = map(int, m.groups())
            doc.successors.setdefault(b, {})[j] = k
        elif m := _CLASS.match(s):
            doc.classes[int(m.group(1))] = tuple(int(t) for t in m.group(2).split())
        elif m := _HEADER.match(s):
            pending = {**pending, m.group(1): m.group(2).strip()}
        else:
            raise FormatError(f"cannot parse {s!r}", ln)
    return doc


def read_matrices(text: str) -> list:
    return [e.matrix for e in parse_document(text).entries]


# --------------------------------------------------------------------------
# writers
# --------------------------------------------------------------------------


def _stanza(mat, **attrs) -> str:
    head = "".join(f"{k}: {v}\n" for k, v in attrs.items() if v is not None)
    return head + format_matrix(mat)


def assr_to_text(sys, emit: str = "both") -> str:
    out = [f"meta n {sys.n}\n", f"meta m {sys.m}\n"]
    if sys.m:
        out.append(f"meta inputs {' '.join(sys.control_names)}\n")
    out.append(f"meta states {' '.join(sys.state_names)}\n")
    if emit in ("componentwise", "both"):
        for name, comp in zip(sys.state_names, sys.componentwise):
            out.append(_stanza(comp, section="componentwise", name=name))
    if emit in ("overall", "both"):
        out.append(_stanza(sys.L, section="overall", name="L" if sys.m else "M"))
    return "".join(out)


def function_set_to_text(fs: FunctionSet) -> str:
    return "".join(
        _stanza(g, name=nm, provenance=p) for g, nm, p in zip(fs.funcs, fs.names, fs.provenance)
    )


def function_set_from_document(doc: Document) -> FunctionSet:
    entries = [e for e in doc.entries if e.attrs.get("section", "closure") == "closure"]
    if not entries:
        raise FormatError("no function stanzas found")
    funcs = [e.matrix for e in entries]
    if any(f.rows != 2 for f in funcs):
        raise FormatError("function stanzas must have 2 rows")
    names = tuple(e.attrs.get("name", f"z{i}") for i, e in enumerate(entries, start=1))
    prov = tuple(e.attrs.get("provenance", "generator") for e in entries)
    return FunctionSet(funcs[0].ncols.bit_length() - 1, tuple(funcs), prov, names)


def closure_to_text(cl: ClosureResult, agg: AggregatedSystem | None = None) -> str:
    out = [
        "meta kind closure\n",
        f"meta n {cl.closure.n}\n",
        f"meta s {cl.s}\n",
        f"meta blocks {cl.nblocks}\n",
        f"meta scope {' '.join(map(str, cl.scope))}\n",
        f"meta generators {' '.join(map(str, cl.generator_indices))}\n",
    ]
    for g, nm, p in zip(cl.closure.funcs, cl.closure.names, cl.closure.provenance):
        out.append(_stanza(g, section="closure", name=nm, provenance=p))
    for b in cl.scope:
        out.extend(f"successor {b}: {j} -> {k}\n" for j, k in enumerate(cl.successor[b], start=1))
    if agg is not None:
        out.append(aggregated_to_text(agg))
    return "".join(out)


def aggregated_to_text(agg: AggregatedSystem) -> str:
    out = []
    for b in agg.scope:
        out.append(_stanza(agg.H_blocks[b], section="H", block=b))
    if agg.output is not None:
        out.append(_stanza(agg.output, section="output"))
    for k, z in enumerate(agg.classes, start=1):
        out.append(f"class {k}: {' '.join(map(str, state_index_decode(z, agg.s)))}\n")
    for b in agg.scope:
        out.append(_stanza(agg.reduced_blocks[b], section="reduced", block=b))
    return "".join(out)


def realization_to_text(real) -> str:
    head = f"meta kind realization\nmeta outputs {' '.join(map(str, real.output_positions))}\n"
    return head + closure_to_text(real.closure, real.system).replace("meta kind closure\n", "")


def realization_from_text(text: str):
    """Rebuild a realization; H blocks and Xi are taken from the file as written."""
    from .control import Realization

    doc = parse_document(text)
    fs = function_set_from_document(doc)
    nblocks = int(doc.meta.get("blocks", 1))
    scope = tuple(int(t) for t in doc.meta.get("scope", "1").split())
    successor = {}
    for b in scope:
        sm = doc.successors.get(b, {})
        successor[b] = tuple(sm[j] for j in range(1, len(fs) + 1)) if len(sm) == len(fs) else ()
    gens = tuple(int(t) for t in doc.meta.get("generators", "1").split())
    cl = ClosureResult(fs, successor, gens, nblocks)
    H_blocks = {}
    for e in doc.select(section="H"):
        H_blocks[int(e.attrs["block"])] = e.matrix
    if set(H_blocks) != set(scope):
        raise FormatError("H blocks do not match the declared scope")
    out = doc.matrices(section="output")
    if len(out) != 1:
        raise FormatError("realization needs exactly one output stanza")
    G = cl.G
    classes, class_of_state, reduced = reduced_form(G, H_blocks) if _closed(G, H_blocks) else ((), (), {})
    agg = AggregatedSystem(len(fs), H_blocks, G, nblocks, classes, class_of_state, reduced, out[0])
    positions = tuple(int(t) for t in doc.meta.get("outputs", "").split())
    return Realization(cl, agg, out[0], positions)


def _closed(G, H_blocks) -> bool:
    attained = set(G.cols)
    return all(H[z] in attained for H in H_blocks.values() for z in attained)


# --------------------------------------------------------------------------
# loaders used by the command line
# --------------------------------------------------------------------------

_STANZA_KEYS = {"name", "section", "block", "provenance"}
_FUNC_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*")


def _is_matrix_text(text: str) -> bool:
    for raw in text.splitlines():
        s = raw.split("#", 1)[0].strip()
        if s:
            m = _HEADER.match(s)
            return s.split()[0] in ("delta", "dense", "meta") or bool(m and m.group(1) in _STANZA_KEYS)
    return False


def parse_function_file(text: str, state_vars) -> FunctionSet:
    """Either delta stanzas (with optional ``name:`` headers) or ``name = formula`` lines."""
    from .formula import FormulaError, parse_formula, structure_matrix

    n = len(state_vars)
    if _is_matrix_text(text):
        fs = function_set_from_document(parse_document(text))
        if fs.n != n:
            raise FormatError(f"functions are over {fs.n} variables, network has {n}")
        return fs
    names, funcs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = _FUNC_LINE.match(line)
        if not m:
            raise FormulaError("expected 'name = formula'", lineno, 1)
        f = parse_formula(line[m.end():], state_vars, line=lineno, col=m.end() + 1)
        names.append(m.group(1))
        funcs.append(structure_matrix(f, state_vars))
    if not funcs:
        raise FormatError("function file is empty")
    return FunctionSet(n, tuple(funcs), (), tuple(names))


def system_from_document(doc: Document):
    """A BN/BCN from delta stanzas: an ``overall`` stanza, one ``L``, or a list of square blocks."""
    from .network import BcnAssr, BnAssr

    mats = doc.matrices(section="overall") or [e.matrix for e in doc.entries]
    if not mats:
        raise FormatError("no matrices found")
    if len(mats) == 1:
        L = mats[0]
        n = L.rows.bit_length() - 1
        if 1 << n != L.rows or L.ncols % L.rows:
            raise FormatError(f"{L.shape} is not a 2^n x 2^(m+n) transition matrix")
        m = (L.ncols // L.rows).bit_length() - 1
        if L.rows << m != L.ncols:
            raise FormatError(f"{L.shape} is not a 2^n x 2^(m+n) transition matrix")
        return BnAssr(n, L) if m == 0 else BcnAssr(n, m, L)
    if any(M.shape != mats[0].shape or M.rows != M.ncols for M in mats):
        raise FormatError("block stanzas must all be square and of equal size")
    try:
        return BcnAssr.from_blocks(mats)
    except ValueError as e:
        raise FormatError(str(e)) from None
