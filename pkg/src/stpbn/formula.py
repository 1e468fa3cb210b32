"""Boolean formula DSL: lexer, parser, printer, evaluator and truth-table compiler.

Grammar, loosest binding first::

    iff     := implies ('<->' implies)*          left-assoc
    implies := or ('->' implies)?                right-assoc
    or      := xor ('|' xor)*
    xor     := and ('^' and)*
    and     := unary ('&' unary)*
    unary   := '!' unary | atom
    atom    := NAME | '0' | '1' | '(' iff ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .stp import LogicalMatrix, state_index_decode, state_index_encode


class FormulaError(ValueError):
    """Parse or binding error carrying a 1-based line/column position."""

    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


class Formula:
    __slots__ = ()

    def variables(self) -> set[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Var(Formula):
    name: str

    def variables(self):
        return {self.name}


@dataclass(frozen=True)
class Const(Formula):
    value: int

    def variables(self):
        return set()


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def variables(self):
        return self.arg.variables()


@dataclass(frozen=True)
class Binary(Formula):
    left: Formula
    right: Formula

    symbol = "?"
    precedence = 0

    def variables(self):
        return self.left.variables() | self.right.variables()

    @staticmethod
    def apply(a: int, b: int) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class And(Binary):
    symbol = "&"
    precedence = 5

    @staticmethod
    def apply(a, b):
        return a & b


@dataclass(frozen=True)
class Xor(Binary):
    symbol = "^"
    precedence = 4

    @staticmethod
    def apply(a, b):
        return a ^ b


@dataclass(frozen=True)
class Or(Binary):
    symbol = "|"
    precedence = 3

    @staticmethod
    def apply(a, b):
        return a | b


@dataclass(frozen=True)
class Implies(Binary):
    symbol = "->"
    precedence = 2

    @staticmethod
    def apply(a, b):
        return (1 - a) | b


@dataclass(frozen=True)
class Iff(Binary):
    symbol = "<->"
    precedence = 1

    @staticmethod
    def apply(a, b):
        return int(a == b)


_BINARY = {cls.symbol: cls for cls in (And, Xor, Or, Implies, Iff)}


# --------------------------------------------------------------------------
# lexer / parser
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<const>[01](?![0-9A-Za-z_]))"
    r"|(?P<op><->|->|[!&|^()])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _lex(text: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), col0 + pos))
        pos = m.end()
    toks.append(_Tok("end", "", col0 + len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, scope: Iterable[str] | None, line: int, col0: int):
        self.toks = _lex(text, line, col0)
        self.i = 0
        self.scope = None if scope is None else set(scope)
        self.line = line

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str, tok: _Tok):
        raise FormulaError(msg, self.line, tok.col)

    def parse(self) -> Formula:
        f = self.iff()
        t = self.peek()
        if t.kind != "end":
            if t.text == ")":
                self.fail("unbalanced parenthesis: unexpected ')'", t)
            self.fail(f"unexpected token {t.text!r}", t)
        return f

    def _left_assoc(self, sym: str, sub):
        f = sub()
        while self.peek().text == sym:
            self.take()
            f = _BINARY[sym](f, sub())
        return f

    def iff(self):
        return self._left_assoc("<->", self.implies)

    def implies(self):
        f = self.or_()
        if self.peek().text == "->":
            self.take()
            return Implies(f, self.implies())
        return f

    def or_(self):
        return self._left_assoc("|", self.xor)

    def xor(self):
        return self._left_assoc("^", self.and_)

    def and_(self):
        return self._left_assoc("&", self.unary)

    def unary(self):
        if self.peek().text == "!":
            self.take()
            return Not(self.unary())
        return self.atom()

    def atom(self):
        t = self.take()
        if t.kind == "name":
            if self.scope is not None and t.text not in self.scope:
                self.fail(f"unknown identifier {t.text!r}", t)
            return Var(t.text)
        if t.kind == "const":
            return Const(int(t.text))
        if t.text == "(":
            f = self.iff()
            close = self.peek()
            if close.text != ")":
                self.fail("unbalanced parenthesis: expected ')'", close)
            self.take()
            return f
        if t.kind == "end":
            self.fail("unexpected end of formula", t)
        self.fail(f"unexpected token {t.text!r}", t)


def parse_formula(text: str, scope: Iterable[str] | None = None, *, line: int = 1, col: int = 1) -> Formula:
    """Parse ``text``; ``scope`` (if given) lists the legal variable names."""
    return _Parser(text, scope, line, col).parse()


def to_text(f: Formula, parent: int = 0, right: bool = False) -> str:
    """Minimal-parenthesis rendering that re-parses to the same AST."""
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Const):
        return str(f.value)
    if isinstance(f, Not):
        return "!" + to_text(f.arg, 6)
    p = f.precedence
    # -> is right-associative; every other binary operator is left-associative
    right_assoc = isinstance(f, Implies)
    body = f"{to_text(f.left, p, False)} {f.symbol} {to_text(f.right, p, True)}"
    needs = p < parent or (p == parent and right != right_assoc)
    return f"({body})" if needs else body


# --------------------------------------------------------------------------
# evaluation and compilation
# --------------------------------------------------------------------------


def evaluate(f: Formula, assignment: Mapping[str, int]) -> int:
    if isinstance(f, Var):
        try:
            return int(assignment[f.name])
        except KeyError:
            raise FormulaError(f"no value bound for {f.name!r}") from None
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return 1 - evaluate(f.arg, assignment)
    return f.apply(evaluate(f.left, assignment), evaluate(f.right, assignment))


def _compile(f: Formula, index: Mapping[str, int]):
    """Closure evaluating ``f`` on a bit tuple; much faster than ``evaluate`` in loops."""
    if isinstance(f, Var):
        i = index[f.name]
        return lambda bits: bits[i]
    if isinstance(f, Const):
        v = f.value
        return lambda bits: v
    if isinstance(f, Not):
        g = _compile(f.arg, index)
        return lambda bits: 1 - g(bits)
    a, b, op = _compile(f.left, index), _compile(f.right, index), f.apply
    return lambda bits: op(a(bits), b(bits))


def structure_matrix(f: Formula, ordered_vars: Sequence[str]) -> LogicalMatrix:
    """Unique ``M_f`` (2 x 2^k) with ``f(v_1..v_k) = M_f |x v_1 |x ... |x v_k``."""
    missing = f.variables() - set(ordered_vars)
    if missing:
        raise FormulaError(f"unbound variable(s): {', '.join(sorted(missing))}")
    k = len(ordered_vars)
    if k == 0:
        return LogicalMatrix(2, (2 - evaluate(f, {}),))
    g = _compile(f, {v: i for i, v in enumerate(ordered_vars)})
    return LogicalMatrix(2, tuple(2 - g(state_index_decode(j, k)) for j in range(1, (1 << k) + 1)))


# --------------------------------------------------------------------------
# index functions of state subsets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SubsetSpec:
    n: int
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        members = frozenset(int(i) for i in self.members)
        bad = [i for i in members if not 1 <= i <= (1 << self.n)]
        if bad:
            raise ValueError(f"state indices {sorted(bad)} outside 1..{1 << self.n}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_bits(cls, tuples: Iterable[Sequence[int]]) -> "SubsetSpec":
        tuples = [tuple(t) for t in tuples]
        n = len(tuples[0])
        return cls(n, frozenset(state_index_encode(t).index for t in tuples))


def index_function(s: SubsetSpec) -> LogicalMatrix:
    """Structure matrix of the indicator of ``s``: column i is delta_2^1 iff i is a member."""
    return LogicalMatrix(2, tuple(1 if i in s.members else 2 for i in range(1, (1 << s.n) + 1)))


def support(g: LogicalMatrix) -> frozenset:
    """States where a scalar logical function is true (inverse of ``index_function``)."""
    if g.rows != 2:
        raise ValueError("support is defined for 2-row logical functions")
    return frozenset(i for i, c in enumerate(g.cols, start=1) if c == 1)


def dnf_from_matrix(g: LogicalMatrix, ordered_vars: Sequence[str]) -> Formula:
    """Sum-of-minterms formula realising a 2 x 2^k structure matrix."""
    k = len(ordered_vars)
    if g.rows != 2 or g.ncols != 1 << k:
        raise ValueError(f"expected a 2 x {1 << k} matrix, got {g.shape}")
    terms = []
    for j in sorted(support(g)):
        bits = state_index_decode(j, k)
        lits = [Var(v) if b else Not(Var(v)) for v, b in zip(ordered_vars, bits)]
        term = lits[0]
        for lit in lits[1:]:
            term = And(term, lit)
        terms.append(term)
    if not terms:
        return Const(0)
    if len(terms) == 1 << k:
        return Const(1)
    out = terms[0]
    for t in terms[1:]:
        out = Or(out, t)
    return out


# --------------------------------------------------------------------------
# network definitions (.bn files)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkDef:
    state_vars: tuple
    control_vars: tuple
    update_rules: tuple  # one Formula per state var, same order
    output_rules: tuple = ()  # (name, Formula) pairs

    def __post_init__(self):
        if len(self.update_rules) != len(self.state_vars):
            raise ValueError("need exactly one update rule per state variable")
        dup = set(self.state_vars) & set(self.control_vars)
        if dup or len(set(self.state_vars)) != len(self.state_vars):
            raise ValueError("variable names must be unique")
        scope = set(self.state_vars) | set(self.control_vars)
        for name, f in zip(self.state_vars, self.update_rules):
            extra = f.variables() - scope
            if extra:
                raise FormulaError(f"rule for {name} uses undeclared {sorted(extra)}")
        for name, f in self.output_rules:
            extra = f.variables() - set(self.state_vars)
            if extra:
                raise FormulaError(f"output {name} uses non-state names {sorted(extra)}")

    @property
    def n(self) -> int:
        return len(self.state_vars)

    @property
    def m(self) -> int:
        return len(self.control_vars)

    def rule(self, name: str) -> Formula:
        return self.update_rules[self.state_vars.index(name)]

    def to_text(self) -> str:
        lines = []
        if self.control_vars:
            lines.append("inputs: " + " ".join(self.control_vars))
        for name, f in zip(self.state_vars, self.update_rules):
            lines.append(f"{name} <- {to_text(f)}")
        for name, f in self.output_rules:
            lines.append(f"{name} = {to_text(f)}")
        return "\n".join(lines) + "\n"


_UPDATE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*<-\s*")
_OUTPUT = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*")
_INPUTS = re.compile(r"^\s*inputs\s*:")


def parse_network(text: str) -> NetworkDef:
    """Parse a ``.bn`` document.

    Declaration order of the ``x <- f`` lines fixes the state ordering. Names are
    collected in a first pass so a rule may mention variables declared later.
    """
    controls: list[str] = []
    updates: list[tuple[str, str, int, int]] = []
    outputs: list[tuple[str, str, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if m := _INPUTS.match(line):
            controls.extend(line[m.end():].split())
        elif m := _UPDATE.match(line):
            updates.append((m.group(1), line[m.end():], lineno, m.end() + 1))
        elif m := _OUTPUT.match(line):
            outputs.append((m.group(1), line[m.end():], lineno, m.end() + 1))
        else:
            col = len(line) - len(line.lstrip()) + 1
            raise FormulaError("expected 'inputs:', 'x <- formula' or 'y = formula'", lineno, col)
    states = [u[0] for u in updates]
    for name in set(states):
        if states.count(name) > 1:
            line = [u[2] for u in updates if u[0] == name][1]
            raise FormulaError(f"second update rule for {name!r}", line, 1)
    clash = set(states) & set(controls)
    if clash:
        raise FormulaError(f"{sorted(clash)} declared both as input and state")
    scope = states + controls
    rules = tuple(parse_formula(body, scope, line=ln, col=c) for _, body, ln, c in updates)
    outs = tuple((name, parse_formula(body, states, line=ln, col=c)) for name, body, ln, c in outputs)
    if not states:
        raise FormulaError("network has no update rules")
    return NetworkDef(tuple(states), tuple(controls), rules, outs)


def load_network(path) -> NetworkDef:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())
