"""Textual process language.

Grammar (whitespace insignificant; ``,`` binds looser than ``||``)::

    process  := seq
    seq      := par ( "," par )*
    par      := atom ( "||" atom )*
    atom     := task | choice | nature | loop | "(" seq ")" | "skip"
    task     := IDENT "[" NUM ("," NUM)* "]" "{" INT "}"      -- impacts; duration
    choice   := "(" seq "/" "[" IDENT "]" seq ")"             -- left branch = default
    nature   := "(" seq "^" "[" IDENT ":" NUM "]" seq ")"     -- NUM = prob of left
    loop     := "<" "[" IDENT ":" NUM "," "max" INT "]" seq ">"
    NUM      := decimal or fraction a/b ; INT := positive integer
    IDENT    := [A-Za-z_][A-Za-z0-9_#]*

``skip`` denotes an empty branch (it only acts as a keyword when not
followed by ``[``, so a task named skip still parses as a task). ``#`` in
idents is reserved for loop-unraveling copies. Loops parse into a cyclic
region plus a loop spec and are unraveled before the process is returned,
so parse output is always acyclic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import process_model as pm
from .process_model import BpmnCpi, LoopSpec, SeseDiagram
from .rationals import Vec, format_rat

START = "__start"
END = "__end"
PAR_PREFIX = "__par"


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT NUMBER PUNCT EOF
    text: str
    span: SourceSpan


_PUNCT2 = ("||",)
_PUNCT1 = set(",()/^[]{}<>:")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        span = SourceSpan(line, col, 1)
        two = text[i : i + 2]
        if two in _PUNCT2:
            tokens.append(_Token("PUNCT", two, SourceSpan(line, col, 2)))
            i += 2
            col += 2
            continue
        if ch in _PUNCT1:
            tokens.append(_Token("PUNCT", ch, span))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tok = text[i:j]
            tokens.append(_Token("NUMBER", tok, SourceSpan(line, col, len(tok))))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_#"):
                j += 1
            tok = text[i:j]
            tokens.append(_Token("IDENT", tok, SourceSpan(line, col, len(tok))))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", span)
    tokens.append(_Token("EOF", "", SourceSpan(line, col, 1)))
    return tokens


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class _Task:
    name: str
    impacts: tuple[Fraction, ...]
    duration: int
    span: SourceSpan


@dataclass(frozen=True)
class _Seq:
    parts: tuple


@dataclass(frozen=True)
class _Par:
    left: object
    right: object
    span: SourceSpan


@dataclass(frozen=True)
class _Choice:
    name: str
    left: object
    right: object
    span: SourceSpan


@dataclass(frozen=True)
class _Nature:
    name: str
    prob: Fraction
    left: object
    right: object
    span: SourceSpan


@dataclass(frozen=True)
class _Loop:
    name: str
    prob: Fraction
    max_iterations: int
    body: object
    span: SourceSpan


@dataclass(frozen=True)
class _Skip:
    span: SourceSpan


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            got = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {got!r}", tok.span)
        return tok

    def parse_process(self):
        seq = self.parse_seq()
        tok = self.peek()
        if tok.kind != "EOF":
            raise ParseError(f"unexpected {tok.text!r} after process", tok.span)
        return seq

    def parse_seq(self):
        parts = [self.parse_par()]
        while self.peek().text == ",":
            self.next()
            parts.append(self.parse_par())
        return parts[0] if len(parts) == 1 else _Seq(tuple(parts))

    def parse_par(self):
        expr = self.parse_atom()
        while self.peek().text == "||":
            op = self.next()
            expr = _Par(expr, self.parse_atom(), op.span)  # left-assoc binary forks
        return expr

    def parse_atom(self):
        tok = self.peek()
        if tok.text == "(":
            self.next()
            first = self.parse_seq()
            sep = self.peek()
            if sep.text == "/":
                self.next()
                self.expect("[")
                name = self.parse_ident()
                self.expect("]")
                right = self.parse_seq()
                self.expect(")")
                return _Choice(name.text, first, right, name.span)
            if sep.text == "^":
                self.next()
                self.expect("[")
                name = self.parse_ident()
                self.expect(":")
                prob, prob_span = self.parse_num()
                self.expect("]")
                right = self.parse_seq()
                self.expect(")")
                if not (0 <= prob <= 1):
                    raise ParseError("probability out of range [0, 1]", prob_span)
                return _Nature(name.text, prob, first, right, name.span)
            self.expect(")")
            return first
        if tok.text == "<":
            self.next()
            self.expect("[")
            name = self.parse_ident()
            self.expect(":")
            prob, prob_span = self.parse_num()
            self.expect(",")
            max_tok = self.next()
            if not (max_tok.kind == "IDENT" and max_tok.text == "max"):
                raise ParseError("expected 'max'", max_tok.span)
            count, count_span = self.parse_int()
            self.expect("]")
            body = self.parse_seq()
            self.expect(">")
            if not (0 <= prob <= 1):
                raise ParseError("probability out of range [0, 1]", prob_span)
            if count < 1:
                raise ParseError("max iterations must be >= 1", count_span)
            if isinstance(body, _Skip):
                raise ParseError("loop body must not be empty", tok.span)
            return _Loop(name.text, prob, count, body, name.span)
        if tok.kind == "IDENT":
            if tok.text == "skip" and self.peek(1).text != "[":
                self.next()
                return _Skip(tok.span)
            return self.parse_task()
        got = tok.text or "end of input"
        raise ParseError(f"expected a task, gateway or '(' , found {got!r}", tok.span)

    def parse_task(self) -> _Task:
        name = self.parse_ident()
        self.expect("[")
        impacts = [self.parse_num()[0]]
        while self.peek().text == ",":
            self.next()
            impacts.append(self.parse_num()[0])
        self.expect("]")
        self.expect("{")
        duration, dur_span = self.parse_int()
        self.expect("}")
        if duration < 1:
            raise ParseError("duration must be a positive integer", dur_span)
        return _Task(name.text, tuple(impacts), duration, name.span)

    def parse_ident(self) -> _Token:
        tok = self.next()
        if tok.kind != "IDENT":
            got = tok.text or "end of input"
            raise ParseError(f"expected an identifier, found {got!r}", tok.span)
        if tok.text.startswith("__") or tok.text.endswith(pm.JOIN_SUFFIX):
            raise ParseError(f"identifier {tok.text!r} uses a reserved form", tok.span)
        return tok

    def parse_num(self) -> tuple[Fraction, SourceSpan]:
        tok = self.next()
        if tok.kind != "NUMBER":
            got = tok.text or "end of input"
            raise ParseError(f"expected a number, found {got!r}", tok.span)
        value = Fraction(tok.text)
        if self.peek().text == "/":
            self.next()
            den = self.next()
            if den.kind != "NUMBER":
                raise ParseError("expected a denominator", den.span)
            if "." in tok.text or "." in den.text:
                raise ParseError("fraction parts must be integers", tok.span)
            if int(den.text) == 0:
                raise ParseError("zero denominator", den.span)
            value = Fraction(int(tok.text), int(den.text))
        return value, tok.span

    def parse_int(self) -> tuple[int, SourceSpan]:
        tok = self.next()
        if tok.kind != "NUMBER" or "." in tok.text:
            got = tok.text or "end of input"
            raise ParseError(f"expected an integer, found {got!r}", tok.span)
        return int(tok.text), tok.span


# ---------------------------------------------------------------------------
# AST -> diagram


class _Builder:
    def __init__(self):
        self.nodes: set[str] = set()
        self.edges: set[tuple[str, str]] = set()
        self.defaults: set[tuple[str, str]] = set()
        self.kind: dict[str, str] = {}
        self.nature_prob: dict[str, Fraction] = {}
        self.impact: dict[str, Vec] = {}
        self.duration: dict[str, int] = {}
        self.loop_specs: list[LoopSpec] = []
        self.par_count = 0

    def add(self, node_id: str, kind: str) -> str:
        self.nodes.add(node_id)
        self.kind[node_id] = kind
        return node_id

    def fresh_par(self) -> tuple[str, str]:
        self.par_count += 1
        return f"{PAR_PREFIX}{self.par_count}", f"{PAR_PREFIX}{self.par_count}{pm.JOIN_SUFFIX}"

    def emit(self, ast) -> tuple[str | None, str | None]:
        """Returns (head, tail) node ids of the emitted fragment; None = empty."""
        if isinstance(ast, _Skip):
            return None, None
        if isinstance(ast, _Task):
            self.add(ast.name, pm.TASK)
            self.impact[ast.name] = ast.impacts
            self.duration[ast.name] = ast.duration
            return ast.name, ast.name
        if isinstance(ast, _Seq):
            head = tail = None
            for part in ast.parts:
                h, t = self.emit(part)
                if h is None:
                    continue
                if tail is not None:
                    self.edges.add((tail, h))
                head = head if head is not None else h
                tail = t
            return head, tail
        if isinstance(ast, _Par):
            split, join = self.fresh_par()
            self.add(split, pm.PAR_SPLIT)
            self.add(join, pm.PAR_JOIN)
            empties = 0
            for branch in (ast.left, ast.right):
                h, t = self.emit(branch)
                if h is None:
                    empties += 1
                    self.edges.add((split, join))
                else:
                    self.edges.add((split, h))
                    self.edges.add((t, join))
            if empties == 2:
                raise ParseError("parallel fork with two empty branches", ast.span)
            return split, join
        if isinstance(ast, (_Choice, _Nature)):
            split = ast.name
            join = ast.name + pm.JOIN_SUFFIX
            self.add(split, pm.SPLIT)
            self.add(join, pm.JOIN)
            if isinstance(ast, _Nature):
                self.nature_prob[split] = ast.prob
            empties = 0
            for idx, branch in enumerate((ast.left, ast.right)):
                h, t = self.emit(branch)
                if h is None:
                    empties += 1
                    edge = (split, join)
                else:
                    edge = (split, h)
                    self.edges.add((t, join))
                self.edges.add(edge)
                if idx == 0:
                    self.defaults.add(edge)
            if empties == 2:
                raise ParseError("gateway with two empty branches", ast.span)
            return split, join
        if isinstance(ast, _Loop):
            split = ast.name
            join = ast.name + pm.JOIN_SUFFIX
            self.add(split, pm.SPLIT)
            self.add(join, pm.JOIN)
            self.nature_prob[split] = ast.prob
            self.edges.add((join, split))
            h, t = self.emit(ast.body)
            self.edges.add((split, h))
            self.defaults.add((split, h))  # default edge = iterate branch
            self.edges.add((t, join))
            self.loop_specs.append(LoopSpec(split, ast.prob, ast.max_iterations))
            return join, split  # tail is the split: its exit edge goes downstream
        raise AssertionError(f"unhandled ast node {ast!r}")


def _named_idents(ast, out: list[tuple[str, SourceSpan]]):
    if isinstance(ast, _Task):
        out.append((ast.name, ast.span))
    elif isinstance(ast, _Seq):
        for p in ast.parts:
            _named_idents(p, out)
    elif isinstance(ast, _Par):
        _named_idents(ast.left, out)
        _named_idents(ast.right, out)
    elif isinstance(ast, (_Choice, _Nature)):
        out.append((ast.name, ast.span))
        _named_idents(ast.left, out)
        _named_idents(ast.right, out)
    elif isinstance(ast, _Loop):
        out.append((ast.name, ast.span))
        _named_idents(ast.body, out)


def parse_process(text: str) -> BpmnCpi:
    """Parse, check annotations, build the diagram, unravel loops, validate."""
    ast = _Parser(_tokenize(text)).parse_process()

    names: list[tuple[str, SourceSpan]] = []
    _named_idents(ast, names)
    seen: dict[str, SourceSpan] = {}
    for name, span in names:
        if name in seen:
            raise ParseError(f"duplicate identifier {name!r}", span)
        seen[name] = span

    dims: list[tuple[int, SourceSpan]] = []
    _impact_dims(ast, dims)
    k = dims[0][0] if dims else 1
    for dim, span in dims:
        if dim != k:
            raise ParseError(
                f"inconsistent impact dimension: expected {k}, found {dim}", span
            )

    b = _Builder()
    head, tail = b.emit(ast)
    b.add(START, pm.EVENT)
    b.add(END, pm.EVENT)
    if head is None:
        b.edges.add((START, END))
    else:
        b.edges.add((START, head))
        b.edges.add((tail, END))

    diagram = SeseDiagram(
        nodes=frozenset(b.nodes),
        edges=frozenset(b.edges),
        default_edges=frozenset(b.defaults),
        node_kind=dict(b.kind),
    )
    process = BpmnCpi(
        diagram=diagram,
        nature_prob=dict(b.nature_prob),
        impact=dict(b.impact),
        duration=dict(b.duration),
        impact_dim=k,
    )
    process = pm.unravel_loops(process, b.loop_specs)
    violations = pm.validate_process(process)
    if violations:
        raise ParseError(
            "; ".join(violations), SourceSpan(1, 1, 1)
        )  # builder guarantees this never fires on parseable input
    return process


def _impact_dims(ast, out: list[tuple[int, SourceSpan]]):
    if isinstance(ast, _Task):
        out.append((len(ast.impacts), ast.span))
    elif isinstance(ast, _Seq):
        for p in ast.parts:
            _impact_dims(p, out)
    elif isinstance(ast, _Par):
        _impact_dims(ast.left, out)
        _impact_dims(ast.right, out)
    elif isinstance(ast, (_Choice, _Nature)):
        _impact_dims(ast.left, out)
        _impact_dims(ast.right, out)
    elif isinstance(ast, _Loop):
        _impact_dims(ast.body, out)


# ---------------------------------------------------------------------------
# Printing


_ATOM, _PAR, _SEQ = 0, 1, 2  # precedence levels of printed fragments


def pretty_print(process: BpmnCpi) -> str:
    """Render an acyclic structured process back into source text."""
    d = process.diagram
    start, = d.sources()
    end, = d.sinks()

    def find_matching_join(v: str) -> str:
        depth = 0
        while True:
            kind = d.kind(v)
            if kind in (pm.JOIN, pm.PAR_JOIN):
                if depth == 0:
                    return v
                depth -= 1
            elif kind in (pm.SPLIT, pm.PAR_SPLIT):
                depth += 1
            v = d.outgoing(v)[0]

    def seq_text(v: str, stop: str) -> tuple[str, int]:
        parts: list[str] = []
        while v != stop:
            kind = d.kind(v)
            if kind == pm.TASK:
                impacts = ", ".join(format_rat(c) for c in process.impact[v])
                parts.append(f"{v}[{impacts}]{{{process.duration[v]}}}")
                level = _ATOM
                v = d.outgoing(v)[0]
            elif kind in (pm.SPLIT, pm.PAR_SPLIT):
                join = find_matching_join(d.outgoing(v)[0])
                text, level = gateway_text(v, join)
                parts.append(text)
                v = d.outgoing(join)[0]
            elif kind == pm.EVENT:
                raise ValueError(f"intermediate event {v} is not expressible")
            else:
                raise ValueError(f"unexpected {kind} node {v} in sequence walk")
        if not parts:
            return "skip", _ATOM
        if len(parts) == 1:
            return parts[0], level
        return " , ".join(parts), _SEQ

    def branch_text(first: str, stop: str) -> tuple[str, int]:
        if first == stop:
            return "skip", _ATOM
        return seq_text(first, stop)

    def gateway_text(split: str, join: str) -> tuple[str, int]:
        kind = d.kind(split)
        succs = d.outgoing(split)
        if kind == pm.PAR_SPLIT:
            operands = []
            for s in sorted(succs):
                text, level = branch_text(s, join)
                operands.append(f"({text})" if level > _ATOM else text)
            return " || ".join(operands), _PAR
        default = next(b for a, b in d.default_edges if a == split)
        other = succs[0] if succs[1] == default else succs[1]
        left, _ = branch_text(default, join)
        right, _ = branch_text(other, join)
        if split in process.nature_prob:
            p = format_rat(process.nature_prob[split])
            return f"({left} ^ [{split}: {p}] {right})", _ATOM
        return f"({left} / [{split}] {right})", _ATOM

    return seq_text(d.outgoing(start)[0], end)[0]


# ---------------------------------------------------------------------------
# DOT rendering


def emit_dot(process: BpmnCpi) -> str:
    """Deterministic Graphviz rendering of the diagram."""
    d = process.diagram
    lines = ["digraph process {", "  rankdir=LR;"]
    for v in sorted(d.nodes):
        kind = d.kind(v)
        if kind == pm.TASK:
            impacts = ", ".join(format_rat(c) for c in process.impact[v])
            label = f"{v}\\n[{impacts}] {{{process.duration[v]}}}"
            attrs = f'shape=box, label="{label}"'
        elif kind == pm.EVENT:
            attrs = f'shape=circle, label="{v.strip("_")}"'
        elif kind in (pm.PAR_SPLIT, pm.PAR_JOIN):
            attrs = 'shape=diamond, label="+"'
        elif kind == pm.SPLIT and v in process.nature_prob:
            attrs = f'shape=diamond, style=filled, label="{v}"'
        elif kind == pm.SPLIT:
            attrs = f'shape=diamond, label="{v}"'
        else:
            attrs = 'shape=diamond, label=""'
        lines.append(f'  "{v}" [{attrs}];')
    for a, b in sorted(d.edges):
        attrs = []
        if a in process.nature_prob:
            p = process.nature_prob[a]
            shown = p if (a, b) in d.default_edges else 1 - p
            attrs.append(f'label="{format_rat(shown)}"')
        if (a, b) in d.default_edges:
            attrs.append("penwidth=2")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f'  "{a}" -> "{b}"{suffix};')
    lines.append("}")
    return "\n".join(lines) + "\n"
