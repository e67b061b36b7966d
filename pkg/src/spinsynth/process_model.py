"""In-memory SESE process model: diagrams, annotations, validation, loop unraveling.

A diagram is a directed graph over string node ids with a kind per node.
Exclusive gateways (kind ``split``/``join``) are decision points; parallel
gateways (``par_split``/``par_join``) fork and synchronize concurrent paths.
All structures are immutable after construction; every operation here is a
pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .rationals import Vec

EVENT = "event"
TASK = "task"
SPLIT = "split"
JOIN = "join"
PAR_SPLIT = "par_split"
PAR_JOIN = "par_join"

KINDS = frozenset({EVENT, TASK, SPLIT, JOIN, PAR_SPLIT, PAR_JOIN})

JOIN_SUFFIX = "__join"


class ModelError(Exception):
    """A structural error that is a failure, not a validation report entry."""


class UnravelError(ModelError):
    pass


@dataclass(frozen=True)
class SeseDiagram:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    default_edges: frozenset[tuple[str, str]]
    node_kind: Mapping[str, str]

    @cached_property
    def _incoming(self) -> dict[str, tuple[str, ...]]:
        inc: dict[str, list[str]] = {v: [] for v in self.nodes}
        for a, b in sorted(self.edges):
            inc[b].append(a)
        return {v: tuple(ws) for v, ws in inc.items()}

    @cached_property
    def _outgoing(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {v: [] for v in self.nodes}
        for a, b in sorted(self.edges):
            out[a].append(b)
        return {v: tuple(ws) for v, ws in out.items()}

    def incoming(self, v: str) -> tuple[str, ...]:
        return self._incoming[v]

    def outgoing(self, v: str) -> tuple[str, ...]:
        return self._outgoing[v]

    def kind(self, v: str) -> str:
        return self.node_kind[v]

    def sources(self) -> list[str]:
        return sorted(v for v in self.nodes if not self._incoming[v])

    def sinks(self) -> list[str]:
        return sorted(v for v in self.nodes if not self._outgoing[v])

    def tasks(self) -> list[str]:
        return sorted(v for v in self.nodes if self.node_kind.get(v) == TASK)

    def exclusive_splits(self) -> list[str]:
        return sorted(v for v in self.nodes if self.node_kind.get(v) == SPLIT)

    def is_acyclic(self) -> bool:
        return topological_order(self.nodes, self.edges) is not None


def topological_order(
    nodes: Iterable[str], edges: Iterable[tuple[str, str]]
) -> list[str] | None:
    """Kahn's algorithm; None when the graph has a cycle."""
    nodes = sorted(nodes)
    indeg = {v: 0 for v in nodes}
    succ: dict[str, list[str]] = {v: [] for v in nodes}
    for a, b in sorted(edges):
        indeg[b] += 1
        succ[a].append(b)
    ready = [v for v in nodes if indeg[v] == 0]
    order: list[str] = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return order if len(order) == len(nodes) else None


def validate_sese(diagram: SeseDiagram) -> list[str]:
    """All structural conditions of a well-formed SESE diagram plus acyclicity.

    Returns a list of human-readable violations; empty means ok. Violations
    are data, not exceptions: any graph may be inspected.
    """
    v9: list[str] = []
    for v in sorted(diagram.nodes):
        if diagram.node_kind.get(v) not in KINDS:
            v9.append(f"node {v}: unknown kind {diagram.node_kind.get(v)!r}")
    for v in sorted(diagram.node_kind):
        if v not in diagram.nodes:
            v9.append(f"kind map names unknown node {v}")
    for a, b in sorted(diagram.edges):
        if a not in diagram.nodes or b not in diagram.nodes:
            v9.append(f"edge ({a}, {b}) references unknown node")
    if v9:
        return v9

    sources = diagram.sources()
    sinks = diagram.sinks()
    if len(sources) != 1:
        v9.append(
            "multiple sources" if len(sources) > 1 else "no source node"
        )
    if len(sinks) != 1:
        v9.append("multiple sinks" if len(sinks) > 1 else "no sink node")
    if len(sources) == 1 and sinks == sources:
        v9.append("source and sink must be distinct")

    for v in sorted(diagram.nodes):
        kind = diagram.node_kind[v]
        n_in = len(diagram.incoming(v))
        n_out = len(diagram.outgoing(v))
        if kind == EVENT:
            if n_in > 1:
                v9.append(f"event {v}: in-degree {n_in} > 1")
            if n_out > 1:
                v9.append(f"event {v}: out-degree {n_out} > 1")
            if n_in + n_out == 0:
                v9.append(f"event {v}: isolated (needs at least one edge)")
        elif kind == TASK:
            if n_in != 1:
                v9.append(f"task {v}: in-degree {n_in} != 1")
            if n_out != 1:
                v9.append(f"task {v}: out-degree {n_out} != 1")
        elif kind in (SPLIT, PAR_SPLIT):
            if n_in != 1:
                v9.append(f"{kind} {v}: in-degree {n_in} != 1")
            if n_out != 2:
                v9.append(f"{kind} {v}: split out-degree {n_out} != 2")
        elif kind in (JOIN, PAR_JOIN):
            if n_in != 2:
                v9.append(f"{kind} {v}: join in-degree {n_in} != 2")
            if n_out != 1:
                v9.append(f"{kind} {v}: out-degree {n_out} != 1")

    for a, b in sorted(diagram.default_edges):
        if (a, b) not in diagram.edges:
            v9.append(f"default edge ({a}, {b}) is not an edge")
        elif diagram.node_kind[a] != SPLIT:
            v9.append(f"default edge leaves non-exclusive-split node {a}")
    for v in diagram.exclusive_splits():
        n_def = sum(1 for (a, _) in diagram.default_edges if a == v)
        if n_def != 1:
            v9.append(f"split {v}: {n_def} default edges (need exactly 1)")

    if not diagram.is_acyclic():
        v9.append("diagram contains a cycle")
    return v9


@dataclass(frozen=True)
class BpmnCpi:
    """A SESE diagram annotated with choice/probability/impact/duration data.

    ``nature_prob`` is partial over exclusive splits: its domain is the set of
    nature gateways, the value being the probability of the split's default
    edge. Splits outside the domain are controller choices. ``impact`` maps
    each task to a vector of ``impact_dim`` non-negative rationals and
    ``duration`` to a positive integer number of time units.
    """

    diagram: SeseDiagram
    nature_prob: Mapping[str, Fraction]
    impact: Mapping[str, Vec]
    duration: Mapping[str, int]
    impact_dim: int


def validate_process(process: BpmnCpi) -> list[str]:
    v9 = validate_sese(process.diagram)
    d = process.diagram
    splits = set(d.exclusive_splits())
    for v in sorted(process.nature_prob):
        if v not in splits:
            v9.append(f"nature probability on non-split node {v}")
            continue
        p = process.nature_prob[v]
        if not (0 <= p <= 1):
            v9.append(f"nature {v}: probability {p} outside [0, 1]")
    k = process.impact_dim
    if k < 1:
        v9.append(f"impact dimension {k} < 1")
    for t in d.tasks():
        if t not in process.impact:
            v9.append(f"task {t}: missing impact vector")
        else:
            iv = process.impact[t]
            if len(iv) != k:
                v9.append(f"task {t}: impact dimension {len(iv)} != {k}")
            if any(c < 0 for c in iv):
                v9.append(f"task {t}: negative impact component")
        if t not in process.duration:
            v9.append(f"task {t}: missing duration")
        elif process.duration[t] < 1:
            v9.append(f"task {t}: duration {process.duration[t]} < 1")
    return v9


def gateway_partition(process: BpmnCpi) -> tuple[frozenset[str], frozenset[str]]:
    """Partition the exclusive splits into (nature, choice) gateways."""
    splits = frozenset(process.diagram.exclusive_splits())
    nature = frozenset(process.nature_prob) & splits
    return nature, splits - nature


@dataclass(frozen=True)
class LoopSpec:
    loop_node: str
    repeat_prob: Fraction
    max_iterations: int

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ModelError(f"loop {self.loop_node}: max_iterations < 1")
        if not (0 <= self.repeat_prob <= 1):
            raise ModelError(f"loop {self.loop_node}: repeat_prob outside [0, 1]")


def _copy_id(v: str, i: int) -> str:
    # keep the <split>__join naming convention stable across copies so that
    # printed copies regenerate the same join ids on reparse
    if v.endswith(JOIN_SUFFIX):
        return f"{v[: -len(JOIN_SUFFIX)]}#{i}{JOIN_SUFFIX}"
    return f"{v}#{i}"


class _MutableProcess:
    def __init__(self, process: BpmnCpi):
        self.nodes = set(process.diagram.nodes)
        self.edges = set(process.diagram.edges)
        self.default_edges = set(process.diagram.default_edges)
        self.kind = dict(process.diagram.node_kind)
        self.nature_prob = dict(process.nature_prob)
        self.impact = dict(process.impact)
        self.duration = dict(process.duration)

    def freeze(self, impact_dim: int) -> BpmnCpi:
        diagram = SeseDiagram(
            nodes=frozenset(self.nodes),
            edges=frozenset(self.edges),
            default_edges=frozenset(self.default_edges),
            node_kind=dict(self.kind),
        )
        return BpmnCpi(
            diagram=diagram,
            nature_prob=dict(self.nature_prob),
            impact=dict(self.impact),
            duration=dict(self.duration),
            impact_dim=impact_dim,
        )

    def reachable_avoiding(self, start: str, banned: set[str]) -> set[str]:
        seen: set[str] = set()
        stack = [start]
        while stack:
            v = stack.pop()
            if v in seen or v in banned:
                continue
            seen.add(v)
            for a, b in self.edges:
                if a == v and b not in seen and b not in banned:
                    stack.append(b)
        return seen

    def coreachable_avoiding(self, goal: str, banned: set[str]) -> set[str]:
        seen: set[str] = set()
        stack = [goal]
        while stack:
            v = stack.pop()
            if v in seen or v in banned:
                continue
            seen.add(v)
            for a, b in self.edges:
                if b == v and a not in seen and a not in banned:
                    stack.append(a)
        return seen


def _loop_region(m: _MutableProcess, spec: LoopSpec) -> tuple[str, set[str], str, str]:
    """Locate spec's loop region. Returns (join, body, iterate_target, exit_target).

    The split's default edge marks the iterate branch (the parser emits loops
    this way; hand-built diagrams must follow the same convention, since with
    nested loops reachability alone cannot tell the two branches apart).
    """
    lp = spec.loop_node
    if lp not in m.nodes:
        raise UnravelError(f"loop node {lp} not in diagram")
    if m.kind[lp] != SPLIT:
        raise UnravelError(f"loop node {lp} is not an exclusive split")
    if lp not in m.nature_prob:
        raise UnravelError(
            f"choice-governed loop at {lp}: only nature-governed loops are supported"
        )
    outs = sorted(b for a, b in m.edges if a == lp)
    if len(outs) != 2:
        raise UnravelError(f"loop split {lp} must have exactly 2 outgoing edges")
    ins = sorted(a for a, b in m.edges if b == lp)
    if len(ins) != 1:
        raise UnravelError(f"loop split {lp} must have exactly 1 incoming edge")
    join = ins[0]
    if m.kind.get(join) != JOIN:
        raise UnravelError(f"loop split {lp}: predecessor {join} is not a join")
    defaults = sorted(b for a, b in m.default_edges if a == lp)
    if len(defaults) != 1:
        raise UnravelError(f"loop split {lp}: needs exactly one default (iterate) edge")
    iterate_target, = defaults
    exit_target = outs[0] if outs[1] == iterate_target else outs[1]
    if iterate_target == join:
        raise UnravelError(f"loop {lp}: empty loop body is not supported")
    if lp not in m.reachable_avoiding(iterate_target, set()):
        raise UnravelError(f"loop {lp}: declared loop node lies on no cycle")
    body = m.reachable_avoiding(iterate_target, {lp, join}) & m.coreachable_avoiding(
        join, {lp}
    )
    body -= {join}
    return join, body, iterate_target, exit_target


def unravel_loops(process: BpmnCpi, specs: Sequence[LoopSpec]) -> BpmnCpi:
    """Replace each declared nature-governed loop by a bounded acyclic chain.

    Copy i of the loop is guarded by a nature split (id ``<loop>#i``) whose
    iterate edge, carrying repeat_prob, enters body copy i; its other edge
    exits. After the innermost copy's body the chain exits unconditionally,
    so the truncated tail's probability mass folds into the exit.
    """
    m = _MutableProcess(process)
    pending = {s.loop_node: s for s in specs}
    if len(pending) != len(specs):
        raise UnravelError("duplicate loop node in specs")

    while pending:
        regions = {lp: _loop_region(m, spec) for lp, spec in pending.items()}
        for a, ra in regions.items():
            for b, rb in regions.items():
                if a >= b:
                    continue
                sa = ra[1] | {a, regions[a][0]}
                sb = rb[1] | {b, regions[b][0]}
                if sa & sb and not (sa <= sb or sb <= sa):
                    raise UnravelError(f"overlapping loop regions at {a} and {b}")
        # innermost first: a region containing no other pending loop node
        inner = [
            lp
            for lp, (_, body, _, _) in regions.items()
            if not any(other in body for other in pending if other != lp)
        ]
        if not inner:
            raise UnravelError("loop regions are not properly nested")
        lp = sorted(inner)[0]
        spec = pending.pop(lp)
        join, body, iterate_target, exit_target = regions[lp]
        _expand_loop(m, spec, join, body, iterate_target, exit_target)

    if topological_order(m.nodes, m.edges) is None:
        raise UnravelError("unannotated cycle: a cycle passes through no declared loop node")
    result = m.freeze(process.impact_dim)
    return result


def _expand_loop(
    m: _MutableProcess,
    spec: LoopSpec,
    join: str,
    body: set[str],
    iterate_target: str,
    exit_target: str,
) -> None:
    lp, n, p = spec.loop_node, spec.max_iterations, spec.repeat_prob
    region = body | {lp, join}
    entry_sources = [a for a, b in m.edges if b == join and a not in region]
    if len(entry_sources) != 1:
        raise UnravelError(f"loop {lp}: join {join} needs exactly one entry from outside")
    entry_source, = entry_sources
    body_edges = sorted((a, b) for a, b in m.edges if a in body and b in body)
    body_returns = [a for a, b in m.edges if b == join and a in body]
    if len(body_returns) != 1:
        raise UnravelError(f"loop {lp}: body must return to {join} on exactly one edge")
    body_return, = body_returns

    # capture the region's annotations, then remove it from the graph
    old_kind = {v: m.kind[v] for v in body}
    old_prob = {v: m.nature_prob[v] for v in body if v in m.nature_prob}
    old_impact = {v: m.impact[v] for v in body if v in m.impact}
    old_duration = {v: m.duration[v] for v in body if v in m.duration}
    old_defaults = sorted((a, b) for a, b in m.default_edges if a in body)
    entry_was_default = (entry_source, join) in m.default_edges
    for v in region:
        m.nodes.discard(v)
        m.kind.pop(v, None)
        m.nature_prob.pop(v, None)
        m.impact.pop(v, None)
        m.duration.pop(v, None)
    m.edges = {(a, b) for a, b in m.edges if a not in region and b not in region}
    m.default_edges = {
        (a, b) for a, b in m.default_edges if a not in region and b not in region
    }

    splits = []
    joins = []
    for i in range(1, n + 1):
        ren = {v: _copy_id(v, i) for v in body}
        l_i, j_i = _copy_id(lp, i), _copy_id(join, i)
        for w in list(ren.values()) + [l_i, j_i]:
            if w in m.nodes:
                raise UnravelError(f"loop {lp}: copy id {w} collides with existing node")
        m.nodes.update(ren.values())
        m.nodes.update({l_i, j_i})
        m.kind[l_i] = SPLIT
        m.kind[j_i] = JOIN
        m.nature_prob[l_i] = p
        for v, w in ren.items():
            m.kind[w] = old_kind[v]
            if v in old_prob:
                m.nature_prob[w] = old_prob[v]
            if v in old_impact:
                m.impact[w] = old_impact[v]
            if v in old_duration:
                m.duration[w] = old_duration[v]
        m.edges.update((ren[a], ren[b]) for a, b in body_edges)
        m.default_edges.update((ren[a], ren[b]) for a, b in old_defaults)
        iterate_edge = (l_i, ren[iterate_target])
        m.edges.add(iterate_edge)
        m.default_edges.add(iterate_edge)
        m.edges.add((l_i, j_i))
        splits.append((l_i, ren[body_return]))
        joins.append(j_i)

    m.edges.add((entry_source, splits[0][0]))
    if entry_was_default:
        m.default_edges.add((entry_source, splits[0][0]))
    for i in range(n - 1):
        m.edges.add((splits[i][1], splits[i + 1][0]))  # body copy i exit -> next split
        m.edges.add((joins[i + 1], joins[i]))  # join chain, innermost outward
    m.edges.add((splits[-1][1], joins[-1]))  # innermost body exits unconditionally
    m.edges.add((joins[0], exit_target))
