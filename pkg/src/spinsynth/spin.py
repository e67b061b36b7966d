"""Timed probabilistic net: the execution substrate for structured processes.

Places carry integer durations, transitions carry impact vectors, and
probabilistic transitions come in complementary pairs that share their
incoming place. The translation from a structured process builds each
construct as a fragment between two places with a unique entry and exit
transition, and records the fragment nesting so the region conditions can
be checked structurally instead of rediscovered from the raw graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from . import process_model as pm
from .process_model import BpmnCpi, topological_order
from .rationals import Vec, format_rat, format_vec, vec_zero


class SpinError(Exception):
    pass


@dataclass(frozen=True)
class Spin:
    places: frozenset[str]
    transitions: frozenset[str]
    prob_transitions: frozenset[str]
    flow: frozenset[tuple[str, str]]
    impact: Mapping[str, Vec]  # sparse; absent transitions have the zero vector
    prob: Mapping[str, Fraction]
    place_duration: Mapping[str, int]
    p0: str
    pf: str
    impact_dim: int
    regions: tuple[frozenset[str], ...] | None = None

    def __post_init__(self):
        elements = self.places | self.transitions
        if self.places & self.transitions:
            raise SpinError("place and transition ids overlap")
        for a, b in self.flow:
            if a not in elements or b not in elements:
                raise SpinError(f"arc ({a}, {b}) references unknown element")
            if (a in self.places) == (b in self.places):
                raise SpinError(f"arc ({a}, {b}) is not place-transition bipartite")
        if not self.prob_transitions <= self.transitions:
            raise SpinError("prob_transitions is not a subset of transitions")
        if set(self.prob) != set(self.prob_transitions):
            raise SpinError("prob must be defined exactly on prob_transitions")
        for t, iv in self.impact.items():
            if t not in self.transitions:
                raise SpinError(f"impact on unknown transition {t}")
            if len(iv) != self.impact_dim:
                raise SpinError(f"impact on {t} has dimension {len(iv)}")
        if self.p0 not in self.places or self.pf not in self.places:
            raise SpinError("p0/pf must be places")

    @cached_property
    def _incoming(self) -> dict[str, tuple[str, ...]]:
        inc: dict[str, list[str]] = {e: [] for e in self.places | self.transitions}
        for a, b in sorted(self.flow):
            inc[b].append(a)
        return {e: tuple(v) for e, v in inc.items()}

    @cached_property
    def _outgoing(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {e: [] for e in self.places | self.transitions}
        for a, b in sorted(self.flow):
            out[a].append(b)
        return {e: tuple(v) for e, v in out.items()}

    def incoming(self, e: str) -> tuple[str, ...]:
        return self._incoming[e]

    def outgoing(self, e: str) -> tuple[str, ...]:
        return self._outgoing[e]

    def duration(self, p: str) -> int:
        return self.place_duration.get(p, 0)

    def impact_of(self, t: str) -> Vec:
        return self.impact.get(t, vec_zero(self.impact_dim))

    @cached_property
    def _pairing(self) -> dict[str, str]:
        by_incoming: dict[tuple[str, ...], list[str]] = {}
        for t in sorted(self.prob_transitions):
            by_incoming.setdefault(self._incoming[t], []).append(t)
        pairing: dict[str, str] = {}
        for group in by_incoming.values():
            if len(group) == 2:
                a, b = group
                pairing[a] = b
                pairing[b] = a
        return pairing

    def is_acyclic(self) -> bool:
        return topological_order(self.places | self.transitions, self.flow) is not None


def switch_of(net: Spin, t: str) -> str:
    """The unique partner of probabilistic transition t (an involution)."""
    if t not in net.prob_transitions:
        raise SpinError(f"{t} is not a probabilistic transition")
    partner = net._pairing.get(t)
    if partner is None:
        raise SpinError(f"{t} has no well-formed probabilistic partner")
    return partner


def validate_structured_acyclic(net: Spin) -> list[str]:
    """Report violations of the structured-acyclic conditions.

    Degree bounds and pairing are always checked; the region-cover clauses
    run only when the net carries a recorded fragment nesting (translated
    nets do, hand-built nets usually do not).
    """
    v9: list[str] = []
    if not net.is_acyclic():
        v9.append("net contains a cycle")
    elements = net.places | net.transitions
    for e in sorted(elements):
        n_in, n_out = len(net.incoming(e)), len(net.outgoing(e))
        if n_in > 2 or n_out > 2 or n_in + n_out > 3:
            v9.append(f"degree bound violated at {e} (in {n_in}, out {n_out})")
    no_in = sorted(e for e in elements if not net.incoming(e))
    no_out = sorted(e for e in elements if not net.outgoing(e))
    if no_in != [net.p0]:
        v9.append(f"initial place not the unique sourceless element: {no_in}")
    if no_out != [net.pf]:
        v9.append(f"final place not the unique sinkless element: {no_out}")

    seen: set[str] = set()
    for t in sorted(net.prob_transitions):
        if t in seen:
            continue
        partner = net._pairing.get(t)
        if partner is None:
            v9.append(f"probabilistic transition {t} lacks a partner sharing incoming")
            continue
        seen.update({t, partner})
        if net.prob[t] + net.prob[partner] != 1:
            v9.append(f"probabilistic pair not complementary: {t}, {partner}")
        for member in (t, partner):
            if len(net.outgoing(member)) != 1:
                v9.append(f"probabilistic transition {member} must have one outgoing arc")

    if net.regions is not None:
        v9.extend(_validate_regions(net))
    return v9


def _validate_regions(net: Spin) -> list[str]:
    v9: list[str] = []
    elements = net.places | net.transitions
    regions = list(net.regions)
    for i, r in enumerate(regions):
        for j in range(i + 1, len(regions)):
            s = regions[j]
            if r & s and not (r <= s or s <= r):
                v9.append("region cover not disjoint-or-nested")
    for r in regions:
        if r == elements:
            continue
        entries = sorted(e for e in r if any(x not in r for x in net.incoming(e)))
        exits = sorted(e for e in r if any(x not in r for x in net.outgoing(e)))
        if len(entries) != 1:
            v9.append(f"region lacks a unique entry: {entries}")
            continue
        if len(exits) != 1:
            v9.append(f"region lacks a unique exit: {exits}")
            continue
        inside = {e: [x for x in net.outgoing(e) if x in r] for e in r}
        reach = _closure(entries[0], inside)
        if reach != r:
            v9.append(f"region not internally reachable from {entries[0]}")
        back = {e: [x for x in net.incoming(e) if x in r] for e in r}
        coreach = _closure(exits[0], back)
        if coreach != r:
            v9.append(f"region cannot internally reach {exits[0]}")
    return v9


def _closure(start: str, succ: dict[str, list[str]]) -> set[str]:
    seen: set[str] = set()
    stack = [start]
    while stack:
        e = stack.pop()
        if e in seen:
            continue
        seen.add(e)
        stack.extend(succ[e])
    return seen


@dataclass
class ProvenanceMap:
    """Where each transition came from in the source process."""

    transition_source: dict[str, str] = field(default_factory=dict)
    task_entries: dict[str, str] = field(default_factory=dict)
    task_exits: dict[str, str] = field(default_factory=dict)
    choice_branches: dict[str, tuple[str, str]] = field(default_factory=dict)
    nature_branches: dict[str, tuple[str, str]] = field(default_factory=dict)


class _NetBuilder:
    def __init__(self, process: BpmnCpi):
        self.process = process
        self.d = process.diagram
        self.places: dict[str, int] = {}
        self.transitions: set[str] = set()
        self.prob: dict[str, Fraction] = {}
        self.impact: dict[str, Vec] = {}
        self.flow: set[tuple[str, str]] = set()
        self.regions: list[frozenset[str]] = []
        self.prov = ProvenanceMap()

    def place(self, pid: str, duration: int = 0) -> str:
        self.places[pid] = duration
        return pid

    def trans(self, tid: str, source: str) -> str:
        self.transitions.add(tid)
        self.prov.transition_source[tid] = source
        return tid

    def arc(self, a: str, b: str) -> None:
        self.flow.add((a, b))

    def record(self, elements: set[str]) -> frozenset[str]:
        r = frozenset(elements)
        self.regions.append(r)
        return r

    # every build_* returns (elements, head_transition, tail_transition)

    def build_seq(self, v: str, stop: str, pin: str, pout: str):
        parts: list[tuple[str, str | None]] = []
        while v != stop:
            kind = self.d.kind(v)
            if kind in (pm.TASK, pm.EVENT):
                parts.append((v, None))
                v = self.d.outgoing(v)[0]
            elif kind in (pm.SPLIT, pm.PAR_SPLIT):
                join = self._matching_join(self.d.outgoing(v)[0])
                parts.append((v, join))
                v = self.d.outgoing(join)[0]
            else:
                raise SpinError(f"unexpected {kind} node {v} in sequence walk")
        elements: set[str] = set()
        head = tail = None
        current = pin
        for i, (node, join) in enumerate(parts):
            last = i == len(parts) - 1
            end_id = join or node
            nxt = pout if last else self.place(f"p:{end_id}>seq")
            if not last:
                elements.add(nxt)
            sub, h, t = self.build_part(node, join, current, nxt)
            elements |= sub
            head = head if head is not None else h
            tail = t
            current = nxt
        if len(parts) > 1:
            self.record(elements)
        return elements, head, tail

    def _matching_join(self, v: str) -> str:
        depth = 0
        while True:
            kind = self.d.kind(v)
            if kind in (pm.JOIN, pm.PAR_JOIN):
                if depth == 0:
                    return v
                depth -= 1
            elif kind in (pm.SPLIT, pm.PAR_SPLIT):
                depth += 1
            v = self.d.outgoing(v)[0]

    def build_part(self, node: str, join: str | None, pin: str, pout: str):
        kind = self.d.kind(node)
        if kind == pm.TASK:
            return self.build_task(node, pin, pout)
        if kind == pm.EVENT:
            t = self.trans(f"t:{node}.pass", node)
            self.arc(pin, t)
            self.arc(t, pout)
            self.record({t})
            return {t}, t, t
        if kind == pm.PAR_SPLIT:
            return self.build_parallel(node, join, pin, pout)
        if node in self.process.nature_prob:
            return self.build_nature(node, join, pin, pout)
        return self.build_choice(node, join, pin, pout)

    def build_task(self, v: str, pin: str, pout: str):
        start = self.trans(f"t:{v}.start", v)
        done = self.trans(f"t:{v}.done", v)
        p = self.place(f"p:{v}", self.process.duration[v])
        self.arc(pin, start)
        self.arc(start, p)
        self.arc(p, done)
        self.arc(done, pout)
        self.impact[done] = self.process.impact[v]
        self.prov.task_entries[start] = v
        self.prov.task_exits[done] = v
        elements = {start, p, done}
        self.record(elements)
        return elements, start, done

    def _branches(self, split: str, join: str):
        """Branch head nodes in (default, alternative) order; par splits sorted."""
        succs = self.d.outgoing(split)
        if self.d.kind(split) == pm.PAR_SPLIT:
            return sorted(succs)
        default = next(b for a, b in self.d.default_edges if a == split)
        other = succs[0] if succs[1] == default else succs[1]
        return [default, other]

    def build_branch(self, first: str, join: str, pin: str, pout: str, hint: str):
        if first == join:  # empty branch: a single pass-through transition
            t = self.trans(f"t:{hint}.skip", hint.split(".")[0])
            self.arc(pin, t)
            self.arc(t, pout)
            head = tail = t
            elements = {t}
        else:
            elements, head, tail = self.build_seq(first, join, pin, pout)
        self.record(elements)
        return elements, head, tail

    def build_choice(self, c: str, join: str, pin: str, pout: str):
        enter = self.trans(f"t:{c}.enter", c)
        p_c = self.place(f"p:{c}")
        p_j = self.place(f"p:{join}")
        exit_t = self.trans(f"t:{join}.exit", join)
        self.arc(pin, enter)
        self.arc(enter, p_c)
        self.arc(p_j, exit_t)
        self.arc(exit_t, pout)
        elements = {enter, p_c, p_j, exit_t}
        for tag, first in zip(("default", "alternative"), self._branches(c, join)):
            sub, head, _ = self.build_branch(first, join, p_c, p_j, f"{c}.{tag}")
            self.prov.choice_branches[head] = (c, tag)
            elements |= sub
        self.record(elements)
        return elements, enter, exit_t

    def build_nature(self, n: str, join: str, pin: str, pout: str):
        enter = self.trans(f"t:{n}.enter", n)
        p_n = self.place(f"p:{n}")
        p_j = self.place(f"p:{join}")
        exit_t = self.trans(f"t:{join}.exit", join)
        self.arc(pin, enter)
        self.arc(enter, p_n)
        self.arc(p_j, exit_t)
        self.arc(exit_t, pout)
        elements = {enter, p_n, p_j, exit_t}
        p = self.process.nature_prob[n]
        for tag, pr, first in zip(
            ("default", "alternative"), (p, 1 - p), self._branches(n, join)
        ):
            t = self.trans(f"t:{n}.{tag}", n)
            self.prob[t] = pr
            self.prov.nature_branches[t] = (n, tag)
            glue = self.place(f"p:{n}>{tag}")
            self.arc(p_n, t)
            self.arc(t, glue)
            sub, _, _ = self.build_branch(first, join, glue, p_j, f"{n}.{tag}")
            elements |= sub | {t, glue}
        self.record(elements)
        return elements, enter, exit_t

    def build_parallel(self, par: str, join: str, pin: str, pout: str):
        split_t = self.trans(f"t:{par}.split", par)
        join_t = self.trans(f"t:{join}.join", join)
        self.arc(pin, split_t)
        self.arc(join_t, pout)
        elements = {split_t, join_t}
        for idx, first in enumerate(self._branches(par, join), start=1):
            p_in = self.place(f"p:{par}>{idx}")
            p_out = self.place(f"p:{par}>{idx}.done")
            self.arc(split_t, p_in)
            self.arc(p_out, join_t)
            sub, _, _ = self.build_branch(first, join, p_in, p_out, f"{par}.{idx}")
            elements |= sub | {p_in, p_out}
        self.record(elements)
        return elements, split_t, join_t


def translate_to_spin(process: BpmnCpi) -> tuple[Spin, ProvenanceMap]:
    """Compile a validated acyclic process into its net.

    Tasks become a place holding the task's duration, flanked by a start
    transition and a done transition carrying the impact vector; choices
    become a place feeding the branch-head transitions; natures become a
    place feeding a complementary probabilistic pair; parallel gateways
    become fork/synchronize transitions. Gateway places have duration 0.
    """
    violations = pm.validate_process(process)
    if violations:
        if not process.diagram.is_acyclic():
            raise SpinError("process is cyclic: unravel loops before translating")
        raise SpinError("invalid process: " + "; ".join(violations))
    b = _NetBuilder(process)
    d = process.diagram
    start, = d.sources()
    end, = d.sinks()
    p0 = b.place(f"p:{start}")
    pf = b.place(f"p:{end}")
    first = d.outgoing(start)[0]
    if first == end:
        t = b.trans(f"t:{start}.pass", start)
        b.arc(p0, t)
        b.arc(t, pf)
    else:
        b.build_seq(first, end, p0, pf)
    b.record(set(b.places) | b.transitions)

    net = Spin(
        places=frozenset(b.places),
        transitions=frozenset(b.transitions),
        prob_transitions=frozenset(b.prob),
        flow=frozenset(b.flow),
        impact=dict(b.impact),
        prob=dict(b.prob),
        place_duration=dict(b.places),
        p0=p0,
        pf=pf,
        impact_dim=process.impact_dim,
        regions=tuple(b.regions),
    )
    return net, b.prov


def emit_spin_dot(net: Spin) -> str:
    """Deterministic Graphviz rendering: places as circles, transitions as bars."""
    lines = ["digraph net {", "  rankdir=LR;"]
    for p in sorted(net.places):
        dur = net.duration(p)
        label = p if dur == 0 else f"{p}\\nD={dur}"
        lines.append(f'  "{p}" [shape=circle, label="{label}"];')
    for t in sorted(net.transitions):
        bits = [t]
        if t in net.prob_transitions:
            bits.append(f"Pr={format_rat(net.prob[t])}")
        iv = net.impact_of(t)
        if any(iv):
            bits.append(f"I={format_vec(iv)}")
        label = "\\n".join(bits)
        lines.append(f'  "{t}" [shape=box, height=0.2, label="{label}"];')
    for a, b in sorted(net.flow):
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
