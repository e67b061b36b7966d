"""Executable net semantics.

A marking maps places to token ages in whole time units; unmarked places
(never visited, or already consumed) are absent. A transition is enabled
once every incoming place has aged past its duration. When nothing is
enabled the net waits; waiting never branches, so saturation jumps over
whole wait chains in one arithmetic step instead of ticking one unit at a
time. Simultaneous firing happens in maximal non-conflicting enabled sets,
with probabilistic slots resolved by chance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .rationals import Vec, vec_add, vec_zero
from .spin import Spin, switch_of


class SemanticsError(Exception):
    pass


class DeadlockedMarking(SemanticsError):
    """No transition can ever become enabled and the marking is not final."""


@dataclass(frozen=True)
class MarkingState:
    """Immutable marking: sorted (place, age) pairs for the marked places only."""

    ages: tuple[tuple[str, int], ...]

    @staticmethod
    def of(mapping: dict[str, int]) -> "MarkingState":
        return MarkingState(tuple(sorted(mapping.items())))

    def age(self, place: str) -> int | None:
        for p, a in self.ages:
            if p == place:
                return a
        return None

    def marked(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.ages)

    def as_dict(self) -> dict[str, int]:
        return dict(self.ages)

    def __str__(self):
        return " ".join(f"{p}:{a}" for p, a in self.ages) or "(empty)"


def initial_state(net: Spin) -> MarkingState:
    return MarkingState.of({net.p0: 0})


def final_state(net: Spin) -> MarkingState:
    return MarkingState.of({net.pf: 0})


def is_final(net: Spin, q: MarkingState) -> bool:
    return q.age(net.pf) is not None


def enabled_transitions(net: Spin, q: MarkingState) -> frozenset[str]:
    ages = q.as_dict()
    out = []
    for t in net.transitions:
        ok = True
        for p in net.incoming(t):
            a = ages.get(p)
            if a is None or a < net.duration(p):
                ok = False
                break
        if ok and net.incoming(t):
            out.append(t)
    return frozenset(out)


def is_saturated(net: Spin, q: MarkingState) -> bool:
    return bool(enabled_transitions(net, q))


def wait_step(net: Spin, q: MarkingState) -> MarkingState:
    """One tick of the wait transition; only legal in unsaturated states."""
    if is_saturated(net, q):
        raise SemanticsError("wait transition is only enabled in unsaturated states")
    return MarkingState(tuple((p, a + 1) for p, a in q.ages))


def _saturation_jump(net: Spin, q: MarkingState) -> tuple[MarkingState, int]:
    """The next saturated state and how many time units were skipped."""
    if is_final(net, q):
        return q, 0
    if is_saturated(net, q):
        return q, 0
    ages = q.as_dict()
    deficits = []
    for t in sorted(net.transitions):
        incoming = net.incoming(t)
        if incoming and all(p in ages for p in incoming):
            deficits.append(max(net.duration(p) - ages[p] for p in incoming))
    if not deficits:
        raise DeadlockedMarking(f"deadlocked marking: {q}")
    k = min(deficits)
    jumped = MarkingState(tuple((p, a + k) for p, a in q.ages))
    if not is_saturated(net, jumped):
        raise DeadlockedMarking(f"saturation jump failed from {q}")
    return jumped, k


def saturate(net: Spin, q: MarkingState) -> MarkingState:
    return _saturation_jump(net, q)[0]


# ---------------------------------------------------------------------------
# Simultaneous firing


def _footprint(net: Spin, t: str) -> frozenset[str]:
    return frozenset(net.incoming(t)) | frozenset(net.outgoing(t))


def mnce_violations(net: Spin, q: MarkingState, tset: Iterable[str]) -> list[str]:
    """Why tset fails to be a maximal non-conflicting enabled set (empty = it is one)."""
    tset = frozenset(tset)
    v9: list[str] = []
    enabled = enabled_transitions(net, q)
    if not tset:
        v9.append("empty set")
    for t in sorted(tset - enabled):
        v9.append(f"not enabled: {t}")
    ts = sorted(tset)
    for i, t in enumerate(ts):
        for u in ts[i + 1 :]:
            shared = _footprint(net, t) & _footprint(net, u)
            if shared:
                v9.append(f"conflicting: {t} and {u} share {', '.join(sorted(shared))}")
    if not v9:
        used = frozenset().union(*(_footprint(net, t) for t in tset))
        for t in sorted(enabled - tset):
            if not (_footprint(net, t) & used):
                v9.append(f"not maximal: {t} can be added")
    return v9


def is_mnce(net: Spin, q: MarkingState, tset: Iterable[str]) -> bool:
    return not mnce_violations(net, q, tset)


def enumerate_mnce(net: Spin, q: MarkingState) -> tuple[frozenset[str], ...]:
    """All maximal non-conflicting enabled sets, lexicographically ordered."""
    enabled = sorted(enabled_transitions(net, q))
    if not enabled:
        raise SemanticsError(f"state is not saturated: {q}")
    feet = {t: _footprint(net, t) for t in enabled}
    results: list[frozenset[str]] = []

    def rec(i: int, chosen: list[str], used: frozenset[str]):
        if i == len(enabled):
            if all(feet[t] & used for t in enabled if t not in chosen):
                results.append(frozenset(chosen))
            return
        t = enabled[i]
        if not (feet[t] & used):
            chosen.append(t)
            rec(i + 1, chosen, used | feet[t])
            chosen.pop()
        rec(i + 1, chosen, used)

    rec(0, [], frozenset())
    return tuple(sorted(results, key=lambda s: tuple(sorted(s))))


def pvariants(
    net: Spin, tbar: frozenset[str], q: MarkingState
) -> tuple[frozenset[str], ...]:
    """All sets that resolve tbar's probabilistic slots the other ways.

    Variants keep the non-probabilistic part, flip any subset of the
    probabilistic members across their pair partner, and must themselves be
    maximal non-conflicting enabled sets. tbar always belongs to its own
    variant class.
    """
    problems = mnce_violations(net, q, tbar)
    if problems:
        raise SemanticsError(
            f"not a maximal non-conflicting enabled set: {'; '.join(problems)}"
        )
    slots = sorted(tbar & net.prob_transitions)
    base = tbar - net.prob_transitions
    variants = []
    for picks in product(*[(t, switch_of(net, t)) for t in slots]):
        cand = base | frozenset(picks)
        if is_mnce(net, q, cand):
            variants.append(cand)
    return tuple(sorted(set(variants), key=lambda s: tuple(sorted(s))))


def grouped_mnce(
    net: Spin, q: MarkingState
) -> list[tuple[frozenset[str], list[frozenset[str]]]]:
    """Firing sets grouped by their non-probabilistic part (the controller's
    options), canonically ordered; each group lists its probabilistic
    completions."""
    groups: dict[tuple[str, ...], list[frozenset[str]]] = {}
    for mnce in enumerate_mnce(net, q):
        plain = tuple(sorted(mnce - net.prob_transitions))
        groups.setdefault(plain, []).append(mnce)
    return [
        (frozenset(plain), sorted(groups[plain], key=lambda m: tuple(sorted(m))))
        for plain in sorted(groups)
    ]


def fire(net: Spin, q: MarkingState, tbar: frozenset[str]) -> MarkingState:
    """One simultaneous firing step; untouched marked places age one unit."""
    if not is_mnce(net, q, tbar):
        raise SemanticsError(f"cannot fire non-maximal set {sorted(tbar)} in {q}")
    out_places = frozenset().union(*(frozenset(net.outgoing(t)) for t in tbar))
    touched = out_places.union(*(frozenset(net.incoming(t)) for t in tbar))
    new_ages = {}
    for p, a in q.ages:
        if p not in touched:
            new_ages[p] = a + 1
    for p in out_places:
        new_ages[p] = 0
    return MarkingState.of(new_ages)


def saturating_step(net: Spin, q: MarkingState, tbar: frozenset[str]) -> MarkingState:
    """Fire tbar, then skip waits: the macro-step between saturated states."""
    if not is_saturated(net, q):
        raise SemanticsError(f"state is not saturated: {q}")
    return saturate(net, fire(net, q, tbar))


# ---------------------------------------------------------------------------
# Computations


Step = frozenset  # an MNCE, or an int wait count in Computation.steps


@dataclass(frozen=True)
class Computation:
    """A run: alternating fired sets and run-length-encoded wait chains."""

    steps: tuple
    states: tuple[MarkingState, ...]

    def __post_init__(self):
        if len(self.states) != len(self.steps) + 1:
            raise SemanticsError("states must be one longer than steps")

    def fired(self) -> list[frozenset[str]]:
        return [s for s in self.steps if not isinstance(s, int)]


def validate_computation(net: Spin, c: Computation) -> None:
    """Check every step against the single-step transition relations."""
    for i, step in enumerate(c.steps):
        before, after = c.states[i], c.states[i + 1]
        if isinstance(step, int):
            if step < 1:
                raise SemanticsError(f"step {i}: wait count {step} < 1")
            q = before
            for _ in range(step):
                q = wait_step(net, q)
            if q != after:
                raise SemanticsError(f"step {i}: wait({step}) does not reach {after}")
        else:
            if fire(net, before, step) != after:
                raise SemanticsError(f"step {i}: firing {sorted(step)} does not reach {after}")


def play(net: Spin, mnce_sequence: Sequence[frozenset[str]]) -> Computation:
    """Drive the net from its initial state firing the given sets in order,
    recording wait runs explicitly."""
    states = [initial_state(net)]
    steps: list = []

    def settle():
        q, k = _saturation_jump(net, states[-1])
        if k:
            steps.append(k)
            states.append(q)

    settle()
    for tbar in mnce_sequence:
        states_before = states[-1]
        steps.append(frozenset(tbar))
        states.append(fire(net, states_before, frozenset(tbar)))
        if not is_final(net, states[-1]):
            settle()
    return Computation(tuple(steps), tuple(states))


def play_measures(net: Spin, c: Computation) -> tuple[Vec, Fraction]:
    """Total impact of all fired transitions and the probability of the run."""
    impact = vec_zero(net.impact_dim)
    prob = Fraction(1)
    for step in c.steps:
        if isinstance(step, int):
            continue
        for t in sorted(step):
            impact = vec_add(impact, net.impact_of(t))
            if t in net.prob_transitions:
                prob *= net.prob[t]
    return impact, prob


def format_trace(net: Spin, c: Computation) -> str:
    """One line per step: the fired set or wait(n), then the marking."""
    lines = [f"init | {c.states[0]}"]
    for step, state in zip(c.steps, c.states[1:]):
        what = f"wait({step})" if isinstance(step, int) else "fire " + ",".join(sorted(step))
        lines.append(f"{what} | {state}")
    return "\n".join(lines) + "\n"
