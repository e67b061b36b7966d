"""Independent engines for cross-validation.

Three ways to answer "does a strategy fit under the bound" live in this
package: the game engine (game.py), the recursive residual-threading search
here, and plain brute force over complete choice assignments, also here.
They share nothing but the net semantics, so agreement between them is
evidence rather than tautology. This module also hosts the equal-sum
partition reduction used to stress the game engine in isolation, and the
seeded random process generator feeding the agreement sweeps.
"""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from . import semantics as sem
from .dsl import parse_process
from .game import CIRCLE, SQUARE, GameBoard
from .process_model import BpmnCpi
from .rationals import (
    Vec,
    vec,
    vec_add,
    vec_geq_zero,
    vec_scale,
    vec_sub,
    vec_zero,
)
from .semantics import MarkingState
from .spin import Spin


class AssignmentCapExceeded(Exception):
    pass


@dataclass(frozen=True)
class SearchFrame:
    """A pending play branch: its state, accumulated impact, path probability."""

    state: MarkingState
    im: Vec
    cp: Fraction
    depth: int = 0


def decide_strategy_exists(net: Spin, bound: Vec) -> tuple[bool, Vec | None]:
    """Backtracking search threading the residual bound through chance siblings.

    Every controller option opens a branch whose probabilistic completions
    are pushed as pending frames in front of the continuation, so exhausting
    a branch can still revisit choices made inside earlier siblings. A final
    play subtracts its probability-weighted impact from the residual and
    fails the branch as soon as any component goes negative (sound: impacts
    are non-negative, so an overdrawn prefix can never recover).
    """
    if len(bound) != net.impact_dim:
        raise ValueError(
            f"bound has dimension {len(bound)}, net expects {net.impact_dim}"
        )
    max_depth = len(net.transitions) + 1
    root = SearchFrame(
        sem.saturate(net, sem.initial_state(net)),
        vec_zero(net.impact_dim),
        Fraction(1),
    )
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 100_000))
    try:
        residual = _solve(net, (root,), bound, max_depth)
    finally:
        sys.setrecursionlimit(limit)
    return residual is not None, residual


def _solve(
    net: Spin, agenda: tuple[SearchFrame, ...], rei: Vec, max_depth: int
) -> Vec | None:
    if not agenda:
        return rei
    frame, rest = agenda[0], agenda[1:]
    if frame.depth > max_depth:
        raise RuntimeError("play exceeds transition count: net is not acyclic")
    if sem.is_final(net, frame.state):
        residual = vec_sub(rei, vec_scale(frame.cp, frame.im))
        if not vec_geq_zero(residual):
            return None
        return _solve(net, rest, residual, max_depth)
    for _, completions in sem.grouped_mnce(net, frame.state):
        siblings = []
        for mnce in completions:
            im = frame.im
            cp = frame.cp
            for t in sorted(mnce):
                im = vec_add(im, net.impact_of(t))
                if t in net.prob_transitions:
                    cp *= net.prob[t]
            siblings.append(
                SearchFrame(
                    sem.saturating_step(net, frame.state, mnce),
                    im,
                    cp,
                    frame.depth + 1,
                )
            )
        residual = _solve(net, tuple(siblings) + rest, rei, max_depth)
        if residual is not None:
            return residual
    return None


# ---------------------------------------------------------------------------
# Brute force over complete choice assignments


@dataclass(frozen=True)
class Assignment:
    """One complete way to resolve every reachable decision point."""

    label: str
    expected_impact: Vec
    probability_mass: Fraction


def brute_force_expected_impacts(
    net: Spin, cap: int = 2**20
) -> list[Assignment]:
    """Every complete choice assignment with its exact expected impact.

    Assignments are history-dependent: a decision point is one reachable
    occurrence of a state, and picks in sibling chance branches vary
    independently. The expected impact is computed directly from the
    semantics (never from the game board), and each assignment also reports
    its total play-probability mass, which must be exactly 1.
    """
    q0 = sem.saturate(net, sem.initial_state(net))

    def rec(q: MarkingState) -> list[Assignment]:
        if sem.is_final(net, q):
            return [Assignment("", vec_zero(net.impact_dim), Fraction(1))]
        out: list[Assignment] = []
        groups = sem.grouped_mnce(net, q)
        for gi, (_, completions) in enumerate(groups):
            branches: list[list[tuple[Fraction, Vec, Assignment]]] = []
            for mnce in completions:
                pr = Fraction(1)
                iv = vec_zero(net.impact_dim)
                for t in sorted(mnce):
                    iv = vec_add(iv, net.impact_of(t))
                    if t in net.prob_transitions:
                        pr *= net.prob[t]
                subs = rec(sem.saturating_step(net, q, mnce))
                branches.append([(pr, iv, a) for a in subs])
            for combo in product(*branches):
                total = vec_zero(net.impact_dim)
                mass = Fraction(0)
                labels = []
                for pr, iv, a in combo:
                    total = vec_add(total, vec_scale(pr, vec_add(iv, a.expected_impact)))
                    mass += pr * a.probability_mass
                    labels.append(a.label)
                inner = ",".join(l for l in labels if l)
                if len(groups) > 1:
                    label = f"{gi}({inner})" if inner else str(gi)
                else:
                    label = inner
                out.append(Assignment(label, total, mass))
                if len(out) > cap:
                    raise AssignmentCapExceeded(
                        f"more than {cap} assignments in one subtree"
                    )
        return out

    return rec(q0)


def positional_expected_impacts(net: Spin, cap: int = 2**16) -> list[Assignment]:
    """Expected impacts of assignments restricted to positional strategies:
    the same marking state always gets the same pick, regardless of history."""
    q0 = sem.saturate(net, sem.initial_state(net))
    decision_states: list[MarkingState] = []
    options: dict[MarkingState, list[list[frozenset[str]]]] = {}
    seen: set[MarkingState] = set()
    stack = [q0]
    while stack:
        q = stack.pop()
        if q in seen or sem.is_final(net, q):
            continue
        seen.add(q)
        groups = sem.grouped_mnce(net, q)
        options[q] = [completions for _, completions in groups]
        if len(groups) > 1:
            decision_states.append(q)
        for _, completions in groups:
            for mnce in completions:
                stack.append(sem.saturating_step(net, q, mnce))
    decision_states.sort(key=str)

    choice_lists = [range(len(options[q])) for q in decision_states]
    total_count = 1
    for r in choice_lists:
        total_count *= len(r)
    if total_count > cap:
        raise AssignmentCapExceeded(f"{total_count} positional assignments")

    out = []
    for picks in product(*choice_lists):
        pick_of = dict(zip(decision_states, picks))

        memo: dict[MarkingState, tuple[Vec, Fraction]] = {}

        def ev(q: MarkingState) -> tuple[Vec, Fraction]:
            if sem.is_final(net, q):
                return vec_zero(net.impact_dim), Fraction(1)
            if q in memo:
                return memo[q]
            gi = pick_of.get(q, 0)
            total = vec_zero(net.impact_dim)
            mass = Fraction(0)
            for mnce in options[q][gi]:
                pr = Fraction(1)
                iv = vec_zero(net.impact_dim)
                for t in sorted(mnce):
                    iv = vec_add(iv, net.impact_of(t))
                    if t in net.prob_transitions:
                        pr *= net.prob[t]
                sub_iv, sub_mass = ev(sem.saturating_step(net, q, mnce))
                total = vec_add(total, vec_scale(pr, vec_add(iv, sub_iv)))
                mass += pr * sub_mass
            memo[q] = (total, mass)
            return memo[q]

        iv, mass = ev(q0)
        out.append(Assignment(",".join(map(str, picks)), iv, mass))
    return out


# ---------------------------------------------------------------------------
# Equal-sum partition reduction


@dataclass(frozen=True)
class PartitionInstance:
    numbers: tuple[int, ...]

    def __post_init__(self):
        if not self.numbers:
            raise ValueError("need at least one number")
        if any(n < 1 for n in self.numbers):
            raise ValueError("numbers must be positive")


def partition_to_game(inst: PartitionInstance) -> tuple[GameBoard, Vec]:
    """The hardness gadget: one chance root fanning out to one controller
    node per number, each picking the 'up' final [n_i, 0, 1] or the 'down'
    final [0, n_i, 1]; the bound [S/2, S/2, m] is met exactly by the
    equal-sum partitions."""
    m = len(inst.numbers)
    owner = [SQUARE]
    children: list[tuple[int, ...]] = [tuple(1 + 3 * i for i in range(m))]
    parent: list[int | None] = [None]
    names = ["p_0"]
    finals = []
    cost: dict[int, Vec] = {}
    for i, n in enumerate(inst.numbers, start=1):
        pick = 3 * (i - 1) + 1
        up, down = pick + 1, pick + 2
        owner += [CIRCLE, CIRCLE, CIRCLE]
        children += [(up, down), (), ()]
        parent += [0, pick, pick]
        names += [f"p^{i}", f"p^{i}_up", f"p^{i}_down"]
        finals += [up, down]
        cost[up] = vec([n, 0, 1])
        cost[down] = vec([0, n, 1])
    total = Fraction(sum(inst.numbers))
    bound = (total / 2, total / 2, Fraction(m))
    board = GameBoard(
        owner=tuple(owner),
        children=tuple(children),
        parent=tuple(parent),
        start=0,
        finals=tuple(finals),
        cost=cost,
        impact_dim=3,
        names=tuple(names),
    )
    return board, bound


def exhaustive_partition_check(numbers: tuple[int, ...]) -> bool:
    """Subset-sum oracle: can the multiset split into two equal-sum halves?"""
    total = sum(numbers)
    if total % 2:
        return False
    half = total // 2
    feasible = {0}
    for n in numbers:
        feasible |= {s + n for s in feasible if s + n <= half}
    return half in feasible


# ---------------------------------------------------------------------------
# Seeded random instances


_PROBS = ("1/2", "1/3", "2/3", "1/4", "3/4", "1/5", "4/5", "1/10", "9/10")


def random_instance_text(
    seed: int,
    max_depth: int = 3,
    max_gateways: int = 4,
    impact_dim: int = 2,
    allow_loops: bool = False,
    max_loop_iterations: int = 3,
    max_duration: int = 4,
) -> str:
    """Deterministic random process source; same seed, same text."""
    rng = random.Random(seed)
    counters = {"T": 0, "C": 0, "N": 0, "L": 0}
    gateways = 0

    def fresh(prefix: str) -> str:
        counters[prefix] += 1
        return f"{prefix}{counters[prefix]}"

    def task() -> str:
        name = fresh("T")
        impacts = ", ".join(str(rng.randint(0, 6)) for _ in range(impact_dim))
        return f"{name}[{impacts}]{{{rng.randint(1, max_duration)}}}"

    def expr(depth: int) -> str:
        nonlocal gateways
        roll = rng.random()
        if depth >= max_depth or gateways >= max_gateways or roll < 0.35:
            return task()
        if roll < 0.55:
            parts = [expr(depth + 1) for _ in range(rng.randint(2, 3))]
            return " , ".join(parts)
        if roll < 0.7:
            left, right = expr(depth + 1), expr(depth + 1)
            return f"({_atomize(left)} || {_atomize(right)})"
        gateways += 1
        if allow_loops and roll >= 0.93:
            name = fresh("L")
            p = rng.choice(_PROBS)
            n = rng.randint(1, max_loop_iterations)
            return f"<[{name}: {p}, max {n}] {expr(depth + 1)}>"
        if roll < 0.85:
            name = fresh("C")
            right = "skip" if rng.random() < 0.15 else expr(depth + 1)
            return f"({expr(depth + 1)} / [{name}] {right})"
        name = fresh("N")
        p = rng.choice(_PROBS)
        right = "skip" if rng.random() < 0.15 else expr(depth + 1)
        return f"({expr(depth + 1)} ^ [{name}: {p}] {right})"

    body = expr(0)
    # guarantee at least one task so the impact dimension is anchored
    if counters["T"] == 0:
        body = f"{task()} , {body}"
    return body


def random_instance(seed: int, **kwargs) -> BpmnCpi:
    return parse_process(random_instance_text(seed, **kwargs))


def _atomize(text: str) -> str:
    if " , " in text or " || " in text:
        return f"({text})"
    return text
