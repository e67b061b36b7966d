"""Vector-costed reachability game over the net's unfolding.

The board is a bipartite tree: circle nodes belong to the controller (pick
which non-probabilistic transitions to fire), square nodes to chance (every
probabilistic resolution must be survived). Finals carry the cost
probability-of-path x impact-of-path, so the costs of the finals reached
under a strategy sum to exactly its expected impact. Synthesis looks for a
maximal bound-admissible subset of finals whose attractor swallows the
root, then reads the strategy off the attractor ranks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from . import semantics as sem
from .rationals import Vec, vec_add, vec_leq, vec_zero
from .semantics import MarkingState
from .spin import Spin

CIRCLE = "circle"
SQUARE = "square"


class BudgetExceeded(Exception):
    def __init__(self, message: str, nodes_built: int):
        super().__init__(f"{message} (nodes built: {nodes_built})")
        self.nodes_built = nodes_built


@dataclass(frozen=True)
class GameBoard:
    owner: tuple[str, ...]
    children: tuple[tuple[int, ...], ...]
    parent: tuple[int | None, ...]
    start: int
    finals: tuple[int, ...]
    cost: dict[int, Vec]
    impact_dim: int
    names: tuple[str, ...]
    # boards built from a net also carry per-node payloads
    states: tuple[MarkingState | None, ...] | None = None
    labels: tuple[frozenset[str] | None, ...] | None = None

    def __len__(self):
        return len(self.owner)

    def move_count(self) -> int:
        return sum(len(ch) for ch in self.children)

    def root_path(self, node: int) -> list[int]:
        path = [node]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path[::-1]

    def history(self, node: int) -> tuple[MarkingState, ...]:
        """The saturated-state history of a node (net-built boards only)."""
        if self.states is None:
            raise ValueError("board carries no marking states")
        return tuple(
            self.states[n]
            for n in self.root_path(node)
            if self.owner[n] == CIRCLE
        )


def build_game_board(net: Spin, node_cap: int = 10**6) -> GameBoard:
    """Unfold the net into the game tree.

    The root is the saturated initial state with nothing resolved. Each
    circle node gets one square child per distinct non-probabilistic part
    among its state's firing sets; each square child gets one circle child
    per probabilistic completion, reached by the saturating macro-step.
    """
    owner: list[str] = [CIRCLE]
    children: list[list[int]] = [[]]
    parent: list[int | None] = [None]
    states: list[MarkingState | None] = [sem.saturate(net, sem.initial_state(net))]
    labels: list[frozenset[str] | None] = [frozenset()]
    path_prob: list[Fraction] = [Fraction(1)]
    path_impact: list[Vec] = [vec_zero(net.impact_dim)]
    names: list[str] = ["s0"]
    finals: list[int] = []
    cost: dict[int, Vec] = {}

    def new_node(own, par, state, label, prob, impact) -> int:
        if len(owner) >= node_cap:
            raise BudgetExceeded("board too large", len(owner))
        nid = len(owner)
        owner.append(own)
        children.append([])
        parent.append(par)
        states.append(state)
        labels.append(label)
        path_prob.append(prob)
        path_impact.append(impact)
        children[par].append(nid)
        tag = ",".join(sorted(label)) or "-"
        names.append(f"{'c' if own == CIRCLE else 'q'}{nid}[{tag}]")
        return nid

    queue = [0]
    while queue:
        cid = queue.pop(0)
        state = states[cid]
        if sem.is_final(net, state):
            finals.append(cid)
            cost[cid] = tuple(path_prob[cid] * x for x in path_impact[cid])
            continue
        for plain_set, completions in sem.grouped_mnce(net, state):
            impact = path_impact[cid]
            for t in sorted(plain_set):
                impact = vec_add(impact, net.impact_of(t))
            sid = new_node(SQUARE, cid, state, plain_set, path_prob[cid], impact)
            for mnce in completions:
                resolved = mnce & net.prob_transitions
                q_next = sem.saturating_step(net, state, mnce)
                prob = path_prob[cid]
                impact2 = impact
                for t in sorted(resolved):
                    prob *= net.prob[t]
                    impact2 = vec_add(impact2, net.impact_of(t))
                queue.append(
                    new_node(CIRCLE, sid, q_next, resolved, prob, impact2)
                )

    return GameBoard(
        owner=tuple(owner),
        children=tuple(tuple(ch) for ch in children),
        parent=tuple(parent),
        start=0,
        finals=tuple(finals),
        cost=cost,
        impact_dim=net.impact_dim,
        names=tuple(names),
        states=tuple(states),
        labels=tuple(labels),
    )


def final_cost(board: GameBoard, node: int) -> Vec:
    if node not in board.cost:
        raise ValueError(f"node {node} is not a final node")
    return board.cost[node]


def admissible_final_subsets(
    board: GameBoard, bound: Vec, finals: Sequence[int] | None = None
) -> Iterator[frozenset[int]]:
    """Maximal subsets of finals whose cost sum fits under the bound.

    Yielded largest-first, lexicographically within a size. Finals whose
    own cost already exceeds the bound can never appear (costs are
    non-negative) and are dropped up front.
    """
    pool = board.finals if finals is None else tuple(finals)
    if not vec_leq(vec_zero(board.impact_dim), bound):
        return  # even the empty subset exceeds a negative bound component
    kept = [f for f in pool if vec_leq(board.cost[f], bound)]
    results: list[tuple[int, ...]] = []

    def rec(i: int, chosen: list[int], total: Vec, excluded: list[int]):
        if i == len(kept):
            if all(not vec_leq(vec_add(total, board.cost[f]), bound) for f in excluded):
                results.append(tuple(chosen))
            return
        f = kept[i]
        with_f = vec_add(total, board.cost[f])
        fits = vec_leq(with_f, bound)
        if fits:
            chosen.append(f)
            rec(i + 1, chosen, with_f, excluded)
            chosen.pop()
            if not any(board.cost[f]):
                return  # zero-cost finals always fit: excluding one is never maximal
        excluded.append(f)
        rec(i + 1, chosen, total, excluded)
        excluded.pop()

    rec(0, [], vec_zero(board.impact_dim), [])
    results.sort(key=lambda s: (-len(s), s))
    for subset in results:
        yield frozenset(subset)


@dataclass(frozen=True)
class AttractorResult:
    attractor: frozenset[int]
    rank: dict[int, int]


def attractor(board: GameBoard, target: Iterable[int]) -> AttractorResult:
    """Synchronous least fixpoint of the controllable-predecessor operator.

    A circle node joins one round after its first joined successor, a square
    node one round after its last (and only if it has successors at all:
    stuck plays never reach the target). Implemented as a layered worklist
    with per-square countdowns, linear in nodes plus moves.
    """
    target = frozenset(target)
    if not target <= frozenset(board.finals):
        raise ValueError("attractor target must be a subset of the final nodes")
    preds: list[list[int]] = [[] for _ in range(len(board))]
    for n in range(len(board)):
        for c in board.children[n]:
            preds[c].append(n)
    remaining = [len(ch) for ch in board.children]
    attr: set[int] = set()
    rank: dict[int, int] = {}
    layer = sorted(target)
    r = 0
    while layer:
        for n in layer:
            attr.add(n)
            rank[n] = r
        nxt: set[int] = set()
        for n in layer:
            for p in preds[n]:
                if p in attr or p in nxt:
                    continue
                if board.owner[p] == CIRCLE:
                    nxt.add(p)
                else:
                    remaining[p] -= 1
                    if remaining[p] == 0:
                        nxt.add(p)
        layer = sorted(nxt)
        r += 1
    return AttractorResult(frozenset(attr), rank)


@dataclass(frozen=True)
class StrategyTree:
    """A winning strategy: the chosen square move at every reachable circle node."""

    decisions: dict[int, int]
    reached_finals: tuple[int, ...]
    expected_impact: Vec
    target: frozenset[int]


def _square_sort_key(board: GameBoard, node: int):
    label = board.labels[node] if board.labels else None
    return (tuple(sorted(label)) if label is not None else (), node)


def extract_strategy(board: GameBoard, result: AttractorResult) -> StrategyTree:
    """Follow minimal attractor ranks from the root; ties break on the
    lexicographically least fired set."""
    if board.start not in result.attractor:
        raise ValueError("start node is not attracted: no strategy to extract")
    decisions: dict[int, int] = {}
    reached: list[int] = []
    stack = [board.start]
    while stack:
        n = stack.pop()
        if n in board.cost:
            reached.append(n)
            continue
        if board.owner[n] == CIRCLE:
            best = min(
                (c for c in board.children[n] if c in result.attractor),
                key=lambda c: (result.rank[c], _square_sort_key(board, c)),
            )
            decisions[n] = best
            stack.append(best)
        else:
            stack.extend(board.children[n])
    reached.sort()
    total = vec_zero(board.impact_dim)
    for f in reached:
        total = vec_add(total, board.cost[f])
    return StrategyTree(
        decisions=decisions,
        reached_finals=tuple(reached),
        expected_impact=total,
        target=frozenset(n for n, r in result.rank.items() if r == 0),
    )


def solve_board(
    board: GameBoard, bound: Vec
) -> tuple[StrategyTree | None, int]:
    """Try maximal admissible final subsets until one attracts the root.

    Returns (strategy, subsets tried); strategy None means no admissible
    subset works, i.e. no winning strategy exists.
    """
    if len(bound) != board.impact_dim:
        raise ValueError(
            f"bound has dimension {len(bound)}, board expects {board.impact_dim}"
        )
    tried = 0
    if board.start in board.cost:
        # degenerate: the root itself is final
        tried = 1
        if vec_leq(board.cost[board.start], bound):
            return (
                StrategyTree({}, (board.start,), board.cost[board.start], frozenset({board.start})),
                tried,
            )
        return None, tried
    ordered = all(c > n for n in range(len(board)) for c in board.children[n])
    if ordered:
        candidates = _winning_admissible_subsets(board, bound, _usable_finals(board, bound))
    else:
        candidates = admissible_final_subsets(board, bound)
    for subset in candidates:
        tried += 1
        result = attractor(board, subset)
        if board.start in result.attractor:
            return extract_strategy(board, result), tried
    return None, tried


class _TreeWinTracker:
    """Attractor membership of the root as a monotone circuit over the
    final-node variables, updated incrementally as finals are excluded.

    Valid on boards whose moves go parent -> larger child id (every board
    built here). Excluding a final flips its leaf to losing and cascades the
    flip up the unique ancestor chain; undo replays the chain in reverse.
    The root's value always equals "would the attractor of the currently
    optimistic final set swallow the start node".
    """

    def __init__(self, board: GameBoard, optimistic: frozenset[int]):
        self.board = board
        self.win = [False] * len(board)
        self.losing_children = [0] * len(board)
        for n in range(len(board) - 1, -1, -1):
            ch = board.children[n]
            if not ch:
                self.win[n] = n in optimistic
            else:
                self.losing_children[n] = sum(1 for c in ch if not self.win[c])
                if board.owner[n] == CIRCLE:
                    self.win[n] = self.losing_children[n] < len(ch)
                else:
                    self.win[n] = self.losing_children[n] == 0

    def root_wins(self) -> bool:
        return self.win[self.board.start]

    def exclude(self, f: int) -> list[int]:
        """Turn final f losing; returns the flipped nodes for undo."""
        flips = [f]
        self.win[f] = False
        n = f
        while True:
            p = self.board.parent[n]
            if p is None:
                break
            self.losing_children[p] += 1
            ch = self.board.children[p]
            if self.board.owner[p] == CIRCLE:
                now = self.losing_children[p] < len(ch)
            else:
                now = self.losing_children[p] == 0
            if now == self.win[p]:
                break  # no flip: ancestors unaffected beyond the counter
            self.win[p] = now
            flips.append(p)
            n = p
        return flips

    def undo(self, flips: list[int]) -> None:
        f = flips[0]
        self.win[f] = True
        n = f
        while True:
            p = self.board.parent[n]
            if p is None:
                break
            self.losing_children[p] -= 1
            if p in flips:
                self.win[p] = not self.win[p]
                n = p
            else:
                break


def _winning_admissible_subsets(
    board: GameBoard, bound: Vec, usable: Sequence[int]
) -> Iterator[frozenset[int]]:
    """Maximal admissible subsets that also attract the root, in the same
    canonical order admissible_final_subsets would have yielded them.

    Subsets that cannot win are never materialized: a branch dies as soon
    as the exclusions so far already disconnect the root from every
    remaining final, which is sound because excluding more finals never
    helps (attractors are monotone in the target)."""
    if not vec_leq(vec_zero(board.impact_dim), bound):
        return
    kept = [f for f in usable if vec_leq(board.cost[f], bound)]
    tracker = _TreeWinTracker(board, frozenset(kept))
    if not tracker.root_wins():
        return
    results: list[tuple[int, ...]] = []

    def rec(i: int, chosen: list[int], total: Vec, excluded: list[int]):
        if i == len(kept):
            if all(not vec_leq(vec_add(total, board.cost[f]), bound) for f in excluded):
                results.append(tuple(chosen))
            return
        f = kept[i]
        with_f = vec_add(total, board.cost[f])
        if vec_leq(with_f, bound):
            chosen.append(f)
            rec(i + 1, chosen, with_f, excluded)
            chosen.pop()
            if not any(board.cost[f]):
                return  # zero-cost finals always fit: excluding one is never maximal
        flips = tracker.exclude(f)
        if tracker.root_wins():
            excluded.append(f)
            rec(i + 1, chosen, total, excluded)
            excluded.pop()
        tracker.undo(flips)

    rec(0, [], vec_zero(board.impact_dim), [])
    results.sort(key=lambda s: (-len(s), s))
    for subset in results:
        yield frozenset(subset)


def _usable_finals(board: GameBoard, bound: Vec) -> list[int]:
    """Finals that fit the bound alone and sit under no doomed square.

    A square with a child whose subtree holds no affordable final can never
    be attracted; finals behind such squares cannot help attract the root,
    so the subset search skips them (sound on trees: a leaf's attraction
    only ever propagates through its own ancestors).
    """
    kept = {f for f in board.finals if vec_leq(board.cost[f], bound)}
    alive: dict[int, bool] = {}
    for n in range(len(board) - 1, -1, -1):  # children have larger ids: reverse order
        ch = board.children[n]
        if not ch:
            alive[n] = n in kept
        elif board.owner[n] == CIRCLE:
            alive[n] = any(alive[c] for c in ch)
        else:
            alive[n] = all(alive[c] for c in ch)
    usable = []
    for f in sorted(kept):
        if all(alive[a] for a in board.root_path(f)):
            usable.append(f)
    return usable


def synthesize_strategy(
    net: Spin, bound: Vec, node_cap: int = 10**6
) -> tuple[StrategyTree | None, GameBoard]:
    """End-to-end synthesis: build the board, search admissible final
    subsets, run the attractor, extract the strategy. Returns the board
    alongside the verdict so callers can render it."""
    if len(bound) != net.impact_dim:
        raise ValueError(
            f"bound has dimension {len(bound)}, net expects {net.impact_dim}"
        )
    board = build_game_board(net, node_cap=node_cap)
    strategy, _ = solve_board(board, bound)
    return strategy, board


def emit_board_dot(board: GameBoard, result: AttractorResult | None = None) -> str:
    """Deterministic Graphviz rendering; attractor ranks annotate the nodes."""
    from .rationals import format_vec

    lines = ["digraph board {"]
    for n in range(len(board)):
        shape = "ellipse" if board.owner[n] == CIRCLE else "box"
        bits = [board.names[n]]
        if n in board.cost:
            bits.append(format_vec(board.cost[n]))
        if result is not None and n in result.rank:
            bits.append(f"rank={result.rank[n]}")
        label = "\\n".join(bits)
        extra = ", style=filled" if n in board.cost else ""
        lines.append(f'  n{n} [shape={shape}, label="{label}"{extra}];')
    for n in range(len(board)):
        for c in board.children[n]:
            lines.append(f"  n{n} -> n{c};")
    lines.append("}")
    return "\n".join(lines) + "\n"
