"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to watch them
stream). Expected values are exact rationals throughout; any tolerance is
stated inline where a criterion defines one.
"""

import random
import time
from fractions import Fraction

from spinsynth import semantics as sem
from spinsynth.dsl import parse_process
from spinsynth.game import attractor, build_game_board, solve_board, synthesize_strategy
from spinsynth.oracle import (
    PartitionInstance,
    brute_force_expected_impacts,
    decide_strategy_exists,
    exhaustive_partition_check,
    partition_to_game,
    random_instance,
)
from spinsynth.rationals import vec, vec_leq
from spinsynth.semantics import (
    MarkingState,
    enumerate_mnce,
    fire,
    initial_state,
    is_final,
    is_saturated,
    mnce_violations,
    pvariants,
    saturate,
    wait_step,
)
from spinsynth.spin import Spin, translate_to_spin
from tests.conftest import SHOWCASE, make_two_slot_net
from tests.test_game import naive_attractor_set, random_board


def report(name: str, ok: bool, detail: str = ""):
    tail = f"  ({detail})" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'}  {name}{tail}")
    assert ok, f"{name}{tail}"


# ---------------------------------------------------------------------------


def test_criterion_motivating_arithmetic():
    """Expected impacts [131, 8.6] / [151, 6.6]; bound [155, 7.5] admits the
    [151, 6.6] strategy; tightening the first component to 131 refutes all.
    Exact rational equality; wall time under a second."""
    started = time.perf_counter()
    net, _ = translate_to_spin(parse_process(SHOWCASE))
    vectors = {a.expected_impact for a in brute_force_expected_impacts(net)}
    low = (Fraction(131), Fraction(43, 5))  # [131, 8.6]
    win = (Fraction(151), Fraction(33, 5))  # [151, 6.6]
    ok = low in vectors and win in vectors

    strategy, _ = synthesize_strategy(net, vec(["155", "7.5"]))
    ok = ok and strategy is not None and strategy.expected_impact == win

    refuted, _ = synthesize_strategy(net, vec(["131", "7.5"]))
    ok = ok and refuted is None

    exact, _ = synthesize_strategy(net, low)
    ok = ok and exact is not None and exact.expected_impact == low

    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 1.0
    report("motivating-example arithmetic", ok, f"{elapsed * 1000:.0f} ms")


def test_criterion_two_slot_mnce_suite():
    net = make_two_slot_net()
    q = MarkingState.of({"p1": 0, "p2": 0})
    expected = {
        frozenset({"t1", "t3"}),
        frozenset({"t1", "t4"}),
        frozenset({"t2", "t3"}),
        frozenset({"t2", "t4"}),
    }
    ok = set(enumerate_mnce(net, q)) == expected

    singleton = mnce_violations(net, q, {"t1"})
    ok = ok and any("not maximal" in v for v in singleton)

    disabled = mnce_violations(net, q, {"t1", "t4", "t5"})
    ok = ok and any(v == "not enabled: t5" for v in disabled)

    conflicting = mnce_violations(net, q, {"t1", "t2", "t4"})
    ok = ok and any("conflicting: t1 and t2" in v and "p1" in v for v in conflicting)

    variants = set(pvariants(net, frozenset({"t1", "t3"}), q))
    ok = ok and variants == {frozenset({"t1", "t3"}), frozenset({"t1", "t4"})}
    report("two-slot firing-set suite", ok)


# ---------------------------------------------------------------------------


def _every_reachable_presaturation_state(net):
    """Yield the raw post-fire states encountered while exploring the net."""
    q0 = initial_state(net)
    yield q0
    stack, visited = [saturate(net, q0)], set()
    while stack:
        q = stack.pop()
        if q in visited or is_final(net, q):
            continue
        visited.add(q)
        for tbar in enumerate_mnce(net, q):
            raw = fire(net, q, tbar)
            yield raw
            if not is_final(net, raw):
                stack.append(saturate(net, raw))


def test_criterion_saturation_oracle():
    """saturate must equal the one-tick-at-a-time fixpoint on every reachable
    state of 100 seeded nets with durations up to 2^10, and its cost must not
    scale with the duration magnitude (2^4 vs 2^20 within 2x)."""
    checked = 0
    ok = True
    for seed in range(100):
        process = random_instance(
            seed, max_depth=2, max_gateways=2, max_duration=2**10
        )
        net, _ = translate_to_spin(process)
        for raw in _every_reachable_presaturation_state(net):
            jumped = saturate(net, raw)
            slow = raw
            chain = []
            while not is_final(net, slow) and not is_saturated(net, slow):
                slow = wait_step(net, slow)
                chain.append(slow)
            if jumped != slow:
                ok = False
            # the jump agrees from mid-chain states too, not just endpoints
            if len(chain) > 2 and saturate(net, chain[len(chain) // 2]) != slow:
                ok = False
            checked += 1 + (1 if len(chain) > 2 else 0)
    report("saturation equals wait fixpoint", ok, f"{checked} states")

    def chain_net(duration):
        return Spin(
            places=frozenset({"p0", "p", "pf"}),
            transitions=frozenset({"a", "b"}),
            prob_transitions=frozenset(),
            flow=frozenset({("p0", "a"), ("a", "p"), ("p", "b"), ("b", "pf")}),
            impact={},
            prob={},
            place_duration={"p": duration},
            p0="p0",
            pf="pf",
            impact_dim=1,
        )

    def time_saturate(net):
        q = MarkingState.of({"p": 0})
        best = float("inf")
        for _ in range(7):
            t0 = time.perf_counter()
            for _ in range(4000):
                saturate(net, q)
            best = min(best, time.perf_counter() - t0)
        return best

    small = time_saturate(chain_net(2**4))
    large = time_saturate(chain_net(2**20))
    ratio = large / small
    report("saturation independent of duration magnitude", ratio < 2.0, f"ratio {ratio:.2f}")


# ---------------------------------------------------------------------------


def _bounds_for(vectors, rng, count=20):
    dim = len(vectors[0])
    floor = tuple(min(v[i] for v in vectors) for i in range(dim))
    bounds = [floor]  # the brute-force minimum, as an exact boundary
    bounds.extend(vectors[:8])
    for v in vectors[:5]:
        i = rng.randrange(dim)
        bounds.append(tuple(x - 1 if j == i else x for j, x in enumerate(v)))
        bounds.append(tuple(x + Fraction(1, 2) for x in v))
    bounds.append(tuple(Fraction(0) for _ in range(dim)))
    bounds.append(tuple(x + 100 for x in floor))
    while len(bounds) < count:
        a, b = rng.choice(vectors), rng.choice(vectors)
        bounds.append(tuple(min(x, y) + Fraction(rng.randint(-2, 2)) for x, y in zip(a, b)))
    return bounds[:count]


def test_criterion_three_way_agreement_and_conservation():
    """Game engine, recursive engine, and brute force must agree on 200
    seeded instances x 20 bounds each, with certificates both under the
    bound and achievable; along the way, each assignment's play
    probabilities must sum to exactly 1. Budget: five minutes."""
    started = time.perf_counter()
    rng = random.Random(0xA9EE)
    instances = 0
    verdicts = 0
    disagreements = 0
    mass_ok = True
    cert_ok = True
    seed = 0
    while instances < 200:
        process = random_instance(seed)
        seed += 1
        instances += 1
        net, _ = translate_to_spin(process)
        assignments = brute_force_expected_impacts(net)
        for a in assignments:
            if a.probability_mass != 1:
                mass_ok = False
        vectors = [a.expected_impact for a in assignments]
        board = build_game_board(net)
        for bound in _bounds_for(vectors, rng):
            brute = any(vec_leq(v, bound) for v in vectors)
            strategy, _ = solve_board(board, bound)
            via_game = strategy is not None
            via_rec, _ = decide_strategy_exists(net, bound)
            verdicts += 1
            if not (brute == via_game == via_rec):
                disagreements += 1
            if strategy is not None:
                if not vec_leq(strategy.expected_impact, bound):
                    cert_ok = False
                if strategy.expected_impact not in vectors:
                    cert_ok = False
    elapsed = time.perf_counter() - started
    report(
        "three-way engine agreement",
        disagreements == 0 and verdicts >= 200 * 20 and elapsed < 300,
        f"{verdicts} verdicts over {instances} instances in {elapsed:.1f}s",
    )
    report("certificates sound and achievable", cert_ok)
    report("probability conservation (sum of plays = 1)", mass_ok)


# ---------------------------------------------------------------------------


def test_criterion_partition_reduction():
    """Game-engine verdicts on reduction boards must match the exhaustive
    equal-sum check for 50 seeded multisets with |S| <= 10, elements <= 20,
    plus the two fixed examples."""
    ok = True
    rng = random.Random(51)
    cases = [(1, 2, 3), (1, 2, 4)]
    for _ in range(50):
        size = rng.randint(1, 10)
        cases.append(tuple(rng.randint(1, 20) for _ in range(size)))
    for numbers in cases:
        board, bound = partition_to_game(PartitionInstance(numbers))
        strategy, _ = solve_board(board, bound)
        if (strategy is not None) != exhaustive_partition_check(numbers):
            ok = False
    positive, _ = solve_board(*partition_to_game(PartitionInstance((1, 2, 3))))
    negative, _ = solve_board(*partition_to_game(PartitionInstance((1, 2, 4))))
    ok = ok and positive is not None and negative is None
    report("partition reduction", ok, f"{len(cases)} multisets")


def test_criterion_loop_unraveling():
    """repeat 1/2, max 3: total mass exactly 1 and expected impact equal to
    the hand-computed truncated sum (direct summation oracle)."""
    process = parse_process("<[L: 1/2, max 3] A[4,2]{1}>")
    net, _ = translate_to_spin(process)
    assignments = brute_force_expected_impacts(net)
    ok = len(assignments) == 1
    mass = assignments[0].probability_mass
    ok = ok and mass == 1

    p = Fraction(1, 2)
    # chance of running the body exactly i times, truncated at 3
    weights = {0: 1 - p, 1: p * (1 - p), 2: p * p * (1 - p), 3: p**3}
    ok = ok and sum(weights.values()) == 1
    body = (Fraction(4), Fraction(2))
    expected = tuple(sum(w * i * c for i, w in weights.items()) for c in body)
    ok = ok and assignments[0].expected_impact == expected

    strategy, _ = synthesize_strategy(net, expected)
    ok = ok and strategy is not None and strategy.expected_impact == expected
    report("loop unraveling mass and truncated sum", ok, f"E = {expected}")


def test_criterion_attractor_properties():
    """Monotonicity in the target and exists/forall semantics against a naive
    asynchronous fixpoint, over 1000 random small boards."""
    rng = random.Random(7)
    ok = True
    for _ in range(1000):
        board = random_board(rng, n_nodes=rng.randint(4, 18))
        finals = list(board.finals)
        t1 = frozenset(rng.sample(finals, k=rng.randint(0, len(finals))))
        t2 = t1 | frozenset(rng.sample(finals, k=rng.randint(0, len(finals))))
        r1 = attractor(board, t1)
        r2 = attractor(board, t2)
        if r1.attractor != naive_attractor_set(board, t1):
            ok = False
        if not r1.attractor <= r2.attractor:
            ok = False
        for n in r1.attractor:
            k = r1.rank[n]
            if k == 0:
                if n not in t1:
                    ok = False
                continue
            ch = board.children[n]
            in_ranks = [r1.rank[c] for c in ch if c in r1.attractor]
            if board.owner[n] == "circle":
                if not in_ranks or min(in_ranks) != k - 1:
                    ok = False
            else:
                if len(in_ranks) != len(ch) or max(in_ranks) != k - 1:
                    ok = False
    report("attractor monotonicity and semantics", ok, "1000 boards")
