from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsynth.dsl import parse_process
from spinsynth.oracle import random_instance
from spinsynth.rationals import vec_zero
from spinsynth.spin import (
    Spin,
    SpinError,
    emit_spin_dot,
    switch_of,
    translate_to_spin,
    validate_structured_acyclic,
)


def test_single_task_translation_shape():
    net, prov = translate_to_spin(parse_process("T[10,1]{1}"))
    assert net.places == {"p:__start", "p:T", "p:__end"}
    assert net.transitions == {"t:T.start", "t:T.done"}
    assert net.duration("p:T") == 1
    assert net.impact_of("t:T.done") == (Fraction(10), Fraction(1))
    assert net.impact_of("t:T.start") == vec_zero(2)
    assert prov.task_exits["t:T.done"] == "T"


def test_nature_split_becomes_complementary_pair():
    net, _ = translate_to_spin(parse_process("(A[1]{1} ^ [N: 0.2] B[2]{1})"))
    t, tbar = "t:N.default", "t:N.alternative"
    assert net.prob[t] == Fraction(1, 5)
    assert net.prob[tbar] == Fraction(4, 5)
    assert net.incoming(t) == net.incoming(tbar)
    assert len(net.outgoing(t)) == len(net.outgoing(tbar)) == 1
    assert net.prob[t] + net.prob[tbar] == 1


def test_choice_split_shares_one_incoming_place():
    net, prov = translate_to_spin(parse_process("(A[1]{1} / [C] B[2]{1})"))
    heads = [t for t, (c, _) in prov.choice_branches.items() if c == "C"]
    assert len(heads) == 2
    assert all(t not in net.prob_transitions for t in heads)
    incomings = {net.incoming(t) for t in heads}
    assert len(incomings) == 1


def test_cyclic_input_rejected():
    from spinsynth.process_model import BpmnCpi, SeseDiagram
    from spinsynth import process_model as pm

    d = SeseDiagram(
        nodes=frozenset({"s", "j", "a", "g", "e"}),
        edges=frozenset([("s", "j"), ("j", "a"), ("a", "g"), ("g", "j"), ("g", "e")]),
        default_edges=frozenset([("g", "j")]),
        node_kind={"s": pm.EVENT, "j": pm.JOIN, "a": pm.TASK, "g": pm.SPLIT, "e": pm.EVENT},
    )
    process = BpmnCpi(
        diagram=d,
        nature_prob={"g": Fraction(1, 2)},
        impact={"a": (Fraction(1),)},
        duration={"a": 1},
        impact_dim=1,
    )
    with pytest.raises(SpinError, match="cyclic"):
        translate_to_spin(process)


def test_switch_is_an_involution(two_slot_net):
    assert switch_of(two_slot_net, "t3") == "t4"
    assert switch_of(two_slot_net, switch_of(two_slot_net, "t3")) == "t3"


def test_switch_rejects_plain_transitions(two_slot_net):
    with pytest.raises(SpinError):
        switch_of(two_slot_net, "t1")


def test_degree_bound_violation_reported():
    net = Spin(
        places=frozenset({"p0", "a", "b", "c", "pf"}),
        transitions=frozenset({"t", "u", "v", "w"}),
        prob_transitions=frozenset(),
        flow=frozenset(
            {
                ("p0", "u"), ("u", "a"), ("p0", "v"), ("v", "b"), ("p0", "w"), ("w", "c"),
                ("a", "t"), ("b", "t"), ("c", "t"), ("t", "pf"),
            }
        ),
        impact={},
        prob={},
        place_duration={},
        p0="p0",
        pf="pf",
        impact_dim=1,
    )
    problems = validate_structured_acyclic(net)
    assert any("degree bound violated at t" in p for p in problems)


def test_non_complementary_pair_reported():
    net = Spin(
        places=frozenset({"p0", "a", "b", "pf"}),
        transitions=frozenset({"t", "u", "m"}),
        prob_transitions=frozenset({"t", "u"}),
        flow=frozenset(
            {("p0", "t"), ("p0", "u"), ("t", "a"), ("u", "b"), ("a", "m"), ("b", "m"), ("m", "pf")}
        ),
        impact={},
        prob={"t": Fraction(1, 2), "u": Fraction(2, 5)},
        place_duration={},
        p0="p0",
        pf="pf",
        impact_dim=1,
    )
    problems = validate_structured_acyclic(net)
    assert any("not complementary" in p for p in problems)


def test_two_slot_reconstruction_is_structurally_valid(two_slot_net):
    assert validate_structured_acyclic(two_slot_net) == []


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_translation_always_validates(seed):
    process = random_instance(seed, allow_loops=True)
    net, _ = translate_to_spin(process)
    assert validate_structured_acyclic(net) == []


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_translation_size_is_linear(seed):
    process = random_instance(seed, allow_loops=True)
    net, _ = translate_to_spin(process)
    assert len(net.places) + len(net.transitions) <= 8 * len(process.diagram.nodes)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_impact_only_on_task_exits(seed):
    process = random_instance(seed)
    net, prov = translate_to_spin(process)
    for t in net.transitions:
        if any(net.impact_of(t)):
            assert t in prov.task_exits


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_probabilistic_pairs_share_incoming_and_sum_to_one(seed):
    process = random_instance(seed, allow_loops=True)
    net, _ = translate_to_spin(process)
    seen = set()
    for t in net.prob_transitions:
        if t in seen:
            continue
        partner = switch_of(net, t)
        seen.update({t, partner})
        assert net.incoming(t) == net.incoming(partner)
        assert net.prob[t] + net.prob[partner] == 1


def test_spin_dot_deterministic(showcase_net):
    net, _ = showcase_net
    assert emit_spin_dot(net) == emit_spin_dot(net)
    assert "Pr=0.2" in emit_spin_dot(net)
