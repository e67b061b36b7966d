from fractions import Fraction

import pytest

from spinsynth.dsl import parse_process
from spinsynth.spin import Spin, translate_to_spin

# Metal-working showcase: cut, then bend/mill in parallel; polishing quality is
# chance (1/5 heavy), deposition and painting are controller choices. Impacts
# are chosen so the four positional assignments total [131, 8.6], [151, 6.6],
# [156, 11.6], [176, 9.6].
SHOWCASE = """
Cut[10,1]{1} ,
(Bend[20,2]{2} , (HP[25,3]{2} ^ [Nat: 1/5] LP[45,0]{1}))
  || (Mill[15,1]{1} , (FD[15,1]{1} / [Dep] RD[40,4]{1})),
(LPLS[30,3]{1} / [Paint] HPHS[50,1]{1})
"""


@pytest.fixture(scope="session")
def showcase_process():
    return parse_process(SHOWCASE)


@pytest.fixture(scope="session")
def showcase_net(showcase_process):
    return translate_to_spin(showcase_process)


def make_two_slot_net() -> Spin:
    """A fork into a choice slot {t1, t2} and a probabilistic slot {t3, t4},
    with t5 synchronizing both sides downstream."""
    return Spin(
        places=frozenset({"p0", "p1", "p2", "p3", "p4", "pf"}),
        transitions=frozenset({"t0", "t1", "t2", "t3", "t4", "t5"}),
        prob_transitions=frozenset({"t3", "t4"}),
        flow=frozenset(
            {
                ("p0", "t0"),
                ("t0", "p1"),
                ("t0", "p2"),
                ("p1", "t1"),
                ("p1", "t2"),
                ("t1", "p3"),
                ("t2", "p3"),
                ("p2", "t3"),
                ("p2", "t4"),
                ("t3", "p4"),
                ("t4", "p4"),
                ("p3", "t5"),
                ("p4", "t5"),
                ("t5", "pf"),
            }
        ),
        impact={},
        prob={"t3": Fraction(1, 5), "t4": Fraction(4, 5)},
        place_duration={},
        p0="p0",
        pf="pf",
        impact_dim=1,
    )


@pytest.fixture(scope="session")
def two_slot_net():
    return make_two_slot_net()
