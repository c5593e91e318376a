from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catenoid_mqm import weyl_oracle
from catenoid_mqm.moment_algebra import MomentIndex, indices_of_order, moment_bracket

Q, P = (1, 0, 0, 0), (0, 1, 0, 0)


def test_canonical_pair():
    assert weyl_oracle.raw_bracket(Q, P) == ((((0, 0, 0, 0), 0), Fraction(1)),)
    assert weyl_oracle.raw_bracket(P, Q) == ((((0, 0, 0, 0), 0), Fraction(-1)),)


def test_different_sectors_commute():
    assert weyl_oracle.raw_bracket((1, 0, 0, 0), (0, 0, 0, 1)) == ()
    assert weyl_oracle.raw_bracket((2, 1, 0, 0), (0, 0, 1, 2)) == ()


def test_weyl_symmetrisation_of_qp():
    # (qp + pq)/2 = qp - (i hbar)/2 in standard order
    op = weyl_oracle.weyl_operator((1, 1, 0, 0))
    assert op[(1, 1, 0, 0)] == {0: Fraction(1)}
    assert op[(0, 0, 0, 0)] == {1: Fraction(-1, 2)}


def test_central_bracket_known_value():
    ref = dict(weyl_oracle.central_bracket((3, 0, 0, 0), (0, 3, 0, 0)))
    assert ref[((), 2)] == Fraction(-3, 2)
    assert ref[(((2, 2, 0, 0),), 0)] == 9


order_le3 = [i for n in (1, 2, 3) for i in indices_of_order(n)]


@settings(max_examples=120, deadline=None)
@given(st.sampled_from(order_le3), st.sampled_from(order_le3))
def test_engine_matches_oracle(x, y):
    ours = dict(moment_bracket(x, y, 6).items())
    assert ours == dict(weyl_oracle.central_bracket(tuple(x), tuple(y)))


@pytest.mark.parametrize("x,y", [((4, 0, 0, 0), (0, 4, 0, 0)), ((2, 2, 0, 0), (1, 1, 1, 1)),
                                 ((0, 1, 3, 0), (1, 0, 0, 3))])
def test_engine_matches_oracle_order_four(x, y):
    ours = dict(moment_bracket(MomentIndex(*x), MomentIndex(*y), 8).items())
    assert ours == dict(weyl_oracle.central_bracket(x, y))
