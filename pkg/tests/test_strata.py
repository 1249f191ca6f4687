import pytest

from utils.errors import InvalidInstance
from utils.itinerary import ZERO_SEQUENCE, ItinerarySeq, witness_sequence
from utils.tower_arith import Lit, Ordering, fapp
from verifiers.counterexample import build_sN
from verifiers.strata import (
    Verdict,
    canonical_xn_point,
    claim8_chain,
    claim8_inequality,
    closure_necessary,
    prop7_check,
    stratum_index,
    witness_rule,
    xn_member,
)


class TestMembership:
    @pytest.mark.parametrize("n", [0, 1])
    def test_canonical_points_are_members(self, n):
        result = xn_member(witness_sequence(n), n, 3)
        assert result.verdict is Verdict.MEMBER
        assert result.tail_rule.holds
        assert all(m.strict for m in result.margins)

    def test_zero_sequence_fails_first_k(self):
        result = xn_member(ZERO_SEQUENCE, 0)
        assert result.verdict is Verdict.NON_MEMBER
        assert result.witness_k == 1
        assert result.margins[-1].order is Ordering.LT

    def test_finite_check_without_tail_rule_is_unknown(self):
        s = ItinerarySeq({3: fapp(3, Lit(1))})
        result = xn_member(s, 0, k_max=1)
        assert result.verdict is Verdict.UNKNOWN
        assert result.tail_rule is None

    def test_witness_rule_only_for_witness_tails(self, canonical0):
        assert witness_rule(ZERO_SEQUENCE, 0, 1) is None
        assert witness_rule(canonical0, 0, 4).holds

    def test_as_dict(self, canonical0):
        data = xn_member(canonical0, 0, 2).as_dict()
        assert data["verdict"] == "Member"
        assert [m["k"] for m in data["margins"]] == [1, 2]


class TestClosure:
    def test_zero_sequence_fails(self):
        assert not closure_necessary(ZERO_SEQUENCE, 0, 1).passed

    def test_canonical_point_passes(self, canonical0):
        assert closure_necessary(canonical0, 0, 1).passed

    def test_k_must_exceed_n(self, canonical0):
        with pytest.raises(InvalidInstance):
            closure_necessary(canonical0, 2, 2)


class TestProp7:
    def test_verified(self, canonical0):
        result = prop7_check(canonical0, k=1, j=7, l=2, n=0)
        assert result.verified
        assert result.i == 1
        assert result.as_dict()["result"] == "Verified"

    def test_hypothesis_fails(self, canonical0):
        result = prop7_check(canonical0, k=1, j=8, l=2, n=0)
        assert not result.verified
        assert result.as_dict()["result"] == "HypothesisFails"

    def test_l_outside_window(self, canonical0):
        with pytest.raises(InvalidInstance):
            prop7_check(canonical0, k=1, j=7, l=1, n=0)


class TestClaim8:
    def test_fails_at_one(self):
        result = claim8_inequality(1)
        assert not result.holds
        assert result.as_dict()["margin"] == "1 < 2"
        assert result.as_dict()["result"] == "Fails"

    @pytest.mark.parametrize("k", range(2, 7))
    def test_holds_from_two(self, k):
        assert claim8_inequality(k).holds

    def test_chain(self):
        data = claim8_chain(2).as_dict()
        assert data["in_X0"] is True
        assert data["orbit_condition"] == "T >= F^4(1)"

    def test_k_positive(self):
        with pytest.raises(InvalidInstance):
            claim8_inequality(0)


class TestStrataIndex:
    def test_canonical_point(self, canonical0):
        assert stratum_index(canonical0, 2, 3) == 0

    def test_zero_sequence_has_no_stratum(self):
        assert stratum_index(ZERO_SEQUENCE, 2, 3) is None

    def test_canonical_xn_point(self):
        record = canonical_xn_point(0)
        assert record.mode == "tower"
        with pytest.raises(InvalidInstance):
            canonical_xn_point(0, c=0)


def _member_points():
    """(s, n) pairs with s a certified point of X_n."""
    return [
        (witness_sequence(0), 0),
        (witness_sequence(1), 1),
        (witness_sequence(0, c=3), 0),
        (build_sN(witness_sequence(0), 0, 3).sN, 1),
    ]


class TestStrataInvariants:
    def test_membership_moves_up(self):
        for s, n in _member_points():
            k_max = n + 3
            assert xn_member(s, n, k_max).is_member
            for m in range(n + 1, n + 3):
                assert xn_member(s, m, k_max).is_member

    def test_members_satisfy_closure_condition(self):
        for s, n in _member_points():
            k_max = n + 3
            assert xn_member(s, n, k_max).is_member
            for k in range(n + 1, k_max + 1):
                assert closure_necessary(s, n, k).passed
