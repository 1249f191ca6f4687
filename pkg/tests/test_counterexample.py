import pytest

from utils.errors import CapExceeded, InvalidInstance
from utils.itinerary import ZERO_SEQUENCE, magnitude_at, witness_sequence
from utils.tower_arith import ExactInv, Lit, Ordering
from verifiers.counterexample import build_sN, choose_K, find_jk, jk_table, verify_claim9


class TestWitnessIndices:
    def test_find_jk(self, canonical0):
        assert find_jk(canonical0, 1, 0) == 1
        assert find_jk(canonical0, 2, 0) == 1

    def test_cap(self):
        with pytest.raises(CapExceeded):
            find_jk(ZERO_SEQUENCE, 1, 0, j_cap=5)

    def test_table_and_K(self, canonical0):
        assert jk_table(canonical0, 0, 3) == {1: 1}
        assert choose_K(canonical0, 0, 3, {1: 1}) == 2
        assert choose_K(canonical0, 0, 9, {1: 1, 2: 1}) == 3


class TestBuild:
    def test_small_instance(self, canonical0):
        report = build_sN(canonical0, 0, 3)
        assert report.K == 2
        assert report.prefix_agreement == 8
        assert report.tail_case == "replaced"
        assert report.replaced_positions == ()
        assert magnitude_at(report.sN, 3) == Lit(6560)
        assert magnitude_at(report.sN, 9) == Lit(26)
        assert report.tstar_at_2K2 == ExactInv(0, Lit(3))

    def test_needs_witness_tail(self):
        with pytest.raises(InvalidInstance):
            build_sN(ZERO_SEQUENCE, 0, 3)


class TestClaim9:
    def test_grid(self, canonical0):
        reports = verify_claim9(canonical0, 0, [3, 9])
        assert [r.K for r in reports] == [2, 3]
        assert all(r.passed for r in reports)
        first = reports[0].as_dict()
        assert first["exclusion"]["margin"] == "3 < 7"
        assert first["exclusion"]["result"] == "Fail"
        assert first["membership_Xn1"]["verdict"] == "Member"
        assert reports[0].floor_order is not Ordering.GT

    def test_K_raised_above_n_plus_one(self):
        (report,) = verify_claim9(witness_sequence(1), 1, [3])
        assert report.K_base == 2
        assert report.K == 3
        assert report.passed

    def test_start_must_be_member(self):
        with pytest.raises(InvalidInstance):
            verify_claim9(ZERO_SEQUENCE, 0, [3])

    def test_N_must_exceed_n(self):
        with pytest.raises(InvalidInstance):
            verify_claim9(witness_sequence(1), 1, [1])
