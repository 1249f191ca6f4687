import pytest

from utils.errors import NumericModeRequired
from utils.itinerary import (
    ZERO_SEQUENCE,
    Entry,
    ItinerarySeq,
    PeriodicTail,
    WitnessTail,
    constant_sequence,
    dominating_sequence,
    is_zero_beyond,
    magnitude_at,
    max_magnitude,
    random_numeric_sequence,
    shift,
    small_magnitude,
    t_star,
    witness_sequence,
)
from utils.tower_arith import ZERO, ExactInv, FApp, Lit, Ordering, compare, exact_inv, fapp, tower_max


class TestSequences:
    def test_prefix_overrides_tail(self):
        s = ItinerarySeq({1: Lit(4)}, PeriodicTail((2,)))
        assert magnitude_at(s, 0) == Lit(2)
        assert magnitude_at(s, 1) == Lit(4)

    def test_duplicate_positions_rejected(self):
        with pytest.raises(ValueError):
            ItinerarySeq([(1, Lit(2)), (1, Lit(3))])

    def test_sign_validation(self):
        with pytest.raises(ValueError):
            Entry(Lit(2), 0)

    def test_periodic_phase(self):
        tail = PeriodicTail((1, 0, 2), phase=1)
        assert [tail.magnitude(p).n for p in range(4)] == [0, 2, 1, 0]
        assert tail.shifted(2) == PeriodicTail((1, 0, 2), phase=0)

    def test_shift_drops_consumed_prefix(self):
        s = ItinerarySeq({0: Lit(5), 3: Lit(7)})
        shifted = shift(s, 2)
        assert magnitude_at(shifted, 1) == Lit(7)
        assert magnitude_at(shifted, 0) == Lit(0)


class TestWitnessTail:
    def test_canonical_positions(self, canonical0):
        assert magnitude_at(canonical0, 2) == Lit(0)
        assert magnitude_at(canonical0, 3) == Lit(6560)
        assert magnitude_at(canonical0, 9) == fapp(9, Lit(1))
        assert list(canonical0.tail.positions(20)) == [3, 9, 19]

    def test_offset_normalizes_k0(self):
        tail = WitnessTail(Lit(1), 1).shifted(10)
        assert tail.k0 == 3
        assert next(tail.positions()) == 9

    def test_anchor_beyond_first_witness_rejected(self):
        with pytest.raises(ValueError):
            WitnessTail(Lit(3), 1, anchor=8)

    def test_zero_base_rejected(self):
        with pytest.raises(ValueError):
            WitnessTail(Lit(0), 1)

    def test_contribution(self):
        assert WitnessTail(Lit(3), 2, anchor=8).shifted(8).contribution() == ExactInv(0, Lit(3))
        assert WitnessTail(Lit(1), 1).shifted(8).contribution() == ExactInv(0, FApp(5, Lit(6560)))


class TestTStar:
    def test_zero_sequence(self):
        cert = t_star(ZERO_SEQUENCE)
        assert cert.value is ZERO
        assert cert.attained_at is None

    def test_first_entry_never_counts(self):
        assert t_star(ItinerarySeq({0: Lit(5)})).value is ZERO

    def test_prefix_terms(self, late_entry):
        cert = t_star(late_entry)
        assert cert.value == ExactInv(0, Lit(2))
        assert cert.attained_at == 1
        assert t_star(ItinerarySeq({2: Lit(8)})).value == ExactInv(0, Lit(1))

    def test_constant_one(self):
        cert = t_star(constant_sequence(1))
        assert cert.value == ExactInv(1, Lit(1))
        assert cert.rule == "periodic"

    def test_witness(self, canonical0):
        cert = t_star(canonical0)
        assert cert.value == ExactInv(0, Lit(1))
        assert cert.attained_at == 3
        assert cert.rule == "witness"

    def test_shifted_witness(self, canonical0):
        assert t_star(canonical0, 8).value == ExactInv(0, FApp(5, Lit(6560)))

    def test_as_dict(self, late_entry):
        assert t_star(late_entry).as_dict() == {"value": "2", "attained_at": 1, "rule": "prefix", "window": 1}


class TestNumericMode:
    def test_small_magnitude(self):
        assert small_magnitude(Lit(4)) == 4
        with pytest.raises(NumericModeRequired):
            small_magnitude(FApp(1, Lit(13)))

    def test_max_magnitude(self):
        assert max_magnitude(constant_sequence(3)) == 3
        assert max_magnitude(ItinerarySeq({2: Lit(9)}, PeriodicTail((1, 4)))) == 9
        with pytest.raises(NumericModeRequired):
            max_magnitude(witness_sequence(0))

    def test_zero_beyond(self, late_entry):
        assert is_zero_beyond(late_entry, 2)
        assert not is_zero_beyond(late_entry, 1)
        assert not is_zero_beyond(constant_sequence(1), 50)
        assert is_zero_beyond(constant_sequence(0), 0)


class TestGenerators:
    def test_random_sequences_are_small(self, rng):
        for _ in range(50):
            s = random_numeric_sequence(rng, max_mag=9, support=12)
            assert max_magnitude(s) <= 9
            assert is_zero_beyond(s, 12)

    def test_domination(self, rng):
        for _ in range(50):
            s = random_numeric_sequence(rng, periodic=True)
            big = dominating_sequence(rng, s)
            for p in range(30):
                assert small_magnitude(magnitude_at(big, p)) >= small_magnitude(magnitude_at(s, p))


def _brute_t_star(s, window):
    return tower_max(exact_inv(k, magnitude_at(s, k)) for k in range(1, window + 1))[0]


class TestTStarInvariants:
    def test_shifts_compose(self, rng, canonical0):
        seqs = [random_numeric_sequence(rng, periodic=True) for _ in range(4)]
        seqs += [canonical0, witness_sequence(1), ItinerarySeq({4: Lit(9)}, PeriodicTail((0, 3)))]
        for s in seqs:
            for m in range(11):
                for n in range(11):
                    assert t_star(shift(s, m), n).value == t_star(s, m + n).value

    def test_matches_brute_force(self, rng):
        # past the prefix and two periods every residue class has already been seen
        for periodic in (False, True):
            for _ in range(20):
                s = random_numeric_sequence(rng, max_mag=9, support=12, periodic=periodic)
                assert t_star(s).value == _brute_t_star(s, 30)
                assert t_star(s, 3).value == _brute_t_star(shift(s, 3), 30)

    def test_domination_orders_t_star(self, rng):
        for _ in range(30):
            s = random_numeric_sequence(rng, periodic=True)
            big = dominating_sequence(rng, s)
            assert compare(t_star(s).value, t_star(big).value) is not Ordering.GT
