import math
import threading
from concurrent.futures import ThreadPoolExecutor

import pytest
from mpmath import iv

from config import LIT_CAP, START_PRECISION
from utils.errors import TooLarge
from utils.tower_arith import (
    ZERO,
    ExactInv,
    FApp,
    Inc,
    Lit,
    Ordering,
    canonical,
    compare,
    eval_enclosure,
    eval_exact,
    exact_feasible,
    exact_inv,
    f_apply,
    fapp,
    inc,
    interval_context,
    outward_floats,
    precision_audit,
    precision_schedule,
    threshold,
    tower_max,
    working_precision,
)

# increasing by exact value; the top half needs the numeric path
LADDER = [
    Lit(1),
    Lit(7),
    Lit(26),
    inc(fapp(1, Lit(13)), -1),
    fapp(1, Lit(13)),
    inc(fapp(1, Lit(13)), 1),
    fapp(1, Lit(26)),
    fapp(3, Lit(2)),
    inc(fapp(1, Lit(6560)), 5),
    fapp(2, Lit(26)),
]


class TestConstructors:
    def test_small_literals_fold(self):
        assert fapp(1, Lit(1)) == Lit(2)
        assert fapp(2, Lit(1)) == Lit(8)
        assert fapp(3, Lit(1)) == Lit(6560)

    def test_fold_stops_above_literal_range(self):
        assert fapp(4, Lit(1)) == FApp(1, Lit(6560))
        assert fapp(11, Lit(3)) == FApp(10, Lit(26))
        assert fapp(3, Lit(2)) == fapp(4, Lit(1))

    def test_zero_and_identity(self):
        assert fapp(5, Lit(0)) == Lit(0)
        assert fapp(0, FApp(2, Lit(20))) == FApp(2, Lit(20))

    def test_nested_applications_merge(self):
        assert fapp(1, FApp(2, Lit(13))) == FApp(3, Lit(13))

    def test_increments(self):
        assert inc(Lit(5), 2) == Lit(7)
        assert inc(inc(FApp(1, Lit(20)), 1), -1) == FApp(1, Lit(20))
        with pytest.raises(ValueError):
            inc(Lit(1), -2)

    def test_values_just_above_literal_cap(self):
        # F(13) = 1594322 is out of literal range, one below it is an offset from the cap
        assert fapp(1, Lit(13)) == FApp(1, Lit(13))
        below = inc(FApp(1, Lit(13)), -1)
        assert below == Inc(Lit(LIT_CAP), 594321)
        assert eval_exact(below) == 3**13 - 2

    def test_literal_validation(self):
        with pytest.raises(ValueError):
            Lit(-1)
        with pytest.raises(ValueError):
            Lit(LIT_CAP + 1)
        with pytest.raises(ValueError):
            FApp(0, Lit(1))

    def test_raw_increment_checks_small_bases(self):
        # F(1) = 2, so 2 - 5 is negative even though the base is not a literal
        with pytest.raises(ValueError):
            Inc(FApp(1, Lit(1)), -5)
        assert eval_exact(Inc(FApp(1, Lit(1)), -2)) == 0
        assert Inc(FApp(3, Lit(26)), -5).c == -5

    def test_canonical_of_raw_tree(self):
        assert canonical(FApp(2, Lit(1))) == Lit(8)
        assert canonical(Inc(FApp(1, Lit(2)), 1)) == Lit(9)

    def test_text_form(self):
        assert str(FApp(10, Lit(26))) == "F^10(26)"
        assert str(inc(fapp(2, Lit(26)), 1)) == "F^2(26)+1"
        assert str(ExactInv(2, Lit(1))) == "F^-2(1)"


class TestExactEvaluation:
    def test_values(self):
        assert eval_exact(Lit(7)) == 7
        assert eval_exact(fapp(2, Lit(3))) == 3**26 - 1
        assert eval_exact(inc(fapp(4, Lit(1)), -1)) == 3**6560 - 2

    def test_guard(self):
        with pytest.raises(TooLarge):
            eval_exact(FApp(1, Lit(30000)))
        assert not exact_feasible(fapp(3, Lit(3)))
        assert exact_feasible(fapp(3, Lit(2)))


class TestExactInverse:
    def test_strips_powers_of_three(self):
        assert exact_inv(1, Lit(8)) == ExactInv(0, Lit(2))
        assert exact_inv(2, Lit(8)) == ExactInv(0, Lit(1))
        assert exact_inv(3, Lit(8)) == ExactInv(1, Lit(1))

    def test_cancels_applications(self):
        assert exact_inv(1, FApp(3, Lit(13))) == ExactInv(0, FApp(2, Lit(13)))

    def test_zero(self):
        assert exact_inv(4, Lit(0)) is ZERO

    def test_thresholds(self):
        assert threshold(2, 0) == ExactInv(0, Lit(8))
        assert threshold(0, 2) == ExactInv(2, Lit(1))

    def test_f_apply_shifts_index(self):
        assert f_apply(ExactInv(2, Lit(1)), 3) == ExactInv(0, Lit(2))
        assert f_apply(Lit(8), -1) == ExactInv(0, Lit(2))
        assert f_apply(ZERO, 5) is ZERO


class TestCompare:
    def test_literals(self):
        assert compare(Lit(3), Lit(7)) is Ordering.LT
        assert compare(Lit(7), Lit(3)) is Ordering.GT
        assert compare(Lit(3), Lit(3)) is Ordering.EQ

    def test_same_base_offsets(self):
        big = FApp(1, Lit(20))
        assert compare(big, inc(big, 1)) is Ordering.LT
        assert compare(inc(big, -2), inc(big, -1)) is Ordering.LT

    def test_zero_is_least(self):
        assert compare(ZERO, threshold(0, 5)) is Ordering.LT
        assert compare(threshold(0, 1), ZERO) is Ordering.GT

    def test_inverse_values_lift(self):
        # log3(2) against log3(1 + log3(2))
        assert compare(ExactInv(1, Lit(1)), ExactInv(2, Lit(1))) is Ordering.GT

    def test_small_k_inequality_fails(self):
        assert compare(inc(fapp(1, Lit(1)), -1), fapp(1, Lit(1))) is Ordering.LT

    def test_tower_inequality_needs_numeric_path(self):
        left = inc(fapp(36, Lit(1)), -1)
        right = fapp(6, Lit(1))
        with precision_audit() as audit:
            assert compare(left, right) is Ordering.GT
        assert audit.numeric_comparisons >= 1
        assert audit.max_precision >= 64

    def test_numeric_path_agrees_with_exact(self):
        a, b = fapp(3, Lit(3)), fapp(3, Lit(2))
        assert compare(a, b, exact=False) is Ordering.GT
        assert compare(b, a, exact=False) is Ordering.LT

    def test_tower_max_keeps_first_tie(self):
        value, index = tower_max([Lit(3), fapp(1, Lit(2)), Lit(8)])
        assert value == ExactInv(0, Lit(8))
        assert index == 1

    def test_tower_max_empty(self):
        with pytest.raises(ValueError):
            tower_max([])


class TestEnclosures:
    def test_one_sits_at_level_one(self):
        enc = eval_enclosure(Lit(1))
        lo, hi = outward_floats(enc.mantissa)
        assert enc.level == 1
        assert lo <= math.log(2) / math.log(3) <= hi

    def test_interval_contains_value(self):
        lo, hi = outward_floats(eval_enclosure(Lit(26)).to_interval())
        assert lo <= 26 <= hi
        assert hi - lo < 1e-9

    def test_inverse_interval(self):
        lo, hi = outward_floats(eval_enclosure(threshold(0, 1)).to_interval())
        assert abs(lo - math.log(2) / math.log(3)) < 1e-12
        assert abs(hi - math.log(2) / math.log(3)) < 1e-12

    def test_double_inverse_at_128_bits(self):
        enc = eval_enclosure(ExactInv(2, Lit(1)), 128)
        v = enc.to_interval()
        assert enc.precision == 128
        assert outward_floats(v.b - v.a)[1] < 1e-20
        lo, hi = outward_floats(v)
        expected = math.log(1 + math.log(2) / math.log(3)) / math.log(3)
        assert abs(lo - expected) < 1e-12 and abs(hi - expected) < 1e-12

    def test_non_canonical_inverse_contains_value(self):
        lo, hi = outward_floats(eval_enclosure(ExactInv(1, Lit(6560))).to_interval())
        assert lo <= 8.0 <= hi

    def test_high_levels_refuse_real_interval(self):
        with pytest.raises(TooLarge):
            eval_enclosure(fapp(3, Lit(26))).to_interval()

    def test_precision_range(self):
        with pytest.raises(ValueError):
            eval_enclosure(Lit(3), 32)

    def test_schedule(self):
        assert list(precision_schedule()) == [64, 256, 1024, 4096]


class TestOrdering:
    def test_flip_and_symbol(self):
        assert Ordering.LT.flip() is Ordering.GT
        assert Ordering.EQ.flip() is Ordering.EQ
        assert Ordering.GT.symbol == ">"


class TestInvariants:
    def test_ladder_is_increasing(self):
        for a, b in zip(LADDER, LADDER[1:]):
            assert compare(a, b) is Ordering.LT

    def test_f_preserves_order(self):
        for i, a in enumerate(LADDER):
            for b in LADDER[i + 1:]:
                assert compare(fapp(1, a), fapp(1, b)) is Ordering.LT
                assert compare(fapp(1, b), fapp(1, a)) is Ordering.GT

    @pytest.mark.parametrize("x", [
        exact_inv(2, Lit(1)),
        exact_inv(0, Lit(26)),
        exact_inv(0, fapp(1, Lit(13))),
        exact_inv(3, Lit(7)),
    ])
    def test_f_apply_round_trip(self, x):
        for j in range(-20, 21):
            assert f_apply(f_apply(x, j), -j) == x

    def test_verdicts_stable_at_double_precision(self):
        for i, a in enumerate(LADDER):
            for b in LADDER[i + 1:]:
                low = compare(a, b, exact=False, precision=64)
                high = compare(a, b, exact=False, precision=128)
                assert low is high is Ordering.LT


class TestIntervalContexts:
    def test_nested_blocks_restore(self):
        outer = interval_context()
        with working_precision(256) as ctx:
            assert interval_context() is ctx
            assert ctx.prec == 256
            with working_precision(1024):
                assert interval_context().prec == 1024
            assert interval_context().prec == 256
        assert interval_context() is outer

    def test_module_iv_untouched(self):
        before = iv.prec
        with precision_audit() as audit:
            compare(inc(fapp(36, Lit(1)), -1), fapp(6, Lit(1)), exact=False)
        with working_precision(4096):
            eval_enclosure(Lit(26), 4096)
        assert audit.numeric_comparisons >= 1
        assert iv.prec == before

    def test_threads_keep_their_own_precision(self):
        barrier = threading.Barrier(4)

        def precision_inside(bits):
            with working_precision(bits):
                barrier.wait(timeout=10)
                return interval_context().prec

        def precision_outside(_):
            return interval_context().prec

        bits = [64, 256, 1024, 4096] * 3
        with ThreadPoolExecutor(max_workers=4) as pool:
            assert list(pool.map(precision_inside, bits)) == bits
            assert set(pool.map(precision_outside, range(8))) == {START_PRECISION}
