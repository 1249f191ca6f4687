import math
from fractions import Fraction

import pytest

from utils.sigma_model import (
    ZERO_POINT,
    BallPiece,
    CoordinateConstraint,
    ErdosPoint,
    SigmaPoint,
    in_basis,
    in_En,
    in_Kn,
    l2_norm,
    least_stratum,
    random_sigma_point,
)


def test_point_validation():
    with pytest.raises(ValueError):
        ErdosPoint({0: 0})
    with pytest.raises(ValueError):
        ErdosPoint({-1: 2})
    assert ErdosPoint({2: 3, 0: 1}).support == ((0, 1), (2, 3))


def test_norm():
    p = ErdosPoint({0: 1, 1: 2})
    assert p.norm_squared() == Fraction(5, 4)
    assert abs(float(l2_norm(p)) - math.sqrt(1.25)) < 1e-12
    assert not in_Kn(p, 0)
    assert in_Kn(p, 1)


def test_En_membership():
    small = ErdosPoint({0: 1})
    wide = ErdosPoint({pos: 1 for pos in range(5)})
    q = SigmaPoint((small, wide))
    assert not in_En(q, 1)
    assert in_En(q, 2)
    assert least_stratum(q) == 2
    assert least_stratum(SigmaPoint()) == 0


def test_coordinate_zero_is_free():
    heavy = ErdosPoint({pos: 1 for pos in range(30)})
    assert least_stratum(SigmaPoint((heavy,))) == 0


def test_ball_piece_fixed_values():
    piece = BallPiece(ZERO_POINT, 10, {0: frozenset({2})})
    assert piece.contains(ErdosPoint({0: 2}))
    assert not piece.contains(ErdosPoint({0: 1}))
    assert not piece.contains(ZERO_POINT)


def test_basis_membership():
    constraints = [CoordinateConstraint((BallPiece(ZERO_POINT, Fraction(1, 2)),))]
    assert in_basis(SigmaPoint((ErdosPoint({3: 2}),)), constraints)
    assert not in_basis(SigmaPoint((ErdosPoint({3: 1}),)), constraints)
    assert in_basis(SigmaPoint(), constraints)


def test_strata_nest(rng):
    for _ in range(100):
        q = random_sigma_point(rng)
        n = least_stratum(q)
        assert in_En(q, n + 1)
        assert n == 0 or not in_En(q, n - 1)
