"""Finite-support model of complete Erdos space, its sigma-product, the balls K_n and the sets E_n."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from mpmath.ctx_mp import MPContext

from config import NUMERIC_PRECISION

logger = logging.getLogger(__name__)


def _entry_value(den):
    return Fraction(0) if den == 0 else Fraction(1, den)


@dataclass(frozen=True)
class ErdosPoint:
    """Point of complete Erdos space with entry 1/d at each support position."""

    support: tuple = ()

    def __post_init__(self):
        items = self.support.items() if isinstance(self.support, dict) else self.support
        cleaned = []
        for pos, den in items:
            if pos < 0:
                raise ValueError(f"position {pos} is negative")
            if den < 1:
                raise ValueError(f"denominator {den} must be >= 1")
            cleaned.append((pos, den))
        cleaned.sort()
        if len({pos for pos, _ in cleaned}) != len(cleaned):
            raise ValueError("support positions must be distinct")
        object.__setattr__(self, "support", tuple(cleaned))

    def value_at(self, pos):
        for p, den in self.support:
            if p == pos:
                return Fraction(1, den)
        return Fraction(0)

    def is_zero(self):
        return not self.support

    def norm_squared(self):
        return sum((Fraction(1, den * den) for _, den in self.support), Fraction(0))


ZERO_POINT = ErdosPoint()


@dataclass(frozen=True)
class SigmaPoint:
    """Element of the sigma-product: coordinates past the list are the zero point."""

    coords: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))

    def coord(self, i):
        return self.coords[i] if i < len(self.coords) else ZERO_POINT

    def last_nonzero(self):
        for i in range(len(self.coords) - 1, -1, -1):
            if not self.coords[i].is_zero():
                return i
        return -1


@dataclass(frozen=True)
class BallPiece:
    """Closed ball {x : ||x - center|| <= radius} cut down by fixed coordinate values.

    ``fixed`` maps a position to the allowed denominators there, 0 meaning the value 0.
    """

    center: ErdosPoint = ZERO_POINT
    radius: Fraction = Fraction(1)
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def contains(self, p):
        positions = {pos for pos, _ in p.support} | {pos for pos, _ in self.center.support}
        dist = sum(((p.value_at(i) - self.center.value_at(i)) ** 2 for i in positions), Fraction(0))
        if dist > self.radius ** 2:
            return False
        for pos, allowed in self.fixed.items():
            den = next((d for q, d in p.support if q == pos), 0)
            if den not in allowed:
                return False
        return True


@dataclass(frozen=True)
class CoordinateConstraint:
    """Finite union of ball pieces."""

    pieces: tuple = ()

    def contains(self, p):
        return any(piece.contains(p) for piece in self.pieces)


@lru_cache(maxsize=None)
def _real_context(bits):
    # a private context per precision; the shared mpmath.mp is never touched
    ctx = MPContext()
    ctx.prec = bits
    return ctx


def l2_norm(p, precision=NUMERIC_PRECISION):
    """Norm of a point: exact rational sum of squares, then a rounded square root."""
    total = p.norm_squared()
    ctx = _real_context(precision)
    return ctx.sqrt(ctx.mpf(total.numerator) / total.denominator)


def in_Kn(p, n):
    """||p|| <= n + 1, decided exactly."""
    return p.norm_squared() <= (n + 1) ** 2


def in_En(q, n):
    """Coordinate 0 is free, coordinates 1..n lie in K_n and the rest are zero."""
    if q.last_nonzero() > n:
        return False
    return all(in_Kn(q.coord(i), n) for i in range(1, n + 1))


def in_basis(q, constraints):
    """Membership in (C_0 x ... x C_m x E^omega) intersected with the sigma-product."""
    return all(c.contains(q.coord(i)) for i, c in enumerate(constraints))


def least_stratum(q):
    """Least n with q in E_n."""
    n = max(q.last_nonzero(), 0)
    while not in_En(q, n):
        n += 1
    return n


def random_erdos_point(rng, max_pos=6, max_den=5, density=0.5):
    support = {pos: rng.randint(1, max_den) for pos in range(max_pos) if rng.random() < density}
    return ErdosPoint(support)


def random_sigma_point(rng, max_coords=4, **kwargs):
    return SigmaPoint(tuple(random_erdos_point(rng, **kwargs) for _ in range(rng.randint(0, max_coords))))
