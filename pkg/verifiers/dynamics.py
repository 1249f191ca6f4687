import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from config import (
    DEFAULT_DEPTH_CAP,
    DEFAULT_TOL,
    NUMERIC_PRECISION,
    ORBIT_HORIZON,
)
from utils.errors import DepthInsufficient, HorizonExceeded, NumericModeRequired
from utils.itinerary import (
    PeriodicTail,
    is_zero_beyond,
    magnitude_at,
    max_magnitude,
    small_magnitude,
    t_star,
)
from utils.tower_arith import (
    ZERO,
    eval_enclosure,
    exact_inv,
    f_apply,
    f_interval,
    finv_interval,
    interval_context,
    outward_floats,
    tower_max,
    working_precision,
)

logger = logging.getLogger(__name__)

# Orbit heights above this are only tracked by a lower bound
_BLOWUP = 2**10


class InJVerdict(Enum):
    YES = "CertifiedYes"
    NO = "CertifiedNo"
    UNKNOWN = "Unknown"


class Bound(Enum):
    HOLDS = "HOLDS"
    TIGHT = "TIGHT"
    VIOLATED = "VIOLATED"


@dataclass(frozen=True)
class EndpointRecord:
    """An endpoint <t_s, s> with its certified height data.

    ``enclosure`` is an interval containing t_s in numeric mode. In tower mode
    it is None and t_s is only known to lie in [height_floor, height_floor + 1].
    """

    seq: object
    t_star: object
    height_floor: object
    enclosure: object
    depth: int
    mode: str
    precision: int = NUMERIC_PRECISION

    @property
    def lo(self):
        return outward_floats(self.enclosure)[0] if self.enclosure is not None else None

    @property
    def hi(self):
        return outward_floats(self.enclosure)[1] if self.enclosure is not None else None

    @property
    def width(self):
        # computed at the record's precision; float endpoints are only good to one ulp
        with working_precision(self.precision):
            delta = self.enclosure.b - self.enclosure.a
        return outward_floats(delta)[1]

    def as_dict(self):
        data = {
            "mode": self.mode,
            "tstar": str(self.t_star),
            "height_floor": str(self.height_floor),
            "depth": self.depth,
        }
        if self.enclosure is not None:
            data.update(lo=repr(self.lo), hi=repr(self.hi))
        else:
            data.update(lo=str(self.height_floor), hi=f"{self.height_floor}+1")
        return data


@dataclass(frozen=True)
class InJResult:
    verdict: InJVerdict
    rule: str
    step: int = None

    def as_dict(self):
        return {"verdict": self.verdict.value, "rule": self.rule, "step": self.step}


@dataclass(frozen=True)
class SandwichResult:
    n: int
    lower: Bound
    upper: Bound
    orbit: object
    floor: object

    @property
    def violated(self):
        return Bound.VIOLATED in (self.lower, self.upper)

    def as_dict(self):
        lo, hi = outward_floats(self.orbit)
        return {
            "n": self.n,
            "lower": self.lower.value,
            "upper": self.upper.value,
            "orbit": [repr(lo), repr(hi)],
            "floor": str(self.floor),
        }


def _to_interval(t):
    ctx = interval_context()
    if isinstance(t, Fraction):
        return ctx.mpf(t.numerator) / t.denominator
    if isinstance(t, (list, tuple)):
        return ctx.mpf([_to_interval(t[0]).a, _to_interval(t[1]).b])
    if isinstance(t, float):
        return ctx.mpf(repr(t))
    return ctx.mpf(t)


def _real_interval(x):
    """Interval of a small TowerReal at the current precision."""
    ctx = interval_context()
    if x is ZERO:
        return ctx.mpf(0)
    return ctx.convert(eval_enclosure(x, ctx.prec).to_interval())


def _step(t, m):
    # One application of T -> F(T) - m, tracking only a lower bound past the blow-up point
    ctx = interval_context()
    if t.a > _BLOWUP:
        return ctx.mpf([t.a, ctx.inf])
    if t.b > _BLOWUP:
        return ctx.mpf([(f_interval(ctx.mpf(t.a)) - m).a, ctx.inf])
    return f_interval(t) - m


def orbit_height(t0, s, n, precision=NUMERIC_PRECISION, horizon=ORBIT_HORIZON):
    """Interval enclosure of T(F^n(<t0, s>)).

    Args:
        t0: Starting height (number, Fraction, [lo, hi] pair or interval)
        s (ItinerarySeq): Numeric-mode sequence
        n (int): Number of steps
        precision (int): Binary digits
        horizon (int): Largest allowed n

    Returns:
        ivmpf: Outward-rounded enclosure
    """
    if n > horizon:
        raise HorizonExceeded(f"orbit step {n} beyond horizon {horizon}")
    with working_precision(precision):
        t = _to_interval(t0)
        for j in range(n):
            t = _step(t, small_magnitude(magnitude_at(s, j)))
    return t


def orbit_step(t, s, j, precision=NUMERIC_PRECISION):
    """Enclosure of T(F^(j+1) x) from an enclosure ``t`` of T(F^j x)."""
    with working_precision(precision):
        return _step(_to_interval(t), small_magnitude(magnitude_at(s, j)))


def height_floor(s, n=0):
    """tau(sigma^n s) = max(F^-1|s_n|, F^-1(t*(sigma^n s))), the index-aligned lower height."""
    first = exact_inv(1, magnitude_at(s, n))
    rest = f_apply(t_star(s, n).value, -1)
    return tower_max([first, rest])[0]


def t_min_enclosure(s, depth, precision=NUMERIC_PRECISION, tol=DEFAULT_TOL):
    """Certified enclosure of the minimal escape height t_s by backward iteration.

    Two runs of t <- F^-1(|s_j| + t) from j = depth-1 down to 0: one seeded
    with 0, one with tau(sigma^depth s) + 1. The result is intersected with
    [tau(s), tau(s) + 1].

    Raises:
        DepthInsufficient: If the enclosure is wider than ``tol``
    """
    if depth < 1:
        raise ValueError(f"depth must be positive, got {depth}")
    mags = [small_magnitude(magnitude_at(s, j)) for j in range(depth)]
    floor = height_floor(s)
    tstar0 = t_star(s).value
    with working_precision(precision) as ctx:
        lo = ctx.mpf(0)
        if is_zero_beyond(s, depth):
            hi = ctx.mpf(0)
        else:
            hi = _real_interval(height_floor(s, depth)) + 1
        for m in reversed(mags):
            lo = finv_interval(lo + m)
            hi = finv_interval(hi + m)
        tau = _real_interval(floor)
        lower = max(lo.a, tau.a)
        upper = min(hi.b, (tau + 1).b)
        enclosure = ctx.mpf([lower, upper])
    record = EndpointRecord(s, tstar0, floor, enclosure, depth, "numeric", precision)
    if record.width > tol:
        raise DepthInsufficient(record.width, tol, depth, record)
    return record


def converge_t_min(s, tol=DEFAULT_TOL, depth_cap=DEFAULT_DEPTH_CAP, precision=NUMERIC_PRECISION, trail=None):
    """Grow the depth until the t_s enclosure is narrower than ``tol``.

    Every record tried on the way, the final one included, is appended to
    ``trail`` when a list is given.
    """
    depth = 1
    while True:
        try:
            record = t_min_enclosure(s, depth, precision, tol)
        except DepthInsufficient as e:
            if trail is not None:
                trail.append(e.record)
            if depth >= depth_cap:
                raise
            depth = min(depth * 2, depth_cap)
            logger.debug("t_min depth raised to %d", depth)
            continue
        if trail is not None:
            trail.append(record)
        return record


def endpoint_record(s, tol=DEFAULT_TOL, depth_cap=DEFAULT_DEPTH_CAP, precision=NUMERIC_PRECISION):
    """Numeric enclosure when every entry is small, else the tower-mode bracket."""
    try:
        max_magnitude(s)
    except NumericModeRequired:
        return EndpointRecord(s, t_star(s).value, height_floor(s), None, 0, "tower", precision)
    return converge_t_min(s, tol, depth_cap, precision)


def escape_height(m):
    """Least integer tau with F(tau) - m >= tau; orbits at or above it never come back."""
    tau = 0
    while 3**tau - 1 - m < tau:
        tau += 1
    return tau


def _integer_start(t):
    if isinstance(t, bool):
        return None
    if isinstance(t, int):
        return t
    if isinstance(t, Fraction) and t.denominator == 1:
        return int(t)
    if isinstance(t, float) and t.is_integer():
        return int(t)
    return None


def _exact_cycle(t, s, tau_esc):
    # Exact integer orbit until it repeats a (height, tail phase) state, escapes or goes negative
    start = max((pos for pos, _ in s.prefix), default=-1) + 1
    period = len(s.tail.block) if isinstance(s.tail, PeriodicTail) else 1
    seen = set()
    j = 0
    while True:
        if t < 0:
            return InJResult(InJVerdict.NO, "exact-orbit", j)
        if t >= tau_esc:
            return InJResult(InJVerdict.YES, "escape-trap", j)
        if j >= start:
            state = (t, (j - start) % period)
            if state in seen:
                return InJResult(InJVerdict.YES, "exact-cycle", j)
            seen.add(state)
        t = 3**t - 1 - small_magnitude(magnitude_at(s, j))
        j += 1


def in_J(t, s, horizon=ORBIT_HORIZON, precision=NUMERIC_PRECISION, tol=DEFAULT_TOL):
    """Decide whether <t, s> lies in J(F), with the certificate that settled it.

    Certificates are tried in order: an exact integer orbit, interval orbit
    heights with an escape trap, then comparison with the t_s enclosure.
    """
    tau_esc = escape_height(max_magnitude(s))
    start = _integer_start(t)
    if start is not None:
        return _exact_cycle(start, s, tau_esc)

    nonnegative = True
    with working_precision(precision):
        height = _to_interval(t)
        for n in range(horizon + 1):
            if height.b < 0:
                return InJResult(InJVerdict.NO, "orbit-negative", n)
            if height.a < 0:
                nonnegative = False
            elif nonnegative and height.a >= tau_esc:
                return InJResult(InJVerdict.YES, "escape-trap", n)
            if n < horizon:
                height = _step(height, small_magnitude(magnitude_at(s, n)))
        start_interval = _to_interval(t)

    try:
        record = converge_t_min(s, tol)
    except DepthInsufficient:
        return InJResult(InJVerdict.UNKNOWN, "window", horizon)
    if nonnegative and start_interval.a >= record.enclosure.b:
        return InJResult(InJVerdict.YES, "monotone-trap", horizon)
    if start_interval.b < record.enclosure.a:
        return InJResult(InJVerdict.NO, "below-t-min", 0)
    return InJResult(InJVerdict.UNKNOWN, "window", horizon)


def sandwich_check(s, n, record, precision=NUMERIC_PRECISION, orbit=None):
    """Check tau(sigma^n s) <= T(F^n x) <= tau(sigma^n s) + 1 at x = <t_min.hi, s>.

    A bound whose intervals overlap by no more than 2^(-precision/2) is TIGHT
    rather than HOLDS. Callers walking n upwards can pass ``orbit``, the
    enclosure of T(F^n x) they already hold.
    """
    floor = height_floor(s, n)
    if orbit is None:
        orbit = orbit_height(record.enclosure.b, s, n, precision, horizon=max(n, ORBIT_HORIZON))
    with working_precision(precision) as ctx:
        tau = _real_interval(floor)
        slack = ctx.mpf(2) ** (-(precision // 2))
        lower = _bound(tau, orbit, slack)
        upper = _bound(orbit, tau + 1, slack)
    return SandwichResult(n, lower, upper, orbit, floor)


def _bound(small, large, slack):
    # small <= large on intervals
    if small.b <= large.a:
        return Bound.HOLDS
    if small.a <= large.b and (small.b - large.a).b <= slack.b:
        return Bound.TIGHT
    return Bound.VIOLATED


def dominated_ordering(s, s_big, tol=DEFAULT_TOL):
    """lo(s) <= hi(s_big) for a sequence dominated by ``s_big``."""
    small = converge_t_min(s, tol)
    big = converge_t_min(s_big, tol)
    return small.enclosure.a <= big.enclosure.b, small, big

