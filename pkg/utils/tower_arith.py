"""Exact and interval arithmetic for numbers built from F(t) = 3^t - 1.

Tower-sized integers are kept symbolically as ``TowerExpr`` trees (``Lit``,
``FApp``, ``Inc``). Reals of the form F^-k(e) are ``ExactInv`` values. When a
comparison cannot be settled symbolically or by exact integer evaluation, both
sides are turned into level-index enclosures: a value v is written F^m(r) with
r in [log3(2), 1) and r enclosed by an outward-rounded mpmath interval.
"""

import logging
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

from mpmath.ctx_iv import MPIntervalContext
from mpmath.libmp import round_ceiling, round_floor, to_float

from config import (
    LIT_CAP,
    INC_CAP,
    START_PRECISION,
    PRECISION_CAP,
    PRECISION_GROWTH,
    EXACT_GUARD_EXPONENT,
    MAX_INTERVAL_LEVEL,
)
from utils.errors import UnresolvedComparison, TooLarge

logger = logging.getLogger(__name__)

# Largest n with F(n) = 3^n - 1 still a literal
_FOLD_MAX = max(n for n in range(64) if 3**n - 1 <= LIT_CAP)
_MAX_NORMALIZE_STEPS = 64


class Ordering(Enum):
    LT = "LT"
    EQ = "EQ"
    GT = "GT"

    @property
    def symbol(self):
        return {"LT": "<", "EQ": "=", "GT": ">"}[self.value]

    def flip(self):
        return {Ordering.LT: Ordering.GT, Ordering.GT: Ordering.LT}.get(self, self)


# ---------------------------------------------------------------------------
# TowerExpr
# ---------------------------------------------------------------------------

class TowerExpr:
    """Base class for exact nonnegative integers of tower magnitude."""

    __slots__ = ()


def _check_int(name, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be an integer, got {value!r}")


@dataclass(frozen=True)
class Lit(TowerExpr):
    n: int

    def __post_init__(self):
        _check_int("literal", self.n)
        if not 0 <= self.n <= LIT_CAP:
            raise ValueError(f"literal {self.n} outside [0, {LIT_CAP}]")

    def __str__(self):
        return str(self.n)


@dataclass(frozen=True)
class FApp(TowerExpr):
    j: int
    e: TowerExpr

    def __post_init__(self):
        _check_int("F exponent", self.j)
        if self.j < 1:
            raise ValueError(f"F exponent must be >= 1, got {self.j}")
        if not isinstance(self.e, TowerExpr):
            raise ValueError(f"F argument must be a tower expression, got {self.e!r}")

    def __str__(self):
        return f"F^{self.j}({self.e})"


@dataclass(frozen=True)
class Inc(TowerExpr):
    e: TowerExpr
    c: int

    def __post_init__(self):
        _check_int("increment", self.c)
        if abs(self.c) > INC_CAP:
            raise ValueError(f"increment {self.c} outside [-{INC_CAP}, {INC_CAP}]")
        if not isinstance(self.e, TowerExpr):
            raise ValueError(f"increment base must be a tower expression, got {self.e!r}")
        if self.c < 0:
            try:
                base = eval_exact(self.e)
            except TooLarge:
                # the base is beyond F(guard), far above any increment
                return
            if base + self.c < 0:
                raise ValueError(f"{self.e}{self.c:+d} is negative")

    def __str__(self):
        return f"{self.e}{self.c:+d}"


def _log3_exact(v):
    """Return m with 3^m == v, or None."""
    if v < 1:
        return None
    m = 0
    while v % 3 == 0:
        v //= 3
        m += 1
    return m if v == 1 else None


def _from_int(v):
    # Canonical form of an explicit integer just above the literal range
    if v < 0:
        raise ValueError(f"tower value {v} is negative")
    if v <= LIT_CAP:
        return Lit(v)
    m = _log3_exact(v + 1)
    if m is not None:
        return FApp(1, Lit(m))
    if v - LIT_CAP <= INC_CAP:
        return Inc(Lit(LIT_CAP), v - LIT_CAP)
    return None


def fapp(j, e):
    """F^j(e) in canonical form. Nested applications merge and small literals fold."""
    _check_int("F exponent", j)
    if j < 0:
        raise ValueError(f"F exponent must be >= 0, got {j}")
    if j == 0:
        return e
    if isinstance(e, FApp):
        return FApp(j + e.j, e.e)
    if isinstance(e, Lit):
        n = e.n
        if n == 0:
            return e
        while j > 0 and n <= _FOLD_MAX:
            n = 3**n - 1
            j -= 1
        return Lit(n) if j == 0 else FApp(j, Lit(n))
    return FApp(j, e)


def inc(e, c):
    """e + c in canonical form."""
    _check_int("increment", c)
    if abs(c) > INC_CAP:
        raise ValueError(f"increment {c} outside [-{INC_CAP}, {INC_CAP}]")
    if c == 0:
        return e
    if isinstance(e, Inc):
        return inc(e.e, e.c + c)
    if isinstance(e, Lit):
        result = _from_int(e.n + c)
        if result is None:
            raise ValueError(f"{e}{c:+d} is outside the representable range")
        return result
    if e.j == 1 and isinstance(e.e, Lit) and e.e.n <= _FOLD_MAX + 1:
        result = _from_int(3**e.e.n - 1 + c)
        if result is not None:
            return result
    return Inc(e, c)


def canonical(e):
    if isinstance(e, Lit):
        return e
    if isinstance(e, FApp):
        return fapp(e.j, canonical(e.e))
    if isinstance(e, Inc):
        return inc(canonical(e.e), e.c)
    raise TypeError(f"not a tower expression: {e!r}")


def base_and_offset(e):
    if isinstance(e, Inc):
        return e.e, e.c
    return e, 0


@lru_cache(maxsize=4096)
def eval_exact(e):
    """Exact integer value of a tower expression.

    Args:
        e (TowerExpr): Expression to evaluate

    Returns:
        int: The value

    Raises:
        TooLarge: If an exponent above the configured guard would be needed
    """
    if isinstance(e, Lit):
        return e.n
    if isinstance(e, Inc):
        return eval_exact(e.e) + e.c
    v = eval_exact(e.e)
    for _ in range(e.j):
        if v > EXACT_GUARD_EXPONENT:
            raise TooLarge(f"{e} needs an exponent above {EXACT_GUARD_EXPONENT}")
        v = 3**v - 1
    return v


def exact_feasible(e):
    try:
        eval_exact(e)
    except TooLarge:
        return False
    return True


# ---------------------------------------------------------------------------
# TowerReal
# ---------------------------------------------------------------------------

class TowerReal:
    __slots__ = ()


@dataclass(frozen=True)
class _Zero(TowerReal):
    def __str__(self):
        return "0"


ZERO = _Zero()


@dataclass(frozen=True)
class ExactInv(TowerReal):
    """F^-k(val(e)). Build through ``exact_inv`` to get the canonical form."""

    k: int
    e: TowerExpr

    def __post_init__(self):
        _check_int("inverse depth", self.k)
        if self.k < 0:
            raise ValueError(f"inverse depth must be >= 0, got {self.k}")
        if not isinstance(self.e, TowerExpr):
            raise ValueError(f"not a tower expression: {self.e!r}")

    def __str__(self):
        return str(self.e) if self.k == 0 else f"F^-{self.k}({self.e})"


@dataclass(frozen=True)
class Enclosure(TowerReal):
    """F^level(r) for some r in ``mantissa``.

    The mantissa sits in [log3(2), 1) up to its own rounding width; the exact
    value 1 is stored at level 1 with a mantissa around log3(2).
    """

    level: int
    mantissa: object = field(compare=False)
    precision: int = START_PRECISION

    def to_interval(self):
        """Real interval of the value. Only levels up to MAX_INTERVAL_LEVEL are expanded."""
        if self.level > MAX_INTERVAL_LEVEL:
            raise TooLarge(f"level {self.level} enclosure is too large for a real interval")
        with working_precision(self.precision):
            v = self.mantissa
            for _ in range(self.level):
                v = f_interval(v)
            for _ in range(-self.level):
                v = finv_interval(v)
        return v

    def __str__(self):
        return f"F^{self.level}({interval_context().nstr(self.mantissa, 12)})"


def exact_inv(k, e):
    """Canonical F^-k(e): cancels F^-k against F^j and strips exact powers of three."""
    _check_int("inverse depth", k)
    if k < 0:
        raise ValueError(f"inverse depth must be >= 0, got {k}")
    e = canonical(e)
    if e == Lit(0):
        return ZERO
    if isinstance(e, FApp):
        m = min(k, e.j)
        k -= m
        e = fapp(e.j - m, e.e)
    while k > 0 and isinstance(e, Lit):
        m = _log3_exact(e.n + 1)
        if m is None:
            break
        e = Lit(m)
        k -= 1
    return ExactInv(k, e)


def as_real(x):
    if isinstance(x, TowerExpr):
        return exact_inv(0, x)
    if isinstance(x, ExactInv):
        return exact_inv(x.k, x.e)
    if isinstance(x, (_Zero, Enclosure)):
        return x
    raise TypeError(f"not a tower value: {x!r}")


def f_apply(x, j):
    """F^j(x) for signed j. Symbolic values shift their index exactly."""
    _check_int("F exponent", j)
    x = as_real(x)
    if x is ZERO or j == 0:
        return x
    if isinstance(x, Enclosure):
        return Enclosure(x.level + j, x.mantissa, x.precision)
    if j > 0:
        if j >= x.k:
            return exact_inv(0, fapp(j - x.k, x.e))
        return exact_inv(x.k - j, x.e)
    return exact_inv(x.k - j, x.e)


def threshold(k, n):
    """F^(k-n)(1); for k < n this is the exact inverse F^-(n-k)(1)."""
    if k - n >= 0:
        return exact_inv(0, fapp(k - n, Lit(1)))
    return exact_inv(n - k, Lit(1))


# ---------------------------------------------------------------------------
# Precision handling
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _context_at(bits):
    # contexts are shared between threads and never change precision after this
    ctx = MPIntervalContext()
    ctx.prec = bits
    return ctx


_interval = ContextVar("interval_context", default=_context_at(START_PRECISION))


def interval_context():
    """The interval context in effect for the current thread or task."""
    return _interval.get()


@contextmanager
def working_precision(bits):
    """Run the block with a ``bits``-digit interval context.

    The context lives in a ContextVar, so concurrent callers never see each
    other's precision and the module-level ``mpmath.iv`` is left alone.
    """
    token = _interval.set(_context_at(bits))
    try:
        yield _interval.get()
    finally:
        _interval.reset(token)


class PrecisionAudit:
    def __init__(self):
        self.max_precision = 0
        self.numeric_comparisons = 0
        self.escalations = 0

    def note(self, bits, escalated):
        self.max_precision = max(self.max_precision, bits)
        if escalated:
            self.escalations += 1

    def as_dict(self):
        return {
            "max_precision": self.max_precision,
            "numeric_comparisons": self.numeric_comparisons,
            "escalations": self.escalations,
        }


_audit = ContextVar("precision_audit", default=None)


@contextmanager
def precision_audit():
    """Collect the highest precision used by comparisons made inside the block."""
    audit = PrecisionAudit()
    token = _audit.set(audit)
    try:
        yield audit
    finally:
        _audit.reset(token)


def precision_schedule(start=START_PRECISION):
    p = start
    while True:
        yield p
        if p >= PRECISION_CAP:
            return
        p = min(p * PRECISION_GROWTH, PRECISION_CAP)


# ---------------------------------------------------------------------------
# Interval primitives (in the current interval context)
# ---------------------------------------------------------------------------

def ln3():
    return interval_context().ln(3)


def log3_2():
    ctx = interval_context()
    return ctx.ln(2) / ctx.ln(3)


def f_interval(v):
    """F(v) = 3^v - 1 on an interval."""
    ctx = interval_context()
    return ctx.exp(ctx.convert(v) * ln3()) - 1


def finv_interval(v):
    """F^-1(v) = log3(v + 1) on an interval."""
    ctx = interval_context()
    return ctx.ln(ctx.convert(v) + 1) / ln3()


def outward_floats(v):
    """Float endpoints of an interval, rounded outward."""
    a, b = v._mpi_
    return to_float(a, rnd=round_floor), to_float(b, rnd=round_ceiling)


def _normalize(level, v):
    low = log3_2()
    for _ in range(_MAX_NORMALIZE_STEPS):
        if v.a >= 1:
            v = finv_interval(v)
            level += 1
        elif v.b < low.a and v.a > 0:
            v = f_interval(v)
            level -= 1
        else:
            break
    return level, v


def _level_of(e):
    ctx = interval_context()
    if isinstance(e, Lit):
        if e.n == 0:
            raise ValueError("zero has no level-index form")
        return _normalize(0, ctx.mpf(e.n))
    if isinstance(e, FApp):
        level, mant = _level_of(e.e)
        return level + e.j, mant
    inner, c = e.e, e.c
    if isinstance(inner, Lit):
        return _normalize(0, ctx.mpf(inner.n + c))
    return _perturbed_level(inner, c)


def _perturbed_level(inner, c):
    # inner is F^L(r0) with L >= 1; find the mantissa of F^L(r0) + c
    ctx = interval_context()
    top, r0 = _level_of(inner)
    cutoff = ctx.prec
    ups = [r0]
    while len(ups) <= top and ups[-1].a < cutoff:
        ups.append(f_interval(ups[-1]))
    if len(ups) == top + 1:
        return _normalize(0, ups[-1] + c)
    eps = (ctx.mpf(2 * abs(c)) * ctx.exp(-cutoff * ln3())).b
    d = ctx.mpf([0, eps]) if c > 0 else ctx.mpf([-eps, 0])
    for u in reversed(ups[1:]):
        d = ctx.ln(1 + d / (u + 1)) / ln3()
    return _normalize(top, ups[0] + d)


def eval_enclosure(x, precision=START_PRECISION):
    """Level-index enclosure of a tower value.

    Args:
        x (TowerExpr | TowerReal): Value to enclose
        precision (int): Binary digits of the interval arithmetic

    Returns:
        Enclosure: Canonical enclosure, or ZERO for the value 0
    """
    if not START_PRECISION <= precision <= PRECISION_CAP:
        raise ValueError(f"precision {precision} outside [{START_PRECISION}, {PRECISION_CAP}]")
    x = as_real(x)
    if x is ZERO or isinstance(x, Enclosure):
        return x
    level, mant = _enclose_expr(x.e, precision)
    return Enclosure(level - x.k, mant, precision)


@lru_cache(maxsize=8192)
def _enclose_expr(e, precision):
    with working_precision(precision):
        return _level_of(e)


def _sane(m):
    return m.a > 0.5 and m.b < 1.5


def _separate(x, y):
    """Order two enclosures, or None when they still overlap."""
    if x.level < y.level:
        result = _separate(y, x)
        return result.flip() if result else None
    d = x.level - y.level
    if d >= 3:
        return Ordering.GT if _sane(x.mantissa) and _sane(y.mantissa) else None
    lifted = x.mantissa
    for _ in range(d):
        lifted = f_interval(lifted)
    if lifted.b < y.mantissa.a:
        return Ordering.LT
    if lifted.a > y.mantissa.b:
        return Ordering.GT
    return None


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

def compare(a, b, *, exact=True, precision=START_PRECISION):
    """Certified order of two tower values.

    EQ is only returned for structurally identical canonical forms. Strict
    verdicts come from symbolic rules, exact integers, or separated
    enclosures at an escalating precision.

    Args:
        a, b (TowerExpr | TowerReal): Values to compare
        exact (bool): Allow the exact integer path
        precision (int): First precision of the numeric schedule

    Returns:
        Ordering: LT, EQ or GT

    Raises:
        UnresolvedComparison: If the precision cap cannot separate the values
    """
    ra, rb = as_real(a), as_real(b)
    if ra == rb and not isinstance(ra, Enclosure):
        return Ordering.EQ
    if ra is ZERO:
        return Ordering.LT
    if rb is ZERO:
        return Ordering.GT
    if isinstance(ra, ExactInv) and isinstance(rb, ExactInv):
        top = max(ra.k, rb.k)
        return _compare_expr(fapp(top - ra.k, ra.e), fapp(top - rb.k, rb.e), exact, precision)
    return _compare_numeric(ra, rb, precision)


def _compare_expr(ea, eb, exact, precision):
    if ea == eb:
        return Ordering.EQ
    if isinstance(ea, FApp) and isinstance(eb, FApp):
        m = min(ea.j, eb.j)
        ea, eb = fapp(ea.j - m, ea.e), fapp(eb.j - m, eb.e)
    base_a, off_a = base_and_offset(ea)
    base_b, off_b = base_and_offset(eb)
    if base_a == base_b:
        return Ordering.LT if off_a < off_b else Ordering.GT
    if exact:
        try:
            va, vb = eval_exact(ea), eval_exact(eb)
        except TooLarge:
            pass
        else:
            if va == vb:
                raise UnresolvedComparison(ea, eb, None)
            return Ordering.LT if va < vb else Ordering.GT
    return _compare_numeric(exact_inv(0, ea), exact_inv(0, eb), precision)


def _compare_numeric(ra, rb, precision):
    audit = _audit.get()
    if audit is not None:
        audit.numeric_comparisons += 1
    bits = precision
    for step, bits in enumerate(precision_schedule(precision)):
        left = eval_enclosure(ra, bits)
        right = eval_enclosure(rb, bits)
        with working_precision(bits):
            result = _separate(left, right)
        if audit is not None:
            audit.note(bits, step > 0)
        if result is not None:
            if step:
                logger.debug("separated %s and %s at %d bits", ra, rb, bits)
            return result
    raise UnresolvedComparison(ra, rb, bits)


def tower_max(values):
    """Certified maximum of a non-empty sequence; ties keep the first index.

    Returns:
        tuple: (value, index)
    """
    values = list(values)
    if not values:
        raise ValueError("tower_max of an empty sequence")
    best, where = as_real(values[0]), 0
    for i, v in enumerate(values[1:], start=1):
        if compare(v, best) is Ordering.GT:
            best, where = as_real(v), i
    return best, where
