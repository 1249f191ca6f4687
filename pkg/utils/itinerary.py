"""Finitely described integer sequences and their certified suprema t*."""

import logging
import math
from dataclasses import dataclass, field

from utils.errors import NumericModeRequired
from utils.tower_arith import (
    Lit,
    TowerExpr,
    ZERO,
    canonical,
    exact_inv,
    f_apply,
    fapp,
    tower_max,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Entry:
    mag: TowerExpr
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be 1 or -1, got {self.sign!r}")
        object.__setattr__(self, "mag", canonical(self.mag))


@dataclass(frozen=True)
class ZeroTail:
    def magnitude(self, p):
        return Lit(0)

    def shifted(self, n):
        return self


@dataclass(frozen=True)
class PeriodicTail:
    """Position p holds block[(p + phase) % len(block)]."""

    block: tuple
    phase: int = 0

    def __post_init__(self):
        block = tuple(self.block)
        if not block:
            raise ValueError("periodic block must not be empty")
        for v in block:
            Lit(v)
        object.__setattr__(self, "block", block)
        object.__setattr__(self, "phase", self.phase % len(block))

    def magnitude(self, p):
        return Lit(self.block[(p + self.phase) % len(self.block)])

    def shifted(self, n):
        return PeriodicTail(self.block, self.phase + n)

    def is_zero(self):
        return not any(self.block)


@dataclass(frozen=True)
class WitnessTail:
    """Magnitude F^(p + offset - anchor)(base) at positions p with p + offset = 2m^2 + 1, m >= k0.

    ``WitnessTail(Lit(c), k0)`` places F^(2k^2+1)(c) at every 2k^2+1 with k >= k0.
    The offset counts applied shifts; the anchor lowers the F index uniformly.
    """

    base: TowerExpr
    k0: int
    anchor: int = 0
    offset: int = 0

    def __post_init__(self):
        base = canonical(self.base)
        if base == Lit(0):
            raise ValueError("witness base must be positive")
        if self.k0 < 0 or self.offset < 0 or self.anchor < 0:
            raise ValueError("witness k0, anchor and offset must be nonnegative")
        k0 = self.k0
        while 2 * k0 * k0 + 1 < self.offset:
            k0 += 1
        if 2 * k0 * k0 + 1 < self.anchor:
            raise ValueError(f"anchor {self.anchor} lies beyond the first witness position")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "k0", k0)

    def witness_index(self, p):
        q = p + self.offset - 1
        if q < 0 or q % 2:
            return None
        m = math.isqrt(q // 2)
        if m * m != q // 2 or m < self.k0:
            return None
        return m

    def magnitude(self, p):
        if self.witness_index(p) is None:
            return Lit(0)
        return fapp(p + self.offset - self.anchor, self.base)

    def positions(self, upto=None):
        """Witness positions in increasing order, optionally bounded by ``upto``."""
        m = self.k0
        while True:
            p = 2 * m * m + 1 - self.offset
            if upto is not None and p > upto:
                return
            yield p
            m += 1

    def contribution(self):
        """The constant value F^-p(magnitude) shared by every witness position."""
        return f_apply(exact_inv(0, self.base), self.offset - self.anchor)

    def shifted(self, n):
        return WitnessTail(self.base, self.k0, self.anchor, self.offset + n)


@dataclass(frozen=True)
class ItinerarySeq:
    """An element of Z^omega: explicit prefix entries over a tail rule.

    Prefix entries override the tail at their positions.
    """

    prefix: tuple = ()
    tail: object = field(default_factory=ZeroTail)

    def __post_init__(self):
        items = self.prefix.items() if isinstance(self.prefix, dict) else self.prefix
        entries = []
        for pos, entry in items:
            if not isinstance(entry, Entry):
                entry = Entry(entry)
            if pos < 0:
                raise ValueError(f"prefix position {pos} is negative")
            entries.append((pos, entry))
        entries.sort(key=lambda item: item[0])
        positions = [pos for pos, _ in entries]
        if len(set(positions)) != len(positions):
            raise ValueError("prefix positions must be distinct")
        object.__setattr__(self, "prefix", tuple(entries))

    def prefix_positions(self):
        return {pos for pos, _ in self.prefix}

    def entry_at(self, k):
        for pos, entry in self.prefix:
            if pos == k:
                return entry
        return Entry(self.tail.magnitude(k))


@dataclass(frozen=True)
class SupCertificate:
    """t* value with the index that attains it.

    Every term beyond ``window`` is certified no larger than ``value``.
    """

    value: object
    attained_at: object
    rule: str
    window: int

    def as_dict(self):
        return {
            "value": str(self.value),
            "attained_at": self.attained_at,
            "rule": self.rule,
            "window": self.window,
        }


ZERO_SEQUENCE = ItinerarySeq()


def constant_sequence(v):
    return ItinerarySeq((), PeriodicTail((v,)))


def witness_sequence(n, c=1):
    """The canonical X_n point: WitnessTail(c, k0 = n + 1) and nothing else."""
    if c < 1:
        raise ValueError(f"witness constant must be >= 1, got {c}")
    return ItinerarySeq((), WitnessTail(Lit(c), n + 1))


def shift(s, n):
    """sigma^n(s)."""
    if n < 0:
        raise ValueError(f"shift must be nonnegative, got {n}")
    if n == 0:
        return s
    prefix = tuple((pos - n, entry) for pos, entry in s.prefix if pos >= n)
    return ItinerarySeq(prefix, s.tail.shifted(n))


def magnitude_at(s, k):
    """|s_k|, with the prefix taking precedence over the tail."""
    return s.entry_at(k).mag


def t_star(s, n=0):
    """sup over k >= 1 of F^-k |s_(n+k)|, certified.

    Args:
        s (ItinerarySeq): Sequence with a tail rule
        n (int): Shift applied first

    Returns:
        SupCertificate: Exact value, attaining index and window
    """
    view = shift(s, n)
    taken = view.prefix_positions()
    candidates = []
    for pos, entry in view.prefix:
        if pos >= 1 and entry.mag != Lit(0):
            candidates.append((pos, exact_inv(pos, entry.mag), "prefix"))

    tail = view.tail
    if isinstance(tail, PeriodicTail):
        period = len(tail.block)
        for r in range(period):
            p = r if r >= 1 else period
            while p in taken:
                p += period
            mag = tail.magnitude(p)
            if mag != Lit(0):
                candidates.append((p, exact_inv(p, mag), "periodic"))
    elif isinstance(tail, WitnessTail):
        p = next(q for q in tail.positions() if q >= 1 and q not in taken)
        candidates.append((p, tail.contribution(), "witness"))

    if not candidates:
        return SupCertificate(ZERO, None, "empty", 0)
    value, i = tower_max(c[1] for c in candidates)
    window = max(c[0] for c in candidates)
    return SupCertificate(value, candidates[i][0], candidates[i][2], window)


def small_magnitude(mag):
    """Integer value of a numeric-mode magnitude."""
    if not isinstance(mag, Lit):
        raise NumericModeRequired(f"magnitude {mag} is tower-sized")
    return mag.n


def max_magnitude(s):
    """Largest entry of a numeric-mode sequence."""
    if isinstance(s.tail, WitnessTail):
        raise NumericModeRequired("witness tails have unbounded entries")
    values = [small_magnitude(entry.mag) for _, entry in s.prefix]
    if isinstance(s.tail, PeriodicTail):
        values.extend(s.tail.block)
    return max(values, default=0)


def is_zero_beyond(s, d):
    """True when every entry at a position >= d is zero."""
    if isinstance(s.tail, WitnessTail):
        return False
    if isinstance(s.tail, PeriodicTail) and not s.tail.is_zero():
        return False
    return all(entry.mag == Lit(0) for pos, entry in s.prefix if pos >= d)


def random_numeric_sequence(rng, max_mag=9, support=12, periodic=False):
    """Seeded random sequence with small entries.

    With ``periodic`` the tail repeats a short random block, otherwise it is zero.
    """
    length = rng.randint(1, support)
    prefix = {}
    for pos in range(length):
        if rng.random() < 0.7:
            prefix[pos] = Entry(Lit(rng.randint(0, max_mag)), rng.choice((1, -1)))
    if periodic:
        block = tuple(rng.randint(0, max_mag) for _ in range(rng.randint(1, 3)))
        return ItinerarySeq(prefix, PeriodicTail(block))
    return ItinerarySeq(prefix)


def dominating_sequence(rng, s, bump=2, extra=2):
    """A sequence whose magnitudes are >= those of ``s`` at every position."""
    def bumped(v):
        return Lit(v + rng.randint(0, bump))

    prefix = {pos: Entry(bumped(small_magnitude(entry.mag)), entry.sign) for pos, entry in s.prefix}
    tail = s.tail
    if isinstance(tail, PeriodicTail):
        tail = PeriodicTail(tuple(v + rng.randint(0, bump) for v in tail.block), tail.phase)
    top = max(prefix, default=0) + 4
    for _ in range(extra):
        pos = rng.randint(0, top)
        if pos not in prefix:
            # the new entry must dominate both s and the bumped tail here
            floor = max(small_magnitude(s.tail.magnitude(pos)), small_magnitude(tail.magnitude(pos)))
            prefix[pos] = Entry(bumped(floor))
    return ItinerarySeq(prefix, tail)
