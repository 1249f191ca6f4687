import logging
from dataclasses import dataclass, field
from enum import Enum

from config import DEFAULT_KMAX
from utils.errors import CertificateFailure, InvalidInstance
from utils.itinerary import WitnessTail, magnitude_at, t_star, witness_sequence
from utils.tower_arith import (
    Lit,
    Ordering,
    compare,
    exact_inv,
    f_apply,
    fapp,
    inc,
    threshold,
)
from verifiers.dynamics import endpoint_record

logger = logging.getLogger(__name__)


class Verdict(Enum):
    MEMBER = "Member"
    NON_MEMBER = "NonMember"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Margin:
    """Outcome of comparing a t* value with a threshold."""

    k: int
    left: object
    right: object
    order: Ordering

    @property
    def strict(self):
        return self.order is Ordering.GT

    def as_dict(self):
        return {"k": self.k, "margin": f"{self.left} {self.order.symbol} {self.right}"}


@dataclass(frozen=True)
class TailRule:
    """One certified comparison at k_from that covers every larger k."""

    k_from: int
    margin: Margin

    @property
    def holds(self):
        return self.margin.strict

    def as_dict(self):
        return {"k_from": self.k_from, "holds": self.holds, **self.margin.as_dict()}


@dataclass(frozen=True)
class StratumVerdict:
    verdict: Verdict
    n: int
    k_max: int
    margins: tuple = ()
    witness_k: int = None
    tail_rule: TailRule = None

    @property
    def is_member(self):
        return self.verdict is Verdict.MEMBER

    def as_dict(self):
        return {
            "verdict": self.verdict.value,
            "n": self.n,
            "k_max": self.k_max,
            "witness_k": self.witness_k,
            "margins": [m.as_dict() for m in self.margins],
            "tail_rule": self.tail_rule.as_dict() if self.tail_rule else None,
        }


@dataclass(frozen=True)
class ClosureCheck:
    passed: bool
    margin: Margin

    def as_dict(self):
        return {"result": "Pass" if self.passed else "Fail", **self.margin.as_dict()}


@dataclass(frozen=True)
class Prop7Result:
    verified: bool
    hypothesis: Margin
    i: int = None
    term: Margin = None
    conclusion: Margin = None

    def as_dict(self):
        data = {
            "result": "Verified" if self.verified else "HypothesisFails",
            "hypothesis": self.hypothesis.as_dict(),
        }
        if self.verified:
            data.update(i=self.i, term=self.term.as_dict(), conclusion=self.conclusion.as_dict())
        return data


@dataclass(frozen=True)
class Claim8Result:
    k: int
    holds: bool
    margin: Margin
    chain: dict = field(default_factory=dict)

    def as_dict(self):
        return {"k": self.k, "result": "Holds" if self.holds else "Fails", **self.margin.as_dict(), **self.chain}


def witness_rule(s, n, k_from):
    """All-k rule for witness tails.

    Under sigma^(2k^2) the tail contributes F^a(k)(base) with
    a(k) = 2k^2 + offset - anchor, against the threshold F^(k - n)(1). The gap
    a(k) - (k - n) grows with k, so one strict comparison at k_from covers all
    k >= k_from.

    Returns:
        TailRule or None: None when the tail is not a witness tail
    """
    tail = s.tail
    if not isinstance(tail, WitnessTail):
        return None
    contribution = f_apply(exact_inv(0, tail.base), 2 * k_from * k_from + tail.offset - tail.anchor)
    thr = threshold(k_from, n)
    order = compare(contribution, thr)
    logger.debug("witness rule for n=%d from k=%d: %s", n, k_from, order.value)
    return TailRule(k_from, Margin(k_from, contribution, thr, order))


def xn_member(s, n, k_max=DEFAULT_KMAX):
    """Decide membership of s in X_n.

    Every n < k <= k_max is checked against t*(sigma^(2k^2) s) > F^(k-n)(1). A
    Member verdict also needs the witness-tail rule for k > k_max; without it
    the verdict is Unknown.
    """
    margins = []
    for k in range(n + 1, k_max + 1):
        value = t_star(s, 2 * k * k).value
        thr = threshold(k, n)
        margin = Margin(k, value, thr, compare(value, thr))
        margins.append(margin)
        if not margin.strict:
            return StratumVerdict(Verdict.NON_MEMBER, n, k_max, tuple(margins), witness_k=k)
    rule = witness_rule(s, n, max(k_max, n) + 1)
    if rule is not None and rule.holds:
        return StratumVerdict(Verdict.MEMBER, n, k_max, tuple(margins), tail_rule=rule)
    return StratumVerdict(Verdict.UNKNOWN, n, k_max, tuple(margins), tail_rule=rule)


def closure_necessary(s, n, k):
    """Necessary condition for closure(X_n): t*(sigma^(2k^2) s) >= F^(k-n)(1) - 1."""
    if k <= n:
        raise InvalidInstance(f"closure condition needs k > n, got k={k}, n={n}")
    value = t_star(s, 2 * k * k).value
    bound = exact_inv(0, inc(fapp(k - n, Lit(1)), -1))
    order = compare(value, bound)
    return ClosureCheck(order is not Ordering.LT, Margin(k, value, bound, order))


def prop7_check(s, k, j, l, n):
    """If F^-j|s_(2k^2+j)| > F^(k-n)(1) and 2l^2 lies strictly inside (2k^2, 2k^2+j),
    certify t*(sigma^(2l^2) s) > F^(l-n)(1) through the term at i = 2k^2 + j - 2l^2.
    """
    if not 2 * k * k < 2 * l * l < 2 * k * k + j:
        raise InvalidInstance(f"2l^2={2 * l * l} is not strictly inside ({2 * k * k}, {2 * k * k + j})")
    pos = 2 * k * k + j
    hyp_value = exact_inv(j, magnitude_at(s, pos))
    hyp_thr = threshold(k, n)
    hypothesis = Margin(k, hyp_value, hyp_thr, compare(hyp_value, hyp_thr))
    if not hypothesis.strict:
        return Prop7Result(False, hypothesis)

    i = pos - 2 * l * l
    goal = threshold(l, n)
    term_value = exact_inv(i, magnitude_at(s, pos))
    term = Margin(l, term_value, goal, compare(term_value, goal))
    sup_value = t_star(s, 2 * l * l).value
    conclusion = Margin(l, sup_value, goal, compare(sup_value, goal))
    if not (term.strict and conclusion.strict):
        record = {"k": k, "j": j, "l": l, "n": n, "term": term.as_dict(), "conclusion": conclusion.as_dict()}
        raise CertificateFailure(f"Proposition 7 conclusion failed for k={k}, j={j}, l={l}, n={n}", record)
    return Prop7Result(True, hypothesis, i, term, conclusion)


def claim8_inequality(k):
    """Certified verdict of F^(k^2)(1) - 1 > F^k(1)."""
    if k < 1:
        raise InvalidInstance(f"k must be >= 1, got {k}")
    left = inc(fapp(k * k, Lit(1)), -1)
    right = fapp(k, Lit(1))
    order = compare(left, right)
    return Claim8Result(k, order is Ordering.GT, Margin(k, left, right, order))


def claim8_chain(k):
    """Both steps of t* >= F^(k^2)(1) - 1 > F^k(1), the implication behind X being inside X_0.

    The first step is the upper half of the height sandwich and is recorded,
    not computed; the second is the certified inequality.
    """
    result = claim8_inequality(k)
    chain = {
        "orbit_condition": f"T >= F^{k * k}(1)",
        "sandwich_step": f"t* >= {result.margin.left}",
        "strict_step": result.holds,
        "in_X0": result.holds,
    }
    return Claim8Result(k, result.holds, result.margin, chain)


def canonical_xn_point(n, c=1):
    """The witness-tail point of X_n together with its t* and height bracket."""
    if c < 1:
        raise InvalidInstance(f"witness constant must be >= 1, got {c}")
    return endpoint_record(witness_sequence(n, c))


def stratum_index(s, n_max, k_max=DEFAULT_KMAX):
    """Least n <= n_max with s certified in X_n, which places s in Y. None if there is none."""
    for n in range(n_max + 1):
        if xn_member(s, n, k_max).is_member:
            return n
    return None
