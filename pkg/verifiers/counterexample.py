import logging
from dataclasses import dataclass, field, replace

from config import DEFAULT_J_CAP
from utils.errors import CapExceeded, CertificateFailure, InvalidInstance
from utils.itinerary import (
    Entry,
    ItinerarySeq,
    WitnessTail,
    magnitude_at,
    t_star,
)
from utils.tower_arith import (
    Lit,
    Ordering,
    as_real,
    compare,
    exact_inv,
    fapp,
    inc,
    threshold,
)
from verifiers.dynamics import height_floor
from verifiers.strata import Margin, closure_necessary, prop7_check, xn_member

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ApproximationReport:
    """One s^N of the approximation construction with its certificates."""

    n: int
    N: int
    jk_table: dict
    K_base: int
    K: int
    sN: ItinerarySeq
    tail_case: str
    replaced_positions: tuple = ()
    domination: tuple = ()
    membership: object = None
    branches: dict = field(default_factory=dict)
    exclusion: object = None
    tstar_at_2K2: object = None
    floor_order: object = None

    @property
    def prefix_agreement(self):
        return 2 * self.K * self.K

    @property
    def passed(self):
        return (
            all(m.order is not Ordering.GT for m in self.domination)
            and self.membership is not None
            and self.membership.is_member
            and self.exclusion is not None
            and not self.exclusion.passed
        )

    def as_dict(self):
        return {
            "n": self.n,
            "N": self.N,
            "jk_table": {str(k): j for k, j in sorted(self.jk_table.items())},
            "K_base": self.K_base,
            "K": self.K,
            "tail_case": self.tail_case,
            "replaced_positions": list(self.replaced_positions),
            "prefix_agreement": self.prefix_agreement,
            "domination": [m.as_dict() for m in self.domination],
            "membership_Xn1": self.membership.as_dict() if self.membership else None,
            "branches": {str(k): b for k, b in sorted(self.branches.items())},
            "exclusion": self.exclusion.as_dict() if self.exclusion else None,
            "tstar_at_2K2": str(self.tstar_at_2K2),
            "floor_order": self.floor_order.value if self.floor_order else None,
            "passed": self.passed,
        }


def find_jk(s, k, n, j_cap=DEFAULT_J_CAP):
    """Least j >= 1 with F^-j|s_(2k^2+j)| > F^(k-n)(1).

    Raises:
        CapExceeded: If no such j is found up to ``j_cap``
    """
    thr = threshold(k, n)
    for j in range(1, j_cap + 1):
        term = exact_inv(j, magnitude_at(s, 2 * k * k + j))
        if compare(term, thr) is Ordering.GT:
            return j
    raise CapExceeded(f"no j <= {j_cap} with F^-j|s_(2*{k}^2+j)| > F^{k - n}(1)")


def jk_table(s, n, N, j_cap=DEFAULT_J_CAP):
    table = {}
    k = n + 1
    while 2 * k * k <= N:
        table[k] = find_jk(s, k, n, j_cap)
        k += 1
    return table


def choose_K(s, n, N, jk):
    """Least K > n with 2K^2 >= max({N} and every 2k^2 + j(k))."""
    target = max([N] + [2 * k * k + j for k, j in jk.items()])
    K = n + 1
    while 2 * K * K < target:
        K += 1
    return K


def _check_dominated(new, old, where):
    order = compare(new, old)
    margin = Margin(where, new, old, order)
    if order is Ordering.GT:
        raise CertificateFailure(f"s^N is not dominated at position {where}", {"domination": margin.as_dict()})
    return margin


def build_sN(s, n, N, j_cap=DEFAULT_J_CAP):
    """Build s^N: copy s up to 2K^2, then replace large entries by F^j(F^(K-n-1)(1) + 1).

    K is raised to at least n + 2 so that the exclusion inequality is strict.
    """
    if not isinstance(s.tail, WitnessTail):
        raise InvalidInstance("the approximation needs a sequence with a witness tail")
    jk = jk_table(s, n, N, j_cap)
    K_base = choose_K(s, n, N, jk)
    K = max(K_base, n + 2)
    if K != K_base:
        logger.debug("K raised from %d to %d for n=%d, N=%d", K_base, K, n, N)
    top = 2 * K * K
    keep_thr = threshold(K, n + 1)
    bump = inc(fapp(K - n - 1, Lit(1)), 1)

    prefix = {}
    replaced = []
    domination = []
    for pos, entry in s.prefix:
        if pos <= top:
            prefix[pos] = entry
            continue
        j = pos - top
        if compare(exact_inv(j, entry.mag), keep_thr) is Ordering.GT:
            new_mag = fapp(j, bump)
            domination.append(_check_dominated(new_mag, entry.mag, pos))
            prefix[pos] = Entry(new_mag, entry.sign)
            replaced.append(pos)
        else:
            prefix[pos] = entry

    tail = s.tail
    for pos in tail.positions(top):
        if pos >= 0 and pos not in prefix:
            prefix[pos] = Entry(tail.magnitude(pos))

    tail_value = tail.shifted(top).contribution()
    if compare(tail_value, keep_thr) is Ordering.GT:
        domination.append(_check_dominated(as_real(bump), tail_value, "tail"))
        k0 = tail.k0
        while 2 * k0 * k0 + 1 - tail.offset <= top:
            k0 += 1
        new_tail = WitnessTail(bump, k0, anchor=top + tail.offset, offset=tail.offset)
        tail_case = "replaced"
    else:
        new_tail = tail
        tail_case = "kept"

    sN = ItinerarySeq(prefix, new_tail)
    return ApproximationReport(
        n=n,
        N=N,
        jk_table=jk,
        K_base=K_base,
        K=K,
        sN=sN,
        tail_case=tail_case,
        replaced_positions=tuple(replaced),
        domination=tuple(domination),
        tstar_at_2K2=t_star(sN, top).value,
    )


def _straddling(k, jk):
    for l, j in sorted(jk.items()):
        if 2 * l * l < 2 * k * k < 2 * l * l + j:
            return l, j
    return None


def _branches(report):
    # membership in X_(n+1) for n+1 < k < K, recorded per branch
    n, K, jk, sN = report.n, report.K, report.jk_table, report.sN
    branches = {}
    for k in range(n + 2, K):
        if k in jk:
            j = jk[k]
            term = exact_inv(j, magnitude_at(sN, 2 * k * k + j))
            margin = Margin(k, term, threshold(k, n), compare(term, threshold(k, n)))
            if not margin.strict:
                raise CertificateFailure(f"copied witness for k={k} lost", {"branch": margin.as_dict()})
            branches[k] = {"branch": "direct", "j": j, **margin.as_dict()}
            continue
        hit = _straddling(k, jk)
        if hit is None:
            value = t_star(sN, 2 * k * k).value
            margin = Margin(k, value, threshold(k, n + 1), compare(value, threshold(k, n + 1)))
            branches[k] = {"branch": "direct", **margin.as_dict()}
            continue
        l, j = hit
        result = prop7_check(sN, l, j, k, n)
        branches[k] = {"branch": "prop7", "l": l, "j": j, **result.as_dict()}
    return branches


def verify_claim9(s, n, N_list, j_cap=DEFAULT_J_CAP, k_max=None):
    """Run the approximation construction for every N and certify its three properties.

    For each N: s^N is dominated by s, s^N is in X_(n+1), and s^N fails the
    closure condition for X_n at k = K.

    Raises:
        InvalidInstance: If s is not certified in X_n or some N <= n
        CertificateFailure: If any certificate fails
    """
    start = xn_member(s, n)
    if not start.is_member:
        raise InvalidInstance(f"sequence is not certified in X_{n} ({start.verdict.value})")
    reports = []
    for N in N_list:
        if N <= n:
            raise InvalidInstance(f"N={N} must exceed n={n}")
        report = build_sN(s, n, N, j_cap)
        membership = xn_member(report.sN, n + 1, k_max or report.K + 1)
        exclusion = closure_necessary(report.sN, n, report.K)
        report = replace(
            report,
            membership=membership,
            branches=_branches(report),
            exclusion=exclusion,
            floor_order=compare(height_floor(report.sN), height_floor(s)),
        )
        record = report.as_dict()
        if not membership.is_member:
            raise CertificateFailure(f"s^N not certified in X_{n + 1} for N={N}", record)
        if exclusion.passed:
            raise CertificateFailure(f"s^N not excluded from closure(X_{n}) for N={N}", record)
        if report.tail_case == "replaced" or report.replaced_positions:
            if as_real(report.tstar_at_2K2) != as_real(inc(fapp(report.K - n - 1, Lit(1)), 1)):
                raise CertificateFailure(f"t* at 2K^2 differs from F^(K-n-1)(1)+1 for N={N}", record)
        if report.floor_order is Ordering.GT:
            raise CertificateFailure(f"height floor of s^N above that of s for N={N}", record)
        logger.debug("claim 9 n=%d N=%d K=%d passed", n, N, report.K)
        reports.append(report)

    Ks = [r.K for r in reports]
    if any(b < a for a, b in zip(Ks, Ks[1:])):
        raise CertificateFailure(f"K(N) decreases along the grid: {Ks}", {"K": Ks})
    return reports
