"""Speed-up diagnostics and witnesses.

A liminf is never computable from a prefix, so nothing here claims a real is
(or is not) speedable.  What is reported is a certificate: the ratio was at
most ``rho`` at so many indices within the horizon.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .approximations import Approximation, ClassTag, ComputableOrder, compose_order
from .errors import HorizonExhausted, InvariantViolation, PreconditionError, search_limit
from .numerics import Interval, format_number

SPEEDABLE_BY_DEFINITION = "speedable-by-definition (rational limit)"


@dataclass(frozen=True)
class RatioRecord:
    s: int
    f_s: int
    ratio: Optional[Fraction]  # None when a_s equals the limit

    @property
    def skipped(self) -> bool:
        return self.ratio is None


def _limit(a: Approximation) -> Fraction:
    if a.declared_limit is None:
        raise PreconditionError("ratio requires a limit source; use limitfree_ratio instead")
    return a.declared_limit


def ratio_trace(a: Approximation, f: ComputableOrder, horizon: int) -> list[RatioRecord]:
    """``(s, f(s), |alpha - a_f(s)| / |alpha - a_s|)`` for ``s <= horizon``."""
    alpha = _limit(a)
    out = []
    for s in range(horizon + 1):
        fs = f(s)
        denom = abs(alpha - a.term(s))
        ratio = None if denom == 0 else abs(alpha - a.term(fs)) / denom
        out.append(RatioRecord(s, fs, ratio))
    return out


def limitfree_ratio(a: Approximation, s: int, t: int, probe: int) -> Fraction:
    """``|a_i - a_t| / |a_i - a_s|`` for a probe index ``i``.

    For large ``i`` this is below a threshold exactly when the true ratio
    against the limit is, which is what lets constructions avoid the limit.
    """
    if not s <= t <= probe:
        raise PreconditionError("need s <= t <= probe")
    denom = abs(a.term(probe) - a.term(s))
    if denom == 0:
        raise PreconditionError("degenerate probe")
    return abs(a.term(probe) - a.term(t)) / denom


def liminf_upper_bound(trace: Sequence[RatioRecord], window: int) -> Fraction:
    """Minimum ratio over the last ``window`` non-skipped records.

    This is an upper bound certificate for the liminf, not the liminf.
    """
    if window <= 0:
        raise PreconditionError("window must be positive")
    ratios = [r.ratio for r in trace if not r.skipped]
    if not ratios:
        raise PreconditionError("trace has no usable records")
    return min(ratios[-window:])


@dataclass
class SpeedupCertificate:
    rho: Fraction
    hits: list[int]
    horizon: int
    skipped: list[int]
    verdict: str

    @property
    def count(self) -> int:
        return len(self.hits)


def certify(trace: Sequence[RatioRecord], rho, min_hits: int = 1) -> SpeedupCertificate:
    """Count the records with ratio ``<= rho``.

    If the limit is attained at some index the approximation has a rational
    limit in the strong sense and gets the by-definition verdict instead.
    """
    rho = Fraction(rho)
    if not 0 <= rho < 1:
        raise PreconditionError("rho must lie in [0, 1)")
    hits = [r.s for r in trace if not r.skipped and r.ratio <= rho]
    skipped = [r.s for r in trace if r.skipped]
    horizon = trace[-1].s if trace else 0
    if skipped:
        verdict = SPEEDABLE_BY_DEFINITION
    elif len(hits) >= min_hits:
        verdict = f"ratio <= {format_number(rho)} at {len(hits)} indices within horizon {horizon}"
    else:
        verdict = f"no certificate: ratio <= {format_number(rho)} at {len(hits)} < {min_hits} indices"
    return SpeedupCertificate(rho, hits, horizon, skipped, verdict)


def weak_certificate(a: Approximation, b: Approximation, rho, horizon: int) -> SpeedupCertificate:
    """Indices with ``|alpha - b_s| <= rho |alpha - a_s|`` (the weak speedability condition)."""
    alpha = _limit(a)
    if b.declared_limit is not None and b.declared_limit != alpha:
        raise PreconditionError("approximations have different limits")
    trace = []
    for s in range(horizon + 1):
        denom = abs(alpha - a.term(s))
        trace.append(RatioRecord(s, s, None if denom == 0 else abs(alpha - b.term(s)) / denom))
    return certify(trace, rho)


def trace_csv(trace: Sequence[RatioRecord], window: Optional[int] = None, rho=None) -> str:
    """CSV with columns ``s,f_s,ratio_num,ratio_den,skipped_flag`` plus an optional certificate row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "f_s", "ratio_num", "ratio_den", "skipped_flag"])
    for r in trace:
        if r.skipped:
            w.writerow([r.s, r.f_s, "", "", 1])
        else:
            w.writerow([r.s, r.f_s, r.ratio.numerator, r.ratio.denominator, 0])
    if window is not None:
        usable = [r for r in trace if not r.skipped]
        if usable:
            ub = liminf_upper_bound(trace, window)
            w.writerow([f"liminf_upper_bound[window={window}]", "", ub.numerator, ub.denominator, 0])
        else:
            w.writerow([f"liminf_upper_bound[window={window}]", "", "", "", 1])
    return buf.getvalue()


# -- reindexing witnesses -------------------------------------------------------


def weak_to_speedup(a: Approximation, b: Approximation, horizon: int) -> ComputableOrder:
    """``f(n)`` = least ``m`` with ``a_m >= b_n``; searches indices up to ``horizon``.

    Turns a weak speed-up pair of left-c.e. approximations into a speed-up of
    ``a`` itself.  Evaluation is lazy and raises :class:`HorizonExhausted` for
    the first ``n`` whose search runs out.
    """
    for x in (a, b):
        if x.class_tag is not ClassTag.LEFT_CE:
            raise PreconditionError("weak_to_speedup needs left-c.e. approximations")
    if a.declared_limit is not None and b.declared_limit is not None and a.declared_limit != b.declared_limit:
        raise PreconditionError("approximations have different limits")
    limit = search_limit(horizon)
    cursor = [0]

    def rule(n: int) -> int:
        target = b.term(n)
        # b is nondecreasing, so the answer for n is never below the answer for n-1
        m = cursor[0]
        while a.term(m) < target:
            m += 1
            if m > limit:
                raise HorizonExhausted(f"horizon exhausted at n={n}", n=n)
        cursor[0] = m
        return m

    return ComputableOrder(rule, "weak-to-speedup", {"kind": "weak-to-speedup"})


@dataclass
class ShiftResult:
    approximation: Approximation
    order: ComputableOrder
    c: Fraction
    checked: int
    first_violation: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.first_violation is None


def _solovay_violation(a: Approximation, b: Approximation, c: Fraction, horizon: int) -> Optional[int]:
    alpha, beta = _limit(a), _limit(b)
    for s in range(horizon + 1):
        if alpha - a.term(s) > c * (beta - b.term(s)):
            return s
    return None


def _check_left_pair(a_ref, b_ref, c, horizon):
    for x in (a_ref, b_ref):
        if x.class_tag is not ClassTag.LEFT_CE:
            raise PreconditionError("Solovay shifts need left-c.e. approximations")
    bad = _solovay_violation(a_ref, b_ref, c, horizon)
    if bad is not None:
        raise PreconditionError(f"reference pair violates alpha - a_s <= c(beta - b_s) at s={bad}")


def solovay_shift_left(a_ref: Approximation, b_ref: Approximation, c, a_new: Approximation,
                       horizon: int, search: Optional[int] = None) -> ShiftResult:
    """Given a new approximation of ``alpha``, find one of ``beta`` keeping the Solovay witness.

    ``f(s)`` is the largest index with ``a_new(s) >= a_ref(f(s))`` and the new
    approximation of ``beta`` is ``b_ref o f``.  The witness is checked on
    ``s <= horizon``; index searches probe up to ``search`` (default
    ``8 * horizon + 64``).
    """
    c = Fraction(c)
    _check_left_pair(a_ref, b_ref, c, horizon)
    if a_ref.term(0) > a_new.term(0):
        raise PreconditionError("a_ref(0) must not exceed a_new(0) (take a_ref(0) = 0)")
    limit = search_limit(search if search is not None else 8 * horizon + 64)

    def rule(s: int) -> int:
        target = a_new.term(s)
        j = 0
        while a_ref.term(j + 1) <= target:
            j += 1
            if j >= limit:
                raise HorizonExhausted(f"horizon exhausted at s={s}", s=s)
        return j

    f = ComputableOrder(rule, "largest-below", {"kind": "solovay-left"})
    b_new = compose_order(b_ref, f)
    b_new.name = f"{b_ref.name}|shift-left"
    return ShiftResult(b_new, f, c, horizon, _solovay_violation(a_new, b_new, c, horizon))


def solovay_shift_right(a_ref: Approximation, b_ref: Approximation, c, b_new: Approximation,
                        horizon: int, search: Optional[int] = None) -> ShiftResult:
    """Mirror of :func:`solovay_shift_left`: ``g(s)`` = least index with ``b_new(s) <= b_ref(g(s))``."""
    c = Fraction(c)
    _check_left_pair(a_ref, b_ref, c, horizon)
    limit = search_limit(search if search is not None else 8 * horizon + 64)

    def rule(s: int) -> int:
        target = b_new.term(s)
        j = 0
        while b_ref.term(j) < target:
            j += 1
            if j > limit:
                raise HorizonExhausted(f"horizon exhausted at s={s}", s=s)
        return j

    g = ComputableOrder(rule, "least-above", {"kind": "solovay-right"})
    a_new = compose_order(a_ref, g)
    a_new.name = f"{a_ref.name}|shift-right"
    return ShiftResult(a_new, g, c, horizon, _solovay_violation(a_new, b_new, c, horizon))


# -- no-cover lemma and escape orders -----------------------------------------------


class NoCoverError(PreconditionError):
    """Invalid no-cover instance; ``pair`` or ``radius`` names the violated condition."""

    def __init__(self, message, pair=None, radius=None):
        super().__init__(message)
        self.pair = pair
        self.radius = radius


def nocover_witness(box: Interval, centers: Sequence, radii: Sequence) -> int:
    """An index ``i`` with ``centers[i]`` outside ``box``.

    Preconditions: every radius is at least ``len(box)/m`` and each later center
    avoids every earlier interval ``[z_i - d_i, z_i + d_i]``.  Then consecutive
    sorted centers are more than ``len(box)/m`` apart, so the two extreme centers
    span more than the box; the lowest is returned if it lies outside, else the
    highest.
    """
    centers = [Fraction(z) for z in centers]
    radii = [Fraction(d) for d in radii]
    if len(centers) < 2:
        raise NoCoverError("need at least two centers (m >= 1)")
    if len(radii) != len(centers):
        raise NoCoverError("centers and radii differ in length")
    problem = violated_nocover_pair(box, centers, radii)
    if problem is not None:
        kind, where = problem
        if kind == "radius":
            raise NoCoverError(f"radius {where} is below (b - a)/m", radius=where)
        raise NoCoverError(f"center {where[1]} lies in interval {where[0]}", pair=where)
    order = sorted(range(len(centers)), key=centers.__getitem__)
    low, high = order[0], order[-1]
    if centers[low] < box.left:
        return low
    if centers[high] > box.right:
        return high
    raise InvariantViolation("both extreme centers inside the box despite valid preconditions")


def violated_nocover_pair(box: Interval, centers, radii):
    """The first violated precondition as ``("pair", (i, j))`` / ``("radius", i)``, or ``None``."""
    centers = [Fraction(z) for z in centers]
    radii = [Fraction(d) for d in radii]
    m = len(centers) - 1
    if m >= 1:
        for i, d in enumerate(radii):
            if d < box.length / m:
                return ("radius", i)
    for j in range(len(centers)):
        for i in range(j):
            if abs(centers[j] - centers[i]) <= radii[i]:
                return ("pair", (i, j))
    return None


@dataclass
class EscapeState:
    """Orders ``f_0..f_i`` and cutoffs ``n_0..n_(i-1)`` of the escape-order family."""

    c: Fraction
    k: int
    orders: list = field(default_factory=list)
    cutoffs: list = field(default_factory=list)

    @classmethod
    def initial(cls, rho) -> "EscapeState":
        rho = Fraction(rho)
        if not 0 <= rho < 1:
            raise PreconditionError("rho must lie in [0, 1)")
        c = rho / (1 + rho)
        k = math.ceil(1 + 1 / c**2) if c > 0 else 0
        return cls(c, k, [ComputableOrder(lambda n: n + 1, "f_0", {"kind": "shift", "k": 1})], [])

    @property
    def level(self) -> int:
        return len(self.orders) - 1

    def forbidden(self, a: Approximation, j: int, ell: int) -> Interval:
        """``I_j(ell)``, centered at ``a_{f_j(ell)}`` with radius ``c |a_{f_j(ell)} - a_ell|``."""
        center = a.term(self.orders[j](ell))
        r = self.c * abs(center - a.term(ell))
        return Interval(center - r, center + r)


def escape_order(a: Approximation, state: EscapeState, cutoff: int, horizon: int,
                 search: Optional[int] = None) -> EscapeState:
    """Extend ``state`` by the next escape order.

    With ``i = state.level`` and ``cutoff`` playing ``n_i``: below the cutoff the
    new order is ``n + 1``; from the cutoff on it is the least ``m > n`` whose
    term avoids every ``I_j(ell)`` with ``j <= i`` and ``n_j <= ell <= n``.
    Cutoffs are supplied by the caller.  The new order is materialized on
    ``0..horizon`` and checked to be nondecreasing with ``f(n) > n``; each
    search probes indices up to ``search`` (default ``8 * horizon + 64``).
    """
    i = state.level
    if state.cutoffs and cutoff < state.cutoffs[-1]:
        raise PreconditionError("cutoffs must be nondecreasing")
    cutoffs = state.cutoffs + [cutoff]
    new = EscapeState(state.c, state.k, list(state.orders), cutoffs)
    limit = search_limit(search if search is not None else 8 * horizon + 64)
    # forbidden intervals accumulate as n grows; cache them per n
    cache: list = []

    def intervals_upto(n: int) -> list:
        while len(cache) <= n:
            ell = len(cache)
            cache.append([new.forbidden(a, j, ell) for j in range(i + 1) if cutoffs[j] <= ell])
        return [iv for ell in range(n + 1) for iv in cache[ell]]

    def rule(n: int) -> int:
        if n < cutoff:
            return n + 1
        ivs = intervals_upto(n)
        for m in range(n + 1, limit + 1):
            x = a.term(m)
            if not any(x in iv for iv in ivs):
                return m
        raise HorizonExhausted(f"escape search exhausted at n={n} with {len(ivs)} forbidden intervals",
                               n=n, intervals=len(ivs))

    f = ComputableOrder(rule, f"f_{i + 1}", {"kind": "escape", "level": i + 1})
    values = f.values(horizon)
    if any(values[n] <= n for n in range(len(values))):
        raise InvariantViolation(f"{f.name}(n) <= n")
    if not f.is_nondecreasing(horizon):
        raise InvariantViolation(f"{f.name} is not nondecreasing")
    new.orders.append(f)
    return new


def is_strictly_increasing(f: ComputableOrder, horizon: int) -> bool:
    v = f.values(horizon)
    return all(v[i] < v[i + 1] for i in range(len(v) - 1))
