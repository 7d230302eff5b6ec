"""Conversions between Solovay tests and approximations of the reals they cover."""

from __future__ import annotations

from fractions import Fraction

from ..approximations import Approximation, ClassTag
from ..errors import PreconditionError
from ..numerics import Interval, variation
from ..randomness_tests import SolovayTest, classify_test
from .trace import StageTrace


def _unused_interval_run(t: SolovayTest, a: Approximation, horizon: int, name: str, clip: bool):
    """Shared stage loop: at stage ``s`` append the least unused ``I_i`` (``i <= s``) containing ``a_s``."""
    alpha = a.declared_limit
    last = a.max_index(horizon)
    terms = a.terms(last)
    if alpha is not None and alpha in terms:
        raise PreconditionError(f"the limit is attained at index {terms.index(alpha)}")
    if len(set(t.intervals)) != len(t.intervals):
        raise PreconditionError("input intervals must be pairwise distinct")

    trace = StageTrace(name)
    used = [False] * len(t.intervals)
    out, sources, stages = [], [], []
    skipped = []
    for s, x in enumerate(terms):
        i = next((i for i in range(min(s, len(t.intervals) - 1) + 1)
                  if not used[i] and x in t.intervals[i]), None)
        if i is None:
            continue
        used[i] = True
        iv = t.intervals[i]
        if clip:
            clipped = iv.intersect(Interval(x, Fraction(1)))
            if clipped is None:
                # unreachable while x lies in iv; kept so a bad input cannot emit an empty interval
                skipped.append(i)
                trace.record(stage=s, source=i, skipped=True)
                continue
            if alpha is not None:
                trace.flag(f"clip_{i}_preserves_limit", (alpha in clipped) == (alpha in iv))
            iv = clipped
        out.append(iv)
        sources.append(i)
        stages.append(s)
        trace.record(stage=s, source=i, interval=[iv.left, iv.right])

    if alpha is not None:
        # only interior hits are guaranteed to be met by a_s on a finite horizon
        hits = [i for i, iv in enumerate(t.intervals[: last + 1]) if iv.left < alpha < iv.right]
        missing = [i for i in hits if not used[i]]
        trace.flag("limit_intervals_appended", not missing, {"missing": missing})
    trace.summary.update(appended=len(out), sources=sources, skipped_empty=skipped,
                         measure=sum((iv.length for iv in out), Fraction(0)), horizon=horizon)
    return SolovayTest(tuple(out)), trace, terms, stages


def converging_test_from(t: SolovayTest, a: Approximation, horizon: int):
    """Re-enumerate the intervals of ``t`` in the order the approximation enters them.

    Returns ``(test, trace)``; each input interval is appended at most once.
    """
    out, trace, _, _ = _unused_interval_run(t, a, horizon, "converging_test_from", clip=False)
    return out, trace


def dce_test_from(t: SolovayTest, a: Approximation, horizon: int):
    """As :func:`converging_test_from`, plus the exact endpoint-variation bound.

    With ``J_i`` the appended intervals and ``a`` read up to the stage of the
    last append, ``sum (|r_i - l_i| + |l_{i+1} - r_i|) <= 3 sum |J_i| + variation(a)``.
    """
    if a.class_tag is not ClassTag.DCE:
        raise PreconditionError("dce_test_from needs a DCE-tagged approximation")
    out, trace, terms, stages = _unused_interval_run(t, a, horizon, "dce_test_from", clip=False)
    ivs = out.intervals
    lhs = sum((iv.length for iv in ivs), Fraction(0))
    lhs += sum((abs(ivs[i + 1].left - ivs[i].right) for i in range(len(ivs) - 1)), Fraction(0))
    var = variation(terms[: stages[-1] + 1]) if stages else Fraction(0)
    rhs = 3 * sum((iv.length for iv in ivs), Fraction(0)) + var
    trace.check("dce_endpoint_variation_bound", lhs, "<=", rhs)
    trace.summary.update(endpoint_variation=lhs, bound=rhs, slack=rhs - lhs, variation=var)
    return out, trace


def lce_test_from(t: SolovayTest, a: Approximation, horizon: int):
    """Append ``I ∩ [a_s, 1]`` instead of ``I``; left endpoints are then nondecreasing."""
    if a.class_tag is not ClassTag.LEFT_CE:
        raise PreconditionError("lce_test_from needs a LeftCE-tagged approximation")
    terms = a.terms(a.max_index(horizon))
    bad = next((s for s in range(1, len(terms)) if terms[s] < terms[s - 1]), None)
    if bad is not None:
        raise PreconditionError(f"approximation decreases at index {bad}")
    out, trace, _, _ = _unused_interval_run(t, a, horizon, "lce_test_from", clip=True)
    lefts = [iv.left for iv in out.intervals]
    trace.flag("left_endpoints_nondecreasing", all(x <= y for x, y in zip(lefts, lefts[1:])))
    return out, trace


def bounded_inc_test_from_speedup(a: Approximation, horizon: int):
    """``I_s = [a_s, a_s + 2(a_{s+1} - a_s)]`` for ``s = 0..horizon`` (right end clipped at 1).

    Returns ``(test, trace)``.  The unclipped test has bounded increments with
    ``d = 1/2`` and measure ``2(a_{N+1} - a_0)``.
    """
    if a.class_tag is not ClassTag.LEFT_CE:
        raise PreconditionError("bounded_inc_test_from_speedup needs a LeftCE-tagged approximation")
    last = a.max_index(horizon + 1)
    terms = a.terms(last)
    bad = next((s for s in range(1, len(terms)) if terms[s] < terms[s - 1]), None)
    if bad is not None:
        raise PreconditionError(f"approximation decreases at index {bad}")
    if len(terms) < 3:
        raise PreconditionError("need at least three terms")

    trace = StageTrace("bounded_inc_test_from_speedup")
    alpha = a.declared_limit
    ivs = []
    clipped = 0
    for s in range(len(terms) - 1):
        right = terms[s] + 2 * (terms[s + 1] - terms[s])
        if right > 1:
            clipped += 1
            right = Fraction(1)
        iv = Interval(terms[s], right)
        ivs.append(iv)
        trace.record(stage=s, interval=[iv.left, iv.right], covers=None if alpha is None else alpha in iv)
        if alpha is not None and alpha - terms[s + 1] <= (alpha - terms[s]) / 3:
            trace.flag(f"third_ratio_{s}_covers", alpha in iv)

    test = SolovayTest(tuple(ivs))
    expected = 2 * (terms[-1] - terms[0])
    trace.check("measure_matches_increments", test.measure, "<=" if clipped else "==", expected)
    report = classify_test(test, max(2, len(ivs) - 1), d_candidate=Fraction(1, 2))
    trace.flag("bounded_increments_half", report.bounded_increments, {"violation": report.bi_violation})
    trace.summary.update(intervals=len(ivs), measure=test.measure, clipped=clipped,
                         covering=None if alpha is None else sum(alpha in iv for iv in ivs),
                         horizon=horizon)
    return test, trace


def speedup_from_bounded_inc_test(t: SolovayTest, d, horizon: int, limit=None):
    """Left endpoints of a test with bounded increments ``d``, sped up by ``rho = 1 - d``.

    Returns ``(approximation, rho, trace)``.  At each index ``i`` whose
    interval contains the limit the trace checks
    ``(alpha - l_{i+1}) <= (1 - d)(alpha - l_i)``.
    """
    d = Fraction(d)
    if not 0 < d <= 1:
        raise PreconditionError("d must lie in (0, 1]")
    report = classify_test(t, horizon, d_candidate=d)
    if not report.bounded_increments:
        raise PreconditionError(f"bounded increments fails at index {report.bi_violation}")
    ivs = t.intervals[: report.horizon + 1]
    lefts = [iv.left for iv in ivs]
    rho = 1 - d
    trace = StageTrace("speedup_from_bounded_inc_test")
    alpha = None if limit is None else Fraction(limit)
    checked = 0
    for i in range(len(ivs) - 1):
        if alpha is None or alpha not in ivs[i]:
            continue
        if alpha == lefts[i]:
            # the next endpoint already reaches the limit
            trace.flag(f"index_{i}_limit_reached", lefts[i + 1] >= alpha)
            continue
        ratio = (alpha - lefts[i + 1]) / (alpha - lefts[i])
        trace.record(stage=i, ratio=ratio)
        trace.check(f"index_{i}_ratio_le_rho", ratio, "<=", rho)
        checked += 1
    trace.summary.update(rho=rho, d=d, covering_checked=checked, horizon=report.horizon)
    approx = Approximation.from_terms(lefts, ClassTag.LEFT_CE, declared_limit=alpha, name="bounded-inc-lefts")
    return approx, rho, trace
