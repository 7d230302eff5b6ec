"""Solovay test from a weakly speedable pair of left-sided approximations."""

from __future__ import annotations

from fractions import Fraction

from ..approximations import Approximation
from ..errors import HorizonExhausted, PreconditionError, search_limit
from ..numerics import Interval, variation
from ..randomness_tests import SolovayTest
from .trace import StageTrace


def _left_sided_violation(x: Approximation, alpha: Fraction, horizon: int):
    for s in range(x.max_index(horizon) + 1):
        if x.term(s) > alpha:
            return s
    return None


def weak_speed_test(a: Approximation, b: Approximation, rho, horizon: int):
    """Cover the common limit of ``a`` and ``b`` by a Solovay test built from blocks.

    ``f(0) = 1`` and ``f(s+1)`` is the least ``i > f(s)`` with ``a_i >= b_{s+1}``.
    Blocks are ``J_0 = {0}`` and ``J_{r+1} = {max J_r + 1, ..., f(max J_r)}``;
    with ``c_r = min a`` over ``J_r`` and ``d_r = max a`` over ``J_r`` and
    ``J_{r+1}``, interval ``r`` is ``[c_r, c_r + (d_r - c_r)/(1 - rho)]``
    (clipped at 1, which never changes whether the limit is covered).

    Only blocks whose successor block fits in ``0..horizon`` are emitted.
    Returns ``(test, trace)``.
    """
    rho = Fraction(rho)
    if not 0 < rho < 1:
        raise PreconditionError("rho must lie in (0, 1)")
    alpha = a.declared_limit
    if alpha is None:
        raise PreconditionError("left-sidedness is checked against the declared limit; none given")
    if b.declared_limit is not None and b.declared_limit != alpha:
        raise PreconditionError("approximations have different limits")
    for name, x in (("a", a), ("b", b)):
        bad = _left_sided_violation(x, alpha, horizon)
        if bad is not None:
            raise PreconditionError(f"{name} is not left-sided on the horizon: index {bad} exceeds the limit")

    limit = search_limit(horizon)
    f = [1]

    def f_at(s: int) -> int:
        while len(f) <= s:
            n = len(f)
            i = f[-1] + 1
            while a.term(i) < b.term(n):
                i += 1
                if i > limit:
                    raise HorizonExhausted(f"f({n}) not found within horizon", s=n)
            if i > limit:
                raise HorizonExhausted(f"f({n}) not found within horizon", s=n)
            f.append(i)
        return f[s]

    blocks = [(0, 0)]
    while True:
        hi = blocks[-1][1]
        try:
            nxt = f_at(hi)
        except HorizonExhausted:
            break
        if nxt > limit:
            break
        blocks.append((hi + 1, nxt))

    trace = StageTrace("weak_speed_test")
    intervals = []
    spread_sum = Fraction(0)
    covered = 0
    for r in range(len(blocks) - 1):
        lo, hi = blocks[r]
        nhi = blocks[r + 1][1]
        c_r = min(a.term(s) for s in range(lo, hi + 1))
        d_r = max(a.term(s) for s in range(lo, nhi + 1))
        right = min(c_r + (d_r - c_r) / (1 - rho), Fraction(1))
        iv = Interval(c_r, right)
        hit = alpha in iv
        fired = [s for s in range(lo, hi + 1) if alpha - a.term(f_at(s)) <= rho * (alpha - a.term(s))]
        covered += hit
        spread_sum += d_r - c_r
        intervals.append(iv)
        trace.record(stage=r, block=[lo, hi], c=c_r, d=d_r, interval=[iv.left, iv.right],
                     covers=hit, fired=fired)
        if fired:
            trace.flag(f"fired_block_{r}_covers", hit)

    last = blocks[-1][1] if len(blocks) > 1 else 0
    var_a = variation(a.terms(last))
    trace.check("spread_sum_le_twice_variation", spread_sum, "<=", 2 * var_a)
    trace.summary.update(
        blocks=len(intervals),
        covered_blocks=covered,
        rho=rho,
        f_prefix=f[: max(1, last)],
        spread_sum=spread_sum,
        variation=var_a,
        measure=sum((iv.length for iv in intervals), Fraction(0)),
        horizon=horizon,
    )
    return SolovayTest(tuple(intervals)), trace
