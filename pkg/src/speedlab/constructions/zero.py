"""Finite-injury construction of an approximation that is 0-speedable via ``s -> s+1``."""

from __future__ import annotations

from collections import Counter
from fractions import Fraction

from ..approximations import Approximation, ClassTag
from ..errors import InvariantViolation, PreconditionError
from .trace import StageTrace


def _requires_attention(a: Approximation, s: int, g: int, i: int) -> bool:
    # g == s gives ratio 1 and s == i a zero denominator; both need action
    if g == s or s == i:
        return True
    denom = abs(a.term(i) - a.term(s))
    return abs(a.term(i) - a.term(g)) * s >= denom


def zero_speedup(a: Approximation, horizon: int, limit=None, settled_upto: int = 8):
    """Stages ``1..horizon`` of the priority construction.

    ``g`` starts as the identity.  At stage ``i`` the least ``s`` in ``1..i``
    that requires attention (its pair ``(s, g(s))`` fails
    ``|a_i - a_g(s)| < |a_i - a_s| / s``) has ``g(s)`` incremented, and the
    stage emits ``b_2i = a_s``, ``b_2i+1 = a_g(s)``.  Stage 0 emits
    ``b_0 = b_1 = a_0``.

    ``limit`` (default: the declared limit) is only used for the terminal
    checks.  For ``s <= settled_upto`` the pair emitted at the last stage
    ``t_s`` where ``s`` received attention satisfies
    ``|alpha - b_{2t_s+1}| <= |alpha - b_{2t_s}| / s`` (equality is possible),
    and some stage ``t >= s`` has a pair with ratio strictly below ``1/s``.
    Returns ``(b, trace)``.
    """
    terms = a.terms(a.max_index(horizon))
    if len(set(terms)) != len(terms):
        raise PreconditionError("terms must be pairwise distinct; normalize first")
    alpha = a.declared_limit if limit is None else Fraction(limit)

    g: dict[int, int] = {}
    attention = Counter()
    last_attention: dict[int, int] = {}
    out = [a.term(0), a.term(0)]
    trace = StageTrace("zero_speedup")
    for i in range(1, horizon + 1):
        chosen = None
        for s in range(1, i + 1):
            if _requires_attention(a, s, g.get(s, s), i):
                chosen = s
                break
        if chosen is None:
            raise InvariantViolation(f"no index requires attention at stage {i}")
        s = chosen
        g[s] = g.get(s, s) + 1
        attention[s] += 1
        last_attention[s] = i
        out += [a.term(s), a.term(g[s])]
        trace.record(stage=i, attended=s, g=g[s])

    occurrences = Counter()
    g_hits = Counter()
    for rec in trace.records:
        occurrences[rec["attended"]] += 1
        occurrences[rec["g"]] += 1
        g_hits[rec["g"]] += 1

    strict_at_settled = []
    if alpha is not None:
        ratios = [abs(alpha - out[2 * t + 1]) / abs(alpha - out[2 * t]) for t in range(horizon + 1)]
        for s in range(1, settled_upto + 1):
            bound = Fraction(1, s)
            if s not in last_attention:
                trace.flag(f"settled_pair_{s}", False, "never attended")
                continue
            # the limit-free test only yields <= 1/s here; equality does occur
            settled = ratios[last_attention[s]]
            trace.check(f"settled_pair_{s}_ratio_le_1_over_s", settled, "<=", bound)
            if settled < bound:
                strict_at_settled.append(s)
            best = min(range(s, horizon + 1), key=lambda t: (ratios[t], t))
            trace.check(f"pair_{s}_exists_ratio_lt_1_over_s", ratios[best], "<", bound)
            trace.record(check=s, settled_stage=last_attention[s], settled_ratio=settled,
                         witness_stage=best, witness_ratio=ratios[best])

    # a_t appears only when t is attended or some g(s) reaches t, and g(s) passes t once
    trace.flag("occurrences_bounded_by_attention",
               all(g_hits[t] <= t for t in g_hits), {"max_occurrences": max(occurrences.values(), default=0)})
    trace.summary.update(
        stages=horizon,
        attention_counts={str(s): attention[s] for s in sorted(attention)},
        final_g={str(s): g[s] for s in sorted(g)},
        settled_stage={str(s): last_attention[s] for s in sorted(last_attention)},
        strict_at_settled=strict_at_settled,
        horizon=horizon,
    )
    b = Approximation.from_terms(out, ClassTag.CA, declared_limit=alpha, name="zero-speedup")
    return b, trace

