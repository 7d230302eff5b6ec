"""A strongly 0-speedable d.c.e. approximation built from a Martin-Löf test."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..approximations import Approximation, ClassTag
from ..errors import PreconditionError
from ..numerics import canonical_string, format_number, is_dyadic, is_prefix, is_prefix_of_real, variation
from ..randomness_tests import MLTest
from .trace import StageTrace


def even_level_strings(m: MLTest) -> list:
    """``(string, k)`` for every string of a level ``2k``, in schedule order."""
    return [(s, level // 2) for level, s in m.schedule if level % 2 == 0]


def speedup_from_ml(r: Approximation, m: MLTest, horizon: int, max_stages: Optional[int] = None,
                    limit=None):
    """Run the stage construction on terms ``r_0..r_horizon``.

    ``sigma_0, sigma_1, ...`` are the even-level strings in schedule order.
    Stage 0 marks ``sigma_0`` used and sets ``i(0) = j(0) = 0``.  Stage ``s > 0``
    takes the least ``j > j(s-1)`` such that some unused ``sigma_i`` with
    ``i <= j`` is a prefix of ``tau_j`` (the canonical string of ``r_j``), uses
    the least such ``i``, and emits

        c_{2s} = r_{j(s)} + delta_s,   c_{2s+1} = r_{j(s)},
        delta_s = 2^(-|sigma_{i(s)}| + k(s)),

    where ``sigma_{i(s)}`` sits in level ``2 k(s)``.  The run stops when no
    ``j <= horizon`` qualifies.

    ``limit`` (default: the declared limit of ``r``) is used only to label
    stages as true and to check the ratio bound; the construction never reads it.
    Returns ``(c, trace)`` where ``c`` is the finite output approximation.
    """
    if r.class_tag is not ClassTag.DCE:
        raise PreconditionError("speedup_from_ml needs a DCE-tagged approximation")
    if not m.is_disjoint():
        raise PreconditionError("ML test must be disjointified first")
    sigmas = even_level_strings(m)
    present = {level // 2 for level, _ in m.schedule if level % 2 == 0}
    missing = [k for k in range(0, (len(m.levels) + 1) // 2) if k not in present]
    if not sigmas or missing:
        raise PreconditionError(f"even levels must be nonempty; empty level(s) 2k for k in {missing}")
    gamma = r.declared_limit if limit is None else Fraction(limit)

    last = r.max_index(horizon)
    terms = r.terms(last)
    seen = {}
    for j, x in enumerate(terms):
        if not is_dyadic(x) or not 0 <= x < 1:
            raise PreconditionError(f"r_{j} = {format_number(x)} is not a dyadic in [0, 1)")
        if seen.setdefault(x, j) != j:
            raise PreconditionError(f"r_{seen[x]} = r_{j}; terms must be pairwise distinct")
    taus = [canonical_string(x) for x in terms]

    trace = StageTrace("speedup_from_ml")
    used = [False] * len(sigmas)
    used[0] = True
    s0, k0 = sigmas[0]
    deltas = [Fraction(1, 1 << len(s0)) * (1 << k0)]
    out = [terms[0] + deltas[0], terms[0]]
    chosen_j = [0]
    stages = [dict(stage=0, j=0, i=0, sigma=s0, k=k0, delta=deltas[0])]
    trace.record(**stages[0], c_even=out[0], c_odd=out[1])

    j_prev = 0
    stop_reason = "horizon"
    while max_stages is None or len(stages) <= max_stages:
        pick = None
        for j in range(j_prev + 1, last + 1):
            i = next((i for i in range(min(j, len(sigmas) - 1) + 1)
                      if not used[i] and is_prefix(sigmas[i][0], taus[j])), None)
            if i is not None:
                pick = (j, i)
                break
        if pick is None:
            break
        j, i = pick
        used[i] = True
        sigma, k = sigmas[i]
        delta = Fraction(1 << k, 1 << len(sigma))
        s = len(stages)
        out += [terms[j] + delta, terms[j]]
        deltas.append(delta)
        chosen_j.append(j)
        stages.append(dict(stage=s, j=j, i=i, sigma=sigma, k=k, delta=delta))
        trace.record(**stages[-1], c_even=out[-2], c_odd=out[-1])
        j_prev = j
    else:
        stop_reason = "max_stages"

    delta_sum = sum(deltas, Fraction(0))
    sub_var = variation(terms[j] for j in chosen_j)
    out_var = variation(out)
    trace.check("delta_sum_le_2", delta_sum, "<=", Fraction(2))
    trace.check("variation_le_subsequence_plus_2_delta", out_var, "<=", sub_var + 2 * delta_sum)

    true_stages = []
    if gamma is not None:
        if is_dyadic(gamma):
            raise PreconditionError("true stages need a non-dyadic limit")
        for st in stages[1:]:
            if not is_prefix_of_real(st["sigma"], gamma):
                continue
            s, k = st["stage"], st["k"]
            ratio = abs(gamma - out[2 * s + 1]) / abs(gamma - out[2 * s])
            true_stages.append((s, k, ratio))
            if k == 0:
                # 1/(2^0 - 1) is unbounded; the inequality holds vacuously
                trace.flag(f"true_stage_{s}_ratio_bound", True, {"ratio": ratio, "k": 0})
            else:
                trace.check(f"true_stage_{s}_ratio_bound", ratio, "<=", Fraction(1, (1 << k) - 1))
        ks = [k for _, k, _ in true_stages]
        trace.flag("true_stage_k_distinct", len(ks) == len(set(ks)), ks)

    trace.summary.update(
        stages=len(stages),
        delta_sum=delta_sum,
        subsequence_variation=sub_var,
        output_variation=out_var,
        true_stages=len(true_stages),
        true_stage_ks=[k for _, k, _ in true_stages],
        strings_available=len(sigmas),
        stop_reason=stop_reason,
        # r_j + delta may pass 1; such terms are reported, not clamped
        outside_unit_interval=[n for n, x in enumerate(out) if not 0 <= x <= 1],
        horizon=horizon,
    )
    c = Approximation.from_terms(out, ClassTag.DCE, declared_limit=gamma,
                                 variation_bound=sub_var + 2 * delta_sum, name="ml-speedup")
    return c, trace
