"""Built-in sample reals and Solovay tests with exact declared limits.

Every entry is addressed by a JSON-able spec ``{"family": ..., "params": {...}}``
and is deterministic for a given spec.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from .approximations import (
    Approximation,
    ClassTag,
    compose_order,
    make_order,
    normalize_distinct_dyadic,
)
from .errors import PreconditionError
from .numerics import bits_of, parse_number
from . import randomness_tests as rt


def _q(params, key, default=None) -> Fraction:
    if key not in params:
        if default is None:
            raise PreconditionError(f"missing parameter {key!r}")
        return Fraction(default)
    return parse_number(params[key])


def _geometric(p) -> Approximation:
    """``alpha - c q^s``; left-c.e. (``c`` defaults to ``alpha`` so ``a_0 = 0``)."""
    alpha, q = _q(p, "alpha"), _q(p, "q")
    c = _q(p, "c", alpha)
    if not (0 < q < 1 and 0 < c <= alpha <= 1):
        raise PreconditionError("geometric needs 0 < q < 1 and 0 < c <= alpha <= 1")
    return Approximation(lambda s: alpha - c * q**s, ClassTag.LEFT_CE, alpha)


def _series(p) -> Approximation:
    """Partial sums of ``sum_n 2^-(k n + d)``; the limit is ``2^-d / (1 - 2^-k)``."""
    k, d = int(p.get("k", 2)), int(p.get("d", 2))
    if k < 1 or d < 1:
        raise PreconditionError("series needs k >= 1 and d >= 1")
    ratio = Fraction(1, 1 << k)
    first = Fraction(1, 1 << d)
    limit = first / (1 - ratio)
    if limit > 1:
        raise PreconditionError("series limit exceeds 1")
    return Approximation(lambda s: first * (1 - ratio**s) / (1 - ratio), ClassTag.LEFT_CE, limit)


def _truncations(p) -> Approximation:
    """Binary truncations of ``alpha`` at lengths ``offset + step*j``; left-c.e."""
    alpha = _q(p, "alpha")
    step, offset = int(p.get("step", 2)), int(p.get("offset", 2))
    if not 0 < alpha < 1:
        raise PreconditionError("truncations needs alpha in (0, 1)")

    def term(j):
        n = offset + step * j
        return Fraction(int(bits_of(alpha, n), 2), 1 << n)

    return Approximation(term, ClassTag.LEFT_CE, alpha)


def _upper(p) -> Approximation:
    """``alpha + c q^s``; right-c.e."""
    alpha, q = _q(p, "alpha"), _q(p, "q")
    c = _q(p, "c", 1 - alpha)
    if not (0 < q < 1 and 0 < c <= 1 - alpha):
        raise PreconditionError("upper needs 0 < q < 1 and 0 < c <= 1 - alpha")
    return Approximation(lambda s: alpha + c * q**s, ClassTag.RIGHT_CE, alpha)


def _oscillate(p) -> Approximation:
    """``alpha + (-1)^s eps0 q^s`` clamped to ``[0, 1]``; d.c.e. and two-sided.

    Variation bound ``eps0 (1 + q) / (1 - q)``; clamping can only shrink it.
    """
    alpha, q = _q(p, "alpha"), _q(p, "q", Fraction(1, 2))
    eps0 = _q(p, "eps0", min(alpha, 1 - alpha))
    if not (0 < q < 1 and eps0 > 0):
        raise PreconditionError("oscillate needs 0 < q < 1 and eps0 > 0")

    def term(s):
        x = alpha + (-1) ** s * eps0 * q**s
        return min(max(x, Fraction(0)), Fraction(1))

    return Approximation(term, ClassTag.DCE, alpha, eps0 * (1 + q) / (1 - q))


def _difference(p) -> Approximation:
    """``(1 + b_s - g_s) / 2`` for geometric ``b -> beta`` and ``g -> gamma``; d.c.e.

    Declared variation bound: the sum of the two geometric variations.
    """
    beta, gamma = _q(p, "beta"), _q(p, "gamma")
    qb, qg = _q(p, "q_beta", Fraction(1, 2)), _q(p, "q_gamma", Fraction(1, 3))
    b = _geometric({"alpha": beta, "q": qb})
    g = _geometric({"alpha": gamma, "q": qg})
    limit = (1 + beta - gamma) / 2
    return Approximation(lambda s: (1 + b.term(s) - g.term(s)) / 2, ClassTag.DCE, limit, beta + gamma)


def _constant(p) -> Approximation:
    value = _q(p, "value")
    tag = ClassTag.parse(p.get("class_tag", "CA"))
    bound = Fraction(0) if tag is ClassTag.DCE else None
    return Approximation(lambda s: value, tag, value, bound)


def _stalled(p) -> Approximation:
    """Each term of a base real repeated ``k`` times."""
    base = make_corpus_real(p["base"])
    return compose_order(base, make_order({"kind": "stall", "k": int(p.get("k", 2))}))


def _slowed(p) -> Approximation:
    """A base real reindexed by a slow order (default floor sqrt)."""
    base = make_corpus_real(p["base"])
    return compose_order(base, make_order(p.get("order", {"kind": "isqrt"})))


def _sped(p) -> Approximation:
    """A base real reindexed by a fast order, e.g. ``s -> 2s``."""
    base = make_corpus_real(p["base"])
    return compose_order(base, make_order(p.get("order", {"kind": "linear", "k": 2})))


def _normalized(p) -> Approximation:
    return normalize_distinct_dyadic(make_corpus_real(p["base"]))


def _dce_view(p) -> Approximation:
    """A monotone base real retagged as d.c.e.; its variation is ``|alpha - a_0|``."""
    base = make_corpus_real(p["base"])
    if base.class_tag not in (ClassTag.LEFT_CE, ClassTag.RIGHT_CE):
        raise PreconditionError("dce-view needs a monotone base")
    bound = abs(base.declared_limit - base.term(0))
    return base.derived(base.term, "dce-view", class_tag=ClassTag.DCE, variation_bound=bound)


FAMILIES: dict[str, Callable] = {
    "geometric": _geometric,
    "series": _series,
    "truncations": _truncations,
    "upper": _upper,
    "oscillate": _oscillate,
    "difference": _difference,
    "constant": _constant,
    "stalled": _stalled,
    "slowed": _slowed,
    "sped": _sped,
    "normalized": _normalized,
    "dce-view": _dce_view,
}


def make_corpus_real(spec) -> Approximation:
    """Build a corpus approximation from ``{"family": name, "params": {...}}``."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise PreconditionError("corpus spec needs a 'family'")
    family = spec["family"]
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise PreconditionError(f"unknown family {family!r}")
    params = spec.get("params", {}) or {}
    approx = builder(params)
    approx.name = family
    approx.spec = {"family": family, "params": params}
    return approx


def geometric(alpha, q, c=None) -> Approximation:
    params = {"alpha": str(Fraction(alpha)), "q": str(Fraction(q))}
    if c is not None:
        params["c"] = str(Fraction(c))
    return make_corpus_real({"family": "geometric", "params": params})


def oscillate(alpha, q=Fraction(1, 2), eps0=None) -> Approximation:
    params = {"alpha": str(Fraction(alpha)), "q": str(Fraction(q))}
    if eps0 is not None:
        params["eps0"] = str(Fraction(eps0))
    return make_corpus_real({"family": "oscillate", "params": params})


# Named entries used by the CLI, the scenario suite and the property tests.
NAMED_REALS: dict[str, dict] = {
    "geometric-half": {"family": "geometric", "params": {"alpha": "1/2", "q": "1/2"}},
    "geometric-quarter": {"family": "geometric", "params": {"alpha": "1/2", "q": "1/4"}},
    "geometric-third": {"family": "geometric", "params": {"alpha": "1/3", "q": "1/2"}},
    "geometric-five-sevenths": {"family": "geometric", "params": {"alpha": "5/7", "q": "2/3"}},
    "series-third": {"family": "series", "params": {"k": 2, "d": 2}},
    "truncations-third": {"family": "truncations", "params": {"alpha": "1/3"}},
    "truncations-two-fifths": {"family": "truncations", "params": {"alpha": "2/5", "step": 1, "offset": 2}},
    "upper-third": {"family": "upper", "params": {"alpha": "1/3", "q": "1/2"}},
    "oscillator": {"family": "oscillate", "params": {"alpha": "1/2", "q": "1/2"}},
    "oscillator-third": {"family": "oscillate", "params": {"alpha": "1/3", "q": "1/2"}},
    "oscillator-slow": {"family": "oscillate", "params": {"alpha": "3/7", "q": "3/4", "eps0": "1/4"}},
    "difference": {"family": "difference", "params": {"beta": "1/2", "gamma": "1/3"}},
    "truncations-third-dce": {"family": "dce-view", "params": {
        "base": {"family": "truncations", "params": {"alpha": "1/3"}}}},
    "truncations-two-fifths-dce": {"family": "dce-view", "params": {
        "base": {"family": "truncations", "params": {"alpha": "2/5", "step": 4, "offset": 2}}}},
    "truncations-five-sevenths-dce": {"family": "dce-view", "params": {
        "base": {"family": "truncations", "params": {"alpha": "5/7", "step": 3, "offset": 3}}}},
    "constant-half": {"family": "constant", "params": {"value": "1/2"}},
    "stalled-geometric": {"family": "stalled", "params": {
        "base": {"family": "geometric", "params": {"alpha": "1/3", "q": "1/2"}}, "k": 3}},
    "slowed-oscillator": {"family": "slowed", "params": {
        "base": {"family": "oscillate", "params": {"alpha": "2/5", "q": "1/2"}}}},
}


def named_real(name: str) -> Approximation:
    try:
        spec = NAMED_REALS[name]
    except KeyError:
        raise PreconditionError(f"unknown corpus real {name!r}")
    return make_corpus_real(spec)


# -- Solovay tests ------------------------------------------------------------


def _t_nested(p, horizon):
    return rt.nested_test(_q(p, "center"), int(p.get("count", horizon + 1)),
                          _q(p, "base", Fraction(1, 2)), _q(p, "scale", 1))


def _t_increments(p, horizon):
    return rt.increments_test(make_corpus_real(p["real"]), horizon + 1)


def _t_bounded_increments(p, horizon):
    from .constructions.solovay import bounded_inc_test_from_speedup

    return bounded_inc_test_from_speedup(make_corpus_real(p["real"]), horizon)[0]


def _t_rettinger(p, horizon):
    return rt.rettinger_test(make_corpus_real(p["real"]), horizon + 1)


def _t_shuffled(p, horizon):
    return rt.shuffled(make_corpus_test(p["test"], horizon), int(p.get("seed", 0)))


TEST_FAMILIES: dict[str, Callable] = {
    "nested": _t_nested,
    "increments": _t_increments,
    "bounded-increments": _t_bounded_increments,
    "rettinger": _t_rettinger,
    "shuffled": _t_shuffled,
}


def make_corpus_test(spec, horizon: int = 32) -> "rt.SolovayTest":
    """Build a corpus Solovay test with ``horizon + 1`` intervals (where the family allows)."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise PreconditionError("test spec needs a 'family'")
    try:
        builder = TEST_FAMILIES[spec["family"]]
    except KeyError:
        raise PreconditionError(f"unknown test family {spec['family']!r}")
    return builder(spec.get("params", {}) or {}, horizon)


NAMED_TESTS: dict[str, dict] = {
    "nested-half": {"family": "nested", "params": {"center": "1/2", "scale": "1/2"}},
    "nested-third": {"family": "nested", "params": {"center": "1/3", "scale": "1/4"}},
    "increments-geometric": {"family": "increments", "params": {"real": NAMED_REALS["geometric-half"]}},
    "bounded-increments-quarter": {"family": "bounded-increments",
                                   "params": {"real": NAMED_REALS["geometric-quarter"]}},
    "bounded-increments-five-sevenths": {"family": "bounded-increments",
                                         "params": {"real": NAMED_REALS["geometric-five-sevenths"]}},
    "rettinger-oscillator": {"family": "rettinger", "params": {"real": NAMED_REALS["oscillator"]}},
    "rettinger-difference": {"family": "rettinger", "params": {"real": NAMED_REALS["difference"]}},
    "shuffled-increments": {"family": "shuffled", "params": {
        "test": {"family": "increments", "params": {"real": NAMED_REALS["geometric-half"]}}, "seed": 1}},
}


def named_test(name: str, horizon: int = 32) -> "rt.SolovayTest":
    try:
        spec = NAMED_TESTS[name]
    except KeyError:
        raise PreconditionError(f"unknown corpus test {name!r}")
    return make_corpus_test(spec, horizon)
