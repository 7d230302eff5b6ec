"""Computable approximations, computable orders and the operations on them.

An infinite sequence is a materialized prefix plus a total ``extender`` that
produces term ``s`` on demand.  Every query takes an explicit horizon; nothing
here materializes unbounded data behind the caller's back.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import HorizonExhausted, PreconditionError, horizon_cap, search_limit
from .numerics import format_number, is_dyadic, msb_diff, parse_number

Extender = Callable[[int], Fraction]


class ClassTag(str, enum.Enum):
    CA = "CA"
    LEFT_CE = "LeftCE"
    RIGHT_CE = "RightCE"
    DCE = "DCE"

    @classmethod
    def parse(cls, text: str) -> "ClassTag":
        aliases = {"ca": cls.CA, "lce": cls.LEFT_CE, "leftce": cls.LEFT_CE,
                   "rce": cls.RIGHT_CE, "rightce": cls.RIGHT_CE, "dce": cls.DCE}
        try:
            return aliases[str(text).replace("-", "").replace(".", "").lower()]
        except KeyError:
            raise PreconditionError(f"unknown class tag {text!r}")


class ComputableOrder:
    """A nondecreasing unbounded map N -> N given by a total rule.

    Values are cached as they are evaluated, so ``materialized`` always holds
    ``f(0), ..., f(n)`` for the largest ``n`` asked so far.
    """

    def __init__(self, rule: Callable[[int], int], name: str = "order", spec: Optional[dict] = None):
        self.rule = rule
        self.name = name
        self.spec = spec if spec is not None else {"kind": "custom", "name": name}
        self.materialized: list[int] = []

    def __call__(self, s: int) -> int:
        if s < 0:
            raise PreconditionError("orders are defined on natural numbers")
        while len(self.materialized) <= s:
            n = len(self.materialized)
            value = int(self.rule(n))
            if value < 0:
                raise PreconditionError(f"{self.name}({n}) = {value} is negative")
            self.materialized.append(value)
        return self.materialized[s]

    def values(self, n: int) -> list[int]:
        """``f(0), ..., f(n)``."""
        self(n)
        return self.materialized[: n + 1]

    def is_nondecreasing(self, n: int) -> bool:
        v = self.values(n)
        return all(v[i] <= v[i + 1] for i in range(len(v) - 1))

    def unbounded_witness(self, bound: int, horizon: Optional[int] = None) -> int:
        """Some ``s`` with ``f(s) > bound``."""
        limit = search_limit(horizon if horizon is not None else horizon_cap())
        for s in range(limit + 1):
            if self(s) > bound:
                return s
        raise HorizonExhausted(f"no s <= {limit} with {self.name}(s) > {bound}", bound=bound)

    def __repr__(self):
        return f"ComputableOrder({self.name})"


def identity_order() -> ComputableOrder:
    return ComputableOrder(lambda s: s, "identity", {"kind": "identity"})


def make_order(spec) -> ComputableOrder:
    """Build one of the standard orders from a spec dict (or a kind name).

    kinds: identity, shift (s+k), linear (k*s), affine (k*s+b), power (s**k),
    isqrt (floor sqrt, a slow order), stall (s // k).
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    spec = dict(spec)
    kind = spec.get("kind")
    k = int(spec.get("k", 1))
    b = int(spec.get("b", 0))
    if kind == "identity":
        rule = lambda s: s
    elif kind in ("shift", "successor"):
        k = int(spec.get("k", 1))
        rule = lambda s: s + k
    elif kind == "linear":
        rule = lambda s: k * s
    elif kind == "affine":
        rule = lambda s: k * s + b
    elif kind == "power":
        rule = lambda s: s**k
    elif kind == "isqrt":
        rule = math.isqrt
    elif kind == "stall":
        if k < 1:
            raise PreconditionError("stall order needs k >= 1")
        rule = lambda s: s // k
    else:
        raise PreconditionError(f"unknown order kind {kind!r}")
    if kind in ("linear", "power") and k < 1:
        raise PreconditionError(f"{kind} order needs k >= 1")
    return ComputableOrder(rule, kind, spec)


ORDER_KINDS = ("identity", "shift", "linear", "affine", "power", "isqrt", "stall")


class Approximation:
    """A computable approximation ``a_0, a_1, ...`` of a real.

    ``declared_limit`` is the exact limit when known; it is only ever used by
    diagnostics and verification, never by the constructions themselves.
    """

    def __init__(
        self,
        extender: Extender,
        class_tag: ClassTag = ClassTag.CA,
        declared_limit: Optional[Fraction] = None,
        variation_bound: Optional[Fraction] = None,
        name: str = "approximation",
        spec: Optional[dict] = None,
        length: Optional[int] = None,
    ):
        self.extender = extender
        self.class_tag = ClassTag(class_tag)
        self.declared_limit = None if declared_limit is None else Fraction(declared_limit)
        self.variation_bound = None if variation_bound is None else Fraction(variation_bound)
        if self.class_tag is ClassTag.DCE and self.variation_bound is None:
            raise PreconditionError("a DCE approximation needs a variation bound")
        self.name = name
        self.spec = spec
        # finite approximations (inline data, construction outputs) know their length
        self.length = length
        self._prefix: list[Fraction] = []

    @classmethod
    def from_terms(cls, terms: Sequence, class_tag=ClassTag.CA, declared_limit=None,
                   variation_bound=None, name="inline") -> "Approximation":
        values = [parse_number(t) if isinstance(t, str) else Fraction(t) for t in terms]

        def extender(s):
            raise HorizonExhausted(f"{name} has only {len(values)} terms", index=s)

        approx = cls(extender, class_tag, declared_limit, variation_bound, name=name,
                     length=len(values))
        approx._prefix = values
        return approx

    def term(self, s: int) -> Fraction:
        if s < 0:
            raise PreconditionError("negative index")
        while len(self._prefix) <= s:
            n = len(self._prefix)
            value = Fraction(self.extender(n))
            self._prefix.append(value)
        return self._prefix[s]

    __getitem__ = term

    def terms(self, horizon: int) -> list[Fraction]:
        """``a_0, ..., a_horizon`` (horizon + 1 terms)."""
        if horizon < 0:
            return []
        self.term(horizon)
        return list(self._prefix[: horizon + 1])

    @property
    def materialized(self) -> tuple:
        return tuple(self._prefix)

    def max_index(self, horizon: int) -> int:
        """Largest usable index not beyond ``horizon``."""
        if self.length is not None:
            return min(horizon, self.length - 1)
        return horizon

    def derived(self, extender: Extender, name: str, **overrides) -> "Approximation":
        kw = dict(class_tag=self.class_tag, declared_limit=self.declared_limit,
                  variation_bound=self.variation_bound)
        kw.update(overrides)
        return Approximation(extender, name=name, **kw)

    def to_json(self, horizon: int) -> dict:
        spec = self.spec or {}
        doc = {
            "family": spec.get("family", "inline"),
            "params": spec.get("params", {}),
            "class_tag": self.class_tag.value,
            "declared_limit": None if self.declared_limit is None else format_number(self.declared_limit),
            "prefix": [format_number(t) for t in self.terms(self.max_index(horizon))],
        }
        if self.variation_bound is not None:
            doc["variation_bound"] = format_number(self.variation_bound)
        return doc

    def __repr__(self):
        return f"Approximation({self.name}, {self.class_tag.value})"


@dataclass
class ClassReport:
    ok: bool
    class_tag: ClassTag
    horizon: int
    variation: Fraction
    first_violation: Optional[int] = None
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "class_tag": self.class_tag.value,
            "horizon": self.horizon,
            "variation": format_number(self.variation),
            "first_violation": self.first_violation,
            "reason": self.reason,
        }


def verify_class(a: Approximation, horizon: int, class_tag: Optional[ClassTag] = None) -> ClassReport:
    """Check the class invariant of ``a`` on ``a_0..a_horizon`` exactly.

    Violations are reported, never raised.  ``class_tag`` overrides the tag the
    approximation carries (useful for asking "is this prefix also left-c.e.?").
    """
    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    tag = ClassTag(class_tag) if class_tag is not None else a.class_tag
    terms = a.terms(a.max_index(horizon))
    running = Fraction(0)
    violation, reason = None, ""
    for s, x in enumerate(terms):
        if s > 0:
            step = x - terms[s - 1]
            running += abs(step)
        if violation is not None:
            continue
        if not 0 <= x <= 1:
            violation, reason = s, f"term {format_number(x)} outside [0, 1]"
        elif s > 0 and tag is ClassTag.LEFT_CE and step < 0:
            violation, reason = s, "decrease in a left-c.e. approximation"
        elif s > 0 and tag is ClassTag.RIGHT_CE and step > 0:
            violation, reason = s, "increase in a right-c.e. approximation"
        elif tag is ClassTag.DCE:
            if a.variation_bound is None:
                violation, reason = 0, "no variation bound declared"
            elif running > a.variation_bound:
                violation, reason = s, f"variation exceeds {format_number(a.variation_bound)}"
    return ClassReport(violation is None, tag, len(terms) - 1, running, violation, reason)


def compose_order(a: Approximation, f: ComputableOrder) -> Approximation:
    """The approximation ``s -> a_{f(s)}``; same real, same class."""
    b = a.derived(lambda s: a.term(f(s)), name=f"{a.name}o{f.name}")
    if a.length is not None:
        b.length = _composed_length(a.length, f)
    return b


def _composed_length(length: int, f: ComputableOrder) -> int:
    n = 0
    while f(n) < length:
        n += 1
        if n > horizon_cap():
            break
    return n


def _below(x: Fraction, m: int) -> Fraction:
    """Largest dyadic with denominator ``2^m`` strictly below ``x``."""
    scaled = x * (1 << m)
    k = math.ceil(scaled) - 1
    return Fraction(k, 1 << m)


def _first_above(a: Approximation, start: int, floor: Fraction) -> Fraction:
    limit = search_limit(horizon_cap())
    for t in range(start, limit + 1):
        if a.term(t) > floor:
            return a.term(t)
    raise HorizonExhausted("left-c.e. input never rises above its current value; is the limit attained?",
                           index=start, value=floor)


def _normalize_left(a: Approximation) -> Extender:
    out: list[Fraction] = []
    running = []

    def extender(s: int) -> Fraction:
        while len(out) <= s:
            n = len(out)
            x = a.term(n)
            running.append(max(running[-1], x) if running else x)
            prev = out[-1] if out else None
            if is_dyadic(x) and (prev is None or x > prev):
                out.append(x)
                continue
            # stall or non-dyadic: aim strictly below the next value that rises above prev
            sup = running[-1]
            if prev is not None and sup <= prev:
                sup = _first_above(a, n, prev)
            m = n + 4
            while True:
                b = _below(sup, m)
                if (prev is None and b >= 0) or (prev is not None and b > prev):
                    break
                m += 1
            out.append(b)
        return out[s]

    return extender


def _normalize_general(a: Approximation) -> Extender:
    out: list[Fraction] = []
    seen: set = set()

    def extender(s: int) -> Fraction:
        while len(out) <= s:
            n = len(out)
            x = a.term(n)
            if is_dyadic(x):
                v = x
            else:
                scale = 1 << (n + 2)
                v = Fraction(round(x * scale), scale)
            r = 0
            candidate = v
            while candidate in seen:
                offset = Fraction(1, 1 << (n + 4 + r))
                candidate = v + offset if v + offset <= 1 else v - offset
                r += 1
            seen.add(candidate)
            out.append(candidate)
        return out[s]

    return extender


def normalize_distinct_dyadic(a: Approximation) -> Approximation:
    """An approximation of the same real, same class, whose terms are pairwise distinct dyadics.

    Left-c.e. input: a dyadic term that rises above the previous output is kept;
    otherwise the output is the largest dyadic with denominator ``2^m`` strictly
    below the running supremum, with ``m >= s + 4`` least such that the output
    still increases.  On a stall the target is the next input value above the
    previous output, which exists whenever the limit is not attained.

    Other classes: dyadic terms are kept, others are rounded to denominator
    ``2^(s+2)``; a repeated value gets offset by ``2^-(s+4+r)`` for the first
    ``r`` that makes it fresh.  The added variation is below 2.
    """
    if a.class_tag is ClassTag.LEFT_CE:
        ext = _normalize_left(a)
        bound = None
    elif a.class_tag is ClassTag.RIGHT_CE:
        mirrored = a.derived(lambda s: 1 - a.term(s), "mirror", class_tag=ClassTag.LEFT_CE)
        inner = _normalize_left(mirrored)
        ext = lambda s: 1 - inner(s)
        bound = None
    else:
        ext = _normalize_general(a)
        bound = a.variation_bound + 2 if a.variation_bound is not None else None
    b = a.derived(ext, name=f"{a.name}|dyadic", variation_bound=bound)
    b.length = a.length
    return b


def two_sided(a: Approximation) -> Approximation:
    """Interleave ``a_1^-, a_1^+, a_2^-, a_2^+, ...`` around each term.

    ``a_s^(-/+) = a_s -/+ 2^-h(s)`` clamped to ``[0, 1]``, where ``h(s)`` is the
    first bit at which ``a_s`` and ``a_{s-1}`` differ.  Input terms must be
    pairwise distinct dyadics in ``(0, 1)``.
    """
    if a.declared_limit is not None and is_dyadic(a.declared_limit):
        raise PreconditionError("two-sided builder needs a non-dyadic limit")
    seen: dict = {}

    def check(s: int) -> Fraction:
        x = a.term(s)
        if not is_dyadic(x) or not 0 < x < 1:
            raise PreconditionError(f"term {s} = {format_number(x)} is not a dyadic in (0, 1)")
        if seen.setdefault(x, s) != s:
            raise PreconditionError(f"terms {seen[x]} and {s} are equal; normalize first")
        return x

    def extender(n: int) -> Fraction:
        s, upper = n // 2 + 1, n % 2
        for t in range(s + 1):
            check(t)
        x = a.term(s)
        gap = Fraction(1, 1 << msb_diff(x, a.term(s - 1)))
        return min(x + gap, Fraction(1)) if upper else max(x - gap, Fraction(0))

    b = a.derived(extender, name=f"{a.name}|two-sided", class_tag=ClassTag.CA, variation_bound=None)
    if a.length is not None:
        b.length = 2 * (a.length - 1)
    return b


def msb_profile(a: Approximation, horizon: int) -> list[int]:
    """``h(1), ..., h(horizon)``; index 0 of the result is ``h(1)``."""
    return [msb_diff(a.term(s), a.term(s - 1)) for s in range(1, horizon + 1)]


def stable_stages(a: Approximation, horizon: int) -> list[int]:
    """Stages ``s`` in ``1..horizon`` with ``h(t) > h(s)`` for every ``t`` in ``s+1..horizon``."""
    h = msb_profile(a, horizon)
    stable, best = [], math.inf
    for s in range(horizon, 0, -1):
        if h[s - 1] < best:
            stable.append(s)
        best = min(best, h[s - 1])
    return sorted(stable)


@dataclass
class BracketReport:
    stable: list[int]
    bracketed: list[int]
    below: int = 0
    above: int = 0
    failures: list[int] = field(default_factory=list)


def bracket_report(a: Approximation, horizon: int, limit: Optional[Fraction] = None) -> BracketReport:
    """Check the two-sided output of ``a`` against the limit at every stable stage of ``a_0..a_horizon``."""
    alpha = a.declared_limit if limit is None else Fraction(limit)
    if alpha is None:
        raise PreconditionError("bracketing needs a declared limit")
    b = two_sided(a)
    stable = stable_stages(a, horizon)
    bracketed, failures = [], []
    for s in stable:
        lo, hi = b.term(2 * (s - 1)), b.term(2 * (s - 1) + 1)
        (bracketed if lo < alpha < hi else failures).append(s)
    out = b.terms(2 * horizon - 1)
    return BracketReport(stable, bracketed, sum(x < alpha for x in out), sum(x > alpha for x in out), failures)


def approximation_from_json(doc: dict) -> Approximation:
    """Inverse of :meth:`Approximation.to_json` for inline (prefix-only) data."""
    if not isinstance(doc, dict) or "prefix" not in doc:
        raise PreconditionError("approximation JSON needs a 'prefix'")
    tag = ClassTag.parse(doc.get("class_tag", "CA"))
    limit = doc.get("declared_limit")
    bound = doc.get("variation_bound")
    try:
        approx = Approximation.from_terms(
            doc["prefix"], tag,
            declared_limit=None if limit is None else parse_number(limit),
            variation_bound=None if bound is None else parse_number(bound),
            name=doc.get("family", "inline"))
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"bad approximation JSON: {exc}") from None
    approx.spec = {"family": doc.get("family", "inline"), "params": doc.get("params", {})}
    return approx
