"""Exact dyadic and rational arithmetic, binary strings and their measure.

All numbers are :class:`fractions.Fraction`; :class:`Dyadic` is the canonical
``n/2^k`` view used for serialization and for checking that a value really has
a power-of-two denominator.  Binary strings are plain ``str`` objects over
``"0"``/``"1"``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from .errors import PreconditionError

Number = Union[Fraction, int]

_DYADIC_RE = re.compile(r"^\s*(-?\d+)\s*/\s*2\s*\^\s*(\d+)\s*$")
_DECIMAL_RE = re.compile(r"^\s*-?\d*\.\d+\s*$")


def is_dyadic(q: Number) -> bool:
    d = Fraction(q).denominator
    return d & (d - 1) == 0


@dataclass(frozen=True)
class Dyadic:
    """``numerator / 2**exponent`` in lowest terms.

    The numerator is odd whenever the exponent is positive, so every dyadic
    rational has exactly one representation.
    """

    numerator: int
    exponent: int = 0

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be nonnegative")
        n, k = self.numerator, self.exponent
        if n == 0:
            k = 0
        while k > 0 and n % 2 == 0:
            n //= 2
            k -= 1
        object.__setattr__(self, "numerator", n)
        object.__setattr__(self, "exponent", k)

    @classmethod
    def from_fraction(cls, q: Number) -> "Dyadic":
        q = Fraction(q)
        if not is_dyadic(q):
            raise PreconditionError(f"{q} is not dyadic")
        return cls(q.numerator, q.denominator.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}/2^{self.exponent}"

    def decimal(self) -> str:
        """Exact decimal expansion; always finite for a dyadic."""
        n, k = self.numerator, self.exponent
        sign = "-" if n < 0 else ""
        n = abs(n)
        if k == 0:
            return f"{sign}{n}"
        digits = n * 5**k
        whole, frac = divmod(digits, 10**k)
        return f"{sign}{whole}.{frac:0{k}d}"


def format_number(q: Number) -> str:
    """Serialize exactly: ``n/2^k`` for dyadics, ``p/q`` otherwise."""
    q = Fraction(q)
    if is_dyadic(q):
        return str(Dyadic.from_fraction(q))
    return f"{q.numerator}/{q.denominator}"


def parse_number(text: Union[str, int, Fraction]) -> Fraction:
    """Inverse of :func:`format_number`; also accepts ``p/q``, ints and exact decimals."""
    if isinstance(text, (int, Fraction)) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise PreconditionError(f"cannot parse {text!r} as an exact number")
    m = _DYADIC_RE.match(text)
    if m:
        return Fraction(int(m.group(1)), 1 << int(m.group(2)))
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise PreconditionError(f"cannot parse {text!r} as an exact number")


# -- binary strings ---------------------------------------------------------


def _check_bits(sigma: str) -> None:
    if any(ch not in "01" for ch in sigma):
        raise PreconditionError(f"not a binary string: {sigma!r}")


def bits_of(x: Number, n: int) -> str:
    """First ``n`` bits after the binary point of ``x`` in ``[0, 1)``.

    Dyadics use the expansion ending in zeros.
    """
    x = Fraction(x)
    if not 0 <= x < 1:
        raise PreconditionError(f"{x} is not in [0, 1)")
    # floor(x * 2^n) written with n digits is exactly the prefix
    if n == 0:
        return ""
    k = (x.numerator << n) // x.denominator
    return format(k, f"0{n}b")


def bit_at(x: Number, h: int) -> int:
    """Bit at position ``h >= 1`` of ``x`` in ``[0, 1)``."""
    x = Fraction(x)
    return ((x.numerator << h) // x.denominator) & 1


def string_value(sigma: str) -> Fraction:
    """The dyadic ``0.sigma``."""
    _check_bits(sigma)
    if not sigma:
        return Fraction(0)
    return Fraction(int(sigma, 2), 1 << len(sigma))


def canonical_string(q: Number) -> str:
    """The string ``tau`` without trailing zeros such that ``q = 0.tau``."""
    q = Fraction(q)
    if not 0 <= q < 1:
        raise PreconditionError(f"{q} is not in [0, 1)")
    d = Dyadic.from_fraction(q)
    if d.numerator == 0:
        return ""
    return format(d.numerator, f"0{d.exponent}b")


def is_prefix(sigma: str, tau: str) -> bool:
    """``sigma`` is a (not necessarily proper) prefix of ``tau``."""
    return len(sigma) <= len(tau) and tau.startswith(sigma)


def is_prefix_of_real(sigma: str, x: Number) -> bool:
    """Whether ``x`` lies in the cylinder of ``sigma`` (dyadics use the zero-tail expansion)."""
    return bits_of(x, len(sigma)) == sigma


def is_prefix_free(strings: Iterable[str]) -> bool:
    # after sorting, a prefix relation always shows up between neighbours
    ordered = sorted(set(strings))
    for s in ordered:
        _check_bits(s)
    return all(not ordered[i + 1].startswith(ordered[i]) for i in range(len(ordered) - 1))


def string_set_measure(strings: Iterable[str]) -> Fraction:
    """Lebesgue measure of the union of the cylinders of a prefix-free set."""
    strings = list(strings)
    if len(set(strings)) != len(strings) or not is_prefix_free(strings):
        raise PreconditionError("not prefix-free")
    return sum((Fraction(1, 1 << len(s)) for s in strings), Fraction(0))


def msb_diff(a: Number, b: Number) -> int:
    """Smallest position ``h >= 1`` where the binary expansions of ``a`` and ``b`` differ."""
    a, b = Fraction(a), Fraction(b)
    if a == b:
        raise PreconditionError("identical values")
    for x in (a, b):
        if not 0 <= x < 1:
            raise PreconditionError(f"{x} is not in [0, 1)")
    # floor(a 2^h) == floor(b 2^h) exactly when the first h bits agree;
    # |a - b| >= 2^-h forces a difference at or before h
    gap = abs(a - b)
    hi = 1
    while Fraction(1, 1 << hi) > gap:
        hi += 1
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if bits_of(a, mid) == bits_of(b, mid):
            lo = mid + 1
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[left, right]`` with exact endpoints."""

    left: Fraction
    right: Fraction

    def __post_init__(self):
        object.__setattr__(self, "left", Fraction(self.left))
        object.__setattr__(self, "right", Fraction(self.right))
        if self.left > self.right:
            raise PreconditionError(f"empty interval [{self.left}, {self.right}]")

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    def __contains__(self, x) -> bool:
        return self.left <= x <= self.right

    def intersect(self, other: "Interval"):
        lo, hi = max(self.left, other.left), min(self.right, other.right)
        return Interval(lo, hi) if lo <= hi else None

    def to_json(self) -> list:
        return [format_number(self.left), format_number(self.right)]

    @classmethod
    def from_json(cls, pair) -> "Interval":
        left, right = pair
        return cls(parse_number(left), parse_number(right))


def variation(terms) -> Fraction:
    """``sum |x_{s+1} - x_s|`` over a finite sequence."""
    terms = list(terms)
    return sum((abs(terms[i + 1] - terms[i]) for i in range(len(terms) - 1)), Fraction(0))
