from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from speedlab.errors import PreconditionError
from speedlab.numerics import (
    Dyadic,
    Interval,
    bits_of,
    canonical_string,
    format_number,
    is_dyadic,
    is_prefix_free,
    msb_diff,
    parse_number,
    string_set_measure,
    string_value,
    variation,
)

dyadics = st.builds(lambda n, k: F(n % (1 << k), 1 << k), st.integers(0, 10**6), st.integers(1, 40))


def expansion_oracle(x, n):
    # long division by hand, independent of the library's bit extraction
    out = []
    for _ in range(n):
        x *= 2
        out.append(int(x >= 1))
        x -= int(x >= 1)
    return out


def first_difference_oracle(a, b):
    ea, eb = expansion_oracle(a, 128), expansion_oracle(b, 128)
    return next(i + 1 for i in range(128) if ea[i] != eb[i])


class TestMsbDiff:
    @pytest.mark.parametrize("a, b, h", [
        (F(0b1010, 16), F(0b1000, 16), 3),
        (F(1, 2), F(0), 1),
        (F(11, 16), F(5, 8), 4),
    ])
    def test_examples(self, a, b, h):
        assert msb_diff(a, b) == h

    def test_identical_values(self):
        with pytest.raises(PreconditionError, match="identical values"):
            msb_diff(F(1, 4), F(1, 4))

    def test_outside_unit_interval(self):
        with pytest.raises(PreconditionError):
            msb_diff(F(1), F(1, 2))

    @given(dyadics, dyadics)
    def test_matches_oracle_and_bounds(self, a, b):
        if a == b:
            return
        h = msb_diff(a, b)
        assert h == msb_diff(b, a) == first_difference_oracle(a, b)
        assert abs(a - b) < F(2, 1 << h)

    @given(st.integers(1, 30), st.integers(0, 2**20))
    def test_lower_bound_when_tails_agree(self, h, prefix):
        # a and b share bits above h, differ at h, and have identical bits after h
        high = F(prefix % (1 << (h - 1)), 1 << (h - 1)) if h > 1 else F(0)
        a, b = high, high + F(1, 1 << h)
        assert msb_diff(a, b) == h
        assert abs(a - b) >= F(1, 1 << h)


class TestStrings:
    @pytest.mark.parametrize("strings, mu", [({"0"}, F(1, 2)), ({"00", "01"}, F(1, 2)),
                                             ({"0", "10", "110"}, F(7, 8))])
    def test_measure(self, strings, mu):
        assert string_set_measure(strings) == mu

    def test_measure_rejects_non_prefix_free(self):
        with pytest.raises(PreconditionError, match="not prefix-free"):
            string_set_measure({"0", "01"})

    @pytest.mark.parametrize("strings, ok", [({"0", "1"}, True), ({"0", "01"}, False), (set(), True),
                                             ({"101"}, True), ({"1", "0", "10"}, False)])
    def test_prefix_free(self, strings, ok):
        assert is_prefix_free(strings) is ok

    @given(st.sets(st.text("01", min_size=1, max_size=12), max_size=30))
    def test_prefix_free_oracle_and_kraft(self, strings):
        brute = not any(s != t and t.startswith(s) for s in strings for t in strings)
        assert is_prefix_free(strings) is brute
        if brute:
            assert string_set_measure(strings) <= 1

    @given(dyadics)
    def test_canonical_string_round_trip(self, x):
        sigma = canonical_string(x)
        assert not sigma.endswith("0")
        assert string_value(sigma) == x

    def test_bits_of(self):
        assert bits_of(F(1, 3), 6) == "010101"
        assert bits_of(F(1, 2), 2) == "10"
        assert [int(c) for c in bits_of(F(5, 7), 30)] == expansion_oracle(F(5, 7), 30)


class TestDyadic:
    def test_canonical_form(self):
        d = Dyadic(6, 3)
        assert (d.numerator, d.exponent) == (3, 2)
        assert Dyadic(0, 5) == Dyadic(0, 0)
        assert str(Dyadic(3, 2)) == "3/2^2"
        assert Dyadic(3, 2).decimal() == "0.75"

    def test_non_dyadic_rejected(self):
        with pytest.raises(PreconditionError):
            Dyadic.from_fraction(F(1, 3))
        assert not is_dyadic(F(1, 3)) and is_dyadic(F(5, 64))

    @given(dyadics, dyadics)
    def test_exact_arithmetic(self, a, b):
        assert (a + b) - b == a
        assert Dyadic.from_fraction(a).to_fraction() == a

    @given(st.fractions(min_value=-3, max_value=3))
    def test_format_parse_round_trip(self, q):
        assert parse_number(format_number(q)) == q

    def test_parse_forms(self):
        assert parse_number("3/2^4") == F(3, 16)
        assert parse_number("1/3") == F(1, 3)
        assert parse_number("0.375") == F(3, 8)
        assert parse_number(2) == 2
        with pytest.raises(PreconditionError):
            parse_number("one half")


def test_interval_and_variation():
    iv = Interval(F(1, 4), F(1, 2))
    assert F(1, 3) in iv and F(1, 2) in iv and F(3, 4) not in iv
    assert iv.length == F(1, 4)
    assert iv.intersect(Interval(F(3, 4), F(1))) is None
    assert Interval.from_json(iv.to_json()) == iv
    with pytest.raises(PreconditionError):
        Interval(F(1, 2), F(1, 4))
    assert variation([F(1, 2), F(1, 4), F(1, 2), F(1, 4)]) == F(3, 4)
