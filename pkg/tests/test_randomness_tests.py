from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from speedlab import randomness_tests as rt
from speedlab.approximations import Approximation, ClassTag
from speedlab.corpus import NAMED_TESTS, named_real, named_test
from speedlab.errors import PreconditionError
from speedlab.numerics import Interval, is_prefix_free, string_set_measure, string_value


def solovay(pairs, budget=None):
    return rt.SolovayTest(tuple(Interval(F(l), F(r)) for l, r in pairs), budget)


class TestMLTest:
    def test_invariants_enforced(self):
        with pytest.raises(PreconditionError, match="prefix-free"):
            rt.MLTest.from_levels([["0", "01"]])
        with pytest.raises(PreconditionError, match="measure"):
            rt.MLTest.from_levels([["0"], ["0", "1"]])
        with pytest.raises(PreconditionError, match="schedule"):
            rt.MLTest.from_levels([["0"], ["10"]], schedule=[(0, "0")])

    def test_interleaved_schedule(self):
        m = rt.MLTest.from_levels([["00", "01"], ["10"], ["110", "111"]])
        assert m.schedule == ((0, "00"), (1, "10"), (2, "110"), (0, "01"), (2, "111"))

    def test_json_round_trip(self):
        m = rt.ml_test_with_decoys(F(1, 3), 4)
        assert rt.MLTest.from_json(m.to_json()) == m


class TestMLTestFor:
    def test_third(self):
        m = rt.ml_test_for(F(1, 3), 2)
        assert m.levels == (("0",), ("01",), ("010",))

    def test_half(self):
        assert rt.ml_test_for(F(1, 2), 1).levels == (("1",), ("10",))

    @pytest.mark.parametrize("x", [F(1, 3), F(1, 2), F(5, 7), F(2, 5)])
    def test_measures_and_coverage(self, x):
        m = rt.ml_test_for(x, 12)
        for i, level in enumerate(m.levels):
            assert m.measure(i) == F(1, 2 ** (i + 1))
            (sigma,) = level
            assert string_value(sigma) <= x <= string_value(sigma) + F(1, 2 ** len(sigma))

    def test_decoys_do_not_cover(self):
        x = F(1, 3)
        m = rt.ml_test_with_decoys(x, 6)
        for i, (decoy, true) in enumerate(m.levels):
            assert m.measure(i) == F(3, 2 ** (i + 2))
            assert not string_value(decoy) <= x <= string_value(decoy) + F(1, 2 ** len(decoy))

    def test_outside_unit_interval(self):
        with pytest.raises(PreconditionError):
            rt.ml_test_for(1, 3)


class TestDisjointify:
    def test_single_collision(self):
        out = rt.disjointify(rt.MLTest.from_levels([["0"], ["0"]]))
        assert out.levels == (("0",), ("00", "01"))
        assert out.measure(1) == F(1, 2)

    def test_already_disjoint(self):
        m = rt.MLTest.from_levels([["0"], ["10"], ["110"]])
        assert rt.disjointify(m) == m

    def test_triple_collision(self):
        # "1" at level 2 would exceed 2^-2, so the triple collision uses "11"
        out = rt.disjointify(rt.MLTest.from_levels([["11"], ["11"], ["11"]]))
        assert out.levels[1] == ("110", "111")
        assert out.levels[2] == ("1100", "1101", "1110", "1111")

    def test_only_identical_strings_collide(self):
        out = rt.disjointify(rt.MLTest.from_levels([["01"], ["0"]]))
        assert out.levels[1] == ("0",)

    def test_fresh_length_skips_appeared_extensions(self):
        # "00" collides and "001" already appeared, so length 3 is not fresh
        m = rt.MLTest.from_levels([["00"], ["001"], ["00"]], schedule=[(0, "00"), (1, "001"), (2, "00")])
        out = rt.disjointify(m)
        assert out.levels[2] == ("0000", "0001", "0010", "0011")


def ml_tests():
    def build(raw):
        levels = []
        for i, strings in enumerate(raw):
            level = []
            for s in strings:
                s = s[: i + 2] if len(s) > i + 2 else s.ljust(i + 1, "0")
                if all(not (a.startswith(s) or s.startswith(a)) for a in level):
                    if string_set_measure(level + [s]) <= F(1, 2**i):
                        level.append(s)
            levels.append(level)
        return rt.MLTest.from_levels(levels)

    bits = st.text(alphabet="01", min_size=1, max_size=6)
    return st.lists(st.lists(bits, max_size=3), min_size=1, max_size=5).map(build)


@settings(max_examples=150, deadline=None)
@given(ml_tests())
def test_disjointify_properties(m):
    out = rt.disjointify(m)
    seen = set()
    for i, level in enumerate(out.levels):
        assert is_prefix_free(level)
        assert out.measure(i) == m.measure(i) <= F(1, 2**i)
        assert not seen & set(level)
        seen |= set(level)
    assert out.is_disjoint()


class TestSolovayTest:
    def test_bounds_checked(self):
        with pytest.raises(PreconditionError):
            solovay([(0, F(3, 2))])
        with pytest.raises(PreconditionError, match="budget"):
            solovay([(0, F(1, 2)), (0, F(1, 2))], budget=F(1, 2))
        assert solovay([(0, F(1, 2))], budget=1).measure == F(1, 2)

    def test_json_round_trip(self):
        t = solovay([(F(1, 4), F(1, 2)), (F(1, 3), F(2, 3))], budget=1)
        assert rt.SolovayTest.from_json(t.to_json()) == t


class TestClassify:
    def test_increments_of_geometric(self):
        t = named_test("increments-geometric", 20)
        assert rt.classify_test(t, 20).lce
        # consecutive intervals touch, so l_{i+1} = l_i + (r_i - l_i) and even d = 1 holds
        assert rt.classify_test(t, 20, d_candidate=1).bounded_increments
        assert not rt.classify_test(t, 20, d_candidate=F(1001, 1000)).bounded_increments

    def test_doubled_increments_are_exactly_half(self):
        t = named_test("bounded-increments-quarter", 20)
        assert rt.classify_test(t, 20, d_candidate=F(1, 2)).bounded_increments
        rep = rt.classify_test(t, 20, d_candidate=F(1, 2) + F(1, 1000))
        assert not rep.bounded_increments and rep.bi_violation == 0

    def test_shuffled(self):
        rep = rt.classify_test(named_test("shuffled-increments", 20), 20)
        assert not rep.lce and rep.lce_violation is not None

    def test_endpoint_sums(self):
        t = solovay([(0, F(1, 4)), (F(1, 2), F(3, 4)), (F(1, 8), F(1, 4))])
        rep = rt.classify_test(t, 2)
        assert rep.length_sum == F(5, 8)
        assert rep.gap_sum == F(1, 4) + F(5, 8)
        assert rep.endpoint_variation == F(3, 2)
        assert rep.lce_violation == 2

    def test_horizon_too_small(self):
        with pytest.raises(PreconditionError):
            rt.classify_test(named_test("nested-half"), 1)


def left_ce_tests():
    steps = st.lists(st.fractions(min_value=0, max_value=F(1, 16)), min_size=3, max_size=12)
    lengths = st.lists(st.fractions(min_value=0, max_value=F(1, 16)), min_size=3, max_size=12)

    def build(pair):
        inc, lens = pair
        ivs, left = [], F(0)
        for dx, ln in zip(inc, lens):
            left += dx
            ivs.append(Interval(left, left + ln))
        return rt.SolovayTest(tuple(ivs))

    return st.tuples(steps, lengths).map(build)


def any_tests():
    point = st.fractions(min_value=0, max_value=1)
    pair = st.tuples(point, point).map(lambda p: Interval(min(p), max(p)))
    return st.lists(pair, min_size=3, max_size=12).map(lambda ivs: rt.SolovayTest(tuple(ivs)))


@settings(max_examples=200, deadline=None)
@given(st.one_of(left_ce_tests(), any_tests()), st.sampled_from([F(1, 4), F(1, 2), 1]))
def test_hierarchy_on_random_tests(t, d):
    rep = rt.classify_test(t, len(t) - 1, d_candidate=d)
    assert rep.hierarchy_holds()
    if rep.bounded_increments:
        assert rep.lce
    if rep.lce:
        assert rep.endpoint_variation <= rep.lce_variation_bound


@pytest.mark.parametrize("name", sorted(NAMED_TESTS))
def test_hierarchy_on_corpus(name):
    t = named_test(name, 40)
    rep = rt.classify_test(t, min(40, len(t) - 1), d_candidate=F(1, 2))
    assert rep.hierarchy_holds()


class TestCovers:
    def test_nested(self):
        t = rt.nested_test(F(1, 2), 10)
        assert rt.covers(t, F(1, 2), 9) == list(range(10))
        assert rt.covers(t, F(1, 2), 4) == list(range(5))

    def test_nothing(self):
        assert rt.covers(rt.nested_test(F(1, 2), 10, scale=F(1, 4)), F(1, 16), 9) == []

    def test_bounded_increments_cover_limit_everywhere(self):
        t = named_test("bounded-increments-quarter", 30)
        assert rt.covers(t, F(1, 2), 30) == list(range(len(t)))

    def test_slow_ratio_covers_nothing(self):
        # with ratio 2/3 the right end a_s + 2(a_{s+1} - a_s) stops short of the limit
        t = named_test("bounded-increments-five-sevenths", 30)
        assert rt.covers(t, F(5, 7), 30) == []


class TestRettinger:
    def test_example(self):
        a = Approximation.from_terms([F(1, 2), F(1, 4), F(3, 8)], ClassTag.DCE, variation_bound=1)
        t = rt.rettinger_test(a, 2)
        assert [iv.to_json() for iv in t.intervals] == [iv.to_json() for iv in
                                                        (Interval(F(1, 4), F(1, 2)), Interval(F(1, 4), F(3, 8)))]
        assert t.measure_budget == 1

    def test_constant(self):
        a = Approximation.from_terms([F(1, 3)] * 4, ClassTag.DCE, variation_bound=0)
        assert all(iv.length == 0 for iv in rt.rettinger_test(a, 3).intervals)

    def test_oscillator_covers_at_every_index(self):
        a = named_real("oscillator")
        t = rt.rettinger_test(a, 30)
        assert rt.sign_changes(a, 30) == list(range(30))
        assert rt.covers(t, F(1, 2), 30) == list(range(30))

    @pytest.mark.parametrize("name", ["oscillator-third", "oscillator-slow", "difference"])
    def test_sign_changes_are_covered(self, name):
        a = named_real(name)
        t = rt.rettinger_test(a, 40)
        assert set(rt.sign_changes(a, 40)) <= set(rt.covers(t, a.declared_limit, 40))

    def test_needs_dce(self):
        with pytest.raises(PreconditionError):
            rt.rettinger_test(named_real("geometric-half"), 4)


CONVERGING = ["nested-half", "nested-third", "increments-geometric", "bounded-increments-quarter",
              "bounded-increments-five-sevenths", "rettinger-oscillator", "rettinger-difference"]


@pytest.mark.parametrize("name", CONVERGING)
def test_only_the_limit_is_covered_late(name):
    # a real covered by a late interval lies within the tail spread of the last endpoint,
    # and that spread shrinks as the prefix grows
    spreads = []
    for horizon in (16, 32, 64):
        t = named_test(name, horizon)
        ivs = t.intervals[: horizon + 1]
        rep = rt.classify_test(t, len(ivs) - 1)
        last = ivs[-1].left
        tail = ivs[len(ivs) // 2:]
        for iv in tail:
            for x in (iv.left, iv.right, (iv.left + iv.right) / 2):
                assert abs(x - last) <= rep.tail_spread
        spreads.append(rep.tail_spread)
    assert spreads[0] > spreads[1] > spreads[2]
