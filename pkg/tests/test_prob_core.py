"""Exact-PMF core: alphabets, joint construction, adjoin ops, sampling."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crlab.errors import DomainError, InputError
from crlab.prob_core import (
    Alphabet,
    DeterministicMap,
    JointPMF,
    adjoin_channel,
    adjoin_difference,
    adjoin_map,
    adjoin_sum,
    as_exact,
    condition,
    difference_alphabet,
    integer_alphabet,
    marginalize,
    quantizer_map,
    random_pmf,
    sample,
    splitmix64,
)


def uniform_pair(n=4):
    """Uniform joint over x in 0..n-1 with xp = x (perfect prediction)."""
    a = integer_alphabet("x", 0, n - 1)
    b = integer_alphabet("xp", 0, n - 1)
    idx = np.column_stack([np.arange(n), np.arange(n)])
    return JointPMF([("x", a), ("xp", b)], idx, np.full(n, 1.0 / n))


class TestAsExact:
    def test_float_reads_shortest_repr(self):
        assert as_exact(1.4) == Fraction(7, 5)
        assert as_exact(0.25) == Fraction(1, 4)

    def test_int_passthrough(self):
        assert as_exact(7) == 7
        assert isinstance(as_exact(7), int)

    def test_whole_fraction_collapses_to_int(self):
        assert as_exact(Fraction(8, 2)) == 4
        assert isinstance(as_exact(Fraction(8, 2)), int)

    def test_string_parses(self):
        assert as_exact("7/5") == Fraction(7, 5)

    def test_rejects_bool_and_nonfinite(self):
        with pytest.raises(InputError):
            as_exact(True)
        with pytest.raises(InputError):
            as_exact(float("inf"))
        with pytest.raises(InputError):
            as_exact("not a number")


class TestAlphabet:
    def test_requires_strictly_ascending(self):
        with pytest.raises(InputError):
            Alphabet("a", (0, 0, 1))
        with pytest.raises(InputError):
            Alphabet("a", (2, 1))
        with pytest.raises(InputError):
            Alphabet("a", ())

    def test_integer_alphabet(self):
        a = integer_alphabet("x", 0, 5)
        assert len(a) == 6
        assert a.symbols == (0, 1, 2, 3, 4, 5)
        assert a.is_contiguous_int
        with pytest.raises(InputError):
            integer_alphabet("x", 3, 2)

    def test_difference_alphabet_covers_cross_set(self):
        a = integer_alphabet("x", 0, 2)
        d = difference_alphabet(a, a)
        assert d.symbols == (-2, -1, 0, 1, 2)


class TestQuantizerMap:
    def test_integer_step_truncates(self):
        dom = integer_alphabet("x", 0, 7)
        m = quantizer_map(dom, 2)
        assert m.images == (0, 0, 2, 2, 4, 4, 6, 6)

    def test_fractional_step_is_exact(self):
        # step 7/5 on 0..6: floor(v/1.4)*1.4 lands on exact rationals
        dom = integer_alphabet("x", 0, 6)
        m = quantizer_map(dom, 1.4)
        q = Fraction(7, 5)
        expected = tuple((Fraction(v) / q).__floor__() * q for v in range(7))
        assert m.images == expected

    def test_rejects_nonpositive_step(self):
        dom = integer_alphabet("x", 0, 3)
        with pytest.raises(InputError):
            quantizer_map(dom, 0)

    def test_from_callable_must_be_total(self):
        dom = integer_alphabet("x", 0, 3)
        cod = integer_alphabet("y", 0, 1)
        with pytest.raises(InputError):
            DeterministicMap.from_callable(dom, cod, lambda v: v)  # 2,3 escape


class TestJointPMF:
    def test_validation_rejects_bad_probs(self):
        a = integer_alphabet("x", 0, 1)
        with pytest.raises(InputError):
            JointPMF([("x", a)], [[0], [1]], [0.7, 0.7])  # sums to 1.4
        with pytest.raises(InputError):
            JointPMF([("x", a)], [[0], [1]], [1.5, -0.5])

    def test_validation_rejects_duplicate_support_rows(self):
        a = integer_alphabet("x", 0, 1)
        with pytest.raises(InputError):
            JointPMF([("x", a)], [[0], [0]], [0.5, 0.5])

    def test_column_values_and_names(self):
        pmf = uniform_pair(3)
        assert pmf.names == ("x", "xp")
        assert pmf.column_values("x") == [0, 1, 2]
        with pytest.raises(InputError):
            pmf.var_pos("nope")

    def test_marginalize_sums_out(self):
        pmf = uniform_pair(4)
        m = marginalize(pmf, ["x"])
        assert m.names == ("x",)
        np.testing.assert_allclose(m.probs, 0.25)

    def test_condition_slices_and_normalizes(self):
        a = integer_alphabet("x", 0, 1)
        b = integer_alphabet("y", 0, 1)
        idx = [[0, 0], [0, 1], [1, 0]]
        pmf = JointPMF([("x", a), ("y", b)], idx, [0.2, 0.2, 0.6])
        c = condition(pmf, "x", 0)
        assert c.names == ("y",)
        np.testing.assert_allclose(sorted(c.probs), [0.5, 0.5])

    def test_condition_on_null_event_is_domain_error(self):
        a = integer_alphabet("x", 0, 1)
        b = integer_alphabet("y", 0, 1)
        pmf = JointPMF([("x", a), ("y", b)], [[0, 0], [0, 1]], [0.5, 0.5])
        with pytest.raises(DomainError):
            condition(pmf, "x", 1)
        with pytest.raises(InputError):
            condition(marginalize(pmf, ["x"]), "x", 0)


class TestAdjoin:
    def test_adjoin_difference_matches_by_hand(self):
        pmf = uniform_pair(4)
        ext = adjoin_difference(pmf, "x", "xp", "r")
        assert ext.column_values("r") == [0, 0, 0, 0]  # xp == x here

    def test_adjoin_sum_then_difference_roundtrip(self):
        pmf = uniform_pair(3)
        ext = adjoin_sum(pmf, "x", "xp", "s")
        back = adjoin_difference(ext, "s", "xp", "x2")
        assert back.column_values("x2") == back.column_values("x")

    def test_adjoin_map_quantizer_column(self):
        a = integer_alphabet("x", 0, 7)
        pmf = JointPMF([("x", a)], [[i] for i in range(8)], np.full(8, 0.125))
        ext = adjoin_map(pmf, "x", quantizer_map(a, 4, name="xq"), "xq")
        assert ext.column_values("xq") == [0, 0, 0, 0, 4, 4, 4, 4]

    def test_adjoin_rejects_name_collision(self):
        pmf = uniform_pair(3)
        with pytest.raises(InputError):
            adjoin_difference(pmf, "x", "xp", "x")

    def test_adjoin_channel_builds_conditional_independence(self):
        from crlab.info_measures import conditional_mutual_information

        pmf = uniform_pair(3)
        kernel = np.array([[0.9, 0.1], [0.5, 0.5], [0.2, 0.8]])
        out = integer_alphabet("z", 0, 1)
        ext = adjoin_channel(pmf, "x", kernel, out, "z")
        # z depends on xp only through x
        assert conditional_mutual_information(ext, "z", "xp", "x") < 1e-12

    def test_adjoin_channel_validates_kernel(self):
        pmf = uniform_pair(3)
        out = integer_alphabet("z", 0, 1)
        with pytest.raises(InputError):
            adjoin_channel(pmf, "x", np.array([[0.5, 0.5]]), out, "z")
        with pytest.raises(InputError):
            adjoin_channel(pmf, "x", np.full((3, 2), 0.7), out, "z")


class TestRandomness:
    def test_splitmix64_reference_output(self):
        # first output of the reference sequence seeded with 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    @given(st.integers(min_value=0, max_value=(1 << 64) - 1))
    @settings(max_examples=50)
    def test_splitmix64_stays_in_64_bits(self, s):
        assert 0 <= splitmix64(s) < 1 << 64

    def test_sample_deterministic_and_weighted(self):
        a = integer_alphabet("x", 0, 1)
        pmf = JointPMF([("x", a)], [[0], [1]], [0.9, 0.1])
        s1 = sample(pmf, 1000, seed=42)
        s2 = sample(pmf, 1000, seed=42)
        assert s1 == s2
        ones = sum(v for (v,) in s1)
        assert 40 <= ones <= 180  # ~100 expected
        assert sample(pmf, 0, seed=1) == []
        with pytest.raises(InputError):
            sample(pmf, -1, seed=1)
        with pytest.raises(InputError):
            sample(pmf, 5, seed=-3)

    def test_random_pmf_shape_and_determinism(self):
        pmf = random_pmf((3, 4), seed=7)
        assert pmf.names == ("v0", "v1")
        assert math.isclose(float(pmf.probs.sum()), 1.0, abs_tol=1e-12)
        pmf2 = random_pmf((3, 4), seed=7)
        np.testing.assert_array_equal(pmf.probs, pmf2.probs)
        with pytest.raises(InputError):
            random_pmf((0, 2), seed=1)
        with pytest.raises(InputError):
            random_pmf((2, 2), concentration=0.0, seed=1)
