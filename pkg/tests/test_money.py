from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from distvc.money import apply_rate, as_fraction, largest_remainder, round_half_even


def test_as_fraction_uses_decimal_repr():
    assert as_fraction(0.2) == Fraction(1, 5)
    assert as_fraction("0.30") == Fraction(3, 10)
    assert as_fraction(Fraction(7, 3)) == Fraction(7, 3)
    assert as_fraction(5) == 5


def test_round_half_even():
    assert [round_half_even(x) for x in ("0.5", "1.5", "2.5", "-0.5", "2.51")] == [0, 2, 2, 0, 3]


def test_apply_rate_exact():
    assert apply_rate(1_000_000, 0.2) == 200_000
    assert apply_rate(1_020_408, 0.02) == 20_408  # 20408.16
    assert apply_rate(25, 0.1) == 2  # 2.5 -> 2


def test_largest_remainder_example():
    # 100 over 1:1:1 -> 33.33 each, one leftover unit to the first in order
    assert largest_remainder(100, {"a": 1, "b": 1, "c": 1}) == {"a": 34, "b": 33, "c": 33}
    assert largest_remainder(100, {"a": 1, "b": 1, "c": 1}, order=["c", "b", "a"]) == \
        {"c": 34, "b": 33, "a": 33}


def test_largest_remainder_zero_weights():
    assert largest_remainder(0, {"a": 0}) == {"a": 0}
    with pytest.raises(ValueError):
        largest_remainder(5, {"a": 0, "b": 0})
    assert largest_remainder(7, {"a": 0, "b": 2}) == {"a": 0, "b": 7}


@given(st.integers(0, 10**12),
       st.lists(st.integers(0, 10**6), min_size=1, max_size=12).filter(lambda w: sum(w) > 0))
def test_largest_remainder_properties(total, weights):
    w = {i: x for i, x in enumerate(weights)}
    out = largest_remainder(total, w)
    assert sum(out.values()) == total
    s = sum(weights)
    for i, x in w.items():
        exact = Fraction(total * x, s)
        assert exact - 1 < out[i] <= exact + 1
        if x == 0:
            assert out[i] == 0
