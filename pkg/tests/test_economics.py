"""Closed-form GP utility.

The oracle below evaluates the ten-term utility polynomial term by term with exact
rationals; nothing here calls back into the engine to get expected values.
"""

from fractions import Fraction as F

import pytest

from distvc.economics import (EXPANDED, SIMPLE, FundParams, carry_utility_simple,
                              expanded_polynomial, fee_incentive_threshold, gp_utility,
                              gp_utility_expanded, gp_utility_simple, management_fee_utility,
                              model_discrepancy, sweep_to_csv, utility_sweep)

BASE = FundParams(1.0, 10, 0.02, 0.01, 0.20)


def oracle_expanded(f, p, l, g, c, m):
    f, p, l, g, c, m = map(F, (f, p, l, g, c, m))
    terms = [m * g, -m * g * p * l, p * l, -g, m * c, -m * c * g, -m * p * l * c,
             m * p * l * c * g, -c, c * g]
    return f * sum(terms)


def oracle_simple(f, p, l, c, m):
    f, p, l, c, m = map(F, (f, p, l, c, m))
    fee = f * p * l
    return fee + ((f - fee) * m - (f - fee)) * c


def test_oracle_matches_hand_values():
    assert oracle_expanded(1, "0.02", 10, "0.01", "0.2", 2) == F("0.3248")
    assert oracle_expanded(1, "0.02", 10, "0.01", "0.2", 0) == F("-0.008")
    assert oracle_expanded(1, "0.02", 10, 0, "0.2", 1) == F("0.16")


@pytest.mark.parametrize("f,p,l,expected", [
    (100_000_000, 0.02, 10, 20_000_000),
    (100_000_000, 0.0, 10, 0),
    (50_000_000, 0.025, 8, 10_000_000),
])
def test_management_fee(f, p, l, expected):
    assert management_fee_utility(FundParams(f, l, p, 0.0, 0.2)) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("m,expected", [(2, 16_000_000), (1, 0), (3, 32_000_000)])
def test_carry_simple(m, expected):
    assert carry_utility_simple(FundParams(100_000_000, 10, 0.02, 0.0, 0.2), m) == \
        pytest.approx(expected, abs=1e-6)


def test_simple_totals():
    p = FundParams(100_000_000, 10, 0.02, 0.0, 0.2)
    assert gp_utility_simple(p, 2).total == pytest.approx(36_000_000, abs=1e-6)
    u0 = gp_utility_simple(p, 0)
    assert u0.carry_utility == pytest.approx(-16_000_000, abs=1e-6)  # not clamped
    assert u0.total == pytest.approx(4_000_000, abs=1e-6)
    assert gp_utility_simple(FundParams(1.0, 10, 0.0, 0.0, 0.2), 2).total == pytest.approx(0.2)
    for m in (0, 0.5, 1.7, 3):
        assert gp_utility_simple(p, m).total == pytest.approx(
            float(oracle_simple(100_000_000, "0.02", 10, "0.2", m)), rel=1e-12)


def test_expanded_baseline_parts():
    u = gp_utility_expanded(BASE, 2)
    assert u.model_tag == EXPANDED
    assert u.total == pytest.approx(0.3248, abs=1e-12)
    assert u.fee_utility == pytest.approx(0.2, abs=1e-12)
    assert u.commit_pnl == pytest.approx(0.006, abs=1e-12)
    assert u.carry_utility == pytest.approx(0.1188, abs=1e-12)


def test_expanded_negative_and_zero_commit():
    assert gp_utility_expanded(BASE, 0).total == pytest.approx(-0.008, abs=1e-12)
    g0 = BASE.with_overrides(g=0.0)
    assert gp_utility_expanded(g0, 1).total == pytest.approx(0.16, abs=1e-12)


def test_clamp_is_opt_in():
    assert gp_utility_expanded(BASE, 0, clamp_carry=True).carry_utility == 0.0
    assert gp_utility_expanded(BASE, 0).carry_utility < 0


@pytest.mark.parametrize("p,l,g,c,m", [
    ("0.02", 10, "0.01", "0.2", "2"), ("0.03", 7, "0.05", "0.3", "0.4"),
    ("0", 10, "0", "0", "5"), ("0.1", 10, "1", "1", "3.3"), ("0.025", 8, "0.02", "0.25", "1"),
])
def test_grouping_equals_polynomial(p, l, g, c, m):
    params = FundParams(3.0, l, float(p), float(g), float(c))
    want = float(oracle_expanded(3, p, l, g, c, m))
    assert gp_utility_expanded(params, float(m)).total == pytest.approx(want, rel=1e-12, abs=1e-12)
    assert expanded_polynomial(params, float(m)) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_discrepancy():
    g0 = FundParams(1.0, 10, 0.02, 0.0, 0.2)
    assert gp_utility_simple(g0, 2).total == pytest.approx(0.36)
    assert gp_utility_expanded(g0, 2).total == pytest.approx(0.32)
    assert model_discrepancy(g0, 2) == pytest.approx(0.04, abs=1e-12)
    for m in (0, 1, 3.5):
        assert model_discrepancy(g0, m) == pytest.approx(0.2 * 0.02 * 10, abs=1e-12)
        assert model_discrepancy(g0.with_overrides(p=0.0), m) == pytest.approx(0.0, abs=1e-12)
    big = g0.with_overrides(f=10.0)
    assert model_discrepancy(big, 2) == pytest.approx(10 * model_discrepancy(g0, 2), rel=1e-12)


def test_threshold():
    assert fee_incentive_threshold(BASE) == pytest.approx(1 / (0.01 + 0.2 * 0.99), rel=1e-15)
    assert fee_incentive_threshold(BASE) == pytest.approx(4.8077, abs=1e-4)


def test_sweep_rows_and_linearity():
    rows = utility_sweep(BASE, [("base", {}), ("fee4", {"p": 0.04}), ("big", {"f": 2.0})],
                         [4, 0, 2, 1, 3])
    by = {}
    for r in rows:
        by.setdefault(r.variant_id, []).append(r)
    assert [r.m for r in by["base"]] == [0, 1, 2, 3, 4]
    for b, v, big in zip(by["base"], by["fee4"], by["big"]):
        assert v.total > b.total  # every m < 4.808
        assert big.total == pytest.approx(2 * b.total, rel=1e-15)


def test_sweep_identity_variant_and_ids():
    rows = utility_sweep(BASE, [{}, {}], [0, 2])
    a = [r for r in rows if r.variant_id == "v0"]
    b = [r for r in rows if r.variant_id == "v1"]
    assert [(r.m, r.total) for r in a] == [(r.m, r.total) for r in b]


def test_sweep_errors():
    with pytest.raises(ValueError):
        utility_sweep(BASE, [{}], [])
    with pytest.raises(ValueError):
        utility_sweep(BASE, [{"bogus": 1}], [1])
    with pytest.raises(ValueError):
        utility_sweep(BASE, [{}], [-1])


def test_sweep_csv_simple_model():
    csv_text = sweep_to_csv(utility_sweep(BASE, [("b", {})], [2], SIMPLE))
    header, row = csv_text.strip().split("\n")
    assert header == "variant_id,m,total,fee_utility,carry_utility,commit_pnl,model_tag"
    assert row.split(",")[0] == "b" and row.endswith(",simple")


@pytest.mark.parametrize("kw", [dict(fund_size_f=0), dict(fund_size_f=1, carry_c=1.2),
                                dict(fund_size_f=1, mgmt_fee_p=0.2, lifespan_l=10),
                                dict(fund_size_f=1, gp_commit_g=-0.1)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        FundParams(**kw)


def test_gp_utility_dispatch():
    assert gp_utility(BASE, 2, SIMPLE).model_tag == SIMPLE
    with pytest.raises(ValueError):
        gp_utility(BASE, 2, "realized")
