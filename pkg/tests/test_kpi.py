import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distvc.kpi import (CashFlowEvent, CashFlowSeries, NavSeries, fair_value_adjust, irr,
                        kpi_timeline, markup_value, multiples, npv, report_from_totals,
                        timeline_to_csv)


def npv_oracle(r, pairs):
    return math.fsum(a / (1.0 + r) ** t for t, a in pairs)


EXAMPLES = [
    ([(0, -100), (10, 200)], 2 ** 0.1 - 1),
    ([(0, -100), (1, 100)], 0.0),
    ([(0, -100), (1, 50), (2, 75)], 1 / ((-50 + math.sqrt(32500)) / 150) - 1),
]


@pytest.mark.parametrize("pairs,expected", EXAMPLES)
def test_irr_examples(pairs, expected):
    res = irr(CashFlowSeries.from_pairs(pairs))
    assert res.defined and not res.ambiguous
    assert res.rate == pytest.approx(expected, abs=1e-9)
    assert abs(npv_oracle(res.rate, pairs)) <= 1e-9


def test_irr_quadratic_value():
    assert irr(CashFlowSeries.from_pairs(EXAMPLES[2][0])).rate == pytest.approx(0.151388, abs=1e-6)


def test_irr_undefined_and_errors():
    assert irr(CashFlowSeries.from_pairs([(0, -100), (1, 0)])).rate is None
    assert irr(CashFlowSeries.from_pairs([(0, -100)])).rate is None
    with pytest.raises(ValueError):
        irr(CashFlowSeries())


def test_irr_two_roots_flagged():
    # -100, +230, -132: roots at 10% and 20%
    res = irr(CashFlowSeries.from_pairs([(0, -100), (1, 230), (2, -132)]))
    assert res.ambiguous
    assert res.rate == pytest.approx(0.1, abs=1e-9)


def test_irr_terminal_nav():
    s = CashFlowSeries.from_pairs([(0, -100)])
    assert irr(s, terminal_nav=200, terminal_time=10).rate == pytest.approx(2 ** 0.1 - 1, abs=1e-9)


def test_irr_scale_invariant():
    s = CashFlowSeries.from_pairs([(0, -137), (1.5, 40), (3, 61), (7, 90)])
    assert irr(s).rate == irr(s.scaled(1000)).rate


def test_npv_vectorized():
    v = npv(np.array([0.0, 0.1]), [0, 1], [-100, 110])
    assert v[0] == pytest.approx(10) and v[1] == pytest.approx(0, abs=1e-12)


def test_distribution_before_call_rejected():
    with pytest.raises(ValueError):
        CashFlowSeries.from_pairs([(0, 50), (1, -100)])
    with pytest.raises(ValueError):
        CashFlowEvent(1.0, 5, "capital_call")


@pytest.mark.parametrize("paid,dist,nav,dpi,tvpi,ratio", [
    (100, 150, 0, 1.5, 1.5, 1.0),
    (100, 0, 300, 0.0, 3.0, None),
    (100, 80, 240, 0.8, 3.2, 4.0),
])
def test_report_examples(paid, dist, nav, dpi, tvpi, ratio):
    r = report_from_totals(paid, dist, nav, 1.0)
    assert r.dpi == pytest.approx(dpi) and r.tvpi == pytest.approx(tvpi)
    assert (r.tvpi_dpi_ratio is None) if ratio is None else r.tvpi_dpi_ratio == pytest.approx(ratio)


def test_zero_paid_in():
    with pytest.raises(ValueError):
        report_from_totals(0, 0, 0, 1.0)
    with pytest.raises(ValueError):
        multiples(CashFlowSeries.from_pairs([(2, -5)]), 0, as_of=1)


def test_fair_value_adjust():
    assert fair_value_adjust(1_000_000_000, 0.48) == 675_675_676
    assert fair_value_adjust(148, 0.48) == 100
    assert fair_value_adjust(12345, 0) == 12345
    assert markup_value(100, 0.48) == 148


def test_timeline_and_csv():
    s = CashFlowSeries.from_pairs([(0, -100), (1, -50), (3, 60), (5, 200)])
    nav = NavSeries(((0, 100), (1, 160), (3, 150), (5, 0)))
    reps = kpi_timeline(s, nav, [0, 1, 2, 3, 4, 5])
    assert [r.paid_in for r in reps] == [100, 150, 150, 150, 150, 150]
    assert reps[-1].dpi == pytest.approx(260 / 150)
    text = timeline_to_csv(reps)
    assert text.splitlines()[0] == ("as_of_years,paid_in,distributed,nav,irr,dpi,tvpi,rvpi,"
                                    "tvpi_dpi_ratio,irr_ambiguous")
    assert len(text.splitlines()) == 7


@st.composite
def ledgers(draw):
    n = draw(st.integers(1, 8))
    calls = [(float(draw(st.integers(0, 10))), -draw(st.integers(1, 10**9))) for _ in range(n)]
    first = min(t for t, _ in calls)
    dists = [(float(draw(st.integers(int(first), 15))), draw(st.integers(0, 10**9)))
             for _ in range(draw(st.integers(0, 8)))]
    return CashFlowSeries.from_pairs(calls + dists)


@settings(max_examples=200, deadline=None)
@given(ledgers(), st.integers(0, 10**9), st.integers(2, 1000))
def test_kpi_identities(series, nav, k):
    last = max(e.time for e in series.events)
    r = multiples(series, nav, last)
    assert r.tvpi == r.dpi + r.rvpi
    r2 = multiples(series.scaled(k), nav * k, last)
    assert (r2.dpi, r2.rvpi, r2.tvpi) == (r.dpi, r.rvpi, r.tvpi)
    first = min(e.time for e in series.events if e.amount < 0)
    dpis = [multiples(series, 0, y).dpi for y in np.arange(first, 16)]
    paid = [series.paid_in(y) for y in np.arange(first, 16)]
    # with paid-in frozen, DPI can only grow
    for i in range(1, len(dpis)):
        if paid[i] == paid[i - 1]:
            assert dpis[i] >= dpis[i - 1]


@settings(max_examples=150, deadline=None)
@given(st.floats(-0.5, 3.0), st.lists(st.integers(1, 10**4), min_size=1, max_size=6),
       st.integers(1, 12))
def test_irr_residual_on_solvable(rate, calls, horizon):
    # build a series whose IRR is `rate` by construction
    pairs = [(float(i), -c) for i, c in enumerate(calls)]
    fv = sum(c * (1 + rate) ** (horizon + len(calls) - i) for i, c in enumerate(calls))
    pairs.append((float(horizon + len(calls)), max(1, int(round(fv)))))
    res = irr(CashFlowSeries.from_pairs(pairs))
    assert res.defined
    assert abs(npv_oracle(res.rate, pairs)) <= 1e-9 * sum(abs(a) for _, a in pairs)
