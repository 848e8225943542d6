"""Annual lifecycle engine for a traditional GP-LP fund.

One call to :func:`run_fund` simulates a single fund:

* management fees ``f*p`` are called every year of the lifespan;
* initial checks go out evenly over the deployment years, called just in
  time;
* at the end of deployment the follow-on reserve is spread pro-rata (by cost
  basis) over positions marked above cost, bought at the current round price;
  whatever cannot be placed is released and never called;
* exits pay fair value; carry is withheld from distributions once cumulative
  distributions exceed the capital the fund can still call, so it never has
  to be clawed back.

Money is integer minor units throughout. The fund-level cash flows in
:class:`FundRun` are those of all partners (GP commit included), net of
carry.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import defaults
from .economics import REALIZED, FundParams, UtilityBreakdown
from .kpi import (CashFlowEvent, CashFlowSeries, IrrResult, KpiReport, NavSeries,
                  irr, report_from_totals)
from .market import OutcomeBatch, OutcomeModel, SeedSpec, derive_stream, sample_outcomes
from .money import apply_rate, as_fraction, largest_remainder

EQUAL_WEIGHT = "equal_weight"
WEIGHTED = "weighted"


@dataclass(frozen=True)
class DeploymentSchedule:
    deployment_years: int = 4
    initial_fraction: float = 0.6
    companies_per_fund: int = 50
    check_policy: str = EQUAL_WEIGHT
    check_weights: tuple[float, ...] = ()

    def __post_init__(self):
        if not 1 <= self.deployment_years:
            raise ValueError("deployment_years must be >= 1")
        if not 0.0 <= self.initial_fraction <= 1.0:
            raise ValueError("initial_fraction must lie in [0, 1]")
        if self.companies_per_fund < 1:
            raise ValueError("companies_per_fund must be > 0")
        if self.check_policy not in (EQUAL_WEIGHT, WEIGHTED):
            raise ValueError(f"unknown check_policy {self.check_policy!r}")
        if self.check_policy == WEIGHTED:
            if len(self.check_weights) != self.companies_per_fund:
                raise ValueError("weighted policy needs one weight per company")
            if any(w < 0 for w in self.check_weights) or sum(self.check_weights) <= 0:
                raise ValueError("check weights must be >= 0 with a positive sum")

    @property
    def followon_reserve(self) -> float:
        return 1.0 - self.initial_fraction

    def investment_year(self, i: int) -> int:
        return i * self.deployment_years // self.companies_per_fund


@dataclass(frozen=True)
class SuccessorDecision:
    raise_next: bool
    basis_tvpi: float
    threshold: float


def successor_decision(timeline: list[KpiReport],
                       threshold: float = defaults.SUCCESSOR_TVPI_THRESHOLD,
                       at_year: float | None = None) -> SuccessorDecision:
    """Raise Fund N+1 iff interim TVPI at ``at_year`` is at least ``threshold``.

    ``at_year`` defaults to the last report; otherwise the latest report at or
    before it is used.
    """
    if not timeline:
        raise ValueError("timeline is empty")
    report = timeline[-1]
    if at_year is not None:
        eligible = [r for r in timeline if r.as_of <= at_year]
        if not eligible:
            raise ValueError(f"no report at or before year {at_year}")
        report = eligible[-1]
    return SuccessorDecision(report.tvpi >= threshold, report.tvpi, threshold)


@dataclass
class FundState:
    """Ledger of the fund at the end of a simulated year."""

    year: int = 0
    paid_in: int = 0
    invested: int = 0
    fees: int = 0
    dry_powder: int = 0
    uncalled: int = 0
    released_reserve: int = 0
    gross_distributed: int = 0
    carry_paid: int = 0
    nav_fair: int = 0
    nav_paper: int = 0

    @property
    def distributed(self) -> int:
        return self.gross_distributed - self.carry_paid

    def check_conservation(self, fund_size: int) -> None:
        if self.paid_in != self.invested + self.fees + self.dry_powder:
            raise AssertionError(f"year {self.year}: paid-in does not reconcile")
        if fund_size != self.paid_in + self.uncalled + self.released_reserve:
            raise AssertionError(f"year {self.year}: commitment does not reconcile")
        if self.dry_powder < 0 or self.uncalled < 0:
            raise AssertionError(f"year {self.year}: negative dry powder or uncalled capital")


@dataclass(frozen=True)
class YearRecord:
    year: int
    paid_in: int
    invested: int
    fees: int
    nav_fair: int
    nav_paper: int
    distributed: int
    dpi: float
    tvpi_fair: float
    tvpi_paper: float
    irr: IrrResult | None


@dataclass
class FundRun:
    params: FundParams
    schedule: DeploymentSchedule
    seed: SeedSpec
    records: list[YearRecord]
    cash_flows: CashFlowSeries
    nav: NavSeries
    nav_fair: NavSeries
    timeline: list[KpiReport]
    realized: UtilityBreakdown
    final_state: FundState
    successor: SuccessorDecision | None = None
    n_followons: int = 0

    def record_at(self, year: int) -> YearRecord:
        """Record for ``year``, or the last one if the fund ended earlier."""
        for r in self.records:
            if r.year == year:
                return r
        if year > self.records[-1].year:
            return self.records[-1]
        raise KeyError(year)


def _initial_checks(pool: int, schedule: DeploymentSchedule) -> np.ndarray:
    n = schedule.companies_per_fund
    if schedule.check_policy == WEIGHTED:
        weights = {i: as_fraction(w) for i, w in enumerate(schedule.check_weights)}
    else:
        weights = {i: 1 for i in range(n)}
    split = largest_remainder(pool, weights, order=range(n))
    return np.array([split[i] for i in range(n)], dtype=np.int64)


def _yearly_fees(params: FundParams) -> list[int]:
    total = apply_rate(int(params.fund_size_f), Fraction(as_fraction(params.mgmt_fee_p))
                       * params.lifespan_l)
    split = largest_remainder(total, {y: 1 for y in range(params.lifespan_l)},
                              order=range(params.lifespan_l))
    return [split[y] for y in range(params.lifespan_l)]


def run_fund(params: FundParams, schedule: DeploymentSchedule, model: OutcomeModel,
             seed: SeedSpec, *, with_irr: bool = True,
             successor_threshold: float = defaults.SUCCESSOR_TVPI_THRESHOLD,
             horizon: int | None = None, outcomes: OutcomeBatch | None = None) -> FundRun:
    """Simulate one fund from first close until every position has exited.

    ``outcomes`` lets the caller supply pre-drawn company outcomes; by default
    they come from the stream for ``seed``. ``horizon`` extends the yearly
    records past the last event (values stay flat).
    """
    if schedule.deployment_years > params.lifespan_l:
        raise ValueError("deployment_years exceeds the fund lifespan")
    f = params.fund_size_f
    if int(f) != f:
        raise ValueError("run_fund needs fund_size_f in whole minor units")
    f = int(f)
    n = schedule.companies_per_fund
    if outcomes is None:
        outcomes = sample_outcomes(model, derive_stream(seed.master_seed, seed.stream_id), n)
    elif len(outcomes) != n:
        raise ValueError("outcome batch size does not match companies_per_fund")

    fees_by_year = _yearly_fees(params)
    investable = f - sum(fees_by_year)
    initial_pool = apply_rate(investable, schedule.initial_fraction)
    reserve = investable - initial_pool
    init_amt = _initial_checks(initial_pool, schedule)
    invest_year = np.array([schedule.investment_year(i) for i in range(n)], dtype=np.int64)
    exit_year = invest_year + outcomes.liquidity
    fo_amt = np.zeros(n, dtype=np.int64)
    fo_price = np.ones(n)
    last_col = outcomes.fair.shape[1] - 1
    rows = np.arange(n)

    carry_rate = as_fraction(params.carry_c) * (1 - as_fraction(params.gp_commit_g))
    D = schedule.deployment_years
    last_event = max(params.lifespan_l, int(exit_year.max()), D)
    H = max(last_event, horizon or 0)

    st = FundState(uncalled=f)
    events: list[CashFlowEvent] = []
    nav_marks, fair_marks, records, timeline = [], [], [], []
    carry_basis = f
    n_followons = 0

    for y in range(H + 1):
        st.year = y
        # 1. exits and write-offs
        exiting = exit_year == y
        gross = 0
        if exiting.any():
            t = outcomes.terminal[exiting]
            proceeds = np.rint(init_amt[exiting] * t + fo_amt[exiting] * (t / fo_price[exiting]))
            gross = int(proceeds.sum())

        # 2-4. capital calls: fees, initial checks, follow-ons
        fee = fees_by_year[y] if y < params.lifespan_l else 0
        new_checks = int(init_amt[invest_year == y].sum())
        followon = 0
        if y == D and reserve > 0:
            age = np.clip(y - invest_year, 0, last_col)
            held = (invest_year < y) & (exit_year > y)
            paper_mult = outcomes.paper[rows, age]
            qualifies = held & (paper_mult > 1.0) & (init_amt > 0)
            if qualifies.any():
                idx = np.flatnonzero(qualifies)
                split = largest_remainder(reserve, {int(i): int(init_amt[i]) for i in idx},
                                          order=[int(i) for i in idx])
                for i, amt in split.items():
                    fo_amt[i] = amt
                    fo_price[i] = paper_mult[i]
                followon = reserve
                n_followons = len(idx)
            else:
                st.released_reserve = reserve
                st.uncalled -= reserve
                carry_basis -= reserve
        call = fee + new_checks + followon
        if call:
            st.paid_in += call
            st.uncalled -= call
            st.fees += fee
            st.invested += new_checks + followon
            events.append(CashFlowEvent(float(y), -call))

        # 5. distribution with carry withheld above the remaining capital base
        if gross:
            st.gross_distributed += gross
            excess = max(0, st.gross_distributed - carry_basis)
            carry_due = round(excess * carry_rate)
            carry_now = max(0, carry_due - st.carry_paid)
            st.carry_paid += carry_now
            net = gross - carry_now
            if net:
                events.append(CashFlowEvent(float(y), net))

        # 6. year-end marks
        held = (invest_year <= y) & (exit_year > y)
        if held.any():
            age = np.clip(y - invest_year, 0, last_col)[held]
            r = rows[held]
            units_fo = fo_amt[held] / fo_price[held]
            st.nav_fair = int(np.rint((init_amt[held] + units_fo) * outcomes.fair[r, age]).sum())
            st.nav_paper = int(np.rint((init_amt[held] + units_fo) * outcomes.paper[r, age]).sum())
        else:
            st.nav_fair = st.nav_paper = 0
        st.check_conservation(f)
        nav_marks.append((float(y), st.nav_paper))
        fair_marks.append((float(y), st.nav_fair))

        if st.paid_in > 0:
            res = None
            if with_irr:
                res = irr(CashFlowSeries(tuple(events)), terminal_nav=st.nav_paper,
                          terminal_time=float(y))
            rep = report_from_totals(st.paid_in, st.distributed, st.nav_paper, float(y), res)
            timeline.append(rep)
            records.append(YearRecord(
                y, st.paid_in, st.invested, st.fees, st.nav_fair, st.nav_paper,
                st.distributed, rep.dpi, rep.dpi + st.nav_fair / st.paid_in, rep.tvpi, res))

    commit_pnl = params.gp_commit_g * (st.gross_distributed - st.paid_in)
    realized = UtilityBreakdown(float(st.fees), float(st.carry_paid), commit_pnl,
                                st.fees + st.carry_paid + commit_pnl, REALIZED)
    successor = successor_decision(timeline, successor_threshold, at_year=D) if timeline else None
    return FundRun(params, schedule, seed, records, CashFlowSeries(tuple(events)),
                   NavSeries(tuple(nav_marks)), NavSeries(tuple(fair_marks)), timeline,
                   realized, st, successor, n_followons)


STANDARD_COLUMNS = ("trial", "year", "paid_in", "invested", "fees", "nav_fair", "nav_paper",
                    "distributed", "dpi", "tvpi_fair", "tvpi_paper", "irr_net")


def _g(x):
    return "" if x is None else format(x, ".12g")


def standard_rows(trial: int, run: FundRun) -> list[list]:
    out = []
    for r in run.records:
        rate = r.irr.rate if r.irr is not None else None
        out.append([trial, r.year, r.paid_in, r.invested, r.fees, r.nav_fair, r.nav_paper,
                    r.distributed, _g(r.dpi), _g(r.tvpi_fair), _g(r.tvpi_paper), _g(rate)])
    return out


def runs_to_csv(runs: list[FundRun]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STANDARD_COLUMNS)
    for trial, run in enumerate(runs):
        w.writerows(standard_rows(run.seed.stream_id if run.seed else trial, run))
    return buf.getvalue()
