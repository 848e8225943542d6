"""Fund performance metrics over signed cash flows and residual-value marks.

Sign convention: negative amounts are paid-in capital (capital calls),
positive amounts are distributions. Time is in years since inception and
discounting uses annual compounding with fractional exponents.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import defaults
from .money import as_fraction

CAPITAL_CALL = "capital_call"
DISTRIBUTION = "distribution"

IRR_LOWER = -0.9999
IRR_UPPER = 10.0
IRR_GRID_STEP = 1e-3
NPV_RTOL = 1e-9


@dataclass(frozen=True)
class CashFlowEvent:
    time: float
    amount: int
    kind: str = ""

    def __post_init__(self):
        if not self.time >= 0:
            raise ValueError(f"event time must be >= 0, got {self.time}")
        kind = self.kind or (CAPITAL_CALL if self.amount < 0 else DISTRIBUTION)
        object.__setattr__(self, "kind", kind)
        if kind == CAPITAL_CALL and self.amount > 0:
            raise ValueError("capital_call amounts must be <= 0")
        if kind == DISTRIBUTION and self.amount < 0:
            raise ValueError("distribution amounts must be >= 0")
        if kind not in (CAPITAL_CALL, DISTRIBUTION):
            raise ValueError(f"unknown event kind {kind!r}")


@dataclass(frozen=True)
class CashFlowSeries:
    """Time-ordered cash flows. Construction sorts stably by time."""

    events: tuple[CashFlowEvent, ...] = ()

    def __post_init__(self):
        evs = tuple(sorted(self.events, key=lambda e: e.time))
        object.__setattr__(self, "events", evs)
        for e in evs:
            if e.kind == CAPITAL_CALL:
                break
            if e.kind == DISTRIBUTION and e.amount > 0:
                raise ValueError("a distribution precedes the first capital call")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, int]]) -> "CashFlowSeries":
        return cls(tuple(CashFlowEvent(t, a) for t, a in pairs))

    def __len__(self):
        return len(self.events)

    def scaled(self, k: int) -> "CashFlowSeries":
        return CashFlowSeries(tuple(CashFlowEvent(e.time, e.amount * k, e.kind) for e in self.events))

    def paid_in(self, as_of: float = math.inf) -> int:
        return -sum(e.amount for e in self.events if e.time <= as_of and e.amount < 0)

    def distributed(self, as_of: float = math.inf) -> int:
        return sum(e.amount for e in self.events if e.time <= as_of and e.amount > 0)


@dataclass(frozen=True)
class NavSeries:
    marks: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        marks = tuple(sorted(self.marks, key=lambda tm: tm[0]))
        object.__setattr__(self, "marks", marks)
        for t, v in marks:
            if v < 0:
                raise ValueError("residual values must be >= 0")

    def value_at(self, as_of: float) -> int:
        """Most recent mark at or before ``as_of``; zero before the first mark."""
        value = 0
        for t, v in self.marks:
            if t > as_of:
                break
            value = v
        return value


@dataclass(frozen=True)
class IrrResult:
    """IRR outcome. ``rate`` is None when NPV never changes sign in the domain."""

    rate: float | None
    ambiguous: bool = False

    @property
    def defined(self) -> bool:
        return self.rate is not None


@dataclass(frozen=True)
class KpiReport:
    irr: IrrResult | None
    tvpi: float
    dpi: float
    rvpi: float
    tvpi_dpi_ratio: float | None
    as_of: float
    paid_in: int = 0
    distributed: int = 0
    nav: int = 0


def _aggregate(times: np.ndarray, amounts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(times, return_inverse=True)
    sums = np.zeros(len(uniq))
    np.add.at(sums, inv, amounts)
    return uniq, sums


def npv(rate: float | np.ndarray, times: Sequence[float], amounts: Sequence[float]):
    """Net present value ``sum(a * (1 + r) ** -t)``; vectorized over ``rate``."""
    t = np.asarray(times, dtype=float)
    a = np.asarray(amounts, dtype=float)
    r = np.asarray(rate, dtype=float)
    disc = (1.0 + r[..., None]) ** (-t)
    return (disc * a).sum(axis=-1)


def irr(series: CashFlowSeries, terminal_nav: int | None = None,
        terminal_time: float | None = None) -> IrrResult:
    """Internal rate of return by grid bracketing and bisection.

    NPV is scanned over ``(-0.9999, 10]`` at 0.001 spacing. The first bracket
    is refined by bisection until ``|NPV| <= 1e-9 * sum|amount|``. More than
    one sign change sets ``ambiguous``; no sign change returns an undefined
    result. ``terminal_nav`` is treated as a final distribution at
    ``terminal_time`` (default: the last event time).
    """
    if not len(series):
        raise ValueError("irr needs a non-empty cash-flow series")
    times = [e.time for e in series.events]
    amounts = [float(e.amount) for e in series.events]
    if terminal_nav:
        times.append(times[-1] if terminal_time is None else terminal_time)
        amounts.append(float(terminal_nav))
    t, a = _aggregate(np.asarray(times, dtype=float), np.asarray(amounts))
    scale = float(np.abs(amounts).sum())
    if scale == 0:
        return IrrResult(None)
    tol = NPV_RTOL * scale

    n = int(round((IRR_UPPER - IRR_LOWER) / IRR_GRID_STEP))
    grid = np.linspace(IRR_LOWER, IRR_UPPER, n + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        values = npv(grid, t, a)
    valid = np.isfinite(values)
    grid, values = grid[valid], values[valid]
    sign = np.sign(values)
    nz = np.flatnonzero(sign != 0)
    if len(nz) == 0:
        return IrrResult(None)
    # roots: sign changes between neighbouring non-zero samples, plus exact
    # zeros on the grid (a zero between two samples of opposite sign is the
    # same root as that change). Index 0 is the excluded lower bound.
    lo_idx, hi_idx = nz[:-1], nz[1:]
    pair_root = (sign[lo_idx] != sign[hi_idx]) | (hi_idx - lo_idx > 1)
    leading = nz[0] > 1
    trailing = nz[-1] < len(grid) - 1
    n_roots = int(pair_root.sum()) + int(leading) + int(trailing)
    if n_roots == 0:
        return IrrResult(None)
    ambiguous = n_roots > 1
    if leading:
        return IrrResult(float(grid[1]), ambiguous)
    if not pair_root.any():
        return IrrResult(float(grid[nz[-1] + 1]), ambiguous)
    k = int(np.argmax(pair_root))
    lo_i, hi_i = int(lo_idx[k]), int(hi_idx[k])
    if hi_i - lo_i > 1:
        return IrrResult(float(grid[lo_i + 1]), ambiguous)
    f_lo = float(values[lo_i])
    lo, hi = float(grid[lo_i]), float(grid[hi_i])
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = float(npv(mid, t, a))
        # bisect to float resolution so the answer does not depend on the
        # magnitude of the flows; tol is the acceptance floor
        if f_mid == 0 or mid in (lo, hi):
            break
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    if abs(float(npv(mid, t, a))) > tol:
        raise ArithmeticError("IRR bisection failed to reach the NPV tolerance")
    return IrrResult(mid, ambiguous)


def multiples(series: CashFlowSeries, nav_at: int | None = None,
              as_of: float = math.inf, irr_result: IrrResult | None = None) -> KpiReport:
    """DPI, RVPI, TVPI and TVPI/DPI over flows dated at or before ``as_of``.

    Sums are taken over integer minor units and divided once, so scaling
    every amount by a positive integer leaves the multiples bit-identical.
    """
    return report_from_totals(series.paid_in(as_of), series.distributed(as_of),
                              nav_at or 0, as_of, irr_result)


def report_from_totals(paid_in: int, dist: int, nav: int, as_of: float,
                       irr_result: IrrResult | None = None) -> KpiReport:
    """Multiples from cumulative paid-in, distributions and residual value."""
    if paid_in <= 0:
        raise ValueError("cumulative paid-in capital is zero at as_of")
    if nav < 0 or dist < 0:
        raise ValueError("nav and distributions must be >= 0")
    dpi = dist / paid_in
    rvpi = nav / paid_in
    tvpi = dpi + rvpi
    ratio = tvpi / dpi if dpi > 0 else None
    return KpiReport(irr_result, tvpi, dpi, rvpi, ratio, as_of, paid_in, dist, nav)


def kpi_timeline(series: CashFlowSeries, nav: NavSeries, years: Iterable[float],
                 with_irr: bool = True) -> list[KpiReport]:
    """One :class:`KpiReport` per ``as_of`` in ``years`` that has paid-in > 0."""
    out = []
    for y in years:
        if series.paid_in(y) <= 0:
            continue
        nav_y = nav.value_at(y)
        res = None
        if with_irr:
            sub = CashFlowSeries(tuple(e for e in series.events if e.time <= y))
            res = irr(sub, terminal_nav=nav_y, terminal_time=y)
        out.append(multiples(series, nav_y, y, res))
    return out


def fair_value_adjust(paper_valuation: int,
                      inflation_rate=defaults.MARKUP_INFLATION) -> int:
    """Deflate a paper valuation to fair value: ``v / (1 + rate)``, half-even."""
    rate = as_fraction(inflation_rate)
    if paper_valuation < 0:
        raise ValueError("paper_valuation must be >= 0")
    if rate <= -1:
        raise ValueError("inflation_rate must be > -1")
    return round(Fraction(paper_valuation) / (1 + rate))


def markup_value(fair_value: int, inflation_rate=defaults.MARKUP_INFLATION) -> int:
    """Inverse of :func:`fair_value_adjust`: ``v * (1 + rate)``, half-even."""
    rate = as_fraction(inflation_rate)
    if rate <= -1:
        raise ValueError("inflation_rate must be > -1")
    return round(Fraction(fair_value) * (1 + rate))


TIMELINE_COLUMNS = ("as_of_years", "paid_in", "distributed", "nav", "irr", "dpi",
                    "tvpi", "rvpi", "tvpi_dpi_ratio", "irr_ambiguous")


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".12g")


def timeline_to_csv(reports: Iterable[KpiReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMELINE_COLUMNS)
    for r in reports:
        rate = r.irr.rate if r.irr is not None else None
        amb = int(r.irr.ambiguous) if r.irr is not None else 0
        w.writerow([_fmt(r.as_of), r.paid_in, r.distributed, r.nav, _fmt(rate),
                    _fmt(r.dpi), _fmt(r.tvpi), _fmt(r.rvpi), _fmt(r.tvpi_dpi_ratio), amb])
    return buf.getvalue()
