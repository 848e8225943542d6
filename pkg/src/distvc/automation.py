"""LP funding automations: rule matching, rate limits, round allocation, reserves.

A rule is a conjunction of clauses, evaluated in a fixed order so the
reported reason for a miss is deterministic::

    sector -> round_size -> valuation_cap -> rate_limit -> check_floor -> funds

``check_floor`` fails when the rule's minimum check is larger than the
round itself; ``funds`` fails when the owner cannot cover the minimum check.
"""

from __future__ import annotations

import csv
import io
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .distributed import Deal
from .money import apply_rate, as_fraction, largest_remainder

OK = "ok"
REASONS = ("sector", "round_size", "valuation_cap", "rate_limit", "check_floor", "funds")
MATCH = "match"
NO_MATCH = "no_match"

_OPS = {
    "eq": operator.eq, "ne": operator.ne, "lt": operator.lt, "le": operator.le,
    "gt": operator.gt, "ge": operator.ge, "in": lambda a, b: a in b,
}


@dataclass(frozen=True)
class Predicate:
    """``attributes[attr] <op> value``; a missing attribute never matches."""

    attr: str
    op: str
    value: Any

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown predicate op {self.op!r}")

    def __call__(self, attributes: Mapping[str, Any]) -> bool:
        if self.attr not in attributes:
            return False
        return bool(_OPS[self.op](attributes[self.attr], self.value))


@dataclass(frozen=True)
class AutomationRule:
    id: str
    owner: str
    sectors: frozenset[str]
    min_round_size: int
    max_valuation_cap: int
    check_min: int
    check_max: int
    max_per_quarter: int
    holding_period_pref: float | None = None
    followon_reserve_fraction: float = 0.0
    followon_criteria: tuple[Predicate, ...] = ()
    created_at: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sectors", frozenset(self.sectors))
        object.__setattr__(self, "followon_criteria", tuple(self.followon_criteria))
        if not 0 <= self.check_min <= self.check_max:
            raise ValueError(f"rule {self.id}: need 0 <= check_min <= check_max")
        if self.max_per_quarter < 1:
            raise ValueError(f"rule {self.id}: max_per_quarter must be >= 1")
        if not 0 <= as_fraction(self.followon_reserve_fraction) <= 1:
            raise ValueError(f"rule {self.id}: followon_reserve_fraction must lie in [0, 1]")

    def followon_ready(self, attributes: Mapping[str, Any]) -> bool:
        """True when every follow-on predicate holds; a rule with none never fires."""
        return bool(self.followon_criteria) and all(p(attributes) for p in self.followon_criteria)


def quarter_of(time_years: float) -> int:
    """Calendar-quarter index of a simulation time in years."""
    return math.floor(time_years * 4)


@dataclass
class QuarterLedger:
    counts: dict[tuple[str, int], int] = field(default_factory=dict)

    def count(self, rule_id: str, quarter: int) -> int:
        return self.counts.get((rule_id, quarter), 0)

    def record(self, rule: AutomationRule, quarter: int) -> None:
        key = (rule.id, quarter)
        n = self.counts.get(key, 0)
        if n >= rule.max_per_quarter:
            raise RuntimeError(f"rule {rule.id} already has {n} matches in quarter {quarter}")
        self.counts[key] = n + 1


@dataclass(frozen=True)
class MatchResult:
    decision: str
    reason: str
    proposed_check: int | None = None

    @property
    def matched(self) -> bool:
        return self.decision == MATCH


def match(rule: AutomationRule, deal: Deal, ledger: QuarterLedger,
          owner_available_capital: int, fill_fraction=1, quarter: int | None = None) -> MatchResult:
    """Test ``deal`` against ``rule``; a miss is returned, never raised.

    ``quarter`` defaults to the quarter of the deal's latest transition. The
    proposed check is ``owner_available_capital * fill_fraction`` clamped to
    ``[check_min, check_max]``.
    """
    q = quarter_of(deal.current_time) if quarter is None else quarter
    if deal.sector not in rule.sectors:
        return MatchResult(NO_MATCH, "sector")
    if deal.round_size < rule.min_round_size:
        return MatchResult(NO_MATCH, "round_size")
    if deal.valuation_cap > rule.max_valuation_cap:
        return MatchResult(NO_MATCH, "valuation_cap")
    if ledger.count(rule.id, q) >= rule.max_per_quarter:
        return MatchResult(NO_MATCH, "rate_limit")
    if rule.check_min > deal.round_size:
        return MatchResult(NO_MATCH, "check_floor")
    if owner_available_capital < rule.check_min:
        return MatchResult(NO_MATCH, "funds")
    sized = math.floor(Fraction(owner_available_capital) * as_fraction(fill_fraction))
    check = min(rule.check_max, max(rule.check_min, sized))
    return MatchResult(MATCH, OK, check)


@dataclass(frozen=True)
class Proposal:
    rule: AutomationRule
    check: int

    def __post_init__(self):
        if not self.rule.check_min <= self.check <= self.rule.check_max:
            raise ValueError(f"rule {self.rule.id}: proposed check {self.check} outside bounds")


def _age_key(p: Proposal):
    return (p.rule.created_at, p.rule.id)


def allocate_round(capacity: int, proposals: Sequence[Proposal]) -> dict[str, int]:
    """Fill a round from matched proposals; returns ``rule_id -> filled check``.

    Undersubscribed rounds fill every proposal in full. Otherwise the checks
    are scaled down pro-rata to the capacity; while any scaled check falls
    below its rule's ``check_min``, the youngest such rule is dropped and the
    rest are re-scaled. The result depends only on the set of proposals, not
    on their order.
    """
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    active = sorted(proposals, key=_age_key)
    if len({p.rule.id for p in active}) != len(active):
        raise ValueError("one proposal per rule")
    while active:
        total = sum(p.check for p in active)
        if total <= capacity:
            return {p.rule.id: p.check for p in active}
        fills = largest_remainder(capacity, {p.rule.id: p.check for p in active},
                                  order=[p.rule.id for p in active])
        short = [p for p in active if fills[p.rule.id] < p.rule.check_min]
        if not short:
            return fills
        youngest = max(short, key=_age_key)
        active = [p for p in active if p is not youngest]
    return {}


def reserve_followon(rule: AutomationRule, staked_capital: int) -> int:
    """Capital set aside for follow-ons: ``staked * fraction``, half-even."""
    if staked_capital < 0:
        raise ValueError("staked capital must be >= 0")
    return apply_rate(staked_capital, rule.followon_reserve_fraction)


@dataclass
class CapitalAccount:
    """An LP's staked capital split into available, reserved and deployed.

    ``available + reserved + deployed == total`` after every operation.
    """

    owner: str
    total: int
    available: int = 0
    reserved: int = 0
    deployed: int = 0

    def __post_init__(self):
        if self.available == self.reserved == self.deployed == 0:
            self.available = self.total
        self._check()

    def _check(self):
        if self.available + self.reserved + self.deployed != self.total:
            raise AssertionError(f"{self.owner}: capital account does not reconcile")
        if min(self.available, self.reserved, self.deployed) < 0:
            raise AssertionError(f"{self.owner}: negative capital bucket")

    def reserve(self, amount: int) -> None:
        if amount > self.available:
            raise ValueError(f"{self.owner}: cannot reserve {amount}, only {self.available} free")
        self.available -= amount
        self.reserved += amount
        self._check()

    def deploy(self, amount: int, from_reserve: bool = False) -> None:
        pool = self.reserved if from_reserve else self.available
        if amount > pool:
            raise ValueError(f"{self.owner}: cannot deploy {amount}")
        if from_reserve:
            self.reserved -= amount
        else:
            self.available -= amount
        self.deployed += amount
        self._check()

    def release_reserve(self) -> int:
        """Return all unused reserve to available capital."""
        amount = self.reserved
        self.available += amount
        self.reserved = 0
        self._check()
        return amount


MATCH_TRACE_COLUMNS = ("rule_id", "deal_id", "quarter", "decision", "reason", "check")


def match_trace_to_csv(rows: Iterable[tuple[str, str, int, MatchResult]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MATCH_TRACE_COLUMNS)
    for rule_id, deal_id, quarter, res in rows:
        w.writerow([rule_id, deal_id, quarter, res.decision, res.reason,
                    "" if res.proposed_check is None else res.proposed_check])
    return buf.getvalue()
