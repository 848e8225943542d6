"""Members, pods, the deal pipeline and per-deal SPV economics.

Every deal is self-contained: it gets its own SPV, a one-time performance fee
at close, a fixed admin cost, and carry on its own exit. Nothing is netted
across deals.

Splits between pods use exact rationals; money is split with
:func:`~distvc.money.largest_remainder`, so each ledger sums to the minor
unit. Within a pod, shares follow the deal's attribution weights and ties go
to the lower member id.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from . import defaults
from .money import apply_rate, as_fraction, largest_remainder


class PodKind(str, Enum):
    CORE = "core"
    SOURCING = "sourcing"
    DILIGENCE = "diligence"
    FUNDING = "funding"
    SUCCESS = "success"


POD_ORDER = tuple(PodKind)


class DealState(str, Enum):
    SOURCED = "sourced"
    MEMO = "memo"
    FUNDED = "funded"
    PORTFOLIO = "portfolio"
    EXITED = "exited"
    REJECTED = "rejected"


_FORWARD = {
    DealState.SOURCED: {DealState.MEMO, DealState.REJECTED},
    DealState.MEMO: {DealState.FUNDED, DealState.REJECTED},
    DealState.FUNDED: {DealState.PORTFOLIO},
    DealState.PORTFOLIO: {DealState.EXITED},
    DealState.EXITED: set(),
    DealState.REJECTED: set(),
}


class DealStateError(Exception):
    """Illegal pipeline transition or an operation in the wrong state."""


class UnderfundedError(ValueError):
    """Commitments do not cover the SPV's fee and admin cost."""


@dataclass
class Member:
    id: str
    pod_memberships: set[PodKind] = field(default_factory=set)
    capital_account: int = 0
    attribution_log: dict[str, dict[PodKind, Fraction]] = field(default_factory=dict)


@dataclass(frozen=True)
class Pod:
    kind: PodKind
    members: frozenset[str] = frozenset()


@dataclass
class Firm:
    """The member roster and its pods. Exactly one pod of each kind."""

    members: dict[str, Member]
    pods: dict[PodKind, Pod]

    def __post_init__(self):
        missing = set(PodKind) - set(self.pods)
        if missing:
            raise ValueError(f"missing pods: {sorted(k.value for k in missing)}")
        for pod in self.pods.values():
            unknown = pod.members - set(self.members)
            if unknown:
                raise ValueError(f"pod {pod.kind.value} lists unknown members {sorted(unknown)}")

    @classmethod
    def from_memberships(cls, memberships: Mapping[str, Iterable[str]],
                         capital: Mapping[str, int] | None = None) -> "Firm":
        members = {}
        pods: dict[PodKind, set[str]] = {k: set() for k in PodKind}
        for mid, kinds in memberships.items():
            ks = {PodKind(k) for k in kinds}
            members[mid] = Member(mid, ks, (capital or {}).get(mid, 0))
            for k in ks:
                pods[k].add(mid)
        return cls(members, {k: Pod(k, frozenset(v)) for k, v in pods.items()})

    def core_members(self) -> tuple[str, ...]:
        return tuple(sorted(self.pods[PodKind.CORE].members))


@dataclass(frozen=True)
class FeeSchedule:
    performance_fee: float = defaults.PERFORMANCE_FEE
    carry: float = defaults.CARRY

    def __post_init__(self):
        for name in ("performance_fee", "carry"):
            if not 0 <= as_fraction(getattr(self, name)) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")


def _complete_shares(shares: Mapping) -> dict[PodKind, Fraction]:
    out = {PodKind(k): as_fraction(v) for k, v in shares.items()}
    if any(v < 0 for v in out.values()):
        raise ValueError("pod shares must be >= 0")
    explicit_core = out.pop(PodKind.CORE, None)
    rest = sum(out.values(), Fraction(0))
    core = 1 - rest
    if core < 0:
        raise ValueError("pod shares exceed 1")
    if explicit_core is not None and explicit_core != core:
        raise ValueError("core share must equal the remainder after the other pods")
    out[PodKind.CORE] = core
    return {k: out.get(k, Fraction(0)) for k in POD_ORDER}


@dataclass(frozen=True)
class CarrySplitTable:
    """How the performance fee and the carry pool divide between pods.

    Inputs list the non-core pods; the core pod receives the remainder.
    Shares are held as exact fractions and always sum to 1.
    """

    perf_fee_shares: Mapping = field(default_factory=lambda: dict(defaults.PERF_FEE_SHARES))
    carry_shares: Mapping = field(default_factory=lambda: dict(defaults.CARRY_SHARES))

    def __post_init__(self):
        object.__setattr__(self, "perf_fee_shares", _complete_shares(self.perf_fee_shares))
        object.__setattr__(self, "carry_shares", _complete_shares(self.carry_shares))

    @classmethod
    def zero(cls) -> "CarrySplitTable":
        """Everything to the core pod."""
        return cls({}, {})


@dataclass
class Deal:
    id: str
    sector: str = ""
    round_size: int = 0
    valuation_cap: int = 0
    stage: str = "seed"
    pipeline_state: DealState = DealState.SOURCED
    attribution: dict[tuple[PodKind, str], Fraction] = field(default_factory=dict)
    timestamps: dict[DealState, float] = field(default_factory=dict)
    spv: "SPV | None" = None

    def __post_init__(self):
        self.pipeline_state = DealState(self.pipeline_state)
        if not self.timestamps:
            self.timestamps = {self.pipeline_state: 0.0}

    @property
    def current_time(self) -> float:
        return self.timestamps[self.pipeline_state]

    def attributes(self) -> dict:
        return {"sector": self.sector, "round_size": self.round_size,
                "valuation_cap": self.valuation_cap, "stage": self.stage}

    def pod_weights(self, pod: PodKind) -> dict[str, Fraction]:
        return {m: w for (k, m), w in self.attribution.items() if k == pod and w > 0}


def _merge_attribution(current: Mapping, delta: Mapping | None) -> dict:
    out = dict(current)
    for key, w in (delta or {}).items():
        pod, member = key
        w = as_fraction(w)
        if w < 0:
            raise ValueError("attribution weights must be >= 0")
        k = (PodKind(pod), member)
        out[k] = out.get(k, Fraction(0)) + w
    return out


def advance_deal(deal: Deal, target_state, attribution_delta: Mapping | None = None,
                 at: float | None = None) -> Deal:
    """Move ``deal`` one step along the pipeline and accumulate attribution.

    Returns a new :class:`Deal`; the input is left untouched. Funding and
    exit go through :func:`form_spv` and :func:`exit_waterfall` only.
    ``at`` defaults to one tick after the previous transition and must be
    strictly later than it.
    """
    target = DealState(target_state)
    if target not in _FORWARD[deal.pipeline_state]:
        raise DealStateError(f"deal {deal.id}: {deal.pipeline_state.value} -> {target.value} "
                             "is not a legal transition")
    if target in (DealState.FUNDED, DealState.EXITED):
        raise DealStateError(f"deal {deal.id}: use form_spv/exit_waterfall to reach {target.value}")
    return _transition(deal, target, attribution_delta, at)


def _transition(deal: Deal, target: DealState, attribution_delta, at) -> Deal:
    last = deal.current_time
    when = last + 1.0 if at is None else float(at)
    if when <= last:
        raise DealStateError(f"deal {deal.id}: timestamp {when} is not after {last}")
    stamps = dict(deal.timestamps)
    stamps[target] = when
    return replace(deal, pipeline_state=target, timestamps=stamps,
                   attribution=_merge_attribution(deal.attribution, attribution_delta))


@dataclass(frozen=True)
class SPV:
    deal_id: str
    investor_allocations: Mapping[str, int]
    admin_cost: int
    performance_fee: int
    net_invested: int
    formed_at: float
    fee_by_pod: Mapping[PodKind, int] = field(default_factory=dict)
    fee_by_member: Mapping[str, int] = field(default_factory=dict)

    @property
    def committed(self) -> int:
        return sum(self.investor_allocations.values())


def _split_to_members(amount_by_pod: Mapping[PodKind, int], deal: Deal,
                      core_members: Iterable[str]) -> tuple[dict[PodKind, int], dict[str, int]]:
    """Route pod amounts to members by attribution; empty pods fall to core."""
    by_pod = {k: 0 for k in POD_ORDER}
    for k, v in amount_by_pod.items():
        if k != PodKind.CORE and v and not deal.pod_weights(k):
            by_pod[PodKind.CORE] += v
        else:
            by_pod[k] += v
    by_member: dict[str, int] = {}
    for k in POD_ORDER:
        amount = by_pod[k]
        if not amount:
            continue
        weights = deal.pod_weights(k)
        if not weights:
            # core with no attribution: split evenly over core members
            weights = {m: 1 for m in sorted(core_members)}
        if not weights:
            raise ValueError(f"deal {deal.id}: nobody in the core pod to receive {amount}")
        for m, v in largest_remainder(amount, weights, order=sorted(weights)).items():
            by_member[m] = by_member.get(m, 0) + v
    return by_pod, by_member


def form_spv(deal: Deal, commitments: Mapping[str, int], schedule: FeeSchedule | None = None,
             admin_cost: int = defaults.SPV_ADMIN_COST, *,
             splits: CarrySplitTable | None = None, core_members: Iterable[str] = (),
             at: float | None = None) -> tuple[Deal, SPV]:
    """Close a deal into its SPV and move it to ``funded``.

    The performance fee is ``performance_fee * sum(commitments)``, taken at
    close and routed through ``splits.perf_fee_shares``. Returns the updated
    deal together with the SPV.
    """
    schedule = schedule or FeeSchedule()
    splits = splits or CarrySplitTable()
    if deal.pipeline_state != DealState.MEMO:
        raise DealStateError(f"deal {deal.id}: SPV can only be formed from memo, "
                             f"not {deal.pipeline_state.value}")
    if any(v <= 0 for v in commitments.values()) or not commitments:
        raise ValueError("every commitment must be > 0")
    if admin_cost < 0:
        raise ValueError("admin_cost must be >= 0")
    total = sum(commitments.values())
    fee = apply_rate(total, schedule.performance_fee)
    if total <= fee + admin_cost:
        raise UnderfundedError(f"deal {deal.id}: commitments {total} do not cover fee {fee} "
                               f"plus admin cost {admin_cost}")
    fee_parts = largest_remainder(fee, splits.perf_fee_shares, order=POD_ORDER)
    fee_by_pod, fee_by_member = _split_to_members(fee_parts, deal, core_members)
    funded = _transition(deal, DealState.FUNDED, None, at)
    spv = SPV(deal.id, dict(sorted(commitments.items())), admin_cost, fee,
              total - fee - admin_cost, funded.current_time, fee_by_pod, fee_by_member)
    funded.spv = spv
    return funded, spv


@dataclass(frozen=True)
class WaterfallResult:
    deal: Deal
    investor_distributions: dict[str, int]
    carry_pool: int
    carry_by_pod: dict[PodKind, int]
    carry_by_member: dict[str, int]
    gross_proceeds: int

    @property
    def total_out(self) -> int:
        return sum(self.investor_distributions.values()) + sum(self.carry_by_member.values())


def exit_waterfall(spv: SPV, gross_proceeds: int, schedule: FeeSchedule | None = None,
                   splits: CarrySplitTable | None = None, deal: Deal | None = None, *,
                   core_members: Iterable[str] = (), at: float | None = None) -> WaterfallResult:
    """Distribute one deal's exit proceeds.

    Investors are returned their committed capital first. Carry is taken on
    the profit above it, split between pods by ``splits.carry_shares`` and
    then between members by the deal's attribution. What remains goes to
    investors pro-rata to their commitments.
    """
    schedule = schedule or FeeSchedule()
    splits = splits or CarrySplitTable()
    if gross_proceeds < 0:
        raise ValueError("gross proceeds must be >= 0")
    if deal is None:
        raise ValueError("exit_waterfall needs the deal record")
    if deal.pipeline_state != DealState.PORTFOLIO:
        raise DealStateError(f"deal {deal.id}: exit requires portfolio state, "
                             f"not {deal.pipeline_state.value}")
    paid_in = spv.committed
    profit = max(0, gross_proceeds - paid_in)
    carry_pool = apply_rate(profit, schedule.carry)
    carry_parts = largest_remainder(carry_pool, splits.carry_shares, order=POD_ORDER)
    carry_by_pod, carry_by_member = _split_to_members(carry_parts, deal, core_members)
    investors = largest_remainder(gross_proceeds - carry_pool, spv.investor_allocations,
                                  order=sorted(spv.investor_allocations))
    exited = _transition(deal, DealState.EXITED, None, at)
    return WaterfallResult(exited, investors, carry_pool, carry_by_pod, carry_by_member,
                           gross_proceeds)


LEDGER_COLUMNS = ("deal_id", "state", "member", "role", "flow_type", "amount", "time")


def spv_ledger_rows(spv: SPV, deal: Deal) -> list[tuple]:
    rows = [(spv.deal_id, DealState.FUNDED.value, m, "investor", "commitment", -v, spv.formed_at)
            for m, v in spv.investor_allocations.items()]
    for m, v in sorted(spv.fee_by_member.items()):
        rows.append((spv.deal_id, DealState.FUNDED.value, m, "pod", "performance_fee", v,
                     spv.formed_at))
    rows.append((spv.deal_id, DealState.FUNDED.value, "", "platform", "admin_cost",
                 spv.admin_cost, spv.formed_at))
    return rows


def waterfall_ledger_rows(result: WaterfallResult) -> list[tuple]:
    d = result.deal
    t = d.current_time
    rows = [(d.id, d.pipeline_state.value, m, "investor", "distribution", v, t)
            for m, v in sorted(result.investor_distributions.items())]
    rows += [(d.id, d.pipeline_state.value, m, "pod", "carry", v, t)
             for m, v in sorted(result.carry_by_member.items())]
    return rows


def ledger_to_csv(rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LEDGER_COLUMNS)
    for r in rows:
        w.writerow([*r[:-1], format(r[-1], ".12g")])
    return buf.getvalue()
