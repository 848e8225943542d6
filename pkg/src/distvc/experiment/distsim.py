"""One trial of the distributed firm over the same companies a standard fund sees.

Company ``i`` is the same draw as in :func:`distvc.standard.run_fund` for the
same seed, so the two firm models can be compared trial by trial. Deal
attributes (sector, round size, cap, who worked on it) come from a side
stream of the trial seed and never disturb the outcome draws.

Timeline of deal ``i``: sourced at ``i*D/N`` years, memo a week later, SPV
a week after that, portfolio a week after that, exit at the integer year the
outcome model assigns. Follow-ons are checked at every year end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..automation import (CapitalAccount, MatchResult, Proposal, QuarterLedger,
                          allocate_round, match, quarter_of, reserve_followon)
from ..distributed import (Deal, DealState, Firm, PodKind, UnderfundedError, advance_deal,
                           exit_waterfall, form_spv, spv_ledger_rows, waterfall_ledger_rows)
from ..market import OutcomeBatch, OutcomeModel, SeedSpec, derive_stream, sample_outcomes
from ..standard import DeploymentSchedule
from .config import DistributedConfig

DEAL_STREAM_SALT = 0xD1
WEEK = 1.0 / 52


@dataclass(frozen=True)
class DistYear:
    year: int
    paid_in: int
    distributed: int
    nav_fair: int
    nav_paper: int


@dataclass
class DistributedRun:
    seed: SeedSpec
    n_deals: int = 0
    n_funded: int = 0
    n_followons: int = 0
    lp_paid_in: int = 0
    lp_distributed: int = 0
    deal_volume: int = 0
    perf_fees: int = 0
    carry_paid: int = 0
    admin_costs: int = 0
    gross_proceeds: int = 0
    released_reserve: int = 0
    take_by_pod: dict = field(default_factory=dict)
    take_by_member: dict = field(default_factory=dict)
    records: list[DistYear] = field(default_factory=list)
    ledger: list[tuple] = field(default_factory=list)
    trace: list[tuple[str, str, int, MatchResult]] = field(default_factory=list)

    @property
    def lp_net_dpi(self) -> float:
        return self.lp_distributed / self.lp_paid_in if self.lp_paid_in else 0.0

    @property
    def core_take(self) -> int:
        return self.take_by_pod.get(PodKind.CORE, 0)

    @property
    def pod_take(self) -> int:
        # everything the firm keeps, core pod included
        return self.perf_fees + self.carry_paid


@dataclass
class _Position:
    deal: Deal
    index: int
    invest_year: int
    exit_year: int
    spvs: list  # (spv, deal_record, units)
    fills: dict  # rule_id -> filled check
    followed: set = field(default_factory=set)


def _draw_deals(cfg: DistributedConfig, firm: Firm, seed: SeedSpec, n: int):
    child = seed.child(DEAL_STREAM_SALT)
    rng = derive_stream(child.master_seed, child.stream_id)
    flow = cfg.deal_flow
    sector = rng.integers(0, len(flow.sectors), n)
    round_size = np.rint(flow.round_size_median * np.exp(flow.round_size_sigma * rng.standard_normal(n)))
    cap_mult = rng.uniform(flow.cap_multiple_min, flow.cap_multiple_max, n)
    pods = {k: sorted(firm.pods[k].members) for k in (PodKind.SOURCING, PodKind.DILIGENCE,
                                                     PodKind.SUCCESS)}
    src = rng.integers(0, 1 << 30, n)
    dil = rng.integers(1, 4, (n, max(1, len(pods[PodKind.DILIGENCE]))))
    suc = rng.integers(0, 1 << 30, n)
    out = []
    for i in range(n):
        rs = max(1, int(round_size[i]))
        attribution = {}
        if pods[PodKind.SOURCING]:
            attribution[(PodKind.SOURCING, pods[PodKind.SOURCING][src[i] % len(pods[PodKind.SOURCING])])] = 1
        for j, m in enumerate(pods[PodKind.DILIGENCE]):
            attribution[(PodKind.DILIGENCE, m)] = int(dil[i, j])
        if pods[PodKind.SUCCESS]:
            attribution[(PodKind.SUCCESS, pods[PodKind.SUCCESS][suc[i] % len(pods[PodKind.SUCCESS])])] = 1
        out.append((flow.sectors[int(sector[i])], rs, int(round(rs * cap_mult[i])), attribution))
    return out


def simulate_distributed(cfg: DistributedConfig, schedule: DeploymentSchedule,
                         model: OutcomeModel, seed: SeedSpec,
                         outcomes: OutcomeBatch | None = None) -> DistributedRun:
    n = schedule.companies_per_fund
    if outcomes is None:
        outcomes = sample_outcomes(model, derive_stream(seed.master_seed, seed.stream_id), n)
    firm = Firm.from_memberships(cfg.members)
    core = firm.core_members()
    deals = _draw_deals(cfg, firm, seed, n)
    run = DistributedRun(seed, n_deals=n)

    accounts = {lp.id: CapitalAccount(lp.id, lp.capital) for lp in cfg.lps}
    rules = sorted((r for lp in cfg.lps for r in lp.rules), key=lambda r: (r.created_at, r.id))
    rule_by_id = {r.id: r for r in rules}
    reserve_left = {}
    for r in rules:
        acct = accounts[r.owner]
        amount = min(reserve_followon(r, acct.total), acct.available)
        acct.reserve(amount)
        reserve_left[r.id] = amount
    ledger = QuarterLedger()
    flows: list[tuple[float, int]] = []  # (time, -call or +distribution), LP side
    positions: list[_Position] = []
    last_col = outcomes.fair.shape[1] - 1

    def book_spv(pos, spv, deal_rec, price):
        run.deal_volume += spv.committed
        run.perf_fees += spv.performance_fee
        run.admin_costs += spv.admin_cost
        for k, v in spv.fee_by_pod.items():
            run.take_by_pod[k] = run.take_by_pod.get(k, 0) + v
        for m, v in spv.fee_by_member.items():
            run.take_by_member[m] = run.take_by_member.get(m, 0) + v
        flows.append((spv.formed_at, -spv.committed))
        run.ledger.extend(spv_ledger_rows(spv, deal_rec))
        pos.spvs.append([spv, deal_rec, spv.net_invested / price])

    # initial rounds, in deal order
    for i, (sector, rs, cap, attribution) in enumerate(deals):
        t0 = i * schedule.deployment_years / n
        deal = Deal(f"d{i:04d}", sector, rs, cap, timestamps={DealState.SOURCED: t0})
        deal = advance_deal(deal, DealState.MEMO, attribution, at=t0 + WEEK)
        q = quarter_of(deal.current_time)
        proposals, pending = [], {}
        for r in rules:
            avail = accounts[r.owner].available - pending.get(r.owner, 0)
            res = match(r, deal, ledger, avail, quarter=q)
            run.trace.append((r.id, deal.id, q, res))
            if res.matched:
                proposals.append(Proposal(r, res.proposed_check))
                pending[r.owner] = pending.get(r.owner, 0) + res.proposed_check
        fills = allocate_round(math.floor(rs * cfg.deal_flow.max_round_share), proposals)
        commitments: dict[str, int] = {}
        for rid, amt in fills.items():
            owner = rule_by_id[rid].owner
            commitments[owner] = commitments.get(owner, 0) + amt
        if not commitments:
            advance_deal(deal, DealState.REJECTED, at=t0 + 2 * WEEK)
            continue
        try:
            funded, spv = form_spv(deal, commitments, cfg.fees, cfg.admin_cost,
                                   splits=cfg.splits, core_members=core, at=t0 + 2 * WEEK)
        except UnderfundedError:
            advance_deal(deal, DealState.REJECTED, at=t0 + 2 * WEEK)
            continue
        for rid, amt in fills.items():
            rule = rule_by_id[rid]
            accounts[rule.owner].deploy(amt)
            ledger.record(rule, q)
        held = advance_deal(funded, DealState.PORTFOLIO, at=t0 + 3 * WEEK)
        iy = schedule.investment_year(i)
        pos = _Position(held, i, iy, iy + int(outcomes.liquidity[i]), [], dict(fills))
        book_spv(pos, spv, funded, 1.0)
        pos.spvs[-1][1] = held
        positions.append(pos)
        run.n_funded += 1

    horizon = max([p.exit_year for p in positions], default=0)
    dist_total = 0
    for y in range(horizon + 1):
        for pos in positions:
            if pos.exit_year != y:
                continue
            term = float(outcomes.terminal[pos.index])
            for entry in pos.spvs:
                spv, deal_rec, units = entry
                gross = int(np.rint(units * term))
                # an early write-off can land in the same year the deal closed
                at = max(float(y), deal_rec.current_time + WEEK)
                res = exit_waterfall(spv, gross, cfg.fees, cfg.splits, deal_rec,
                                     core_members=core, at=at)
                run.gross_proceeds += gross
                run.carry_paid += res.carry_pool
                for k, v in res.carry_by_pod.items():
                    run.take_by_pod[k] = run.take_by_pod.get(k, 0) + v
                for m, v in res.carry_by_member.items():
                    run.take_by_member[m] = run.take_by_member.get(m, 0) + v
                paid = sum(res.investor_distributions.values())
                dist_total += paid
                if paid:
                    flows.append((at, paid))
                run.ledger.extend(waterfall_ledger_rows(res))

        # follow-ons for positions still held at this year end
        for pos in positions:
            age = y - pos.invest_year
            if age < 1 or pos.exit_year <= y:
                continue
            price = float(outcomes.paper[pos.index, min(age, last_col)])
            attrs = pos.deal.attributes() | {"paper_multiple": price, "age_years": age}
            for rid, first_check in pos.fills.items():
                rule = rule_by_id[rid]
                if rid in pos.followed or not rule.followon_ready(attrs):
                    continue
                pos.followed.add(rid)
                amount = min(reserve_left[rid], first_check)
                if amount <= 0:
                    continue
                fo = Deal(f"{pos.deal.id}/fo-{rid}", pos.deal.sector, pos.deal.round_size,
                          pos.deal.valuation_cap, pos.deal.stage, DealState.MEMO,
                          dict(pos.deal.attribution), {DealState.MEMO: float(y)})
                try:
                    funded, spv = form_spv(fo, {rule.owner: amount}, cfg.fees, cfg.admin_cost,
                                           splits=cfg.splits, core_members=core,
                                           at=y + WEEK)
                except UnderfundedError:
                    continue
                accounts[rule.owner].deploy(amount, from_reserve=True)
                reserve_left[rid] -= amount
                held = advance_deal(funded, DealState.PORTFOLIO, at=y + 2 * WEEK)
                book_spv(pos, spv, funded, price)
                pos.spvs[-1][1] = held
                run.n_followons += 1

        # year-end marks and cumulative LP totals
        paid_in = -sum(a for t, a in flows if a < 0 and t < y + 1)
        nav_f = nav_p = 0
        for pos in positions:
            if pos.exit_year <= y or pos.invest_year > y:
                continue
            col = min(y - pos.invest_year, last_col)
            for spv, _, units in pos.spvs:
                if spv.formed_at < y + 1:
                    nav_f += int(np.rint(units * outcomes.fair[pos.index, col]))
                    nav_p += int(np.rint(units * outcomes.paper[pos.index, col]))
        run.records.append(DistYear(y, paid_in, dist_total, nav_f, nav_p))

    for acct in accounts.values():
        run.released_reserve += acct.release_reserve()
    run.lp_paid_in = -sum(a for _, a in flows if a < 0)
    run.lp_distributed = dist_total
    _check_conservation(run)
    return run


def _check_conservation(run: DistributedRun) -> None:
    if run.lp_paid_in != run.deal_volume:
        raise AssertionError("LP calls do not match SPV commitments")
    if run.lp_distributed + run.carry_paid != run.gross_proceeds:
        raise AssertionError("exit proceeds do not reconcile")
    if sum(run.take_by_pod.values()) != run.perf_fees + run.carry_paid:
        raise AssertionError("pod takes do not reconcile")
    if sum(run.take_by_member.values()) != run.perf_fees + run.carry_paid:
        raise AssertionError("member takes do not reconcile")
