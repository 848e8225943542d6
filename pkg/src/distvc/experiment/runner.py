"""Scenario dispatch, the trial pool, paired comparison and run manifests.

Every scenario renders its outputs in memory as ``{filename: text}`` and
only then writes them, so output bytes depend on the config alone: trials
run in a thread pool but are collected in trial-index order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence, TypeVar

import numpy as np

from .. import __version__
from ..automation import (CapitalAccount, Proposal, QuarterLedger, allocate_round, match,
                          match_trace_to_csv, quarter_of, reserve_followon)
from ..distributed import Deal, DealState, ledger_to_csv
from ..economics import FundParams, fmt12, sweep_to_csv, utility_sweep
from ..kpi import timeline_to_csv
from ..market import OutcomeModel, SeedSpec, derive_stream, sample_outcomes
from ..standard import FundRun, run_fund, standard_rows, STANDARD_COLUMNS
from .config import RunConfig, config_hash
from .distsim import DistributedRun, simulate_distributed
from .svg import line_chart

log = logging.getLogger("distvc")
T = TypeVar("T")

STANDARD = "standard"
DISTRIBUTED = "distributed"


def map_trials(fn: Callable[[int], T], trials: int, workers: int = 1) -> list[T]:
    """``[fn(0), ..., fn(trials-1)]``, computed on ``workers`` threads."""
    if workers <= 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ------------------------------------------------------------ comparison

@dataclass(frozen=True)
class TrialMetrics:
    trial: int
    lp_net_dpi: float
    paid_in: int
    distributed: int
    fees_paid: int
    carry_paid: int
    admin_costs: int
    gp_core_take: int
    pod_take: int
    deal_volume: int


@dataclass(frozen=True)
class ModelResults:
    firm_model: str
    master_seed: int
    outcome_model: OutcomeModel
    trials: tuple[TrialMetrics, ...]


def standard_metrics(run: FundRun, trial: int) -> TrialMetrics:
    """LP-only DPI: the GP commit share is taken out of both sides."""
    st = run.final_state
    lp = 1.0 - run.params.gp_commit_g
    lp_paid = lp * st.paid_in
    lp_dist = lp * st.gross_distributed - st.carry_paid
    dpi = lp_dist / lp_paid if lp_paid > 0 else 0.0
    take = st.fees + st.carry_paid
    return TrialMetrics(trial, dpi, st.paid_in, st.distributed, st.fees, st.carry_paid, 0,
                        take, take, st.invested)


def distributed_metrics(run: DistributedRun, trial: int) -> TrialMetrics:
    return TrialMetrics(trial, run.lp_net_dpi, run.lp_paid_in, run.lp_distributed,
                        run.perf_fees, run.carry_paid, run.admin_costs, run.core_take,
                        run.pod_take, run.deal_volume)


@dataclass(frozen=True)
class CompareRow:
    trial: int
    model: str
    metrics: TrialMetrics


def compare(standard: ModelResults, distributed: ModelResults) -> list[CompareRow]:
    """Pair the two firm models trial by trial.

    Both sides must come from the same master seed and outcome model, and
    cover the same trial indices; anything else raises ``ValueError``.
    """
    if standard.master_seed != distributed.master_seed:
        raise ValueError("result sets use different master seeds")
    if standard.outcome_model != distributed.outcome_model:
        raise ValueError("result sets use different outcome models")
    a = [m.trial for m in standard.trials]
    b = [m.trial for m in distributed.trials]
    if a != b:
        raise ValueError("result sets cover different trials")
    rows = []
    for s, d in zip(standard.trials, distributed.trials):
        rows.append(CompareRow(s.trial, standard.firm_model, s))
        rows.append(CompareRow(d.trial, distributed.firm_model, d))
    return rows


COMPARE_COLUMNS = ("trial", "model", "lp_net_dpi", "paid_in", "distributed", "fees_paid",
                   "carry_paid", "admin_costs", "gp_core_take", "pod_take", "deal_volume")
SUMMARY_COLUMNS = ("model", "trials", "mean_lp_net_dpi", "median_lp_net_dpi", "mean_fees_paid",
                   "mean_carry_paid", "mean_admin_costs", "mean_gp_core_take", "mean_pod_take",
                   "mean_deal_volume", "fees_over_volume")


def compare_to_csv(rows: Sequence[CompareRow]) -> str:
    return _csv(COMPARE_COLUMNS, (
        [r.trial, r.model, fmt12(r.metrics.lp_net_dpi), r.metrics.paid_in, r.metrics.distributed,
         r.metrics.fees_paid, r.metrics.carry_paid, r.metrics.admin_costs,
         r.metrics.gp_core_take, r.metrics.pod_take, r.metrics.deal_volume] for r in rows))


def compare_summary(rows: Sequence[CompareRow]) -> str:
    out = []
    for model in (STANDARD, DISTRIBUTED):
        ms = [r.metrics for r in rows if r.model == model]
        if not ms:
            continue
        mean = lambda attr: fmt12(float(np.mean([getattr(m, attr) for m in ms])))
        vol = sum(m.deal_volume for m in ms)
        out.append([model, len(ms), mean("lp_net_dpi"),
                    fmt12(float(np.median([m.lp_net_dpi for m in ms]))), mean("fees_paid"),
                    mean("carry_paid"), mean("admin_costs"), mean("gp_core_take"),
                    mean("pod_take"), mean("deal_volume"),
                    fmt12(sum(m.fees_paid for m in ms) / vol) if vol else ""])
    return _csv(SUMMARY_COLUMNS, out)


# ------------------------------------------------------------ scenarios

def _horizon(cfg: RunConfig) -> int:
    return max(cfg.fund.lifespan_l, cfg.schedule.deployment_years - 1
               + cfg.market.years_to_liquidity_max)


def _outcomes(cfg: RunConfig, t: int):
    return sample_outcomes(cfg.market, derive_stream(cfg.master_seed, t),
                           cfg.schedule.companies_per_fund)


def _standard_trial(cfg: RunConfig, t: int, outcomes=None) -> FundRun:
    return run_fund(cfg.fund, cfg.schedule, cfg.market, SeedSpec(cfg.master_seed, t),
                    with_irr=cfg.with_irr, successor_threshold=cfg.successor_threshold,
                    horizon=_horizon(cfg), outcomes=outcomes)


def _quantile_rows(years: int, series: dict[str, np.ndarray]) -> tuple[list[str], list[list]]:
    header = ["year"]
    for name in series:
        header += [f"{name}_p25", f"{name}_p50", f"{name}_p75", f"{name}_mean"]
    rows = []
    for y in range(years):
        row = [y]
        for arr in series.values():
            col = arr[:, y]
            col = col[np.isfinite(col)]
            if len(col):
                q = np.quantile(col, [0.25, 0.5, 0.75])
                row += [fmt12(float(q[0])), fmt12(float(q[1])), fmt12(float(q[2])),
                        fmt12(float(col.mean()))]
            else:
                row += ["", "", "", ""]
        rows.append(row)
    return header, rows


STANDARD_SUMMARY_COLUMNS = ("trial", "final_year", "paid_in", "distributed", "fees", "carry_paid",
                            "commit_pnl", "realized_utility", "final_dpi", "final_tvpi_paper",
                            "tvpi_paper_at_deployment_end", "raise_successor", "n_followons")


def _standard_outputs(cfg: RunConfig, runs: list[FundRun]) -> dict[str, str]:
    body = io.StringIO()
    w = csv.writer(body, lineterminator="\n")
    w.writerow(STANDARD_COLUMNS)
    summary = []
    H = _horizon(cfg) + 1
    dpi = np.full((len(runs), H), np.nan)
    tvp = np.full((len(runs), H), np.nan)
    tvf = np.full((len(runs), H), np.nan)
    for t, run in enumerate(runs):
        w.writerows(standard_rows(t, run))
        for r in run.records:
            if r.year < H:
                dpi[t, r.year], tvp[t, r.year], tvf[t, r.year] = r.dpi, r.tvpi_paper, r.tvpi_fair
        last = run.records[-1]
        u = run.realized
        succ = run.successor
        summary.append([t, last.year, last.paid_in, last.distributed, run.final_state.fees,
                        run.final_state.carry_paid, fmt12(u.commit_pnl), fmt12(u.total),
                        fmt12(last.dpi), fmt12(last.tvpi_paper),
                        fmt12(succ.basis_tvpi) if succ else "",
                        int(succ.raise_next) if succ else "", run.n_followons])
    header, agg = _quantile_rows(H, {"dpi": dpi, "tvpi_paper": tvp, "tvpi_fair": tvf})
    out = {"standard_trials.csv": body.getvalue(),
           "standard_summary.csv": _csv(STANDARD_SUMMARY_COLUMNS, summary),
           "standard_aggregate.csv": _csv(header, agg),
           "kpi_timeline.csv": timeline_to_csv(runs[0].timeline)}
    if cfg.svg:
        years = list(range(H))
        out["dpi_tvpi.svg"] = line_chart(
            {"median DPI": (years, np.nanmedian(dpi, axis=0).tolist()),
             "median TVPI (paper)": (years, np.nanmedian(tvp, axis=0).tolist()),
             "median TVPI (fair)": (years, np.nanmedian(tvf, axis=0).tolist())},
            title="Standard fund: DPI and TVPI by year", xlabel="year", ylabel="multiple")
    return out


DISTRIBUTED_SUMMARY_COLUMNS = ("trial", "deals", "funded", "followons", "lp_paid_in",
                               "lp_distributed", "lp_net_dpi", "deal_volume", "perf_fees",
                               "carry_paid", "admin_costs", "core_take", "pod_take",
                               "released_reserve")


def _distributed_outputs(cfg: RunConfig, runs: list[DistributedRun]) -> dict[str, str]:
    summary, ledger, trace = [], [], []
    H = max(len(r.records) for r in runs)
    dpi = np.full((len(runs), H), np.nan)
    tvp = np.full((len(runs), H), np.nan)
    for t, run in enumerate(runs):
        summary.append([t, run.n_deals, run.n_funded, run.n_followons, run.lp_paid_in,
                        run.lp_distributed, fmt12(run.lp_net_dpi), run.deal_volume,
                        run.perf_fees, run.carry_paid, run.admin_costs, run.core_take,
                        run.pod_take, run.released_reserve])
        for rec in run.records:
            if rec.paid_in > 0:
                dpi[t, rec.year] = rec.distributed / rec.paid_in
                tvp[t, rec.year] = (rec.distributed + rec.nav_paper) / rec.paid_in
        if t < cfg.detail_trials:
            ledger += [(f"t{t}/{r[0]}", *r[1:]) for r in run.ledger]
            trace += [(rid, f"t{t}/{did}", q, res) for rid, did, q, res in run.trace]
    header, agg = _quantile_rows(H, {"dpi": dpi, "tvpi_paper": tvp})
    out = {"distributed_summary.csv": _csv(DISTRIBUTED_SUMMARY_COLUMNS, summary),
           "distributed_aggregate.csv": _csv(header, agg),
           "distributed_ledger.csv": ledger_to_csv(ledger),
           "match_trace.csv": match_trace_to_csv(trace)}
    if cfg.svg:
        years = list(range(H))
        out["distributed_dpi_tvpi.svg"] = line_chart(
            {"median LP DPI": (years, np.nanmedian(dpi, axis=0).tolist()),
             "median LP TVPI (paper)": (years, np.nanmedian(tvp, axis=0).tolist())},
            title="Distributed firm: LP DPI and TVPI by year", xlabel="year", ylabel="multiple")
    return out


def run_utility_sweep(cfg: RunConfig) -> dict[str, str]:
    params = FundParams(1.0, cfg.fund.lifespan_l, cfg.fund.mgmt_fee_p, cfg.fund.gp_commit_g,
                        cfg.fund.carry_c) if cfg.sweep.normalized else cfg.fund
    rows = utility_sweep(params, [(vid, dict(ov)) for vid, ov in cfg.sweep.variants],
                         cfg.sweep.m_grid, cfg.sweep.model)
    out = {"utility_sweep.csv": sweep_to_csv(rows)}
    if cfg.svg:
        series = {}
        for r in rows:
            xs, ys = series.setdefault(r.variant_id, ([], []))
            xs.append(r.m)
            ys.append(r.total)
        out["utility_sweep.svg"] = line_chart(
            series, title=f"GP utility ({cfg.sweep.model} model)", xlabel="fund multiple m",
            ylabel="GP utility")
    return out


def run_standard(cfg: RunConfig) -> dict[str, str]:
    runs = map_trials(lambda t: _standard_trial(cfg, t), cfg.trials, cfg.workers)
    return _standard_outputs(cfg, runs)


def _distributed_trial(cfg: RunConfig, t: int, outcomes=None) -> DistributedRun:
    return simulate_distributed(cfg.distributed, cfg.schedule, cfg.market,
                                SeedSpec(cfg.master_seed, t), outcomes)


def run_distributed(cfg: RunConfig) -> dict[str, str]:
    runs = map_trials(lambda t: _distributed_trial(cfg, t), cfg.trials, cfg.workers)
    return _distributed_outputs(cfg, runs)


def run_compare(cfg: RunConfig) -> dict[str, str]:
    def both(t):
        oc = _outcomes(cfg, t)
        s = _standard_trial(cfg, t, oc)
        d = _distributed_trial(cfg, t, oc)
        return standard_metrics(s, t), distributed_metrics(d, t)

    pairs = map_trials(both, cfg.trials, cfg.workers)
    rows = compare(ModelResults(STANDARD, cfg.master_seed, cfg.market, tuple(p[0] for p in pairs)),
                   ModelResults(DISTRIBUTED, cfg.master_seed, cfg.market, tuple(p[1] for p in pairs)))
    out = {"comparison.csv": compare_to_csv(rows), "comparison_summary.csv": compare_summary(rows)}
    if cfg.svg:
        srt = lambda model: sorted(r.metrics.lp_net_dpi for r in rows if r.model == model)
        qs = [(i + 0.5) / cfg.trials for i in range(cfg.trials)]
        out["comparison_dpi.svg"] = line_chart(
            {STANDARD: (qs, srt(STANDARD)), DISTRIBUTED: (qs, srt(DISTRIBUTED))},
            title="LP net DPI by trial quantile", xlabel="quantile", ylabel="LP net DPI")
    return out


MATCH_FILL_COLUMNS = ("deal_id", "rule_id", "owner", "quarter", "check")
ACCOUNT_COLUMNS = ("owner", "total", "available", "reserved", "deployed", "released_reserve")


def run_match_eval(cfg: RunConfig) -> dict[str, str]:
    """Replay the scripted deals against the configured rules."""
    dist = cfg.distributed
    accounts = {lp.id: CapitalAccount(lp.id, lp.capital) for lp in dist.lps}
    rules = sorted((r for lp in dist.lps for r in lp.rules), key=lambda r: (r.created_at, r.id))
    by_id = {r.id: r for r in rules}
    for r in rules:
        acct = accounts[r.owner]
        acct.reserve(min(reserve_followon(r, acct.total), acct.available))
    ledger = QuarterLedger()
    trace, fills_out = [], []
    for md in sorted(cfg.match_eval.deals, key=lambda d: (d.time, d.id)):
        deal = Deal(md.id, md.sector, md.round_size, md.valuation_cap, md.stage,
                    DealState.MEMO, timestamps={DealState.MEMO: md.time})
        q = quarter_of(md.time)
        proposals, pending = [], {}
        for r in rules:
            res = match(r, deal, ledger, accounts[r.owner].available - pending.get(r.owner, 0),
                        quarter=q)
            trace.append((r.id, md.id, q, res))
            if res.matched:
                proposals.append(Proposal(r, res.proposed_check))
                pending[r.owner] = pending.get(r.owner, 0) + res.proposed_check
        capacity = md.capacity if md.capacity is not None else \
            math.floor(md.round_size * dist.deal_flow.max_round_share)
        for rid, amt in sorted(allocate_round(capacity, proposals).items()):
            rule = by_id[rid]
            accounts[rule.owner].deploy(amt)
            ledger.record(rule, q)
            fills_out.append([md.id, rid, rule.owner, q, amt])
    acct_rows = []
    for owner in sorted(accounts):
        a = accounts[owner]
        released = a.release_reserve()
        acct_rows.append([owner, a.total, a.available, a.reserved, a.deployed, released])
    return {"match_trace.csv": match_trace_to_csv(trace),
            "match_fills.csv": _csv(MATCH_FILL_COLUMNS, fills_out),
            "accounts.csv": _csv(ACCOUNT_COLUMNS, acct_rows)}


SCENARIO_RUNNERS = {
    "utility_sweep": run_utility_sweep,
    "standard_sim": run_standard,
    "distributed_sim": run_distributed,
    "compare": run_compare,
    "match_eval": run_match_eval,
}


# ------------------------------------------------------------ manifest

@dataclass(frozen=True)
class OutputFile:
    path: str
    sha256: str
    bytes: int


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    config_hash: str
    master_seed: int
    trials: int
    artifact_version: str
    started_at: str
    finished_at: str
    outputs: tuple[OutputFile, ...]

    def output_hashes(self) -> dict[str, str]:
        return {o.path: o.sha256 for o in self.outputs}

    def to_json(self) -> str:
        d = asdict(self)
        d["outputs"] = [asdict(o) for o in self.outputs]
        return json.dumps(d, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        d["outputs"] = tuple(OutputFile(**o) for o in d["outputs"])
        return cls(**d)


MANIFEST_NAME = "manifest.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def run(cfg: RunConfig, out_dir: str | Path | None = None) -> RunManifest:
    """Run the configured scenario, write its files and the manifest."""
    started = _now()
    log.info("scenario %s: %d trial(s), seed %d, %d worker(s)", cfg.scenario, cfg.trials,
             cfg.master_seed, cfg.workers)
    outputs = SCENARIO_RUNNERS[cfg.scenario](cfg)
    target = Path(out_dir if out_dir is not None else cfg.output_dir)
    target.mkdir(parents=True, exist_ok=True)
    files = []
    for name in sorted(outputs):
        data = outputs[name].encode("utf-8")
        (target / name).write_bytes(data)
        files.append(OutputFile(name, hashlib.sha256(data).hexdigest(), len(data)))
        log.debug("wrote %s (%d bytes)", name, len(data))
    manifest = RunManifest(cfg.scenario, config_hash(cfg), cfg.master_seed, cfg.trials,
                           __version__, started, _now(), tuple(files))
    (target / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def verify_manifest(out_dir: str | Path) -> bool:
    """True when every file listed in the manifest still hashes to its entry."""
    d = Path(out_dir)
    m = RunManifest.from_json((d / MANIFEST_NAME).read_text(encoding="utf-8"))
    return all(hashlib.sha256((d / o.path).read_bytes()).hexdigest() == o.sha256
               for o in m.outputs)
