"""Run configuration: YAML in, validated dataclasses out, and back again.

Validation errors carry the line of the offending key so the CLI can print
``path:line: message``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from .. import defaults
from ..automation import AutomationRule, Predicate
from ..distributed import CarrySplitTable, FeeSchedule, PodKind
from ..economics import MODEL_TAGS, FundParams
from ..market import OutcomeModel
from ..standard import DeploymentSchedule

SCENARIOS = ("utility_sweep", "standard_sim", "distributed_sim", "compare", "match_eval")


class ConfigError(ValueError):
    def __init__(self, message: str, path: tuple = (), line: int | None = None,
                 source: str | None = None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line
        self.source = source

    def __str__(self):
        where = self.source or "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        key = ".".join(str(p) for p in self.path)
        return f"{where}: {key + ': ' if key else ''}{self.message}"


@dataclass(frozen=True)
class SweepConfig:
    model: str = "expanded"
    m_grid: tuple[float, ...] = tuple(round(0.1 * i, 10) for i in range(41))
    variants: tuple[tuple[str, tuple[tuple[str, float], ...]], ...] = (
        ("baseline", ()),
        ("mgmt_fee_4pct", (("mgmt_fee", 0.04),)),
        ("fund_size_2x", (("fund_size", 2.0),)),
        ("carry_25pct", (("carry", 0.25),)),
    )
    normalized: bool = True


@dataclass(frozen=True)
class DealFlowConfig:
    sectors: tuple[str, ...] = ("biotech", "fintech", "software", "climate")
    round_size_median: int = 500_000_000
    round_size_sigma: float = 0.6
    cap_multiple_min: float = 3.0
    cap_multiple_max: float = 6.0
    max_round_share: float = 0.2


@dataclass(frozen=True)
class LpConfig:
    id: str
    capital: int
    rules: tuple[AutomationRule, ...]


def _default_members() -> dict[str, tuple[str, ...]]:
    return {
        "core-1": ("core",), "core-2": ("core",),
        "src-1": ("sourcing",), "src-2": ("sourcing", "diligence"),
        "dil-1": ("diligence",), "dil-2": ("diligence",),
        "suc-1": ("success",), "suc-2": ("success", "diligence"),
    }


def _default_lps() -> tuple[LpConfig, ...]:
    out = []
    for i in range(4):
        lp = f"lp-{i + 1}"
        rule = AutomationRule(
            id=f"{lp}-auto", owner=lp, sectors=frozenset(DealFlowConfig().sectors),
            min_round_size=0, max_valuation_cap=10**13, check_min=10_000_000,
            check_max=25_000_000, max_per_quarter=3, holding_period_pref=8.0,
            followon_reserve_fraction=defaults.FOLLOWON_RESERVE_FRACTION,
            followon_criteria=(Predicate("paper_multiple", "gt", 1.0),), created_at=i)
        out.append(LpConfig(lp, 2_500_000_000, (rule,)))
    return tuple(out)


@dataclass(frozen=True)
class DistributedConfig:
    fees: FeeSchedule = field(default_factory=FeeSchedule)
    splits: CarrySplitTable = field(default_factory=CarrySplitTable)
    admin_cost: int = defaults.SPV_ADMIN_COST
    members: dict = field(default_factory=_default_members)
    deal_flow: DealFlowConfig = field(default_factory=DealFlowConfig)
    lps: tuple[LpConfig, ...] = field(default_factory=_default_lps)
    # extension point: only carry-based success pod pay is implemented
    success_compensation: str = "carry"


@dataclass(frozen=True)
class MatchDeal:
    id: str
    sector: str
    round_size: int
    valuation_cap: int
    time: float
    stage: str = "seed"
    capacity: int | None = None


@dataclass(frozen=True)
class MatchEvalConfig:
    deals: tuple[MatchDeal, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "standard_sim"
    trials: int = 100
    master_seed: int = 42
    output_dir: str = "out"
    svg: bool = False
    workers: int = 1
    with_irr: bool = True
    detail_trials: int = 1
    fund: FundParams = field(default_factory=lambda: FundParams(10_000_000_000))
    schedule: DeploymentSchedule = field(default_factory=DeploymentSchedule)
    market: OutcomeModel = field(default_factory=OutcomeModel)
    successor_threshold: float = defaults.SUCCESSOR_TVPI_THRESHOLD
    sweep: SweepConfig = field(default_factory=SweepConfig)
    distributed: DistributedConfig = field(default_factory=DistributedConfig)
    match_eval: MatchEvalConfig = field(default_factory=MatchEvalConfig)
    # post-investment value add has no quantitative model; reserved, must stay off
    value_add: bool = False

    def with_overrides(self, **kw) -> "RunConfig":
        from dataclasses import replace
        clean = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **clean)
        _validate_top(cfg, {})
        return cfg


# ---------------------------------------------------------------- parsing

def _node_to_python(node, lines: dict, path: tuple):
    lines.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            if key in out:
                raise ConfigError("duplicate key", path + (key,), k.start_mark.line + 1)
            lines[path + (key,)] = k.start_mark.line + 1
            out[key] = _node_to_python(v, lines, path + (key,))
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_node_to_python(v, lines, path + (i,)) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


class _Reader:
    def __init__(self, data: dict, lines: dict, source: str | None):
        self.lines = lines
        self.source = source
        self.data = data

    def error(self, msg: str, path: tuple) -> ConfigError:
        p = path
        while p and p not in self.lines:
            p = p[:-1]
        return ConfigError(msg, path, self.lines.get(p), self.source)

    def section(self, d: dict, key: str, path: tuple) -> dict:
        v = d.get(key, {})
        if v is None:
            v = {}
        if not isinstance(v, dict):
            raise self.error("expected a mapping", path + (key,))
        return v

    def get(self, d: dict, key: str, kind, default, path: tuple):
        if key not in d:
            return default
        v = d[key]
        p = path + (key,)
        if kind is float and isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
        if kind is int and isinstance(v, int) and not isinstance(v, bool):
            return v
        if kind is bool and isinstance(v, bool):
            return v
        if kind is str and isinstance(v, str):
            return v
        if kind is list and isinstance(v, list):
            return v
        if kind is dict and isinstance(v, dict):
            return v
        if kind == "fraction":
            try:
                Fraction(str(v))
                return str(v)
            except (ValueError, ZeroDivisionError):
                pass
        raise self.error(f"expected {getattr(kind, '__name__', kind)}, got {v!r}", p)

    def unknown(self, d: dict, allowed, path: tuple):
        for k in d:
            if k not in allowed:
                raise self.error(f"unknown key {k!r}", path + (k,))

    def build(self, cls, kwargs: dict, path: tuple, keys: dict | None = None):
        """Construct ``cls``; a validation error is pinned to the key it names."""
        try:
            return cls(**kwargs)
        except (ValueError, TypeError) as e:
            msg = str(e)
            for name in sorted(kwargs, key=len, reverse=True):
                if name in msg:
                    key = (keys or {}).get(name, name)
                    if path + (key,) in self.lines:
                        raise self.error(msg, path + (key,)) from None
            raise self.error(msg, path) from None


def _parse_fund(r: _Reader, d: dict, path) -> FundParams:
    r.unknown(d, ("fund_size", "lifespan", "mgmt_fee", "gp_commit", "carry"), path)
    return r.build(FundParams, dict(
        fund_size_f=r.get(d, "fund_size", int, 10_000_000_000, path),
        lifespan_l=r.get(d, "lifespan", int, defaults.LIFESPAN_YEARS, path),
        mgmt_fee_p=r.get(d, "mgmt_fee", float, defaults.MGMT_FEE, path),
        gp_commit_g=r.get(d, "gp_commit", float, defaults.GP_COMMIT, path),
        carry_c=r.get(d, "carry", float, defaults.CARRY, path)), path,
        {"fund_size_f": "fund_size", "lifespan_l": "lifespan", "mgmt_fee_p": "mgmt_fee",
         "gp_commit_g": "gp_commit", "carry_c": "carry"})


def _parse_schedule(r: _Reader, d: dict, path) -> DeploymentSchedule:
    names = [f.name for f in fields(DeploymentSchedule)]
    r.unknown(d, names, path)
    base = DeploymentSchedule()
    kw = {}
    for name, kind in (("deployment_years", int), ("initial_fraction", float),
                       ("companies_per_fund", int), ("check_policy", str)):
        kw[name] = r.get(d, name, kind, getattr(base, name), path)
    weights = r.get(d, "check_weights", list, [], path)
    kw["check_weights"] = tuple(float(w) for w in weights)
    return r.build(DeploymentSchedule, kw, path)


def _parse_market(r: _Reader, d: dict, path) -> OutcomeModel:
    names = [f.name for f in fields(OutcomeModel)]
    r.unknown(d, names, path)
    base = OutcomeModel()
    kw = {}
    for f in fields(OutcomeModel):
        if f.name == "fixed_multiple":
            v = d.get("fixed_multiple")
            kw[f.name] = None if v is None else r.get(d, "fixed_multiple", float, None, path)
        elif f.name.startswith("years_to_liquidity"):
            kw[f.name] = r.get(d, f.name, int, getattr(base, f.name), path)
        else:
            kw[f.name] = r.get(d, f.name, float, getattr(base, f.name), path)
    return r.build(OutcomeModel, kw, path)


def _parse_grid(r: _Reader, v, path) -> tuple[float, ...]:
    if isinstance(v, dict):
        r.unknown(v, ("start", "stop", "step"), path)
        start = r.get(v, "start", float, 0.0, path)
        stop = r.get(v, "stop", float, 4.0, path)
        step = r.get(v, "step", float, 0.1, path)
        if step <= 0 or stop < start:
            raise r.error("need step > 0 and stop >= start", path)
        n = int(round((stop - start) / step))
        return tuple(round(start + i * step, 10) for i in range(n + 1))
    if isinstance(v, list):
        out = []
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or x < 0:
                raise r.error("multiples must be numbers >= 0", path + (i,))
            out.append(float(x))
        if not out:
            raise r.error("grid must not be empty", path)
        return tuple(out)
    raise r.error("expected a list or {start, stop, step}", path)


def _parse_sweep(r: _Reader, d: dict, path) -> SweepConfig:
    r.unknown(d, ("model", "m_grid", "variants", "normalized"), path)
    base = SweepConfig()
    model = r.get(d, "model", str, base.model, path)
    if model not in MODEL_TAGS[:2]:
        raise r.error(f"model must be one of {MODEL_TAGS[:2]}", path + ("model",))
    grid = _parse_grid(r, d["m_grid"], path + ("m_grid",)) if "m_grid" in d else base.m_grid
    variants = base.variants
    if "variants" in d:
        raw = r.get(d, "variants", list, [], path)
        if not raw:
            raise r.error("at least one variant is required", path + ("variants",))
        vs = []
        for i, item in enumerate(raw):
            p = path + ("variants", i)
            if not isinstance(item, dict):
                raise r.error("expected a mapping with id and overrides", p)
            r.unknown(item, ("id", "overrides"), p)
            vid = r.get(item, "id", str, f"v{i}", p)
            ov = r.get(item, "overrides", dict, {}, p) or {}
            pairs = []
            for k, val in ov.items():
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise r.error("override values must be numbers", p + ("overrides", k))
                pairs.append((k, float(val)))
            vs.append((vid, tuple(pairs)))
        variants = tuple(vs)
    normalized = r.get(d, "normalized", bool, base.normalized, path)
    return SweepConfig(model, grid, variants, normalized)


def _parse_predicates(r: _Reader, raw, path) -> tuple[Predicate, ...]:
    if not isinstance(raw, list):
        raise r.error("expected a list of {attr, op, value}", path)
    out = []
    for i, item in enumerate(raw):
        p = path + (i,)
        if not isinstance(item, dict):
            raise r.error("expected {attr, op, value}", p)
        r.unknown(item, ("attr", "op", "value"), p)
        value = item.get("value")
        if isinstance(value, list):
            value = tuple(value)
        out.append(r.build(Predicate, dict(attr=r.get(item, "attr", str, "", p),
                                           op=r.get(item, "op", str, "", p),
                                           value=value), p))
    return tuple(out)


def _parse_rule(r: _Reader, d: dict, owner: str, path) -> AutomationRule:
    allowed = [f.name for f in fields(AutomationRule) if f.name != "owner"]
    r.unknown(d, allowed, path)
    for req in ("id", "check_min", "check_max"):
        if req not in d:
            raise r.error(f"missing required key {req!r}", path)
    sectors = r.get(d, "sectors", list, [], path)
    hp = d.get("holding_period_pref")
    return r.build(AutomationRule, dict(
        id=r.get(d, "id", str, "", path), owner=owner, sectors=frozenset(sectors),
        min_round_size=r.get(d, "min_round_size", int, 0, path),
        max_valuation_cap=r.get(d, "max_valuation_cap", int, 10**15, path),
        check_min=r.get(d, "check_min", int, 0, path),
        check_max=r.get(d, "check_max", int, 0, path),
        max_per_quarter=r.get(d, "max_per_quarter", int, 1, path),
        holding_period_pref=None if hp is None else r.get(d, "holding_period_pref", float, None, path),
        followon_reserve_fraction=r.get(d, "followon_reserve_fraction", float, 0.0, path),
        followon_criteria=_parse_predicates(r, d.get("followon_criteria", []),
                                            path + ("followon_criteria",)),
        created_at=r.get(d, "created_at", int, 0, path)), path)


def _parse_distributed(r: _Reader, d: dict, path) -> DistributedConfig:
    r.unknown(d, ("fees", "splits", "admin_cost", "members", "deal_flow", "lps",
                  "success_compensation"), path)
    base = DistributedConfig()
    fees_d = r.section(d, "fees", path)
    r.unknown(fees_d, ("performance_fee", "carry"), path + ("fees",))
    fees = r.build(FeeSchedule, dict(
        performance_fee=r.get(fees_d, "performance_fee", float, defaults.PERFORMANCE_FEE, path + ("fees",)),
        carry=r.get(fees_d, "carry", float, defaults.CARRY, path + ("fees",))), path + ("fees",))
    splits_d = r.section(d, "splits", path)
    sp = path + ("splits",)
    r.unknown(splits_d, ("perf_fee_shares", "carry_shares"), sp)
    share_maps = {}
    for key, default in (("perf_fee_shares", defaults.PERF_FEE_SHARES),
                         ("carry_shares", defaults.CARRY_SHARES)):
        raw = r.get(splits_d, key, dict, dict(default), sp) or {}
        m = {}
        for pod, v in raw.items():
            if pod not in {k.value for k in PodKind}:
                raise r.error(f"unknown pod {pod!r}", sp + (key, pod))
            m[pod] = r.get(raw, pod, "fraction", None, sp + (key,))
        share_maps[key] = m
    splits = r.build(CarrySplitTable, share_maps, sp)
    admin = r.get(d, "admin_cost", int, defaults.SPV_ADMIN_COST, path)
    if admin < 0:
        raise r.error("admin_cost must be >= 0", path + ("admin_cost",))

    members = base.members
    if "members" in d:
        raw = r.get(d, "members", dict, {}, path)
        members = {}
        for mid, pods in raw.items():
            if not isinstance(pods, list) or not all(p in {k.value for k in PodKind} for p in pods):
                raise r.error("expected a list of pod names", path + ("members", str(mid)))
            members[str(mid)] = tuple(pods)
        if not any("core" in v for v in members.values()):
            raise r.error("the core pod needs at least one member", path + ("members",))

    flow_d = r.section(d, "deal_flow", path)
    fp = path + ("deal_flow",)
    names = [f.name for f in fields(DealFlowConfig)]
    r.unknown(flow_d, names, fp)
    fb = DealFlowConfig()
    flow = DealFlowConfig(
        sectors=tuple(r.get(flow_d, "sectors", list, list(fb.sectors), fp)),
        round_size_median=r.get(flow_d, "round_size_median", int, fb.round_size_median, fp),
        round_size_sigma=r.get(flow_d, "round_size_sigma", float, fb.round_size_sigma, fp),
        cap_multiple_min=r.get(flow_d, "cap_multiple_min", float, fb.cap_multiple_min, fp),
        cap_multiple_max=r.get(flow_d, "cap_multiple_max", float, fb.cap_multiple_max, fp),
        max_round_share=r.get(flow_d, "max_round_share", float, fb.max_round_share, fp))
    if not flow.sectors:
        raise r.error("sectors must not be empty", fp + ("sectors",))
    if not 0 < flow.max_round_share <= 1:
        raise r.error("max_round_share must lie in (0, 1]", fp + ("max_round_share",))
    if not 0 < flow.cap_multiple_min <= flow.cap_multiple_max:
        raise r.error("need 0 < cap_multiple_min <= cap_multiple_max", fp)

    lps = base.lps
    if "lps" in d:
        raw = r.get(d, "lps", list, [], path)
        out = []
        seen_rules = set()
        for i, item in enumerate(raw):
            p = path + ("lps", i)
            if not isinstance(item, dict):
                raise r.error("expected a mapping", p)
            r.unknown(item, ("id", "capital", "rules"), p)
            lp_id = r.get(item, "id", str, f"lp-{i + 1}", p)
            capital = r.get(item, "capital", int, 0, p)
            if capital < 0:
                raise r.error("capital must be >= 0", p + ("capital",))
            rules = []
            for j, rd in enumerate(r.get(item, "rules", list, [], p)):
                rp = p + ("rules", j)
                if not isinstance(rd, dict):
                    raise r.error("expected a mapping", rp)
                rule = _parse_rule(r, rd, lp_id, rp)
                if rule.id in seen_rules:
                    raise r.error(f"duplicate rule id {rule.id!r}", rp + ("id",))
                seen_rules.add(rule.id)
                rules.append(rule)
            out.append(LpConfig(lp_id, capital, tuple(rules)))
        lps = tuple(out)
    pay = r.get(d, "success_compensation", str, base.success_compensation, path)
    if pay != "carry":
        raise r.error("only 'carry' is implemented", path + ("success_compensation",))
    return DistributedConfig(fees, splits, admin, members, flow, lps, pay)


def _parse_match_eval(r: _Reader, d: dict, path) -> MatchEvalConfig:
    r.unknown(d, ("deals",), path)
    deals = []
    for i, item in enumerate(r.get(d, "deals", list, [], path)):
        p = path + ("deals", i)
        if not isinstance(item, dict):
            raise r.error("expected a mapping", p)
        r.unknown(item, [f.name for f in fields(MatchDeal)], p)
        for req in ("id", "sector", "round_size", "valuation_cap"):
            if req not in item:
                raise r.error(f"missing required key {req!r}", p)
        cap = item.get("capacity")
        deals.append(MatchDeal(
            id=str(item["id"]), sector=r.get(item, "sector", str, "", p),
            round_size=r.get(item, "round_size", int, 0, p),
            valuation_cap=r.get(item, "valuation_cap", int, 0, p),
            time=r.get(item, "time", float, 0.0, p),
            stage=r.get(item, "stage", str, "seed", p),
            capacity=None if cap is None else r.get(item, "capacity", int, None, p)))
    return MatchEvalConfig(tuple(deals))


def _validate_top(cfg: RunConfig, lines: dict, source: str | None = None) -> None:
    r = _Reader({}, lines, source)
    if cfg.scenario not in SCENARIOS:
        raise r.error(f"scenario must be one of {', '.join(SCENARIOS)}", ("scenario",))
    if cfg.trials < 1:
        raise r.error("trials must be >= 1", ("trials",))
    if not 0 <= cfg.master_seed < 2**64:
        raise r.error("master_seed must be an unsigned 64-bit integer", ("master_seed",))
    if cfg.detail_trials < 0:
        raise r.error("detail_trials must be >= 0", ("detail_trials",))
    if cfg.workers < 1:
        raise r.error("workers must be >= 1", ("workers",))
    if cfg.schedule.deployment_years > cfg.fund.lifespan_l:
        raise r.error("deployment_years exceeds the fund lifespan", ("schedule", "deployment_years"))
    if cfg.value_add:
        raise r.error("value add is not modelled; leave it false", ("value_add",))
    if int(cfg.fund.fund_size_f) != cfg.fund.fund_size_f:
        raise r.error("fund_size must be whole minor units", ("fund", "fund_size"))


def parse_config(text: str, source: str | None = None) -> RunConfig:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(e, 'problem', e)}", (),
                          None if mark is None else mark.line + 1, source) from None
    lines: dict = {}
    data = {} if node is None else _node_to_python(node, lines, ())
    r = _Reader(data, lines, source)
    if not isinstance(data, dict):
        raise r.error("top level must be a mapping", ())
    top = ("scenario", "trials", "master_seed", "output_dir", "svg", "workers", "with_irr",
           "detail_trials", "fund",
           "schedule", "market", "successor_threshold", "sweep", "distributed", "match_eval",
           "value_add")
    r.unknown(data, top, ())
    base = RunConfig()
    cfg = RunConfig(
        scenario=r.get(data, "scenario", str, base.scenario, ()),
        trials=r.get(data, "trials", int, base.trials, ()),
        master_seed=r.get(data, "master_seed", int, base.master_seed, ()),
        output_dir=r.get(data, "output_dir", str, base.output_dir, ()),
        svg=r.get(data, "svg", bool, base.svg, ()),
        workers=r.get(data, "workers", int, base.workers, ()),
        with_irr=r.get(data, "with_irr", bool, base.with_irr, ()),
        detail_trials=r.get(data, "detail_trials", int, base.detail_trials, ()),
        fund=_parse_fund(r, r.section(data, "fund", ()), ("fund",)),
        schedule=_parse_schedule(r, r.section(data, "schedule", ()), ("schedule",)),
        market=_parse_market(r, r.section(data, "market", ()), ("market",)),
        successor_threshold=r.get(data, "successor_threshold", float, base.successor_threshold, ()),
        sweep=_parse_sweep(r, r.section(data, "sweep", ()), ("sweep",)),
        distributed=_parse_distributed(r, r.section(data, "distributed", ()), ("distributed",)),
        match_eval=_parse_match_eval(r, r.section(data, "match_eval", ()), ("match_eval",)),
        value_add=r.get(data, "value_add", bool, base.value_add, ()),
    )
    _validate_top(cfg, lines, source)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), str(p))


# ---------------------------------------------------------------- dumping

def _frac_str(x: Fraction) -> str:
    return str(x)


def _rule_dict(rule: AutomationRule) -> dict:
    return {
        "id": rule.id, "sectors": sorted(rule.sectors), "min_round_size": rule.min_round_size,
        "max_valuation_cap": rule.max_valuation_cap, "check_min": rule.check_min,
        "check_max": rule.check_max, "max_per_quarter": rule.max_per_quarter,
        "holding_period_pref": rule.holding_period_pref,
        "followon_reserve_fraction": rule.followon_reserve_fraction,
        "followon_criteria": [{"attr": p.attr, "op": p.op,
                               "value": list(p.value) if isinstance(p.value, tuple) else p.value}
                              for p in rule.followon_criteria],
        "created_at": rule.created_at,
    }


def config_to_dict(cfg: RunConfig) -> dict:
    f = cfg.fund
    dist = cfg.distributed
    non_core = lambda m: {k.value: _frac_str(v) for k, v in m.items()
                          if k != PodKind.CORE and v != 0}
    return {
        "scenario": cfg.scenario, "trials": cfg.trials, "master_seed": cfg.master_seed,
        "output_dir": cfg.output_dir, "svg": cfg.svg, "workers": cfg.workers,
        "with_irr": cfg.with_irr, "detail_trials": cfg.detail_trials,
        "fund": {"fund_size": int(f.fund_size_f), "lifespan": f.lifespan_l, "mgmt_fee": f.mgmt_fee_p,
                 "gp_commit": f.gp_commit_g, "carry": f.carry_c},
        "schedule": {"deployment_years": cfg.schedule.deployment_years,
                     "initial_fraction": cfg.schedule.initial_fraction,
                     "companies_per_fund": cfg.schedule.companies_per_fund,
                     "check_policy": cfg.schedule.check_policy,
                     "check_weights": list(cfg.schedule.check_weights)},
        "market": {fl.name: getattr(cfg.market, fl.name) for fl in fields(OutcomeModel)},
        "successor_threshold": cfg.successor_threshold,
        "sweep": {"model": cfg.sweep.model, "m_grid": list(cfg.sweep.m_grid),
                  "variants": [{"id": vid, "overrides": dict(ov)} for vid, ov in cfg.sweep.variants],
                  "normalized": cfg.sweep.normalized},
        "distributed": {
            "fees": {"performance_fee": dist.fees.performance_fee, "carry": dist.fees.carry},
            "splits": {"perf_fee_shares": non_core(dist.splits.perf_fee_shares),
                       "carry_shares": non_core(dist.splits.carry_shares)},
            "admin_cost": dist.admin_cost,
            "members": {k: list(v) for k, v in dist.members.items()},
            "deal_flow": {fl.name: (list(getattr(dist.deal_flow, fl.name))
                                    if fl.name == "sectors" else getattr(dist.deal_flow, fl.name))
                          for fl in fields(DealFlowConfig)},
            "lps": [{"id": lp.id, "capital": lp.capital, "rules": [_rule_dict(x) for x in lp.rules]}
                    for lp in dist.lps],
            "success_compensation": dist.success_compensation,
        },
        "match_eval": {"deals": [{fl.name: getattr(d, fl.name) for fl in fields(MatchDeal)}
                                 for d in cfg.match_eval.deals]},
        "value_add": cfg.value_add,
    }


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=False)


def scenario_dict(cfg: RunConfig) -> dict[str, Any]:
    """The config minus settings that cannot change output bytes."""
    d = config_to_dict(cfg)
    for k in ("output_dir", "workers"):
        d.pop(k)
    return d


def config_hash(cfg: RunConfig) -> str:
    """sha256 over the canonical JSON of :func:`scenario_dict`."""
    canon = json.dumps(scenario_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
