"""GP utility model for a standard fund.

Two formulations are provided and deliberately kept apart:

* the *simple* model, where fee utility is ``f*p*l`` and carry is earned on
  profit measured against the net-invested capital ``I = f*(1 - p*l)``;
* the *expanded* polynomial, where carry and the GP's own commitment are
  measured against the paid-in capital ``f``.

The two disagree by ``c*f*p*l`` when ``g == 0``; :func:`model_discrepancy`
reports the gap rather than hiding it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields, replace
from typing import Iterable, Mapping, Sequence

from . import defaults

SIMPLE = "simple"
EXPANDED = "expanded"
# ledger-derived utility from a simulated fund, not a closed-form model
REALIZED = "realized"
MODEL_TAGS = (SIMPLE, EXPANDED, REALIZED)


@dataclass(frozen=True)
class FundParams:
    """Fund size, lifespan, management fee, GP commit and carry.

    ``fund_size_f`` is in minor units for ledger work, but any positive number
    is accepted so the utility model can be evaluated on a normalized fund
    (``f = 1``).
    """

    fund_size_f: float
    lifespan_l: int = defaults.LIFESPAN_YEARS
    mgmt_fee_p: float = defaults.MGMT_FEE
    gp_commit_g: float = defaults.GP_COMMIT
    carry_c: float = defaults.CARRY

    def __post_init__(self):
        if not self.fund_size_f > 0:
            raise ValueError(f"fund_size_f must be > 0, got {self.fund_size_f}")
        if not self.lifespan_l > 0:
            raise ValueError(f"lifespan_l must be > 0, got {self.lifespan_l}")
        for name in ("mgmt_fee_p", "gp_commit_g", "carry_c"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.mgmt_fee_p * self.lifespan_l > 1.0:
            raise ValueError("mgmt_fee_p * lifespan_l exceeds 1: fees would exceed the fund")

    @property
    def fee_load(self) -> float:
        """Fraction of the fund consumed by fees over its life, ``p*l``."""
        return self.mgmt_fee_p * self.lifespan_l

    @property
    def net_invested(self) -> float:
        return self.fund_size_f * (1.0 - self.fee_load)

    def with_overrides(self, **overrides) -> "FundParams":
        """Copy with fields replaced; short names ``f, l, p, g, c`` also work."""
        return replace(self, **_normalize_overrides(overrides))


_SHORT_NAMES = {
    "f": "fund_size_f", "fund_size": "fund_size_f",
    "l": "lifespan_l", "lifespan": "lifespan_l",
    "p": "mgmt_fee_p", "mgmt_fee": "mgmt_fee_p",
    "g": "gp_commit_g", "gp_commit": "gp_commit_g",
    "c": "carry_c", "carry": "carry_c",
}
_FIELD_NAMES = {f.name for f in fields(FundParams)}


def _normalize_overrides(overrides: Mapping[str, float]) -> dict:
    out = {}
    for key, value in overrides.items():
        name = _SHORT_NAMES.get(key, key)
        if name not in _FIELD_NAMES:
            raise ValueError(f"unknown fund parameter {key!r}")
        out[name] = value
    return out


@dataclass(frozen=True)
class UtilityBreakdown:
    fee_utility: float
    carry_utility: float
    commit_pnl: float
    total: float
    model_tag: str

    def __post_init__(self):
        if self.model_tag not in MODEL_TAGS:
            raise ValueError(f"unknown model_tag {self.model_tag!r}")


def _check_multiple(m: float) -> float:
    if not (m >= 0.0 and math.isfinite(m)):
        raise ValueError(f"multiple must be a finite number >= 0, got {m}")
    return float(m)


def management_fee_utility(params: FundParams) -> float:
    """Total management fees over the fund life, ``f * p * l``."""
    return params.fund_size_f * params.mgmt_fee_p * params.lifespan_l


def carry_utility_simple(params: FundParams, m: float) -> float:
    """Carry on profit over the net-invested base; negative below ``m = 1``."""
    m = _check_multiple(m)
    invested = params.fund_size_f - management_fee_utility(params)
    return (invested * m - invested) * params.carry_c


def gp_utility_simple(params: FundParams, m: float) -> UtilityBreakdown:
    fee = management_fee_utility(params)
    carry = carry_utility_simple(params, m)
    return UtilityBreakdown(fee, carry, 0.0, fee + carry, SIMPLE)


def expanded_polynomial(params: FundParams, m: float) -> float:
    """The expanded utility written out term by term, before any grouping."""
    f, p, l, g, c = (params.fund_size_f, params.mgmt_fee_p, params.lifespan_l,
                     params.gp_commit_g, params.carry_c)
    return f * (m * g - m * g * p * l + p * l - g + m * c - m * c * g
                - m * p * l * c + m * p * l * c * g - c + c * g)


def gp_utility_expanded(params: FundParams, m: float,
                        clamp_carry: bool = False) -> UtilityBreakdown:
    """Expanded GP utility split into fee, commit P&L and carry.

    With ``I = f*(1 - p*l)``: fee ``f*p*l``, commit ``g*(I*m - f)`` and carry
    ``c*(1-g)*(I*m - f)``. Unclamped, the three parts sum to
    :func:`expanded_polynomial`. ``clamp_carry`` floors carry at zero and is
    off by default; the clamped total no longer matches the polynomial.
    """
    m = _check_multiple(m)
    f, g, c = params.fund_size_f, params.gp_commit_g, params.carry_c
    invested = params.net_invested
    fee = management_fee_utility(params)
    excess = invested * m - f
    commit = g * excess
    carry = c * (1.0 - g) * excess
    if clamp_carry:
        carry = max(carry, 0.0)
    return UtilityBreakdown(fee, carry, commit, fee + commit + carry, EXPANDED)


def gp_utility(params: FundParams, m: float, model_tag: str = EXPANDED) -> UtilityBreakdown:
    if model_tag == SIMPLE:
        return gp_utility_simple(params, m)
    if model_tag == EXPANDED:
        return gp_utility_expanded(params, m)
    raise ValueError(f"unknown model_tag {model_tag!r}")


def model_discrepancy(params: FundParams, m: float) -> float:
    """Simple-model total minus expanded-model total.

    At ``g = 0`` this is ``c*f*p*l`` for every ``m``: the carry baselines
    differ by exactly the fee load.
    """
    return gp_utility_simple(params, m).total - gp_utility_expanded(params, m).total


def fee_incentive_threshold(params: FundParams) -> float:
    """Multiple below which raising the management fee raises GP utility.

    The derivative of the expanded utility in ``p`` is
    ``f*l*(1 - m*(g + c*(1-g)))``, which changes sign at the returned value.
    """
    slope = params.gp_commit_g + params.carry_c * (1.0 - params.gp_commit_g)
    return math.inf if slope == 0 else 1.0 / slope


@dataclass(frozen=True)
class SweepRow:
    variant_id: str
    m: float
    total: float
    fee_utility: float
    carry_utility: float
    commit_pnl: float
    model_tag: str


def utility_sweep(params: FundParams,
                  variants: Sequence[tuple[str, Mapping[str, float]]] | Sequence[Mapping[str, float]],
                  m_grid: Iterable[float],
                  model_tag: str = EXPANDED) -> list[SweepRow]:
    """Evaluate GP utility for each variant over a grid of multiples.

    ``variants`` holds ``(variant_id, overrides)`` pairs, or bare override
    dicts which are then numbered ``v0, v1, ...``. An empty override dict is
    the baseline. Rows come out variant by variant in input order, with ``m``
    ascending inside each variant.
    """
    grid = sorted(_check_multiple(float(m)) for m in m_grid)
    if not grid:
        raise ValueError("m_grid must not be empty")
    if not variants:
        raise ValueError("at least one variant is required")
    rows = []
    for i, item in enumerate(variants):
        if isinstance(item, Mapping):
            vid, overrides = f"v{i}", item
        else:
            vid, overrides = item
        vparams = params.with_overrides(**dict(overrides))
        for m in grid:
            u = gp_utility(vparams, m, model_tag)
            rows.append(SweepRow(vid, m, u.total, u.fee_utility, u.carry_utility,
                                 u.commit_pnl, model_tag))
    return rows


SWEEP_COLUMNS = ("variant_id", "m", "total", "fee_utility", "carry_utility",
                 "commit_pnl", "model_tag")


def fmt12(x: float) -> str:
    """12 significant digits, with negative zero folded to zero."""
    s = format(x, ".12g")
    return "0" if s == "-0" else s


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([r.variant_id, fmt12(r.m), fmt12(r.total), fmt12(r.fee_utility),
                    fmt12(r.carry_utility), fmt12(r.commit_pnl), r.model_tag])
    return buf.getvalue()
