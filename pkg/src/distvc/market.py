"""Seeded generator of startup outcomes with a failure mass and a Pareto tail.

Each company either fails (a per-year hazard, checked once per year held) or
survives to a liquidity event and returns a Pareto-distributed multiple of its
entry price. Between entry and exit the fair value follows a log-normal
bridge; paper marks are the fair marks inflated by ``markup_inflation``.

Randomness comes from :func:`derive_stream`, a pure function of
``(master_seed, stream_id)``. A fund simulation uses one stream per trial and
draws all of its companies from it in a fixed order, so any two models fed
the same trial index see the same companies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import defaults

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 output step for state ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v <= MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def child(self, salt: int) -> "SeedSpec":
        """A seed for an independent side-stream of this one (e.g. deal attributes)."""
        return SeedSpec(splitmix64(self.master_seed ^ splitmix64(salt)), self.stream_id)


def derive_stream(master_seed: int, stream_id: int) -> np.random.Generator:
    """Philox generator keyed by a SplitMix64 mix of the two inputs."""
    seed = SeedSpec(master_seed, stream_id)
    k0 = splitmix64(seed.master_seed)
    k1 = splitmix64(k0 ^ seed.stream_id)
    k0 = splitmix64(k1 ^ seed.master_seed)
    return np.random.Generator(np.random.Philox(key=[k0, k1]))


@dataclass(frozen=True)
class OutcomeModel:
    """Parameters of the outcome generator.

    ``fixed_multiple``, when set, replaces the Pareto draw for every surviving
    company; it exists for closed-form checks.
    """

    failure_hazard: float = defaults.FAILURE_HAZARD
    pareto_alpha: float = defaults.PARETO_ALPHA
    pareto_xmin: float = 1.0
    stepup_mu: float = 0.10
    stepup_sigma: float = 0.35
    years_to_liquidity_min: int = 5
    years_to_liquidity_max: int = 12
    markup_inflation: float = defaults.MARKUP_INFLATION
    fixed_multiple: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.failure_hazard <= 1.0:
            raise ValueError("failure_hazard must lie in [0, 1]")
        if not self.pareto_alpha > 1.0:
            raise ValueError("pareto_alpha must be > 1 for a finite mean")
        if not self.pareto_xmin > 0.0:
            raise ValueError("pareto_xmin must be > 0")
        if self.stepup_sigma < 0:
            raise ValueError("stepup_sigma must be >= 0")
        if not 1 <= self.years_to_liquidity_min <= self.years_to_liquidity_max:
            raise ValueError("need 1 <= years_to_liquidity_min <= years_to_liquidity_max")
        if self.markup_inflation <= -1:
            raise ValueError("markup_inflation must be > -1")
        if self.fixed_multiple is not None and not self.fixed_multiple > 0:
            raise ValueError("fixed_multiple must be > 0 (failures come from the hazard)")

    @property
    def surviving_mean(self) -> float:
        if self.fixed_multiple is not None:
            return self.fixed_multiple
        a = self.pareto_alpha
        return a * self.pareto_xmin / (a - 1.0)


@dataclass(frozen=True)
class CompanyOutcome:
    """One company's life, in multiples of the entry price.

    ``fair_path[k-1]`` and ``path[k-1]`` are the fair and paper marks ``k``
    years after entry, for ``k = 1 .. liquidity_year``. The last element is
    the exit (or write-off) value and is the same in both paths.
    """

    terminal_multiple: float
    liquidity_year: int
    path: tuple[float, ...]
    fair_path: tuple[float, ...] = field(repr=False, default=())

    @property
    def failed(self) -> bool:
        return self.terminal_multiple == 0.0


@dataclass
class OutcomeBatch:
    """Outcomes for ``n`` companies as arrays; row ``i`` is company ``i``.

    ``fair`` and ``paper`` have shape ``(n, max_liquidity + 1)``; column ``k``
    is the mark ``k`` years after entry. Columns past a company's liquidity
    year hold its terminal value.
    """

    terminal: np.ndarray
    liquidity: np.ndarray
    fair: np.ndarray
    paper: np.ndarray

    def __len__(self):
        return len(self.terminal)

    def outcome(self, i: int) -> CompanyOutcome:
        L = int(self.liquidity[i])
        return CompanyOutcome(float(self.terminal[i]), L,
                              tuple(float(x) for x in self.paper[i, 1:L + 1]),
                              tuple(float(x) for x in self.fair[i, 1:L + 1]))


def sample_outcomes(model: OutcomeModel, rng: np.random.Generator, n: int) -> OutcomeBatch:
    """Draw ``n`` company outcomes from ``rng`` in a fixed order.

    Draw order (each a length-``n`` vector): liquidity years, failure year,
    Pareto uniforms, then an ``(n, max_liquidity)`` block of step-up normals.
    The consumption is the same for every parameter setting so that changing
    e.g. the hazard does not reshuffle the other draws.
    """
    lmin, lmax = model.years_to_liquidity_min, model.years_to_liquidity_max
    liq = rng.integers(lmin, lmax + 1, size=n)
    u_fail = rng.random(n)
    u_tail = rng.random(n)
    z = rng.standard_normal((n, lmax))

    h = model.failure_hazard
    if h >= 1.0:
        fail_year = np.ones(n, dtype=np.int64)
    elif h <= 0.0:
        fail_year = np.full(n, lmax + 1, dtype=np.int64)
    else:
        # inverse-CDF geometric: first year whose Bernoulli(h) fires
        fail_year = np.ceil(np.log1p(-u_fail) / math.log1p(-h)).astype(np.int64)
        fail_year = np.maximum(fail_year, 1)
    failed = fail_year <= liq

    if model.fixed_multiple is not None:
        multiple = np.full(n, float(model.fixed_multiple))
    else:
        multiple = model.pareto_xmin * (1.0 - u_tail) ** (-1.0 / model.pareto_alpha)
    terminal = np.where(failed, 0.0, multiple)
    life = np.where(failed, fail_year, liq)

    markup = 1.0 + model.markup_inflation
    entry_log = -math.log(markup)
    k = np.arange(lmax + 1)
    steps = model.stepup_mu + model.stepup_sigma * z
    walk = np.concatenate([np.zeros((n, 1)), np.cumsum(steps, axis=1)], axis=1)

    # survivors: log-normal bridge from entry fair value to the exit multiple
    with np.errstate(divide="ignore"):
        target = np.log(np.where(failed, 1.0, terminal))
    frac = np.minimum(k[None, :] / life[:, None], 1.0)
    walk_at_end = np.take_along_axis(walk, np.minimum(life, lmax)[:, None], axis=1)
    bridge = entry_log + walk - frac * (walk_at_end + entry_log - target[:, None])
    # failures: unconditioned walk up to the write-off year
    drift = entry_log + walk
    log_fair = np.where(failed[:, None], drift, bridge)
    fair = np.exp(log_fair)

    held = k[None, :] < life[:, None]
    fair = np.where(held, fair, terminal[:, None])
    paper = np.where(held, fair * markup, fair)
    # the entry price itself is the paper mark at k = 0
    paper[:, 0] = 1.0
    fair[:, 0] = 1.0 / markup
    return OutcomeBatch(terminal, life.astype(np.int64), fair, paper)


def sample_outcome(model: OutcomeModel, seed: SeedSpec) -> CompanyOutcome:
    rng = derive_stream(seed.master_seed, seed.stream_id)
    return sample_outcomes(model, rng, 1).outcome(0)
