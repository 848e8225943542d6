"""Integer minor-unit helpers shared by every ledger.

All ledgers hold money as ``int`` minor units. Rates enter as floats or
strings and are converted to exact decimals via :func:`as_fraction` before
they touch money, so ``0.2 * 1_000_000`` is exactly ``200_000``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Hashable, Mapping, Sequence, TypeVar

K = TypeVar("K", bound=Hashable)


def as_fraction(x) -> Fraction:
    """Exact rational for a rate given as int, str, Fraction or float.

    Floats go through ``repr`` so ``0.2`` becomes ``1/5`` rather than the
    binary expansion.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x))


def round_half_even(x) -> int:
    """Round a number to the nearest integer, ties to even."""
    return round(as_fraction(x))


def apply_rate(amount: int, rate) -> int:
    """``amount * rate`` rounded half-to-even."""
    return round(Fraction(amount) * as_fraction(rate))


def largest_remainder(total: int, weights: Mapping[K, object],
                      order: Sequence[K] | None = None) -> dict[K, int]:
    """Split ``total`` minor units in proportion to ``weights``.

    Each key receives the floor of its exact share; the leftover units go one
    each to the largest fractional remainders. Ties are broken by position in
    ``order`` (defaults to sorted keys), so the result is deterministic and
    the parts sum to ``total`` exactly.

    Zero-weight keys receive zero. If every weight is zero a ``ValueError``
    is raised, since there is nobody to pay.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    keys = list(order) if order is not None else sorted(weights)
    exact = {k: as_fraction(weights[k]) for k in keys}
    if any(w < 0 for w in exact.values()):
        raise ValueError("weights must be non-negative")
    wsum = sum(exact.values(), Fraction(0))
    if wsum == 0:
        if total == 0:
            return {k: 0 for k in keys}
        raise ValueError("cannot allocate a positive total over zero weights")

    shares = {k: total * w / wsum for k, w in exact.items()}
    out = {k: int(s.numerator // s.denominator) for k, s in shares.items()}
    leftover = total - sum(out.values())
    rank = {k: i for i, k in enumerate(keys)}
    by_remainder = sorted(
        (k for k in keys if exact[k] > 0),
        key=lambda k: (-(shares[k] - out[k]), rank[k]),
    )
    for k in by_remainder[:leftover]:
        out[k] += 1
    return out
