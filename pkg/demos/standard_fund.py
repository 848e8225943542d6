"""Monte Carlo of a traditional 2-and-20 fund: paper marks versus realized cash.

Run: python3 demos/standard_fund.py [trials]
"""

import sys

import numpy as np

from distvc.economics import FundParams
from distvc.market import OutcomeModel, SeedSpec
from distvc.standard import DeploymentSchedule, run_fund

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 500
params = FundParams(10_000_000_000)  # $100M in cents
runs = [run_fund(params, DeploymentSchedule(), OutcomeModel(), SeedSpec(7, t), with_irr=False,
                 horizon=18) for t in range(trials)]

print(f"{trials} simulated $100M funds, 50 companies each.\n")
print(f"{'year':>4} {'median DPI':>11} {'median TVPI paper':>18} {'median TVPI fair':>17}")
for year in (2, 4, 6, 8, 10, 12, 14, 18):
    recs = [r.record_at(year) for r in runs]
    print(f"{year:>4} {np.median([x.dpi for x in recs]):11.3f} "
          f"{np.median([x.tvpi_paper for x in recs]):18.3f} "
          f"{np.median([x.tvpi_fair for x in recs]):17.3f}")

final = np.array([r.record_at(18).dpi for r in runs])
print(f"\nYear-18 DPI quartiles: {np.quantile(final, [0.25, 0.5, 0.75]).round(3).tolist()}")
print(f"Share of funds returning 2x cash: {np.mean(final >= 2):.1%}")
raise_next = np.mean([r.successor.raise_next for r in runs if r.successor])
print(f"Share clearing the year-4 paper TVPI bar for a successor fund: {raise_next:.1%}")
