"""Where a GP's money comes from, and which knob they would rather turn.

Run: python3 demos/gp_incentives.py
"""

from distvc.economics import FundParams, fee_incentive_threshold, gp_utility_expanded

base = FundParams(1.0, lifespan_l=10, mgmt_fee_p=0.02, gp_commit_g=0.01, carry_c=0.20)

print("Normalized fund (f = 1), 2% fee for 10 years, 1% commit, 20% carry.\n")
print(f"{'m':>4} {'fees':>8} {'commit':>8} {'carry':>8} {'total':>8}")
for m in (0, 1, 2, 3, 5):
    u = gp_utility_expanded(base, m)
    print(f"{m:>4} {u.fee_utility:8.4f} {u.commit_pnl:8.4f} {u.carry_utility:8.4f} {u.total:8.4f}")

u2 = gp_utility_expanded(base, 2).total
fee_bump = gp_utility_expanded(base.with_overrides(p=0.04), 2).total - u2
carry_bump = gp_utility_expanded(base.with_overrides(c=0.25), 2).total - u2
print(f"\nAt a 2x fund, doubling the fee adds {fee_bump:.4f}; five more carry points add "
      f"{carry_bump:.4f}.")
print(f"A higher fee only hurts the GP once the fund returns more than "
      f"{fee_incentive_threshold(base):.4f}x.")
