"""One deal through the distributed firm: SPV close, exit, and who gets paid.

Run: python3 demos/distributed_deal.py
"""

from distvc.distributed import (CarrySplitTable, Deal, DealState, FeeSchedule, PodKind,
                                advance_deal, exit_waterfall, form_spv)

CENT = 100
deal = Deal("acme-bio", "biotech", 6_000_000 * CENT, 20_000_000 * CENT,
            timestamps={DealState.SOURCED: 0.0})
attribution = {(PodKind.SOURCING, "sam"): 1, (PodKind.DILIGENCE, "dana"): 2,
               (PodKind.DILIGENCE, "dev"): 1, (PodKind.SUCCESS, "sue"): 1}
deal = advance_deal(deal, DealState.MEMO, attribution, at=0.1)

commitments = {"alice": 250_000 * CENT, "bob": 150_000 * CENT, "carol": 100_000 * CENT}
deal, spv = form_spv(deal, commitments, FeeSchedule(0.02, 0.20), 10_000 * CENT,
                     splits=CarrySplitTable(), core_members=("core-1", "core-2"), at=0.2)
deal = advance_deal(deal, DealState.PORTFOLIO, at=0.3)

print(f"Committed ${sum(commitments.values()) / CENT:,.0f}; performance fee "
      f"${spv.performance_fee / CENT:,.2f}; admin ${spv.admin_cost / CENT:,.0f}; "
      f"invested ${spv.net_invested / CENT:,.2f}")
print("Fee routing:", {m: f"${v / CENT:,.2f}" for m, v in sorted(spv.fee_by_member.items())})

gross = 3 * spv.net_invested
res = exit_waterfall(spv, gross, FeeSchedule(0.02, 0.20), CarrySplitTable(), deal,
                     core_members=("core-1", "core-2"), at=6.0)
print(f"\nExit at 3x: proceeds ${gross / CENT:,.2f}, carry pool ${res.carry_pool / CENT:,.2f}")
for pod, amt in sorted(res.carry_by_pod.items(), key=lambda kv: kv[0].value):
    print(f"  {pod.value:<10} ${amt / CENT:,.2f}")
print("Investors:", {k: f"${v / CENT:,.2f}" for k, v in res.investor_distributions.items()})
