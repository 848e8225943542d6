"""LP investing rules matched against a small deal stream, with a crowded round.

Run: python3 demos/lp_automations.py
"""

from distvc.automation import (AutomationRule, CapitalAccount, Predicate, Proposal,
                               QuarterLedger, allocate_round, match, quarter_of, reserve_followon)
from distvc.distributed import Deal, DealState

M = 100_000_000  # $1M in cents
alice = AutomationRule("alice-bio", "alice", {"biotech"}, 5 * M, 25 * M, M // 10, M // 4, 3,
                       followon_reserve_fraction=0.40,
                       followon_criteria=(Predicate("paper_multiple", "gt", 1.0),))
bob = AutomationRule("bob-any", "bob", {"biotech", "software"}, 0, 100 * M, M // 5, M // 4, 2,
                     created_at=1)
accounts = {"alice": CapitalAccount("alice", M), "bob": CapitalAccount("bob", 2 * M)}
for rule in (alice, bob):
    accounts[rule.owner].reserve(reserve_followon(rule, accounts[rule.owner].total))

deals = [("bio-1", "biotech", 6 * M, 20 * M, 0.05), ("soft-1", "software", 3 * M, 15 * M, 0.10),
         ("bio-2", "biotech", 8 * M, 30 * M, 0.12), ("bio-3", "biotech", 5 * M, 22 * M, 0.15),
         ("bio-4", "biotech", 1_500_000 * 100, 10 * M, 0.20)]
ledger = QuarterLedger()
for did, sector, size, cap, t in deals:
    deal = Deal(did, sector, size, cap, pipeline_state=DealState.MEMO,
                timestamps={DealState.MEMO: t})
    q = quarter_of(t)
    proposals = []
    for rule in (alice, bob):
        res = match(rule, deal, ledger, accounts[rule.owner].available, quarter=q)
        print(f"{did:<7} {rule.id:<10} {res.decision:<9} {res.reason:<14} {res.proposed_check or ''}")
        if res.matched:
            proposals.append(Proposal(rule, res.proposed_check))
    capacity = size // 20  # a 5% allocation for the syndicate
    fills = allocate_round(capacity, proposals)
    for rid, amt in fills.items():
        rule = alice if rid == alice.id else bob
        accounts[rule.owner].deploy(amt)
        ledger.record(rule, q)
    print(f"        capacity {capacity}, fills {fills}\n")

for owner, acct in accounts.items():
    released = acct.release_reserve()
    print(f"{owner}: deployed {acct.deployed}, reserve released {released}, "
          f"available {acct.available}")
