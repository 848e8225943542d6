import random

import pytest

from distvc.automation import (AutomationRule, CapitalAccount, Predicate, Proposal,
                               QuarterLedger, allocate_round, match, match_trace_to_csv,
                               quarter_of, reserve_followon)
from distvc.distributed import Deal, DealState
from oracles import (allocation_oracle, match_oracle, random_deal, random_rule,
                     valid_subsets)

# reference rule, in cents: biotech, round >= $5M, cap <= $25M, $100k-$250k, 3 per quarter
BIOTECH = AutomationRule("bio", "alice", {"biotech"}, 500_000_000, 2_500_000_000,
                         10_000_000, 25_000_000, 3, holding_period_pref=7.0,
                         followon_reserve_fraction=0.40,
                         followon_criteria=(Predicate("paper_multiple", "gt", 1.0),))


def deal(cap=2_000_000_000, round_size=600_000_000, sector="biotech", t=0.1):
    return Deal("d", sector, round_size, cap, pipeline_state=DealState.MEMO,
                timestamps={DealState.MEMO: t})


def test_biotech_rule_matches_with_capped_check():
    res = match(BIOTECH, deal(), QuarterLedger(), 100_000_000)
    assert (res.decision, res.reason, res.proposed_check) == ("match", "ok", 25_000_000)


def test_biotech_rule_cap_too_high():
    res = match(BIOTECH, deal(cap=3_000_000_000), QuarterLedger(), 100_000_000)
    assert (res.decision, res.reason) == ("no_match", "valuation_cap")


def test_biotech_rule_rate_limited():
    ledger = QuarterLedger()
    for _ in range(3):
        ledger.record(BIOTECH, 0)
    assert match(BIOTECH, deal(), ledger, 100_000_000).reason == "rate_limit"
    # the next quarter is a fresh bucket
    assert match(BIOTECH, deal(t=0.3), ledger, 100_000_000).matched
    with pytest.raises(RuntimeError):
        ledger.record(BIOTECH, 0)


def test_reason_order_and_sizing():
    assert match(BIOTECH, deal(sector="fintech", cap=9 * 10**9), QuarterLedger(), 0).reason == "sector"
    assert match(BIOTECH, deal(round_size=400_000_000), QuarterLedger(), 10**9).reason == "round_size"
    assert match(BIOTECH, deal(), QuarterLedger(), 9_999_999).reason == "funds"
    # capital between the bounds: check is the capital itself
    assert match(BIOTECH, deal(), QuarterLedger(), 15_000_000).proposed_check == 15_000_000
    assert match(BIOTECH, deal(), QuarterLedger(), 100_000_000, fill_fraction=0.1).proposed_check \
        == 10_000_000
    tiny = AutomationRule("t", "o", {"biotech"}, 0, 10**12, 700_000_000, 800_000_000, 1)
    assert match(tiny, deal(), QuarterLedger(), 10**10).reason == "check_floor"


def test_quarters():
    assert [quarter_of(t) for t in (0.0, 0.24, 0.25, 1.0, 3.99)] == [0, 0, 1, 4, 15]


def test_rule_validation():
    with pytest.raises(ValueError):
        AutomationRule("x", "o", set(), 0, 0, 5, 4, 1)
    with pytest.raises(ValueError):
        AutomationRule("x", "o", set(), 0, 0, 1, 4, 0)
    with pytest.raises(ValueError):
        AutomationRule("x", "o", set(), 0, 0, 1, 4, 1, followon_reserve_fraction=1.5)
    with pytest.raises(ValueError):
        Predicate("a", "like", 1)


def test_conjunction_matches_clause_table():
    rng = random.Random(11)
    for _ in range(2000):
        rule, d = random_rule(rng), random_deal(rng)
        prior = rng.randint(0, 5)
        ledger = QuarterLedger({(rule.id, quarter_of(d.current_time)): prior})
        capital = rng.choice([0, rule.check_min, rule.check_min - 1, rng.randint(0, 10**8)])
        res = match(rule, d, ledger, capital)
        want = match_oracle(rule, d, prior, capital)
        assert (res.decision, res.reason, res.proposed_check) == want


def test_rate_limit_never_exceeded_over_event_stream():
    rng = random.Random(5)
    rules = [random_rule(rng, f"r{i}", i) for i in range(5)]
    ledger = QuarterLedger()
    for k in range(3000):
        d = random_deal(rng, f"d{k}")
        q = quarter_of(k / 200)
        for r in rules:
            if match(r, d, ledger, 10**9, quarter=q).matched:
                ledger.record(r, q)
    per = {}
    for (rid, q), n in ledger.counts.items():
        per[rid] = max(per.get(rid, 0), n)
    for r in rules:
        assert per.get(r.id, 0) <= r.max_per_quarter


def rule(rid, floor, cap, created):
    return AutomationRule(rid, f"o-{rid}", {"x"}, 0, 10**15, floor, cap, 3, created_at=created)


def test_allocation_examples():
    a, b = rule("A", 100_000, 250_000, 0), rule("B", 100_000, 250_000, 1)
    props = [Proposal(a, 250_000), Proposal(b, 250_000)]
    assert allocate_round(500_000, props) == {"A": 250_000, "B": 250_000}
    assert allocate_round(300_000, props) == {"A": 150_000, "B": 150_000}


@pytest.mark.parametrize("a_created,b_created", [(0, 1), (1, 0)])
def test_allocation_floor_example(a_created, b_created):
    a, b = rule("A", 200_000, 250_000, a_created), rule("B", 100_000, 250_000, b_created)
    tuples = [("A", 250_000, a_created, 200_000), ("B", 250_000, b_created, 100_000)]
    # enumeration: {A} and {B} both satisfy every floor, {A, B} does not
    assert set(valid_subsets(300_000, tuples)) == {frozenset(), frozenset("A"), frozenset("B")}
    # only A falls short at 150k, so the chain drops A whatever its age
    want = allocation_oracle(300_000, tuples)
    assert want == {"B": 250_000}
    assert allocate_round(300_000, [Proposal(a, 250_000), Proposal(b, 250_000)]) == want


def test_allocation_random_against_oracle():
    rng = random.Random(3)
    for _ in range(1500):
        n = rng.randint(1, 5)
        rules, props, tuples = [], [], []
        for i in range(n):
            lo = rng.randint(0, 300)
            hi = lo + rng.randint(0, 300)
            r = AutomationRule(f"r{i}", f"o{i}", {"x"}, 0, 10**9, lo, hi, 1,
                               created_at=rng.randint(0, 3))
            chk = rng.randint(lo, hi)
            props.append(Proposal(r, chk))
            tuples.append((r.id, chk, r.created_at, lo))
        cap = rng.randint(0, 1200)
        got = allocate_round(cap, props)
        assert got == allocation_oracle(cap, tuples)
        assert frozenset(got) in valid_subsets(cap, tuples)
        assert sum(got.values()) <= cap
        for p in props:
            if p.rule.id in got:
                assert p.rule.check_min <= got[p.rule.id] <= p.rule.check_max
        shuffled = props[:]
        rng.shuffle(shuffled)
        assert allocate_round(cap, shuffled) == got


def test_allocation_rejects_duplicates():
    a = rule("A", 1, 5, 0)
    with pytest.raises(ValueError):
        allocate_round(10, [Proposal(a, 3), Proposal(a, 4)])
    with pytest.raises(ValueError):
        Proposal(a, 6)


def test_reserve_followon():
    assert reserve_followon(BIOTECH, 1_000_000) == 400_000
    no_res = AutomationRule("n", "o", {"x"}, 0, 1, 0, 1, 1)
    assert reserve_followon(no_res, 1_000_000) == 0
    assert not no_res.followon_ready({"paper_multiple": 9})
    assert BIOTECH.followon_ready({"paper_multiple": 1.2})
    assert not BIOTECH.followon_ready({"paper_multiple": 1.0})
    assert not BIOTECH.followon_ready({})


def test_capital_account_reconciles():
    acct = CapitalAccount("alice", 1_000_000)
    acct.reserve(reserve_followon(BIOTECH, acct.total))
    assert (acct.available, acct.reserved) == (600_000, 400_000)
    acct.deploy(250_000)
    acct.deploy(100_000, from_reserve=True)
    with pytest.raises(ValueError):
        acct.deploy(400_000, from_reserve=True)
    # criteria never fired again: the rest comes back at the end
    assert acct.release_reserve() == 300_000
    assert (acct.available, acct.reserved, acct.deployed) == (650_000, 0, 350_000)
    assert acct.available + acct.reserved + acct.deployed == acct.total


def test_reserved_capital_is_not_matchable():
    acct = CapitalAccount("alice", 100_000_000)
    acct.reserve(reserve_followon(BIOTECH, acct.total))
    checks = []
    ledger = QuarterLedger()
    for k in range(3):
        res = match(BIOTECH, deal(), ledger, acct.available)
        acct.deploy(res.proposed_check)
        ledger.record(BIOTECH, 0)
        checks.append(res.proposed_check)
    assert checks == [25_000_000, 25_000_000, 10_000_000]
    assert acct.reserved == 40_000_000


def test_trace_csv():
    res = match(BIOTECH, deal(), QuarterLedger(), 100_000_000)
    text = match_trace_to_csv([("bio", "d", 0, res)])
    assert text == "rule_id,deal_id,quarter,decision,reason,check\nbio,d,0,match,ok,25000000\n"
