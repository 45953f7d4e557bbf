import random

import pytest

from mpcnet.dht import DhtNetwork, NodeId
from mpcnet.incentives import (
    FeeSchedule,
    RentManager,
    is_eligible,
    post_deposit,
    settle_computation,
)
from mpcnet.keys import KeyPair
from mpcnet.ledger import Ledger, LedgerRejected
from mpcnet.trace import ComputationTrace, NodeTally


def total_value(ledger):
    return sum(a.balance + a.deposit for a in ledger.accounts.values())


def make_parties(count, balance=1000, seed=55):
    rng = random.Random(seed)
    keypairs = [KeyPair.generate(rng) for _ in range(count)]
    ledger = Ledger(genesis_balances={kp.sign_pk: balance for kp in keypairs})
    return keypairs, ledger


def make_trace(committee_pks, requester_pk, tallies, faults=(), outcome="ok"):
    trace = ComputationTrace(
        computation_id=b"\x11" * 32, mode="shamir", seed=1,
        committee=list(range(len(committee_pks))),
        committee_pks=list(committee_pks),
        requester_pk=requester_pk)
    for idx, tally in enumerate(tallies):
        trace.per_node[idx] = tally
    for idx, behavior in faults:
        trace.fault(idx, behavior, "timeout")
    trace.finalize(outcome)
    return trace


def test_post_deposit_locks_and_gates_eligibility():
    keypairs, ledger = make_parties(2)
    node = keypairs[0]
    post_deposit(node, 100, ledger)
    acct = ledger.account(node.sign_pk)
    assert (acct.balance, acct.deposit) == (900, 100)
    with pytest.raises(LedgerRejected):
        post_deposit(node, 1000, ledger)
    assert is_eligible(node.sign_pk, ledger)
    # zero deposit leaves the node ineligible
    other = keypairs[1]
    post_deposit(other, 0, ledger)
    assert not is_eligible(other.sign_pk, ledger)


def test_fee_fixture_hand_derived():
    # Pinned fixture: w=(1,1,10), a node with rounds=5, adds=2, muls=3
    # earns 5 + 2 + 30 = 37.
    schedule = FeeSchedule(w_round=1, w_add=1, w_mul=10)
    assert schedule.fee(5, 2, 3) == 37
    keypairs, ledger = make_parties(4)
    authority = KeyPair.generate(random.Random(1))
    worker_pks = [kp.sign_pk for kp in keypairs[:3]]
    trace = make_trace(worker_pks, keypairs[3].sign_pk,
                       [NodeTally(5, 2, 3), NodeTally(1, 1, 0), NodeTally(0, 0, 0)])
    report = settle_computation(trace, schedule, ledger, authority)
    assert not report.rejected
    assert report.lines[0].fee == 37
    assert ledger.account(worker_pks[0]).balance == 1037
    assert ledger.account(keypairs[3].sign_pk).balance == 1000 - 37 - 2


def test_settlement_requires_finalized_trace():
    keypairs, ledger = make_parties(2)
    trace = ComputationTrace(computation_id=b"\x01" * 32, mode="shamir", seed=1,
                             committee=[0], committee_pks=[keypairs[0].sign_pk],
                             requester_pk=keypairs[1].sign_pk)
    with pytest.raises(ValueError, match="unfinalized"):
        settle_computation(trace, FeeSchedule(), ledger, keypairs[0])


def test_no_faults_leave_deposits_unchanged():
    keypairs, ledger = make_parties(4)
    authority = KeyPair.generate(random.Random(2))
    for kp in keypairs[:3]:
        post_deposit(kp, 90, ledger)
    trace = make_trace([kp.sign_pk for kp in keypairs[:3]], keypairs[3].sign_pk,
                       [NodeTally(1, 1, 1)] * 3)
    settle_computation(trace, FeeSchedule(), ledger, authority)
    for kp in keypairs[:3]:
        assert ledger.account(kp.sign_pk).deposit == 90


def test_slash_split_equally():
    # 1 malicious with deposit 90, 3 honest -> each honest +30.
    keypairs, ledger = make_parties(5)
    authority = KeyPair.generate(random.Random(3))
    for kp in keypairs[:4]:
        post_deposit(kp, 90, ledger)
    committee_pks = [kp.sign_pk for kp in keypairs[:4]]
    trace = make_trace(committee_pks, keypairs[4].sign_pk,
                       [NodeTally(0, 0, 0)] * 4, faults=[(3, "abort-after-output")])
    before = total_value(ledger)
    report = settle_computation(trace, FeeSchedule(), ledger, authority)
    assert total_value(ledger) == before
    assert ledger.account(committee_pks[3]).deposit == 0
    for pk in committee_pks[:3]:
        assert ledger.account(pk).balance == 1000 - 90 + 30
    slash_line = [l for l in report.lines if l.slash][0]
    assert slash_line.slash == 90 and slash_line.reason == "abort-after-output"


def test_slash_remainder_to_first_honest():
    keypairs, ledger = make_parties(4)
    authority = KeyPair.generate(random.Random(4))
    for kp, amount in zip(keypairs[:3], (100, 100, 91)):
        post_deposit(kp, amount, ledger)
    committee_pks = [kp.sign_pk for kp in keypairs[:3]]
    trace = make_trace(committee_pks, keypairs[3].sign_pk,
                       [NodeTally(0, 0, 0)] * 3, faults=[(2, "wrong-share")])
    settle_computation(trace, FeeSchedule(), ledger, authority)
    # 91 split over 2 honest: 45 each, remainder 1 to the lowest index.
    assert ledger.account(committee_pks[0]).balance == 900 + 46
    assert ledger.account(committee_pks[1]).balance == 900 + 45
    assert ledger.account(committee_pks[2]).deposit == 0


def test_min_balance_rejects_request():
    keypairs, ledger = make_parties(3, balance=5)
    authority = KeyPair.generate(random.Random(5))
    trace = make_trace([keypairs[0].sign_pk, keypairs[1].sign_pk],
                       keypairs[2].sign_pk, [NodeTally(1, 1, 1)] * 2)
    schedule = FeeSchedule(min_balance=100)
    report = settle_computation(trace, schedule, ledger, authority)
    assert report.rejected
    assert all(line.fee == 0 for line in report.lines)
    assert ledger.account(keypairs[2].sign_pk).balance == 5


def test_conservation_randomized():
    rng = random.Random(77)
    for case in range(500):
        n = rng.randrange(2, 6)
        balance = rng.randrange(50, 2000)
        keypairs, ledger = make_parties(n + 1, balance=balance, seed=case)
        authority = KeyPair.generate(random.Random(9000 + case))
        for kp in keypairs[:n]:
            post_deposit(kp, rng.randrange(0, min(balance, 200)), ledger)
        tallies = [NodeTally(rng.randrange(5), rng.randrange(5), rng.randrange(3))
                   for _ in range(n)]
        faults = [(i, "wrong-share") for i in range(n) if rng.random() < 0.3]
        trace = make_trace([kp.sign_pk for kp in keypairs[:n]],
                           keypairs[n].sign_pk, tallies, faults=faults)
        schedule = FeeSchedule(w_round=rng.randrange(3), w_add=rng.randrange(3),
                               w_mul=rng.randrange(12), min_balance=rng.randrange(50))
        before = total_value(ledger)
        settle_computation(trace, schedule, ledger, authority)
        assert total_value(ledger) == before


def test_settlement_report_format():
    keypairs, ledger = make_parties(2)
    authority = KeyPair.generate(random.Random(6))
    trace = make_trace([keypairs[0].sign_pk], keypairs[1].sign_pk,
                       [NodeTally(1, 0, 0)])
    report = settle_computation(trace, FeeSchedule(), ledger, authority)
    line = report.to_text().splitlines()[1]
    assert line == f"node={keypairs[0].sign_pk.hex()} fee=1 slash=0 reason=honest"


# -- storage rent -----------------------------------------------------------------

def rent_env(balance=1000, price=2, grace=3):
    rng = random.Random(8)
    owner = KeyPair.generate(rng)
    hosts = [KeyPair.generate(rng) for _ in range(2)]
    authority = KeyPair.generate(rng)
    ledger = Ledger(genesis_balances={owner.sign_pk: balance})
    dht = DhtNetwork()
    node_ids = []
    for kp in hosts:
        nid = NodeId(value=rng.randbytes(32))
        dht.add_node(nid, kp)
        node_ids.append(nid)
    dht.bootstrap()
    key = rng.randbytes(32)
    dht.dht_store(key, b"x" * 10, encrypted=False)
    schedule = FeeSchedule(storage_price=price, grace_period=grace)
    manager = RentManager(schedule, ledger, dht, authority)
    manager.register(key, owner.sign_pk, size=10, hosts=[kp.sign_pk for kp in hosts])
    return manager, ledger, dht, key, owner, hosts


def test_rent_linear_charging():
    manager, ledger, dht, key, owner, hosts = rent_env()
    for now in range(10):
        actions = manager.tick(now)
        assert actions == [(key, "charged")]
    assert ledger.account(owner.sign_pk).balance == 1000 - 10 * 2 * 10
    assert sum(ledger.account(kp.sign_pk).balance for kp in hosts) == 200
    assert dht.holders(key)


def test_rent_restriction_and_deletion():
    manager, ledger, dht, key, owner, hosts = rent_env(balance=45)
    # Ticks 0 and 1 charge 20 each; tick 2 finds 5 < 20 -> restricted;
    # deletion exactly grace (3) ticks later, at tick 5.
    assert manager.tick(0) == [(key, "charged")]
    assert manager.tick(1) == [(key, "charged")]
    assert manager.tick(2) == [(key, "restricted")]
    assert manager.is_restricted(key)
    assert manager.tick(3) == []
    assert manager.tick(4) == []
    assert manager.tick(5) == [(key, "deleted")]
    assert not dht.holders(key)
    # The deletion leaves a ledger record.
    from mpcnet.keys import sha256
    assert ledger.get(sha256(b"storage-deleted" + key)) is not None


def test_rent_topup_restores():
    manager, ledger, dht, key, owner, hosts = rent_env(balance=25)
    assert manager.tick(0) == [(key, "charged")]
    assert manager.tick(1) == [(key, "restricted")]
    ledger.account(owner.sign_pk).balance += 100
    assert manager.tick(2) == [(key, "restored")]
    assert not manager.is_restricted(key)
    assert manager.tick(3) == [(key, "charged")]
    assert dht.holders(key)


def test_rent_lifecycle_never_reverses_without_topup():
    manager, ledger, dht, key, owner, _ = rent_env(balance=0, grace=2)
    states = []
    for now in range(5):
        manager.tick(now)
        states.append(manager.records[key].state)
    assert states == ["restricted", "restricted", "deleted", "deleted", "deleted"]
