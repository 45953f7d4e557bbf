import pytest
from cryptography.exceptions import InvalidTag

from mpcnet.circuits import cost_model, eval_plain, parse_circuit
from mpcnet.errors import CheatDetected
from mpcnet.field import Field
from mpcnet.identity import Predicate, gen_shared_identity
from mpcnet.incentives import post_deposit
from mpcnet.keys import KeyPair
from mpcnet.net import EncryptedBus
from mpcnet.network import (
    Runtime,
    child_rng,
    detect_bad_shares,
    mpc_declassify,
    protocol_compute,
    protocol_share,
)
from mpcnet.spdz import gen_mac_key
from mpcnet.trace import ComputationTrace
from mpcnet.keys import sha256

MEAN3 = """
in x0
in x1
in x2
s0 = add x0 x1
s1 = add s0 x2
m = smul 34 s1
out m
"""  # 34 = inv(3) mod 101

MUL2 = "in x\nin y\nm = mul x y\nout m\n"


def make_env(mode="shamir", seed=11, nodes=6, committee=3, p=101):
    rt = Runtime(Field(p), seed, nodes, genesis_balance=1000)
    for node in rt.registry:
        post_deposit(node.keypair, 100, rt.ledger)
    owners = [rt.add_client(f"owner{i}") for i in range(3)]
    ident, _ = gen_shared_identity([lambda kp=kp: kp for kp in owners],
                                   [Predicate.owner()] * 3, rt.ledger)
    rng = child_rng(seed, "test")
    committee_nodes = rt.sample_committee(committee, rng)
    mac_key = gen_mac_key(committee, rt.field, rng) if mode == "spdz" else None
    return rt, owners, ident, committee_nodes, mac_key, rng


def fresh_trace(rt, committee, requester, seed=11):
    return ComputationTrace(
        computation_id=sha256(b"test-computation" + bytes([seed % 251])),
        mode="any", seed=seed,
        committee=[n.index for n in committee],
        committee_pks=[n.keypair.sign_pk for n in committee],
        requester_pk=requester.sign_pk)


# -- encrypted broadcast bus -----------------------------------------------------

def test_bus_non_recipients_cannot_decrypt(rng):
    bus = EncryptedBus()
    keys = {name: KeyPair.generate(rng) for name in ("a", "b", "c")}
    for name, kp in keys.items():
        bus.register(name, kp.enc_sk, kp.enc_pk)
    bus.send("a", "b", b"for bob only")
    src, dst, counter, ciphertext = bus.broadcast_log[0]
    assert bus.eavesdrop("b", src, dst, counter, ciphertext) == b"for bob only"
    with pytest.raises(InvalidTag):
        bus.eavesdrop("c", src, dst, counter, ciphertext)


def test_bus_logs_and_length_sequences(rng):
    bus = EncryptedBus()
    for name in ("a", "b"):
        kp = KeyPair.generate(rng)
        bus.register(name, kp.enc_sk, kp.enc_pk)
    bus.send("a", "b", b"xyz")
    bus.send("a", "b", b"pqrs")
    assert [d for d, _, _ in bus.logs["a"]] == ["sent", "sent"]
    lengths = [n for _, _, n in bus.length_sequence("b")]
    assert lengths[1] - lengths[0] == 1   # AES-GCM: length mirrors plaintext
    assert b"xyz" not in bus.raw_bytes("b")


# -- share / declassify ----------------------------------------------------------

@pytest.mark.parametrize("mode", ["shamir", "spdz"])
def test_share_then_declassify_owner_only(mode):
    rt, owners, ident, committee, mac_key, rng = make_env(mode)
    alice = owners[0]
    q_compute = Predicate.key_list([kp.sign_pk for kp in owners])
    pointer, _ = protocol_share(alice, "owner0", ident.addr, 57, "salary",
                                q_compute, n=3, t=1, rt=rt, rng=rng, mode=mode,
                                mac_key=mac_key, committee=committee)
    assert pointer is not None
    value, faults = mpc_declassify(alice, "owner0", ident.addr, pointer, rt)
    assert value == 57 and faults == []
    # Only the original dealer may ask for the raw data back.
    bob = owners[1]
    denied, _ = mpc_declassify(bob, "owner1", ident.addr, pointer, rt)
    assert denied is None


def test_share_posts_n_commitments():
    rt, owners, ident, committee, _, rng = make_env()
    q = Predicate.key_list([owners[0].sign_pk])
    protocol_share(owners[0], "owner0", ident.addr, 9, "x", q, n=3, t=1,
                   rt=rt, rng=rng, committee=committee)
    import json
    from mpcnet.network import sharing_key, vss_key
    record = json.loads(rt.ledger.get(vss_key(sharing_key(ident.addr, "x"))).decode())
    assert len(record["commitments"]) == 3


def test_share_denied_for_non_member():
    rt, owners, ident, committee, _, rng = make_env()
    eve = rt.add_client("eve")
    height = rt.ledger.height
    pointer, com = protocol_share(eve, "eve", ident.addr, 1, "spam",
                                  Predicate.any(), n=3, t=1, rt=rt, rng=rng,
                                  committee=committee)
    assert pointer is None and com is None
    assert rt.ledger.height == height
    assert rt.bus.messages == 0


def test_declassify_detects_wrong_share_via_commitments():
    rt, owners, ident, committee, _, rng = make_env()
    alice = owners[0]
    pointer, _ = protocol_share(alice, "owner0", ident.addr, 70, "w",
                                Predicate.key_list([alice.sign_pk]), n=3, t=1,
                                rt=rt, rng=rng, committee=committee)
    committee[1].behavior = "wrong-share"
    value, faults = mpc_declassify(alice, "owner0", ident.addr, pointer, rt)
    assert value == 70                          # reconstructed from the rest
    assert faults == [(committee[1].index, "audit_trail")]


# -- compute -----------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["shamir", "spdz"])
def test_compute_mean_matches_plain_oracle(mode):
    rt, owners, ident, committee, mac_key, rng = make_env(mode)
    circ = parse_circuit(MEAN3)
    q_compute = Predicate.key_list([kp.sign_pk for kp in owners])
    inputs = [52, 61, 46]
    pointers = []
    for i, v in enumerate(inputs):
        ptr, _ = protocol_share(owners[i], f"owner{i}", ident.addr, v, f"in{i}",
                                q_compute, n=3, t=1, rt=rt, rng=rng, mode=mode,
                                mac_key=mac_key, committee=committee)
        pointers.append(ptr)
    trace = fresh_trace(rt, committee, owners[0])
    out = protocol_compute(owners[0], "owner0", ident.addr, pointers, circ, rt,
                           trace, rng, mac_key=mac_key)
    assert out == eval_plain(circ, inputs, rt.field)


def test_compute_identity_circuit():
    rt, owners, ident, committee, _, rng = make_env()
    circ = parse_circuit("in x\nout x")
    ptr, _ = protocol_share(owners[0], "owner0", ident.addr, 88, "v",
                            Predicate.key_list([owners[0].sign_pk]), n=3, t=1,
                            rt=rt, rng=rng, committee=committee)
    trace = fresh_trace(rt, committee, owners[0])
    out = protocol_compute(owners[0], "owner0", ident.addr, [ptr], circ, rt,
                           trace, rng)
    assert out == [88]


def test_compute_denied_sends_no_mpc_messages():
    rt, owners, ident, committee, _, rng = make_env()
    circ = parse_circuit("in x\nout x")
    ptr, _ = protocol_share(owners[0], "owner0", ident.addr, 5, "v",
                            Predicate.key_list([owners[0].sign_pk]), n=3, t=1,
                            rt=rt, rng=rng, committee=committee)
    eve = rt.add_client("eve")
    before = rt.bus.messages
    trace = fresh_trace(rt, committee, eve)
    out = protocol_compute(eve, "eve", ident.addr, [ptr], circ, rt, trace, rng)
    assert out is None
    assert trace.outcome == "denied"
    assert rt.bus.messages == before


def test_cost_model_matches_simulator_on_random_circuits():
    # The static message model must agree with the simulator's measured
    # per-gate traffic for arbitrary circuits at a fixed committee size.
    import random as stdrandom
    from tests.test_circuits import random_circuit

    gen = stdrandom.Random(91)
    for case in range(10):
        circ = random_circuit(gen, max_gates=12)
        rt, owners, ident, committee, _, rng = make_env(seed=900 + case)
        q = Predicate.key_list([owners[0].sign_pk])
        ptrs = []
        values = []
        for i in range(circ.n_inputs):
            values.append(gen.randrange(101))
            ptr, _ = protocol_share(owners[0], "owner0", ident.addr,
                                    values[-1], f"c{case}i{i}", q,
                                    n=3, t=1, rt=rt, rng=rng, committee=committee)
            ptrs.append(ptr)
        trace = fresh_trace(rt, committee, owners[0], seed=case)
        out = protocol_compute(owners[0], "owner0", ident.addr, ptrs, circ, rt,
                               trace, rng)
        assert out == eval_plain(circ, values, rt.field), f"case {case}"
        assert trace.messages_eval == cost_model(circ).messages(3), f"case {case}"


@pytest.mark.parametrize("mode", ["shamir", "spdz"])
def test_compute_message_count_matches_cost_model(mode):
    rt, owners, ident, committee, mac_key, rng = make_env(mode)
    circ = parse_circuit("in x\nin y\ns = add x y\nm = mul s y\nm2 = mul m x\nout m2")
    q = Predicate.key_list([owners[0].sign_pk])
    ptrs = []
    for i, v in enumerate((3, 4)):
        ptr, _ = protocol_share(owners[0], "owner0", ident.addr, v, f"i{i}", q,
                                n=3, t=1, rt=rt, rng=rng, mode=mode,
                                mac_key=mac_key, committee=committee)
        ptrs.append(ptr)
    trace = fresh_trace(rt, committee, owners[0])
    out = protocol_compute(owners[0], "owner0", ident.addr, ptrs, circ, rt,
                           trace, rng, mac_key=mac_key)
    assert out == eval_plain(circ, [3, 4], rt.field)
    assert trace.messages_eval == cost_model(circ).messages(3)
    assert trace.per_node[committee[0].index].muls == 2
    assert trace.per_node[committee[0].index].adds == 1


@pytest.mark.parametrize("mode", ["shamir", "spdz"])
def test_compute_with_reduction_layered(mode):
    rt, owners, ident, committee, mac_key, rng = make_env(mode, nodes=12,
                                                          committee=9)
    circ = parse_circuit(
        "in a\nin b\nin c\ns = add a b\nm1 = mul s c\nm2 = mul m1 m1\nout m2")
    q = Predicate.key_list([owners[0].sign_pk])
    ptrs = []
    for i, v in enumerate((2, 3, 4)):
        ptr, _ = protocol_share(owners[0], "owner0", ident.addr, v, f"r{i}", q,
                                n=9, t=1, rt=rt, rng=rng, mode=mode,
                                mac_key=mac_key, committee=committee)
        ptrs.append(ptr)
    trace = fresh_trace(rt, committee, owners[0])
    out = protocol_compute(owners[0], "owner0", ident.addr, ptrs, circ, rt,
                           trace, rng, mac_key=mac_key, reduction=3)
    assert out == eval_plain(circ, [2, 3, 4], rt.field)
    assert any("reduce" in e for e in trace.events)


def test_spdz_wrong_share_caught_by_mac_check():
    rt, owners, ident, committee, mac_key, rng = make_env("spdz")
    committee[1].behavior = "wrong-share"
    circ = parse_circuit(MUL2)
    q = Predicate.key_list([owners[0].sign_pk])
    ptrs = []
    for i, v in enumerate((6, 7)):
        ptr, _ = protocol_share(owners[0], "owner0", ident.addr, v, f"m{i}", q,
                                n=3, t=1, rt=rt, rng=rng, mode="spdz",
                                mac_key=mac_key, committee=committee)
        ptrs.append(ptr)
    trace = fresh_trace(rt, committee, owners[0])
    with pytest.raises(CheatDetected):
        protocol_compute(owners[0], "owner0", ident.addr, ptrs, circ, rt,
                         trace, rng, mac_key=mac_key)


def test_detect_bad_shares_consensus(f101, rng):
    from mpcnet import shamir as sh
    shares = sh.share(42, 1, 5, f101, rng)
    points = [(s.index, s.value) for s in shares]
    value, outliers = detect_bad_shares(points, 1, f101)
    assert value == 42 and outliers == ()
    points[2] = (points[2][0], (points[2][1] + 1) % 101)
    value, outliers = detect_bad_shares(points, 1, f101)
    assert value == 42 and outliers == (2,)
