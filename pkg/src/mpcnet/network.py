"""Deterministic multi-node simulator for the share/compute link protocols.

Everything a scenario run needs lives in a Runtime: the field, the ledger,
the DHT, the encrypted broadcast bus, and the node registry. On top of it,
protocol_share distributes verifiable shares to a sampled committee and
registers the computation reference behind a predicate; protocol_compute
loads the reference, compiles the circuit into the layered secure protocol
and evaluates it over shares -- the plaintext never exists at any single
node. Node misbehavior is injected per scenario and surfaces through the
protocol's own detection channels (MAC check, commitment audit, share
consistency, timeout); the trace records what was detected and how.

Identifiers: registry nodes appear on the bus under their integer index,
client parties (data owners, requesters) under string labels. Inside an
engine, parties are committee-local points mapped back to bus identities by
a CommitteeChannel.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field as dc_field

from . import audit as auditmod
from . import pedersen, shamir, spdz
from .circuits import Circuit, LayeredCircuit, layerize, lower_select, mul_heights
from .dht import DhtNetwork, NodeId, protocol_load, protocol_store
from .errors import CheatDetected
from .field import Field
from .hierarchy import reduce_parties, reduce_parties_spdz, select_committee
from .identity import Predicate, check_permission, parse_predicate
from .keys import KeyPair, sha256
from .ledger import Ledger, make_tx
from .net import EncryptedBus
from .shamir import ShamirShare
from .spdz import MacCheckQueue, MacKey
from .trace import ComputationTrace

HONEST = "honest"
ABORT_AFTER_OUTPUT = "abort-after-output"
WRONG_SHARE = "wrong-share"
BROKEN_COMMITMENT = "broken-commitment"
BEHAVIORS = (HONEST, ABORT_AFTER_OUTPUT, WRONG_SHARE, BROKEN_COMMITMENT)

IDLE_TIMEOUT = 3  # idle simulator steps before a silent party is timed out


class AbortedComputation(Exception):
    """Raised when an abort leaves the result unrecoverable (SPDZ mode)."""

    def __init__(self, nodes):
        self.nodes = tuple(nodes)
        super().__init__(f"aborted by nodes {self.nodes}")


@dataclass
class SimNode:
    index: int
    node_id: NodeId
    keypair: KeyPair
    behavior: str = HONEST
    shares: dict = dc_field(default_factory=dict)   # sharing_id -> material


def inject_fault(node: SimNode, behavior: str):
    """Fix a node's behavior for the rest of the scenario."""
    if behavior not in BEHAVIORS:
        raise ValueError(f"unknown behavior {behavior!r}")
    node.behavior = behavior


def child_rng(seed: int, label: str) -> random.Random:
    """Independent, label-addressed randomness stream for one subsystem."""
    digest = sha256(seed.to_bytes(8, "big") + label.encode())
    return random.Random(int.from_bytes(digest[:8], "big"))


class Runtime:
    """Shared substrate for one scenario: nodes, ledger, DHT, bus, params."""

    def __init__(self, field: Field, seed: int, n_nodes: int,
                 genesis_balance: int = 1000, lam: float = 0.5):
        self.field = field
        self.seed = seed
        self.params = pedersen.setup(field)
        self.bus = EncryptedBus()
        self.dht = DhtNetwork(lam=lam)
        self.registry: list = []
        self.clients: dict = {}

        rng = child_rng(seed, "nodes")
        balances = {}
        for i in range(n_nodes):
            kp = KeyPair.generate(rng)
            node_id = NodeId(value=rng.randbytes(32))
            node = SimNode(index=i, node_id=node_id, keypair=kp)
            self.registry.append(node)
            self.bus.register(i, kp.enc_sk, kp.enc_pk)
            self.dht.add_node(node_id, kp)
            balances[kp.sign_pk] = genesis_balance
        self.dht.bootstrap()

        self.authority = KeyPair.generate(child_rng(seed, "authority"))
        balances[self.authority.sign_pk] = 0
        self._genesis_balance = genesis_balance
        self.ledger = Ledger(genesis_balances=balances)

    def add_client(self, label: str, balance: int | None = None) -> KeyPair:
        kp = KeyPair.generate(child_rng(self.seed, f"client:{label}"))
        self.clients[label] = kp
        self.bus.register(label, kp.enc_sk, kp.enc_pk)
        amount = self._genesis_balance if balance is None else balance
        self.ledger.account(kp.sign_pk).balance += amount
        return kp

    def eligible_nodes(self) -> list:
        return [n for n in self.registry
                if self.ledger.account(n.keypair.sign_pk).deposit > 0]

    def sample_committee(self, k: int, rng: random.Random) -> list:
        by_id = {n.node_id.value: n for n in self.registry}
        picked = select_committee([n.node_id for n in self.eligible_nodes()], k, rng)
        return [by_id[nid.value] for nid in picked]


class CommitteeChannel:
    """Maps engine-local party points onto bus identities."""

    def __init__(self, bus, mapping: dict):
        self.bus = bus
        self.mapping = dict(mapping)
        self.reverse = {v: k for k, v in self.mapping.items()}

    def send(self, src, dst, payload: bytes):
        self.bus.send(self.mapping[src], self.mapping[dst], payload)

    def recv_all(self, dst) -> list:
        return [(self.reverse[s], p) for s, p in self.bus.recv_all(self.mapping[dst])]


# -- sharing registration (the MPC namespace's set) ---------------------------

def sharing_key(addr: bytes, x_ref: str) -> bytes:
    return sha256(addr + x_ref.encode())


def vss_key(sharing_id: bytes) -> bytes:
    return sha256(sharing_id + b"vss")


def protocol_share(owner: KeyPair, owner_label: str, addr: bytes, x: int,
                   x_ref: str, q_compute: Predicate, n: int, t: int,
                   rt: Runtime, rng: random.Random, mode: str = "shamir",
                   mac_key: MacKey | None = None, committee: list | None = None,
                   q_declassify: Predicate | None = None,
                   q_store: Predicate | None = None):
    """Verifiably share x with a sampled committee and register the pointer.

    Deals the sharing (Shamir or SPDZ per `mode`) together with per-party
    Pedersen commitments (the VSS layer), sends each share with its blinding
    to its committee member over the secure channel, posts commitments and
    the declassify predicate to the ledger, then registers the computation
    reference in the DHT gated by q_compute. Returns (pointer, committee);
    a denied store permission returns (None, None) before anything is
    shared or written.
    """
    q_store = q_store if q_store is not None else Predicate.policy()
    if not check_permission(owner.sign_pk, addr, q_store, rt.ledger):
        return None, None
    if committee is None:
        committee = rt.sample_committee(n, rng)
    if len(committee) != n:
        raise ValueError("committee size does not match n")
    field = rt.field
    sharing_id = sharing_key(addr, x_ref)

    if mode == "shamir":
        value_shares = shamir.share(x, t, n, field, rng)
        blinds = [field.rand(rng) for _ in range(n)]
        commitments = [pedersen.commit(s.value, r, rt.params)
                       for s, r in zip(value_shares, blinds)]
        payloads = [field.encode(s.value) + field.encode(r)
                    for s, r in zip(value_shares, blinds)]
        material = [{"mode": mode, "t": t, "share": s, "blind": r}
                    for s, r in zip(value_shares, blinds)]
    elif mode == "spdz":
        if mac_key is None or mac_key.n != n:
            raise ValueError("spdz mode needs a MAC key split for n parties")
        value_shares = spdz.deal_authenticated(x, n, mac_key, field, rng)
        blind_shares = spdz.deal_authenticated(field.rand(rng), n, mac_key, field, rng)
        commitments = [pedersen.commit(v.value_share, r.value_share, rt.params)
                       for v, r in zip(value_shares, blind_shares)]
        payloads = [field.encode(v.value_share) + field.encode(v.mac_share)
                    + field.encode(r.value_share) + field.encode(r.mac_share)
                    for v, r in zip(value_shares, blind_shares)]
        material = [{"mode": mode, "share": v, "blind": r}
                    for v, r in zip(value_shares, blind_shares)]
    else:
        raise ValueError(f"unknown engine mode {mode!r}")

    # A broken-commitment node publishes a commitment inconsistent with the
    # share it actually holds.
    for pos, node in enumerate(committee):
        if node.behavior == BROKEN_COMMITMENT:
            commitments[pos] = commitments[pos] * rt.params.g % rt.params.q

    for pos, node in enumerate(committee):
        rt.bus.send(owner_label, node.index, payloads[pos])
        rt.bus.recv_all(node.index)
        node.shares[sharing_id] = material[pos]

    vss_record = {"mode": mode, "n": n, "t": t,
                  "commitments": [hex(c) for c in commitments]}
    rt.ledger.submit_tx(make_tx(
        owner, "commitment-post",
        {"key": vss_key(sharing_id).hex(),
         "value": json.dumps(vss_record, sort_keys=True).encode().hex()},
        nonce=rt.ledger.next_nonce(owner.sign_pk)))

    q_declassify = q_declassify if q_declassify is not None \
        else Predicate.key_list([owner.sign_pk])
    rt.ledger.submit_tx(make_tx(
        owner, "kv-put",
        {"key": sharing_id.hex(),
         "value": q_declassify.to_text().encode().hex()},
        nonce=rt.ledger.next_nonce(owner.sign_pk)))

    blob = json.dumps({
        "ref": x_ref,
        "sharing": sharing_id.hex(),
        "mode": mode,
        "n": n,
        "t": t,
        "committee": [node.index for node in committee],
    }, sort_keys=True).encode()
    pointer = protocol_store(owner, addr, blob, q_compute, rt.ledger, rt.dht,
                             encrypt=False, q_store=q_store)
    if pointer is None:
        return None, None
    return pointer, committee


def load_reference(requester: KeyPair, addr: bytes, pointer: bytes, rt: Runtime):
    blob = protocol_load(requester, addr, pointer, rt.ledger, rt.dht)
    return None if blob is None else json.loads(blob.decode())


def mpc_declassify(requester: KeyPair, requester_label: str, addr: bytes,
                   pointer: bytes, rt: Runtime):
    """Collect the raw shares back and reconstruct, verifying each opening
    against the posted VSS commitments.

    Returns (value, faults); value is None when the declassify predicate
    denies the requester or too few verified shares remain. faults lists
    (node index, channel) pairs for shares that failed their commitment.
    """
    ref = load_reference(requester, addr, pointer, rt)
    if ref is None:
        return None, []
    sharing_id = bytes.fromhex(ref["sharing"])
    stored = rt.ledger.get(sharing_id)
    if stored is None:
        return None, []
    if not check_permission(requester.sign_pk, addr,
                            parse_predicate(stored.decode()), rt.ledger):
        return None, []

    record = json.loads(rt.ledger.get(vss_key(sharing_id)).decode())
    commitments = [int(c, 16) for c in record["commitments"]]
    field = rt.field
    committee = [rt.registry[i] for i in ref["committee"]]
    faults = []
    contributions = []
    for pos, node in enumerate(committee):
        mat = node.shares[sharing_id]
        if node.behavior == ABORT_AFTER_OUTPUT:
            continue
        if ref["mode"] == "shamir":
            value, blind = mat["share"].value, mat["blind"]
        else:
            value, blind = mat["share"].value_share, mat["blind"].value_share
        if node.behavior == WRONG_SHARE:
            value = field.add(value, 1)
        rt.bus.send(node.index, requester_label,
                    field.encode(value) + field.encode(blind))
        contributions.append((pos, value, blind))
    rt.bus.recv_all(requester_label)

    good = []
    for pos, value, blind in contributions:
        if pedersen.verify_open(commitments[pos], value, blind, rt.params):
            good.append((pos, value))
        else:
            faults.append((committee[pos].index, "audit_trail"))

    if ref["mode"] == "shamir":
        t = ref["t"]
        if len(good) <= t:
            return None, faults
        points = [(pos + 1, value) for pos, value in good]
        return shamir.interpolate_at_zero(points[:t + 1], field), faults
    if len(good) != ref["n"]:
        return None, faults
    total = 0
    for _, value in good:
        total = field.add(total, value)
    return total, faults


# -- secure evaluation ---------------------------------------------------------

def _layer_plan(circ: Circuit, n: int, reduction: int | None,
                threshold: int) -> LayeredCircuit:
    """Layered plan; a None reduction keeps the committee fixed at n."""
    if reduction is not None:
        return layerize(circ, n, reduction, threshold=threshold)
    lowered = lower_select(circ)
    heights = mul_heights(lowered)
    depth = max((heights[i] for i, g in enumerate(lowered.gates)
                 if g.kind != "output"), default=0)
    layers = []
    for level in range(depth + 1):
        adds = tuple(i for i, g in enumerate(lowered.gates)
                     if g.kind in ("add", "smul") and heights[i] == level)
        if adds or level == 0:
            layers.append(("add", adds))
        muls = tuple(i for i, g in enumerate(lowered.gates)
                     if g.kind == "mul" and heights[i] == level + 1)
        if muls:
            layers.append(("mul", muls))
    n_mul = sum(1 for kind, _ in layers if kind == "mul")
    return LayeredCircuit(circuit=lowered, layers=tuple(layers),
                          schedule=(n,) * (n_mul + 1), reduction=0)


def detect_bad_shares(points: list, t: int, field: Field) -> tuple:
    """Consensus-polynomial check over claimed degree-t points.

    Returns (value_at_zero, positions of outliers) when a unique consensus
    exists. A degree-t polynomial other than the true one can agree with at
    most t honest points plus all e corrupted ones, so identification is
    unambiguous only when the winner's agreement m satisfies 2m > n + t;
    anything less is detectable corruption without an identifiable culprit,
    reported as CheatDetected.
    """
    n = len(points)
    best = None
    for subset in itertools.combinations(range(n), t + 1):
        base = [points[j] for j in subset]
        agrees = [i for i in range(n)
                  if shamir.lagrange_eval(base, points[i][0], field) == points[i][1]]
        if best is None or len(agrees) > len(best):
            best = agrees
        if len(agrees) == n:
            break
    if best is None or 2 * len(best) <= n + t:
        raise CheatDetected("inconsistent shares without an identifiable culprit")
    value = shamir.interpolate_at_zero([points[i] for i in best[:t + 1]], field)
    outliers = tuple(i for i in range(n) if i not in best)
    return value, outliers


def protocol_compute(requester: KeyPair, requester_label: str, addr: bytes,
                     pointers: list, circ: Circuit, rt: Runtime,
                     trace: ComputationTrace, rng: random.Random,
                     mac_key: MacKey | None = None,
                     reduction: int | None = None, with_trail: bool = True):
    """Evaluate `circ` over previously shared inputs named by `pointers`.

    Returns the opened output list, or None when a reference is denied (no
    MPC message is sent in that case). CheatDetected and AbortedComputation
    propagate to the caller after the trace counters are settled.
    """
    refs = []
    for pointer in pointers:
        ref = load_reference(requester, addr, pointer, rt)
        if ref is None:
            trace.event("denied", pointer=pointer)
            trace.finalize("denied")
            return None
        refs.append(ref)

    first = refs[0]
    mode, n, t = first["mode"], first["n"], first["t"]
    committee_idx = first["committee"]
    for ref in refs[1:]:
        if (ref["mode"], ref["n"], ref["committee"]) != (mode, n, committee_idx):
            raise ValueError("inputs were shared under incompatible parameters")
    if len(refs) != circ.n_inputs:
        raise ValueError(f"arity mismatch: circuit takes {circ.n_inputs} inputs, "
                         f"got {len(refs)}")
    committee = [rt.registry[i] for i in committee_idx]
    trace.event("compute", gates=len(circ.gates), mode=mode, n=n)

    plan = _layer_plan(circ, n, reduction, t if mode == "shamir" else 1)
    try:
        if mode == "shamir":
            state = _eval_shamir(refs, plan, committee, rt, trace, rng, t)
        else:
            state = _eval_spdz(refs, plan, committee, rt, trace, rng, mac_key,
                               with_trail and reduction is None)
        result = _open_outputs(state, mode, committee, plan, requester_label,
                               rt, trace)
    finally:
        trace.messages_total = rt.bus.messages
    return result


def _eval_shamir(refs, plan, committee, rt, trace, rng, t):
    field = rt.field
    n = len(committee)
    chan = CommitteeChannel(rt.bus, {pos + 1: node.index
                                     for pos, node in enumerate(committee)})
    quorum = max(3, t + 1)
    messages_before = rt.bus.messages

    wires = {}
    ref_iter = iter(refs)
    for idx, g in enumerate(plan.circuit.gates):
        if g.kind != "input":
            continue
        ref = next(ref_iter)
        sharing_id = bytes.fromhex(ref["sharing"])
        wires[idx] = [ShamirShare(pos + 1, node.shares[sharing_id]["share"].value, t)
                      for pos, node in enumerate(committee)]

    stage = 0
    for kind, gate_indices in plan.layers:
        members = committee[:plan.schedule[min(stage, len(plan.schedule) - 1)]]
        for node in members:
            trace.tally(node.index).rounds += 1
        for gi in gate_indices:
            g = plan.circuit.gates[gi]
            if g.kind == "add":
                wires[gi] = shamir.linear_combine(
                    [wires[g.args[0]], wires[g.args[1]]], [1, 1], 0, field)
                kind_tally = "adds"
            elif g.kind == "smul":
                wires[gi] = shamir.linear_combine(
                    [wires[g.args[0]]], [g.scalar % field.p], 0, field)
                kind_tally = "adds"
            else:
                wires[gi] = shamir.mul_with_reduction(
                    wires[g.args[0]], wires[g.args[1]], field, chan, rng)
                kind_tally = "muls"
            for node in members:
                setattr(trace.tally(node.index), kind_tally,
                        getattr(trace.tally(node.index), kind_tally) + 1)
        trace.per_round_messages.append(rt.bus.new_round())
        if kind == "mul" and plan.reduction and stage + 1 < len(plan.schedule):
            stage += 1
            live = sorted(wires)
            reduced = reduce_parties([wires[i] for i in live], plan.reduction,
                                     field, chan, rng, quorum=quorum)
            for i, shares in zip(live, reduced):
                wires[i] = shares
            trace.event("reduce", parties=len(reduced[0]))
    trace.messages_eval = rt.bus.messages - messages_before
    return {"wires": wires, "t": t}


def _eval_spdz(refs, plan, committee, rt, trace, rng, mac_key, with_trail):
    if mac_key is None:
        raise ValueError("spdz evaluation needs the MAC key split")
    field = rt.field
    chan = CommitteeChannel(rt.bus, {pos: node.index
                                     for pos, node in enumerate(committee)})
    queue = MacCheckQueue()
    messages_before = rt.bus.messages
    writer = auditmod.TrailWriter(rt.ledger, trace.computation_id, rt.authority,
                                  field, mac_key.n) if with_trail else None

    wires = {}
    ref_iter = iter(refs)
    for idx, g in enumerate(plan.circuit.gates):
        if g.kind != "input":
            continue
        ref = next(ref_iter)
        sharing_id = bytes.fromhex(ref["sharing"])
        value, blind = [], []
        for node in committee:
            mat = node.shares[sharing_id]
            share, rand = mat["share"], mat["blind"]
            if node.behavior == WRONG_SHARE:
                # The node contributes a share off by one; its MAC share is
                # not adjusted, which is exactly what the MAC check exists
                # to catch.
                share = spdz.AuthShare(field.add(share.value_share, 1),
                                       share.mac_share, share.owner)
            value.append(share)
            blind.append(rand)
        commitments = []
        step = -1
        if writer is not None:
            record = json.loads(rt.ledger.get(vss_key(sharing_id)).decode())
            commitments = [int(c, 16) for c in record["commitments"]]
            step = writer.post_step({"kind": "input",
                                     "commitments": [hex(c) for c in commitments]})
        wires[idx] = auditmod.PVShare(value=value, randomness=blind,
                                      commitments=commitments, step=step)

    key = mac_key
    stage = 0
    for kind, gate_indices in plan.layers:
        members = committee[:plan.schedule[min(stage, len(plan.schedule) - 1)]]
        for node in members:
            trace.tally(node.index).rounds += 1
        for gi in gate_indices:
            g = plan.circuit.gates[gi]
            if g.kind in ("add", "smul"):
                if g.kind == "add":
                    terms = [(1, wires[g.args[0]]), (1, wires[g.args[1]])]
                else:
                    terms = [(g.scalar % field.p, wires[g.args[0]])]
                if writer is not None:
                    wires[gi] = auditmod.pv_linear(terms, 0, key, field, writer)
                else:
                    wires[gi] = auditmod.PVShare(
                        value=spdz.auth_linear(
                            [(c, s.value) for c, s in terms], 0, key, field),
                        randomness=spdz.auth_linear(
                            [(c, s.randomness) for c, s in terms], 0, key, field),
                        commitments=[], step=-1)
                for node in members:
                    trace.tally(node.index).adds += 1
            else:
                if writer is not None:
                    triple = auditmod.pv_triple(key, rt.params, writer, field, rng)
                    wires[gi] = auditmod.pv_beaver(
                        wires[g.args[0]], wires[g.args[1]], triple, key,
                        rt.params, field, chan, queue, writer)
                else:
                    triple = spdz.deal_triples(1, key.n, key, field, rng)[0]
                    x_w, y_w = wires[g.args[0]], wires[g.args[1]]
                    value = spdz.beaver_mul(x_w.value, y_w.value, triple, key,
                                            field, chan, queue)
                    wires[gi] = auditmod.PVShare(
                        value=value,
                        randomness=spdz.auth_linear([(1, x_w.randomness)], 0, key, field),
                        commitments=[], step=-1)
                for node in members:
                    trace.tally(node.index).muls += 1
        trace.per_round_messages.append(rt.bus.new_round())
        if kind == "mul" and plan.reduction and stage + 1 < len(plan.schedule):
            stage += 1
            # Openings queued so far belong to the current key split; check
            # them before the re-share rotates the per-party attribution.
            if queue.entries:
                spdz.mac_check(queue, key, field, chan,
                               child_rng(rt.seed, f"mac-check:{stage}"))
            live = sorted(wires)
            flat = []
            for i in live:
                flat.append(wires[i].value)
                flat.append(wires[i].randomness)
            reduced, key = reduce_parties_spdz(flat, plan.reduction, key, field,
                                               chan, rng, quorum=3)
            for pos, i in enumerate(live):
                wires[i] = auditmod.PVShare(value=reduced[2 * pos],
                                            randomness=reduced[2 * pos + 1],
                                            commitments=[], step=-1)
            trace.event("reduce", parties=key.n)

    # The deferred MAC check happens after the last gate; its commit/open
    # rounds are not part of the per-gate message accounting.
    trace.messages_eval = rt.bus.messages - messages_before
    if queue.entries:
        spdz.mac_check(queue, key, field, chan, child_rng(rt.seed, "mac-check"))
    return {"wires": wires, "writer": writer, "key": key}


def _open_outputs(state, mode, committee, plan, requester_label, rt, trace):
    """Final opening toward the requester, with misbehavior handling.

    Shamir mode tolerates aborts (reconstruct from the remainder) and
    identifies wrong contributions by the consensus-polynomial check. SPDZ
    additive shares are all-or-nothing: a silent party forces a restart.
    """
    field = rt.field
    out_indices = [g.args[0] for g in plan.circuit.gates if g.kind == "output"]
    wires = state["wires"]
    results = []

    if mode == "shamir":
        t = state["t"]
        reported = set()
        for out_idx in out_indices:
            shares = wires[out_idx]
            contributions = []
            silent = []
            for pos, share in enumerate(shares):
                node = committee[share.index - 1]
                if node.behavior == ABORT_AFTER_OUTPUT:
                    silent.append(node)
                    continue
                value = share.value
                if node.behavior == WRONG_SHARE:
                    value = field.add(value, 1)
                rt.bus.send(node.index, requester_label, field.encode(value))
                contributions.append((share.index, value))
            rt.bus.recv_all(requester_label)
            if silent:
                for step in range(IDLE_TIMEOUT):
                    trace.event("idle", step=step + 1)
            for node in silent:
                if node.index not in reported:
                    reported.add(node.index)
                    trace.fault(node.index, ABORT_AFTER_OUTPUT, "timeout")
                    trace.event("recover", action="reconstruct-without", node=node.index)
            value, outliers = detect_bad_shares(contributions, t, field)
            for c_pos in outliers:
                node = committee[contributions[c_pos][0] - 1]
                if node.index not in reported:
                    reported.add(node.index)
                    trace.fault(node.index, WRONG_SHARE, "share-consistency")
                    trace.event("recover", action="exclude-share", node=node.index)
            results.append(value)
        return results

    key = state["key"]
    writer = state["writer"]
    active = committee[:key.n]
    aborters = [node for node in active if node.behavior == ABORT_AFTER_OUTPUT]
    for out_idx in out_indices:
        pv = wires[out_idx]
        total = 0
        for pos in range(key.n):
            node = active[pos]
            if node.behavior == ABORT_AFTER_OUTPUT:
                continue
            rt.bus.send(node.index, requester_label,
                        field.encode(pv.value[pos].value_share))
            total = field.add(total, pv.value[pos].value_share)
        rt.bus.recv_all(requester_label)
        if aborters:
            for step in range(IDLE_TIMEOUT):
                trace.event("idle", step=step + 1)
            for node in aborters:
                trace.fault(node.index, ABORT_AFTER_OUTPUT, "timeout")
            raise AbortedComputation([n.index for n in aborters])
        results.append(total)
        if writer is not None:
            auditmod.pv_output(pv, field, writer)
    if writer is not None:
        writer.close()
    return results
