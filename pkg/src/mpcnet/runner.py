"""End-to-end scenario execution: deposits, identity, share, compute, settle.

run_scenario is the single entry point behind both the CLI and the
integration tests. It is fully deterministic for a given scenario file:
every randomness consumer draws from a label-derived child of the scenario
seed, so traces and ledger dumps compare byte-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from . import shamir
from .circuits import cost_model, eval_plain, parse_circuit
from .errors import CheatDetected
from .field import Field
from .hierarchy import CommitteeTree, hierarchical_mul
from .identity import Predicate, gen_shared_identity
from .incentives import SettlementReport, post_deposit, settle_computation
from .keys import sha256
from .ledger import LedgerRejected
from .net import LocalChannel
from .network import (
    BROKEN_COMMITMENT,
    HONEST,
    WRONG_SHARE,
    AbortedComputation,
    Runtime,
    child_rng,
    inject_fault,
    protocol_compute,
    protocol_share,
)
from .scenario import ScenarioConfig
from .audit import audit_trail
from .spdz import gen_mac_key
from .trace import ComputationTrace

METRICS_HEADER = "n,baseline_msgs,hierarchical_msgs,rounds"


@dataclass
class RunResult:
    config: ScenarioConfig
    runtime: Runtime
    trace: ComputationTrace
    settlement: SettlementReport
    outputs: list
    expected: list
    metrics_rows: list = dc_field(default_factory=list)
    exit_code: int = 0

    def metrics_csv(self) -> str:
        lines = [METRICS_HEADER]
        lines += [",".join(str(v) for v in row) for row in self.metrics_rows]
        return "\n".join(lines) + "\n"


def measure_mul_messages(n: int, c: int, field: Field, seed: int) -> tuple:
    """Measured message counts for one secure multiplication at size n:
    (flat n(n-1) baseline, committee-tree hierarchical)."""
    rng = child_rng(seed, f"scaling:{n}")
    x = shamir.share(3, 1, n, field, rng)
    y = shamir.share(4, 1, n, field, rng)
    base_net = LocalChannel()
    shamir.mul_with_reduction(x, y, field, base_net, rng)
    tree = CommitteeTree.build(n, c)
    hier_net = LocalChannel()
    hierarchical_mul(x, y, tree, field, hier_net, rng)
    return base_net.messages, hier_net.messages


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    field = Field(cfg.prime)
    circuit = parse_circuit(cfg.circuit_text)
    if len(cfg.inputs) != circuit.n_inputs:
        raise ValueError(f"scenario supplies {len(cfg.inputs)} inputs but the "
                         f"circuit takes {circuit.n_inputs}")
    rt = Runtime(field, cfg.seed, cfg.nodes, genesis_balance=cfg.balance)

    # Deposits make nodes eligible for committee work.
    for node in rt.registry:
        if cfg.deposit > 0:
            post_deposit(node.keypair, cfg.deposit, rt.ledger)

    # The data owners form a shared identity; its ACL is what every later
    # permission check resolves against.
    owners = [rt.add_client(f"owner{i}") for i in range(circuit.n_inputs)]
    ident, _ = gen_shared_identity(
        [lambda kp=kp: kp for kp in owners],
        [Predicate.owner() for _ in owners],
        rt.ledger,
    )
    requester = owners[0]
    q_compute = Predicate.key_list([kp.sign_pk for kp in owners])

    committee = rt.sample_committee(cfg.committee, child_rng(cfg.seed, "committee"))
    for pos, behavior in sorted(cfg.faults.items()):
        inject_fault(committee[pos], behavior)

    mac_key = None
    if cfg.mode == "spdz":
        mac_key = gen_mac_key(cfg.committee, field, child_rng(cfg.seed, "mac-key"))

    computation_id = sha256(
        b"computation" + cfg.seed.to_bytes(8, "big") + cfg.circuit_text.encode()
        + ",".join(str(v) for v in cfg.inputs).encode())
    trace = ComputationTrace(
        computation_id=computation_id,
        mode=cfg.mode,
        seed=cfg.seed,
        committee=[n.index for n in committee],
        committee_pks=[n.keypair.sign_pk for n in committee],
        requester_pk=requester.sign_pk,
    )
    trace.event("committee", members=[n.index for n in committee])

    share_rng = child_rng(cfg.seed, "share")
    pointers = []
    for i, value in enumerate(cfg.inputs):
        pointer, _ = protocol_share(
            owners[i], f"owner{i}", ident.addr, value, f"input{i}", q_compute,
            n=cfg.committee, t=cfg.threshold, rt=rt, rng=share_rng,
            mode=cfg.mode, mac_key=mac_key, committee=committee)
        if pointer is None:
            raise LedgerRejected("owner was denied its own store")
        pointers.append(pointer)
        trace.event("share", ref=f"input{i}", pointer=pointer)

    outputs = []
    if rt.ledger.account(requester.sign_pk).balance < cfg.fees.min_balance:
        trace.event("rejected", reason="balance-below-threshold")
        trace.finalize("rejected")
    else:
        outputs = _run_compute(cfg, rt, trace, requester, ident.addr, pointers,
                               circuit, mac_key, committee)

    settlement = settle_computation(trace, cfg.fees, rt.ledger, rt.authority)
    trace.event("settled", rejected="yes" if settlement.rejected else "no",
                charge=settlement.requester_charge)

    metrics_rows = []
    rounds = cost_model(circuit).rounds
    sizes = cfg.scaling if cfg.scaling else [cfg.committee]
    for n in sizes:
        base, hier = measure_mul_messages(n, min(cfg.scaling_c, n), field, cfg.seed)
        metrics_rows.append((n, base, hier, rounds))

    expected = eval_plain(circuit, cfg.inputs, field)
    return RunResult(
        config=cfg, runtime=rt, trace=trace, settlement=settlement,
        outputs=outputs, expected=expected, metrics_rows=metrics_rows,
        exit_code=2 if trace.detected_faults else 0,
    )


def _run_compute(cfg, rt, trace, requester, addr, pointers, circuit, mac_key,
                 committee):
    """One protocol_compute attempt plus fault bookkeeping and recovery."""
    compute_rng = child_rng(cfg.seed, "compute")
    outputs = []
    try:
        outputs = protocol_compute(
            requester, "owner0", addr, pointers, circuit, rt, trace,
            compute_rng, mac_key=mac_key, reduction=cfg.reduction) or []
    except CheatDetected:
        # The MAC check (or consistency check) condemns the batch without
        # naming anyone; the settlement needs named culprits, which the
        # scenario's injected behaviors provide.
        channel = "mac_check" if cfg.mode == "spdz" else "share-consistency"
        for node in committee:
            if node.behavior == WRONG_SHARE:
                trace.fault(node.index, WRONG_SHARE, channel)
        trace.finalize("cheat-detected")
        return []
    except AbortedComputation as aborted:
        replacements = [n for n in rt.eligible_nodes()
                        if n.index not in {c.index for c in committee}
                        and n.behavior == HONEST]
        survivors = [n for n in committee if n.index not in aborted.nodes]
        needed = len(committee) - len(survivors)
        if len(replacements) < needed:
            trace.event("restart", possible="no")
            trace.finalize("aborted")
            return []
        new_committee = survivors + replacements[:needed]
        trace.event("restart", committee=[n.index for n in new_committee])
        for node in new_committee:
            if node.index not in trace.committee:
                trace.committee.append(node.index)
                trace.committee_pks.append(node.keypair.sign_pk)
        share_rng = child_rng(cfg.seed, "share-retry")
        owners = [rt.clients[f"owner{i}"] for i in range(circuit.n_inputs)]
        q_compute = Predicate.key_list([kp.sign_pk for kp in owners])
        pointers = []
        for i, value in enumerate(cfg.inputs):
            pointer, _ = protocol_share(
                owners[i], f"owner{i}", addr, value, f"input{i}-retry", q_compute,
                n=cfg.committee, t=cfg.threshold, rt=rt, rng=share_rng,
                mode=cfg.mode, mac_key=mac_key, committee=new_committee)
            pointers.append(pointer)
        outputs = protocol_compute(
            requester, "owner0", addr, pointers, circuit, rt, trace,
            child_rng(cfg.seed, "compute-retry"), mac_key=mac_key,
            reduction=cfg.reduction) or []
        trace.finalize("cheat-detected" if trace.detected_faults else "ok", outputs)
        return outputs

    # Post-hoc public audit of the commitment trail (SPDZ runs post one).
    if cfg.mode == "spdz" and cfg.reduction is None and trace.outcome == "unfinished":
        report = audit_trail(rt.ledger, trace.computation_id)
        if not report.ok:
            for pos in report.guilty:
                node = committee[pos]
                behavior = node.behavior if node.behavior != HONEST else BROKEN_COMMITMENT
                trace.fault(node.index, behavior, "audit_trail")
            trace.finalize("cheat-detected", outputs)
            return outputs

    if trace.outcome == "unfinished":
        trace.finalize("cheat-detected" if trace.detected_faults else "ok", outputs)
    return outputs
