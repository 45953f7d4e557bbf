"""Scenario files: the line-oriented key=value format driving the simulator.

Example:

    # mean of three salaries over a 3-node committee
    nodes=8
    mode=shamir
    circuit=mean3.circ
    inputs=52000,61000,46000
    seed=42
    committee=3
    threshold=1
    deposit=100
    balance=100000
    fault.1=wrong-share          # committee position 1 misbehaves
    fee.mul=10
    scaling=9,27,81              # emit hierarchical-vs-baseline metric rows

Relative circuit paths resolve against the scenario file's directory. The
seed is mandatory: runs must be replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .field import M61
from .incentives import FeeSchedule
from .network import BEHAVIORS as FAULT_BEHAVIORS

MODES = ("shamir", "spdz")


class ScenarioError(ValueError):
    """Configuration problem; the message names the offending key or path."""


@dataclass
class ScenarioConfig:
    nodes: int
    mode: str
    circuit_path: Path
    circuit_text: str
    inputs: list
    seed: int
    prime: int = M61
    threshold: int = 1
    committee: int = 3
    reduction: int | None = None
    faults: dict = dc_field(default_factory=dict)   # committee position -> behavior
    deposit: int = 100
    balance: int = 100000
    fees: FeeSchedule = dc_field(default_factory=FeeSchedule)
    scaling: list = dc_field(default_factory=list)
    scaling_c: int = 3
    source: Path | None = None


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"{key} must be an integer, got {raw!r}") from None


def parse_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    pairs = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()

    for required in ("nodes", "mode", "circuit", "inputs", "seed"):
        if required not in pairs:
            raise ScenarioError(f"{path}: missing required key {required!r}")

    mode = pairs["mode"]
    if mode not in MODES:
        raise ScenarioError(f"{path}: mode must be one of {MODES}, got {mode!r}")

    circuit_path = Path(pairs["circuit"])
    if not circuit_path.is_absolute():
        circuit_path = path.parent / circuit_path
    if not circuit_path.exists():
        raise ScenarioError(f"{path}: circuit file not found: {circuit_path}")

    faults = {}
    fee_kwargs = {}
    for key, value in pairs.items():
        if key.startswith("fault."):
            pos = _parse_int(key.split(".", 1)[1], key)
            if value not in FAULT_BEHAVIORS:
                raise ScenarioError(f"{path}: unknown behavior {value!r} for {key}")
            faults[pos] = value
        elif key.startswith("fee."):
            name = {"round": "w_round", "add": "w_add", "mul": "w_mul",
                    "min_balance": "min_balance", "storage": "storage_price",
                    "grace": "grace_period"}.get(key.split(".", 1)[1])
            if name is None:
                raise ScenarioError(f"{path}: unknown fee key {key!r}")
            fee_kwargs[name] = _parse_int(value, key)

    cfg = ScenarioConfig(
        nodes=_parse_int(pairs["nodes"], "nodes"),
        mode=mode,
        circuit_path=circuit_path,
        circuit_text=circuit_path.read_text(),
        inputs=[_parse_int(v, "inputs") for v in pairs["inputs"].split(",") if v],
        seed=_parse_int(pairs["seed"], "seed"),
        prime=_parse_int(pairs.get("prime", str(M61)), "prime"),
        threshold=_parse_int(pairs.get("threshold", "1"), "threshold"),
        committee=_parse_int(pairs.get("committee", "3"), "committee"),
        reduction=_parse_int(pairs["reduction"], "reduction") if "reduction" in pairs else None,
        faults=faults,
        deposit=_parse_int(pairs.get("deposit", "100"), "deposit"),
        balance=_parse_int(pairs.get("balance", "100000"), "balance"),
        fees=FeeSchedule(**fee_kwargs),
        scaling=[_parse_int(v, "scaling") for v in pairs.get("scaling", "").split(",") if v],
        scaling_c=_parse_int(pairs.get("scaling_c", "3"), "scaling_c"),
        source=path,
    )
    if cfg.committee > cfg.nodes:
        raise ScenarioError(f"{path}: committee={cfg.committee} exceeds nodes={cfg.nodes}")
    for pos in cfg.faults:
        if not 0 <= pos < cfg.committee:
            raise ScenarioError(f"{path}: fault position {pos} outside committee")
    return cfg
