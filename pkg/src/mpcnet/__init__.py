"""Desk-scale simulator of a privacy-enforcing computation network.

Secret-sharing MPC (Shamir and SPDZ engines) with publicly auditable
correctness via Pedersen commitments on a simulated signed ledger,
predicate-gated off-chain storage over a Kademlia-style DHT, committee
machinery (network reduction, hierarchical multiplication, adaptable
circuits) and incentive accounting -- all inside a deterministic in-process
network simulator.
"""

from .field import DEFAULT_FIELD, M61, Field

__version__ = "0.1.0"

__all__ = ["Field", "DEFAULT_FIELD", "M61", "__version__"]
