"""Simulated blockchain: a signed, append-only key/value bulletin board.

The ledger is the network's controller and audit substrate: identities and
ACL predicates, storage predicates, commitment trails, deposits and fee
settlements all land here as signed transactions. Consensus is out of
scope, so a single serialized writer with instant finality stands in for
the chain; what is preserved faithfully is the contract everything else
depends on -- append-only totally-ordered history, signature-checked writes,
balance accounting, and bit-exact replayability.

Keys are 256-bit. Arbitrary strings/byte strings are admitted at the API
and hashed down to the shared keyspace.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

from . import keys as keymod
from .errors import CorruptDump, LedgerRejected
from .keys import sha256

PAYLOAD_TYPES = (
    "kv-put",
    "identity-registration",
    "commitment-post",
    "deposit",
    "fee-settlement",
)

ZERO_HASH = bytes(32)


def normalize_key(k) -> bytes:
    """Map an arbitrary key onto the 256-bit keyspace."""
    if isinstance(k, bytes):
        return k if len(k) == 32 else sha256(k)
    if isinstance(k, str):
        return sha256(k.encode())
    raise TypeError(f"ledger keys are str or bytes, got {type(k).__name__}")


@dataclass(frozen=True)
class Transaction:
    sender: bytes          # signing public key, 32 bytes
    payload_type: str
    payload: dict
    nonce: int
    signature: bytes

    def signing_bytes(self) -> bytes:
        body = json.dumps(self.payload, sort_keys=True, separators=(",", ":"))
        return (self.payload_type.encode() + b"\x00" + body.encode()
                + self.nonce.to_bytes(8, "big"))


def make_tx(keypair, payload_type: str, payload: dict, nonce: int) -> Transaction:
    if payload_type not in PAYLOAD_TYPES:
        raise ValueError(f"unknown payload type {payload_type!r}")
    unsigned = Transaction(keypair.sign_pk, payload_type, payload, nonce, b"")
    return Transaction(keypair.sign_pk, payload_type, payload, nonce,
                       keypair.sign(unsigned.signing_bytes()))


@dataclass(frozen=True)
class LedgerEntry:
    key: bytes
    value: bytes
    height: int
    author: bytes

    def canonical_bytes(self) -> bytes:
        return (self.height.to_bytes(8, "big") + self.key
                + len(self.value).to_bytes(4, "big") + self.value + self.author)


@dataclass
class Account:
    """Spendable balance plus the locked security deposit, in fee units."""

    balance: int = 0
    deposit: int = 0


class Ledger:
    """Append-only bulletin board with balance accounts and full history."""

    def __init__(self, genesis_balances: dict | None = None):
        self.entries: list = []
        self.chain_hashes: list = []
        self.accepted: list = []          # (tx, [entry heights])
        self.rejected: list = []          # (tx, reason)
        self.accounts: dict = {}
        self._nonces: dict = {}
        self._kv: dict = {}               # key -> [(height, value)]
        self._genesis = dict(genesis_balances or {})
        for pk, amount in self._genesis.items():
            self.accounts[pk] = Account(balance=amount)

    # -- state access ------------------------------------------------------

    @property
    def height(self) -> int:
        return len(self.entries)

    def account(self, pk: bytes) -> Account:
        return self.accounts.setdefault(pk, Account())

    def next_nonce(self, pk: bytes) -> int:
        return self._nonces.get(pk, -1) + 1

    def get(self, k) -> bytes | None:
        history = self._kv.get(normalize_key(k))
        return history[-1][1] if history else None

    def get_at(self, k, t: int) -> bytes | None:
        """Value of k as of height t: the newest entry with height <= t."""
        history = self._kv.get(normalize_key(k), [])
        result = None
        for h, v in history:
            if h > t:
                break
            result = v
        return result

    # -- writes ------------------------------------------------------------

    def submit_tx(self, tx: Transaction) -> int:
        """Verify and apply a transaction; returns the height of its entry.

        Rejected transactions raise LedgerRejected and leave no state behind
        (they are kept on the rejection log only).
        """
        try:
            if not keymod.verify(tx.sender, tx.signature, tx.signing_bytes()):
                raise LedgerRejected("bad signature")
            if tx.nonce <= self._nonces.get(tx.sender, -1):
                raise LedgerRejected(f"stale nonce {tx.nonce}")
            try:
                pending = self._apply(tx)
            except (KeyError, TypeError, ValueError) as exc:
                raise LedgerRejected(f"malformed payload: {exc}") from exc
        except LedgerRejected as exc:
            self.rejected.append((tx, str(exc)))
            raise
        # Commit point: all validation passed.
        self._nonces[tx.sender] = tx.nonce
        heights = []
        for key, value in pending:
            heights.append(self._append(key, value, tx.sender))
        self.accepted.append((tx, heights))
        return heights[-1]

    def _append(self, key: bytes, value: bytes, author: bytes) -> int:
        entry = LedgerEntry(key=key, value=value, height=self.height + 1, author=author)
        prev = self.chain_hashes[-1] if self.chain_hashes else ZERO_HASH
        self.chain_hashes.append(sha256(prev + entry.canonical_bytes()))
        self.entries.append(entry)
        self._kv.setdefault(key, []).append((entry.height, value))
        return entry.height

    def _apply(self, tx: Transaction) -> list:
        """Validate a payload and return the entries it produces."""
        p = tx.payload
        if tx.payload_type in ("kv-put", "identity-registration", "commitment-post"):
            key = bytes.fromhex(p["key"])
            if len(key) != 32:
                raise LedgerRejected("key must be 256-bit")
            return [(key, bytes.fromhex(p["value"]))]

        if tx.payload_type == "deposit":
            amount = int(p["amount"])
            if amount < 0:
                raise LedgerRejected("negative deposit")
            acct = self.account(tx.sender)
            if acct.balance < amount:
                raise LedgerRejected("insufficient balance for deposit")
            acct.balance -= amount
            acct.deposit += amount
            return [(sha256(b"account" + tx.sender), self._account_record(tx.sender))]

        if tx.payload_type == "fee-settlement":
            transfers = [(bytes.fromhex(pk), int(d)) for pk, d in p.get("balance_deltas", [])]
            slashes = [(bytes.fromhex(pk), int(d)) for pk, d in p.get("deposit_deltas", [])]
            staged = {}
            for pk, delta in transfers:
                acct = self.account(pk)
                staged[pk] = staged.get(pk, (acct.balance, acct.deposit))
                staged[pk] = (staged[pk][0] + delta, staged[pk][1])
            for pk, delta in slashes:
                acct = self.account(pk)
                staged[pk] = staged.get(pk, (acct.balance, acct.deposit))
                staged[pk] = (staged[pk][0], staged[pk][1] + delta)
            for pk, (bal, dep) in staged.items():
                if bal < 0 or dep < 0:
                    raise LedgerRejected("insufficient balance in settlement")
            for pk, (bal, dep) in staged.items():
                acct = self.account(pk)
                acct.balance, acct.deposit = bal, dep
            entries = [(sha256(b"settlement" + tx.signature[:32]),
                        json.dumps(p, sort_keys=True).encode())]
            for pk in staged:
                entries.append((sha256(b"account" + pk), self._account_record(pk)))
            return entries

        raise LedgerRejected(f"unknown payload type {tx.payload_type!r}")

    def _account_record(self, pk: bytes) -> bytes:
        acct = self.account(pk)
        return json.dumps({"balance": acct.balance, "deposit": acct.deposit},
                          sort_keys=True).encode()

    # -- integrity ---------------------------------------------------------

    def verify_log(self) -> int | None:
        """Replay-style integrity check; returns first corrupt height, or None.

        Recomputes the hash chain over the stored entries and re-verifies
        every accepted transaction's signature; the first height where
        either check fails is reported.
        """
        prev = ZERO_HASH
        for entry, stored in zip(self.entries, self.chain_hashes):
            prev = sha256(prev + entry.canonical_bytes())
            if prev != stored:
                return entry.height
        for tx, heights in self.accepted:
            if not keymod.verify(tx.sender, tx.signature, tx.signing_bytes()):
                return heights[0] if heights else 0
        return None

    # -- dump format -------------------------------------------------------

    def dump(self) -> str:
        """One entry per line: height, hex key, base64 value, hex author."""
        lines = []
        for e in self.entries:
            value64 = base64.b64encode(e.value).decode()
            lines.append(f"{e.height}\t{e.key.hex()}\t{value64}\t{e.author.hex()}")
        return "\n".join(lines) + ("\n" if lines else "")


class ReadOnlyBoard:
    """Offline view over a ledger dump, exposing the read API auditors use."""

    def __init__(self, entries: list):
        self.entries = entries
        self._kv = {}
        for e in entries:
            self._kv.setdefault(e.key, []).append((e.height, e.value))

    @property
    def height(self) -> int:
        return self.entries[-1].height if self.entries else 0

    def get(self, k) -> bytes | None:
        history = self._kv.get(normalize_key(k))
        return history[-1][1] if history else None

    def get_at(self, k, t: int) -> bytes | None:
        history = self._kv.get(normalize_key(k), [])
        result = None
        for h, v in history:
            if h > t:
                break
            result = v
        return result


def load_dump(text: str) -> ReadOnlyBoard:
    """Parse a ledger dump; malformed lines raise CorruptDump."""
    entries = []
    expected = 1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise CorruptDump(f"line {lineno}: expected 4 tab-separated fields")
        try:
            height = int(parts[0])
            key = bytes.fromhex(parts[1])
            value = base64.b64decode(parts[2], validate=True)
            author = bytes.fromhex(parts[3])
        except (ValueError, base64.binascii.Error) as exc:
            raise CorruptDump(f"line {lineno}: {exc}") from exc
        if height != expected or len(key) != 32 or len(author) != 32:
            raise CorruptDump(f"line {lineno}: malformed entry")
        expected += 1
        entries.append(LedgerEntry(key=key, value=value, height=height, author=author))
    return ReadOnlyBoard(entries)
