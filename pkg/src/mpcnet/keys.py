"""Node key material: Ed25519 signatures and X25519 key agreement.

Every node (and every member of a shared identity) owns a signing keypair;
simulator nodes additionally own an encryption keypair used for the secure
point-to-point channels. Keypairs can be derived deterministically from a
seed so whole scenario runs replay bit-identically.

Public keys are always handled as 32 raw bytes, which lines up with the
256-bit key/address space used by the ledger and the DHT.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)


def _raw_private(key) -> bytes:
    return key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())


def _raw_public(key) -> bytes:
    return key.public_bytes(Encoding.Raw, PublicFormat.Raw)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class KeyPair:
    """A node's signing and encryption key material."""

    sign_sk: bytes
    sign_pk: bytes
    enc_sk: bytes
    enc_pk: bytes

    @classmethod
    def generate(cls, rng: random.Random) -> "KeyPair":
        """Derive a keypair deterministically from the given rng."""
        sign_seed = rng.randbytes(32)
        enc_seed = rng.randbytes(32)
        sk = Ed25519PrivateKey.from_private_bytes(sign_seed)
        ek = X25519PrivateKey.from_private_bytes(enc_seed)
        return cls(
            sign_sk=sign_seed,
            sign_pk=_raw_public(sk.public_key()),
            enc_sk=_raw_private(ek),
            enc_pk=_raw_public(ek.public_key()),
        )

    def sign(self, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(self.sign_sk).sign(message)

    def to_text(self) -> str:
        return (
            f"sign_sk={self.sign_sk.hex()}\n"
            f"sign_pk={self.sign_pk.hex()}\n"
            f"enc_sk={self.enc_sk.hex()}\n"
            f"enc_pk={self.enc_pk.hex()}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "KeyPair":
        fields = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            name, _, value = line.partition("=")
            fields[name] = bytes.fromhex(value)
        return cls(
            sign_sk=fields["sign_sk"],
            sign_pk=fields["sign_pk"],
            enc_sk=fields["enc_sk"],
            enc_pk=fields["enc_pk"],
        )


def verify(sign_pk: bytes, signature: bytes, message: bytes) -> bool:
    """Check an Ed25519 signature; never raises."""
    try:
        Ed25519PublicKey.from_public_bytes(sign_pk).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


def shared_key(my_enc_sk: bytes, their_enc_pk: bytes) -> bytes:
    """Pairwise symmetric key via X25519 agreement (symmetric in the pair)."""
    secret = X25519PrivateKey.from_private_bytes(my_enc_sk).exchange(
        X25519PublicKey.from_public_bytes(their_enc_pk)
    )
    return sha256(b"mpcnet-channel-v1" + secret)


def seal(key: bytes, nonce_counter: int, plaintext: bytes) -> bytes:
    """AES-GCM encryption with an explicit counter nonce (12 bytes, BE)."""
    nonce = nonce_counter.to_bytes(12, "big")
    return AESGCM(key).encrypt(nonce, plaintext, None)


def unseal(key: bytes, nonce_counter: int, ciphertext: bytes) -> bytes:
    """AES-GCM decryption; raises InvalidTag on a wrong key or tampering."""
    nonce = nonce_counter.to_bytes(12, "big")
    return AESGCM(key).decrypt(nonce, ciphertext, None)


def storage_key(owner: KeyPair) -> bytes:
    """Symmetric key for client-side encryption of DHT records.

    Derived from the owner's signing secret so only the signing entity can
    recover the plaintext; the derivation keeps the signing key itself out
    of the storage path.
    """
    return sha256(b"mpcnet-storage-v1" + owner.sign_sk)
