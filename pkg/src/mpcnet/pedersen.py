"""Pedersen commitments in an order-p subgroup of Z_q*.

The commitment to s with blinding r is g^s * h^r mod q, where g and h
generate the subgroup of prime order p (the sharing field's modulus) inside
the multiplicative group of a larger prime q with p | q-1. h is derived from
a hash so nobody knows log_g(h); the scheme is hiding (r uniform) and
binding (under discrete log), and multiplying commitments commits to the
sum of the openings -- the property the public audit trail leans on.
"""

from __future__ import annotations

from dataclasses import dataclass

from .field import Field, is_prime
from .keys import sha256


@dataclass(frozen=True)
class CommitParams:
    """Group modulus q, subgroup order p, and generators g, h."""

    q: int
    p: int
    g: int
    h: int

    def __post_init__(self):
        if (self.q - 1) % self.p != 0:
            raise ValueError("subgroup order must divide q - 1")
        for gen in (self.g, self.h):
            if gen in (0, 1) or pow(gen, self.p, self.q) != 1:
                raise ValueError("generator does not have order p")


def _derive_generator(tag: bytes, q: int, p: int, exclude=()) -> int:
    """Deterministically hash into the order-p subgroup."""
    cofactor = (q - 1) // p
    counter = 0
    while True:
        digest = sha256(tag + q.to_bytes((q.bit_length() + 7) // 8, "big") + bytes([counter]))
        u = int.from_bytes(digest, "big") % q
        if u > 1:
            g = pow(u, cofactor, q)
            if g != 1 and g not in exclude:
                return g
        counter += 1


_PARAM_CACHE: dict = {}


def setup(field: Field) -> CommitParams:
    """Deterministic parameters for the given field: smallest q = kp+1 prime.

    For the p=101 test field this lands on q=607; generators come from
    hashing-to-group so log_g(h) is unknown by construction.
    """
    if field.p in _PARAM_CACHE:
        return _PARAM_CACHE[field.p]
    k = 2
    while not is_prime(k * field.p + 1):
        k += 2
    q = k * field.p + 1
    g = _derive_generator(b"mpcnet-pedersen-g", q, field.p)
    h = _derive_generator(b"mpcnet-pedersen-h", q, field.p, exclude=(g,))
    params = CommitParams(q=q, p=field.p, g=g, h=h)
    _PARAM_CACHE[field.p] = params
    return params


def commit(s: int, r: int, params: CommitParams) -> int:
    """g^s * h^r mod q."""
    return pow(params.g, s % params.p, params.q) * pow(params.h, r % params.p, params.q) % params.q


def verify_open(commitment: int, s: int, r: int, params: CommitParams) -> bool:
    return commitment == commit(s, r, params)


def combine(commitments: list, params: CommitParams) -> int:
    """Product of commitments = commitment to the sum of openings."""
    acc = 1
    for c in commitments:
        acc = acc * c % params.q
    return acc
