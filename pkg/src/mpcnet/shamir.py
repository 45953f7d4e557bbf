"""Shamir secret sharing with its homomorphisms and product degree reduction.

A secret s is embedded as the constant term of a random degree-t polynomial
q over GF(p); party i holds the point q(i) for the canonical evaluation
points 1..n. Any t+1 distinct points reconstruct q(0) by Lagrange
interpolation; any t points are information-theoretically independent of s.

Addition and scalar multiplication act share-wise with no interaction.
Multiplying two degree-t sharings yields points on a degree-2t polynomial,
so a re-share-and-recombine reduction step brings the product back to
degree t; that step is the only one here that touches the network and it
costs exactly n(n-1) point-to-point messages.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from .field import Field


@dataclass(frozen=True)
class ShamirShare:
    """One party's point on the sharing polynomial.

    index is the party's evaluation point (never 0 -- that is the secret);
    threshold is the polynomial degree t of the sharing it belongs to.
    """

    index: int
    value: int
    threshold: int


def share(secret: int, t: int, n: int, field: Field, rng: random.Random) -> list:
    """Deal n shares of `secret` with reconstruction threshold t+1.

    The polynomial is q(x) = secret + a_1 x + ... + a_t x^t with a_1..a_t
    uniform in [0, p); shares are q(1)..q(n).
    """
    if not 0 <= t < n:
        raise ValueError(f"invalid threshold: need 0 <= t < n, got t={t}, n={n}")
    if n >= field.p:
        raise ValueError(f"field too small: need n < p, got n={n}, p={field.p}")
    secret %= field.p
    coeffs = [secret] + [field.rand(rng) for _ in range(t)]
    return [ShamirShare(i, field.poly_eval(coeffs, i), t) for i in range(1, n + 1)]


@lru_cache(maxsize=4096)
def weights_at_zero(indices: tuple, p: int) -> tuple:
    """Lagrange coefficients L_i(0) for the given distinct evaluation points."""
    field = Field(p)
    out = []
    for i, xi in enumerate(indices):
        num, den = 1, 1
        for j, xj in enumerate(indices):
            if j == i:
                continue
            num = field.mul(num, field.neg(xj))
            den = field.mul(den, field.sub(xi, xj))
        out.append(field.div(num, den))
    return tuple(out)


def interpolate_at_zero(points: list, field: Field) -> int:
    """Evaluate the unique polynomial through `points` at x=0."""
    indices = tuple(x for x, _ in points)
    weights = weights_at_zero(indices, field.p)
    acc = 0
    for (_, y), w in zip(points, weights):
        acc = field.add(acc, field.mul(w, y))
    return acc


def lagrange_eval(points: list, x: int, field: Field) -> int:
    """Evaluate the unique polynomial through `points` at an arbitrary x."""
    acc = 0
    for i, (xi, yi) in enumerate(points):
        num, den = 1, 1
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            num = field.mul(num, field.sub(x, xj))
            den = field.mul(den, field.sub(xi, xj))
        acc = field.add(acc, field.mul(yi, field.div(num, den)))
    return acc


def reconstruct(shares: list, field: Field) -> int:
    """Recover the secret from at least t+1 distinct-index shares."""
    if not shares:
        raise ValueError("insufficient shares: none supplied")
    t = shares[0].threshold
    for s in shares:
        if s.threshold != t:
            raise ValueError("mismatched thresholds across shares")
    if len(shares) <= t:
        raise ValueError(f"insufficient shares: got {len(shares)}, need {t + 1}")
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise ValueError("duplicate share index")
    return interpolate_at_zero([(s.index, s.value) for s in shares], field)


def _check_aligned(share_lists: list) -> tuple:
    """All input sharings must agree on (t, n) and party indices."""
    first = share_lists[0]
    t = first[0].threshold
    indices = tuple(s.index for s in first)
    for lst in share_lists[1:]:
        if tuple(s.index for s in lst) != indices or lst[0].threshold != t:
            raise ValueError("mismatched sharing parameters across inputs")
    return t, indices

def linear_combine(share_lists: list, coeffs: list, constant: int, field: Field) -> list:
    """Share-wise sum(c_j * [s_j]) + constant; purely local, no messages.

    Adding the constant to every share adds the constant polynomial, so the
    reconstruction shifts by exactly `constant`.
    """
    if len(share_lists) != len(coeffs):
        raise ValueError("mismatched parameters: one coefficient per sharing")
    if not share_lists:
        raise ValueError("mismatched parameters: need at least one sharing")
    t, indices = _check_aligned(share_lists)
    constant %= field.p
    out = []
    for pos, idx in enumerate(indices):
        acc = constant
        for c, lst in zip(coeffs, share_lists):
            acc = field.add(acc, field.mul(c % field.p, lst[pos].value))
        out.append(ShamirShare(idx, acc, t))
    return out


def mul_with_reduction(x: list, y: list, field: Field, net, rng: random.Random) -> list:
    """Secure product of two degree-t sharings, reduced back to degree t.

    Each party multiplies its shares locally (a point on the degree-2t
    product polynomial), deals a fresh degree-t sharing of that point, and
    every party combines the sub-shares it received with the degree-2t
    Lagrange weights. Requires an honest majority (2t < n) so the product
    polynomial is determined by the n available points.

    Exactly n(n-1) messages cross `net`: each of n parties sends one
    sub-share to each other party and keeps its own.
    """
    t, indices = _check_aligned([x, y])
    n = len(indices)
    if 2 * t >= n:
        raise ValueError(f"honest majority violated: need 2t < n, got t={t}, n={n}")

    weights = weights_at_zero(indices, field.p)

    kept = {}
    for pos, idx in enumerate(indices):
        d = field.mul(x[pos].value, y[pos].value)
        coeffs = [d] + [field.rand(rng) for _ in range(t)]
        for dest in indices:
            sub = field.poly_eval(coeffs, dest)
            if dest == idx:
                kept[idx] = sub
            else:
                net.send(idx, dest, field.encode(sub))

    weight_of = dict(zip(indices, weights))
    out = []
    for pos, idx in enumerate(indices):
        acc = field.mul(weight_of[idx], kept[idx])
        for src, payload in net.recv_all(idx):
            acc = field.add(acc, field.mul(weight_of[src], field.decode(payload)))
        out.append(ShamirShare(idx, acc, t))
    return out
