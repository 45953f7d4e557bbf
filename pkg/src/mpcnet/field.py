"""Prime-field arithmetic shared by every sharing scheme in the package.

All secret values, shares and MACs live in GF(p) for a configurable prime p.
The default runtime field is the Mersenne prime M61 = 2^61 - 1, which keeps
products inside Python's fast small-int path and admits a cheap shift-and-add
reduction. Tests mostly use p = 101 so expected values can be checked by hand.

Values are plain Python ints in [0, p); a Field instance carries the modulus
and provides the operations. There is deliberately no element wrapper class:
profiling desk-scale protocol runs showed the wrapper costing more than the
arithmetic.
"""

from __future__ import annotations

import random

M61 = (1 << 61) - 1  # default runtime modulus, 2305843009213693951

# Deterministic Miller-Rabin witnesses, valid for all n < 3.3 * 10^24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test for n < 3.3e24."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _mersenne_exponent(p: int) -> int | None:
    """Return e if p == 2^e - 1, else None."""
    e = p.bit_length()
    return e if (1 << e) - 1 == p else None


class Field:
    """GF(p) for prime p, with a fast path for Mersenne moduli.

    Attributes:
        p: The prime modulus.
        elem_size: Fixed byte width used when encoding elements on the wire.
    """

    __slots__ = ("p", "elem_size", "_mersenne_e")

    def __init__(self, p: int = M61):
        if not is_prime(p):
            raise ValueError(f"field modulus must be prime, got {p}")
        self.p = p
        self.elem_size = (p - 1).bit_length() // 8 + 1
        self._mersenne_e = _mersenne_exponent(p)

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("Field", self.p))

    def __repr__(self) -> str:
        return f"Field({self.p})"

    def reduce(self, x: int) -> int:
        return x % self.p

    def add(self, a: int, b: int) -> int:
        s = a + b
        if s >= self.p:
            s -= self.p
        return s

    def sub(self, a: int, b: int) -> int:
        s = a - b
        if s < 0:
            s += self.p
        return s

    def neg(self, a: int) -> int:
        return self.p - a if a else 0

    def mul(self, a: int, b: int) -> int:
        e = self._mersenne_e
        if e is None:
            return a * b % self.p
        # Mersenne split: x mod (2^e - 1) = (x >> e) + (x & p), one fix-up.
        x = a * b
        r = (x >> e) + (x & self.p)
        r = (r >> e) + (r & self.p)
        if r >= self.p:
            r -= self.p
        return r

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise ZeroDivisionError("no inverse of 0 in GF(p)")
        return pow(a, self.p - 2, self.p)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def rand(self, rng: random.Random) -> int:
        """Uniform element of [0, p)."""
        return rng.randrange(self.p)

    def rand_nonzero(self, rng: random.Random) -> int:
        return rng.randrange(1, self.p)

    def poly_eval(self, coeffs: list, x: int) -> int:
        """Horner evaluation of a_0 + a_1 x + ... (lowest degree first)."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.add(self.mul(acc, x), c)
        return acc

    def encode(self, a: int) -> bytes:
        """Fixed-width big-endian encoding (width never depends on the value)."""
        return a.to_bytes(self.elem_size, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.elem_size:
            raise ValueError(f"expected {self.elem_size} bytes, got {len(data)}")
        v = int.from_bytes(data, "big")
        if v >= self.p:
            raise ValueError("encoded value out of field range")
        return v


DEFAULT_FIELD = Field(M61)
