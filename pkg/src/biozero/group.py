"""Prime-order subgroup of Z_p^* used for every commitment and proof.

Two profiles exist:

* ``toy``: p = 23, q = 11, g = 2, h = 3.  Small enough to enumerate, useless
  for security.
* ``production``: 2048-bit modulus with a 256-bit prime-order subgroup
  (p = k*q + 1).  The constants are regenerated deterministically by
  :func:`generate_schnorr_group` and checked in the test suite.

Elements and scalars are plain ``int`` values.  Scalars always live in Z_q.
"""

from __future__ import annotations

import hashlib
import math
import secrets
from dataclasses import dataclass
from functools import cached_property

import gmpy2

from biozero import metering

GENERATOR_H_TAG = b"biozero/generator-h/v1"
_Q_SEED_TAG = b"biozero/schnorr-group/q"
_P_SEED_TAG = b"biozero/schnorr-group/p"

# Output of generate_schnorr_group(2048, 256); see tests/test_group.py.
_PRODUCTION_Q = int(
    "ad65264990d929dc3a6ab7f03f67e2c1f3e752d2b055b7076f743d2f085d9e61", 16
)
_PRODUCTION_P = int(
    "d4665800cdaefc5057feef4f317555210d78fa4df0d8caf09aa36d28dd491257"
    "b33caa7cb32adb51a575380a6481becf71b7c034a2fd792e182e888b2926c697"
    "266027cc6f917902bbe4788ddbdf2162b2efcdecefcc44daf9081a66218e7870"
    "48a2f61621f2d313b34351d2f939f6d0aca185ad09d62981259cd7fa0fb048c6"
    "5c073cfaaeb1e79343e329269d87a2114a14c8bb69a1e8fb69c96867cc231f16"
    "09a663c05100d6a3d61241c7ff751925bfb783d3e4d91c1ef7483fa194d032d1"
    "9cd3117448e286b9af2fe49a718f42fe97c4c1a5e3b7014dc776a7f0822e0d6f"
    "47d5837b3ae90e8b99e6131a1ace92b2be44ecb8676d68f1eab9cb3564b2c8ed",
    16,
)

PROFILES = ("toy", "production")


class GroupError(ValueError):
    """Raised for malformed group encodings or parameters."""


def _expand(tag: bytes, length: int) -> bytes:
    """SHA-256 in counter mode."""
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(tag + counter.to_bytes(4, "big")).digest()
        counter += 1
    return bytes(out[:length])


def generate_schnorr_group(p_bits: int = 2048, q_bits: int = 256) -> tuple[int, int]:
    """Derive (p, q) with q | p - 1 from fixed public seeds.

    q is the next prime above a seed-derived ``q_bits`` integer; p is the
    first prime of the form k*q + 1 with ``p_bits`` bits, searching upward
    from a seed-derived k.
    """
    q_start = int.from_bytes(_expand(_Q_SEED_TAG, q_bits // 8), "big")
    q_start |= (1 << (q_bits - 1)) | 1
    q = int(gmpy2.next_prime(q_start))
    k_start = int.from_bytes(_expand(_P_SEED_TAG, p_bits // 8), "big")
    k = (k_start | (1 << (p_bits - 1))) // q
    k -= k % 2
    while True:
        p = k * q + 1
        if p.bit_length() == p_bits and gmpy2.is_prime(p, 50):
            return p, q
        k += 2


def montgomery_ladder(base: int, k: int, modulus: int, nbits: int) -> tuple[int, int]:
    """Return ``(base**k mod modulus, iterations)``.

    Runs exactly ``nbits`` iterations, each doing one multiplication and one
    squaring, whatever the bits of ``k`` are.  ``k`` must be below 2**nbits.
    """
    m = gmpy2.mpz(modulus)
    r0 = gmpy2.mpz(1)
    r1 = gmpy2.mpz(base) % m
    steps = 0
    for i in range(nbits - 1, -1, -1):
        if (k >> i) & 1:
            r0 = r0 * r1 % m
            r1 = r1 * r1 % m
        else:
            r1 = r0 * r1 % m
            r0 = r0 * r0 % m
        steps += 1
    return int(r0), steps


class FixedBaseTable:
    """Windowed precomputation for a base that is used over and over.

    Exponentiation costs one modular multiplication per window, the same
    sequence for every exponent.
    """

    def __init__(self, base: int, modulus: int, nbits: int, window: int = 8):
        self.modulus = gmpy2.mpz(modulus)
        self.window = window
        self.windows = max(1, math.ceil(nbits / window))
        self.mask = (1 << window) - 1
        m = self.modulus
        rows = []
        b = gmpy2.mpz(base) % m
        for _ in range(self.windows):
            row = [gmpy2.mpz(1)]
            for _ in range(self.mask):
                row.append(row[-1] * b % m)
            rows.append(row)
            b = row[-1] * b % m  # b ** (2**window)
        self.rows = rows

    def pow(self, k: int) -> int:
        m = self.modulus
        acc = gmpy2.mpz(1)
        w = self.window
        mask = self.mask
        for i, row in enumerate(self.rows):
            acc = acc * row[(k >> (w * i)) & mask] % m
        return int(acc)


@dataclass(frozen=True)
class GroupParams:
    """Order-q subgroup of Z_p^* with independent generators g and h."""

    name: str
    p: int
    q: int
    g: int
    h: int

    identity = 1

    @property
    def element_len(self) -> int:
        return math.ceil(self.p.bit_length() / 8)

    @property
    def scalar_len(self) -> int:
        return math.ceil(self.q.bit_length() / 8)

    @property
    def cofactor(self) -> int:
        return (self.p - 1) // self.q

    @cached_property
    def _tables(self) -> dict[int, FixedBaseTable]:
        nbits = self.q.bit_length()
        return {
            self.g: FixedBaseTable(self.g, self.p, nbits),
            self.h: FixedBaseTable(self.h, self.p, nbits),
        }

    @cached_property
    def fingerprint(self) -> bytes:
        """SHA-256 over the encoded parameters; binds files to a group."""
        blob = b"".join(
            len(b).to_bytes(4, "big") + b
            for b in (
                self.p.to_bytes(self.element_len, "big"),
                self.q.to_bytes(self.scalar_len, "big"),
                self.encode_element(self.g),
                self.encode_element(self.h),
            )
        )
        return hashlib.sha256(blob).digest()

    # -- arithmetic -------------------------------------------------------

    def exp(self, base: int, k: int) -> int:
        """base**k in the group, with k reduced mod q.

        Fixed-sequence in both code paths: generators g and h go through
        a windowed table, any other base through the Montgomery ladder.
        """
        metering.count("exp")
        k %= self.q
        table = self._tables.get(base)
        if table is not None:
            return table.pow(k)
        return montgomery_ladder(base, k, self.p, self.q.bit_length())[0]

    def exp_public(self, base: int, k: int) -> int:
        """Variable-time exponentiation; only for public exponents."""
        metering.count("exp")
        k %= self.q
        table = self._tables.get(base)
        if table is not None:
            return table.pow(k)
        return int(gmpy2.powmod(base, k, self.p))

    def mul(self, a: int, b: int) -> int:
        metering.count("mul")
        return a * b % self.p

    def inv(self, a: int) -> int:
        metering.count("mul")
        return int(gmpy2.invert(a, self.p))

    def random_scalar(self, rng=None) -> int:
        rng = rng if rng is not None else secrets.SystemRandom()
        return rng.randrange(self.q)

    def is_element(self, x: int) -> bool:
        return 0 < x < self.p and gmpy2.powmod(x, self.q, self.p) == 1

    def hash_to_group(self, seed: bytes) -> int:
        """Map bytes to a subgroup element with unknown discrete log.

        The digest stream is reduced mod p and raised to the cofactor
        (squaring, for a safe prime), landing in the order-q subgroup.
        """
        counter = 0
        while True:
            digest = _expand(seed + counter.to_bytes(4, "big"), self.element_len + 16)
            x = int.from_bytes(digest, "big") % self.p
            y = pow(x, self.cofactor, self.p)
            if y not in (0, 1):
                return y
            counter += 1

    # -- encodings --------------------------------------------------------

    def encode_element(self, x: int) -> bytes:
        return int(x).to_bytes(self.element_len, "big")

    def decode_element(self, data: bytes) -> int:
        if len(data) != self.element_len:
            raise GroupError(f"element must be {self.element_len} bytes")
        x = int.from_bytes(data, "big")
        if not 0 < x < self.p:
            raise GroupError("element out of range")
        return x

    def encode_scalar(self, k: int) -> bytes:
        return (int(k) % self.q).to_bytes(self.scalar_len, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_len:
            raise GroupError(f"scalar must be {self.scalar_len} bytes")
        k = int.from_bytes(data, "big")
        if k >= self.q:
            raise GroupError("scalar not reduced mod q")
        return k


def _build(profile: str) -> GroupParams:
    if profile == "toy":
        return GroupParams("toy", 23, 11, 2, 3)
    if profile == "production":
        p, q = _PRODUCTION_P, _PRODUCTION_Q
        g = pow(2, (p - 1) // q, p)
        stub = GroupParams("production", p, q, g, g)
        h = stub.hash_to_group(stub.encode_element(g) + GENERATOR_H_TAG)
        return GroupParams("production", p, q, g, h)
    raise GroupError(f"unknown group profile {profile!r}; expected one of {PROFILES}")


_CACHE: dict[str, GroupParams] = {}


def setup_group(profile: str = "production") -> GroupParams:
    """Return the (cached) parameters for ``profile``."""
    if profile not in _CACHE:
        _CACHE[profile] = _build(profile)
    return _CACHE[profile]
