"""Range proofs: the value inside a commitment is below a public threshold.

The interface mirrors a zk-SNARK (setup -> keys, prove, verify).  The only
backend shipped is ``bitsum``, a transparent sigma protocol:

1. Split v1 = d and v2 = eps - 1 - d into L bits each and commit to every
   bit, with blindings chosen so the weighted products recombine exactly
   to c_d and to g^(eps-1) / c_d.
2. Prove each bit commitment opens to 0 or 1 (disjunctive Schnorr proof on
   base h).
3. One Fiat-Shamir challenge over the statement, the keys and all first
   messages.

With 2^(L+1) <= q, v1 + v2 = eps - 1 holds over the integers, so d < eps.
Proof size depends on L only.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
from dataclasses import dataclass

from biozero import metering
from biozero.group import GroupError, GroupParams

BITSUM = 1
BACKENDS = {BITSUM: "bitsum"}
_DOMAIN = b"biozero/range/bitsum/v1"


class RangeProofError(ValueError):
    pass


@dataclass(frozen=True)
class KeyMaterial:
    backend: int
    bits: int
    salt: bytes
    params_fingerprint: bytes


@dataclass(frozen=True)
class RangeKeys:
    params: GroupParams
    pk: KeyMaterial
    vk: KeyMaterial

    @property
    def bits(self) -> int:
        return self.vk.bits

    def to_dict(self) -> dict:
        return {
            "backend": BACKENDS[self.vk.backend],
            "bits": self.vk.bits,
            "salt": self.vk.salt.hex(),
            "params_fingerprint": self.vk.params_fingerprint.hex(),
        }

    @classmethod
    def from_dict(cls, params: GroupParams, data: dict) -> "RangeKeys":
        if data.get("backend") != "bitsum":
            raise RangeProofError(f"unsupported backend {data.get('backend')!r}")
        fp = bytes.fromhex(data["params_fingerprint"])
        if fp != params.fingerprint:
            raise RangeProofError("keys were generated for a different group")
        km = KeyMaterial(BITSUM, int(data["bits"]), bytes.fromhex(data["salt"]), fp)
        _check_bits(params, km.bits)
        return cls(params, km, km)


@dataclass(frozen=True)
class RangeProof:
    backend: int
    data: bytes

    def to_bytes(self) -> bytes:
        return bytes([self.backend]) + self.data

    @classmethod
    def from_bytes(cls, blob: bytes) -> "RangeProof":
        if not blob:
            raise RangeProofError("empty range proof")
        return cls(blob[0], bytes(blob[1:]))

    def __len__(self) -> int:
        return 1 + len(self.data)


def _check_bits(params: GroupParams, bits: int) -> None:
    if bits < 1:
        raise RangeProofError("range bit-length must be at least 1")
    if 2 ** (bits + 1) > params.q:
        raise RangeProofError(
            f"L = {bits} exceeds scalar capacity (need 2^(L+1) <= q)"
        )


def setup(params: GroupParams, bits: int, rng=None) -> RangeKeys:
    """Keys for the range domain [0, 2^bits).  Transparent: no trapdoor."""
    _check_bits(params, bits)
    rng = rng if rng is not None else secrets.SystemRandom()
    salt = rng.getrandbits(256).to_bytes(32, "big")
    km = KeyMaterial(BITSUM, bits, salt, params.fingerprint)
    return RangeKeys(params, km, km)


def _check_epsilon(bits: int, epsilon: int) -> None:
    if not 1 <= epsilon <= 2**bits:
        raise RangeProofError(f"threshold must be in [1, 2^{bits}]")


def _split_blinding(params: GroupParams, total: int, bits: int, rng) -> list[int]:
    """Blindings s_j with sum(2^j * s_j) == total (mod q)."""
    q = params.q
    s = [params.random_scalar(rng) for _ in range(bits - 1)]
    partial = sum(x << j for j, x in enumerate(s))
    s.append((total - partial) * pow(2 ** (bits - 1), -1, q) % q)
    return s


def _challenge(keys: RangeKeys, c_d: int, epsilon: int, commitments, firsts) -> int:
    params = keys.params
    enc = params.encode_element
    h = hashlib.sha256()
    h.update(_DOMAIN)
    h.update(keys.vk.params_fingerprint)
    h.update(keys.vk.salt)
    h.update(struct.pack(">HQ", keys.vk.bits, epsilon))
    h.update(enc(c_d))
    for x in commitments:
        h.update(enc(x))
    for a0, a1 in firsts:
        h.update(enc(a0))
        h.update(enc(a1))
    metering.count("hash")
    return int.from_bytes(h.digest(), "big") % params.q


def _prove(keys: RangeKeys, values, blindings, c_d: int, epsilon: int, rng) -> RangeProof:
    params = keys.params
    q, g, h = params.q, params.g, params.h
    L = keys.bits
    g_inv = params.inv(g)
    bit_values, bit_blinds, commitments = [], [], []
    for v, total in zip(values, blindings):
        s = _split_blinding(params, total, L, rng)
        for j in range(L):
            bit = (v >> j) & 1
            bit_values.append(bit)
            bit_blinds.append(s[j])
            commitments.append(params.mul(params.exp(g, bit), params.exp(h, s[j])))

    firsts, state = [], []
    for bit, c in zip(bit_values, commitments):
        ys = (c, params.mul(c, g_inv))
        k = params.random_scalar(rng)
        e_sim = params.random_scalar(rng)
        z_sim = params.random_scalar(rng)
        a = [0, 0]
        a[bit] = params.exp(h, k)
        other = 1 - bit
        a[other] = params.mul(params.exp(h, z_sim), params.exp_public(ys[other], q - e_sim))
        firsts.append((a[0], a[1]))
        state.append((k, e_sim, z_sim))

    E = _challenge(keys, c_d, epsilon, commitments, firsts)
    e0s, z0s, z1s = [], [], []
    for bit, s, (k, e_sim, z_sim) in zip(bit_values, bit_blinds, state):
        e_real = (E - e_sim) % q
        z_real = (k + e_real * s) % q
        if bit == 0:
            e0s.append(e_real)
            z0s.append(z_real)
            z1s.append(z_sim)
        else:
            e0s.append(e_sim)
            z0s.append(z_sim)
            z1s.append(z_real)

    enc_s, enc_e = params.encode_scalar, params.encode_element
    out = [struct.pack(">H", L), enc_s(E)]
    out.append(struct.pack(">I", len(commitments)))
    out.extend(enc_e(c) for c in commitments)
    for arr in (e0s, z0s, z1s):
        out.append(struct.pack(">I", len(arr)))
        out.extend(enc_s(x) for x in arr)
    return RangeProof(BITSUM, b"".join(out))


def prove_range(
    keys: RangeKeys, d: int, r_d: int, c_d: int, epsilon: int, rng=None
) -> RangeProof:
    """Prove 0 <= d < epsilon for c_d = g^d h^r_d.  Refuses false statements."""
    params = keys.params
    _check_epsilon(keys.bits, epsilon)
    if not 0 <= d < epsilon:
        raise RangeProofError(f"value {d} is not in [0, {epsilon})")
    if params.mul(params.exp(params.g, d), params.exp(params.h, r_d)) != c_d:
        raise RangeProofError("opening does not match the commitment")
    return _prove(keys, (d, epsilon - 1 - d), (r_d, -r_d), c_d, epsilon, rng)


def force_prove_range_for_testing(
    keys: RangeKeys, d: int, r_d: int, c_d: int, epsilon: int, rng=None
) -> RangeProof:
    """Run the prover on a false statement (bits are truncated to L).

    Exists so negative paths can be exercised end to end; the result is
    expected to be rejected.
    """
    L = keys.bits
    mask = (1 << L) - 1
    v1 = d % keys.params.q & mask
    v2 = (epsilon - 1 - d) % keys.params.q & mask
    return _prove(keys, (v1, v2), (r_d, -r_d), c_d, epsilon, rng)


def _parse(params: GroupParams, data: bytes, bits: int):
    n = 2 * bits
    es, ss = params.element_len, params.scalar_len
    pos = 0

    def take(k: int) -> bytes:
        nonlocal pos
        if pos + k > len(data):
            raise RangeProofError("truncated range proof")
        chunk = data[pos : pos + k]
        pos += k
        return chunk

    (L,) = struct.unpack(">H", take(2))
    if L != bits:
        raise RangeProofError("bit-length does not match the verification key")
    E = params.decode_scalar(take(ss))
    arrays = []
    for size, decode in ((es, params.decode_element), (ss, params.decode_scalar),
                         (ss, params.decode_scalar), (ss, params.decode_scalar)):
        (count,) = struct.unpack(">I", take(4))
        if count != n:
            raise RangeProofError("component array has the wrong length")
        arrays.append([decode(take(size)) for _ in range(count)])
    if pos != len(data):
        raise RangeProofError("trailing bytes in range proof")
    return E, *arrays


def _recombine(params: GroupParams, commitments) -> int:
    acc = params.identity
    for c in reversed(commitments):
        acc = params.mul(params.mul(acc, acc), c)
    return acc


def verify_range(keys: RangeKeys, c_d: int, epsilon: int, proof: RangeProof) -> bool:
    params = keys.params
    q, g, h = params.q, params.g, params.h
    L = keys.bits
    if proof.backend != keys.vk.backend:
        return False
    if not 1 <= epsilon <= 2**L or not 0 < c_d < params.p:
        return False
    try:
        E, commitments, e0s, z0s, z1s = _parse(params, proof.data, L)
    except (RangeProofError, GroupError):
        return False

    if _recombine(params, commitments[:L]) != c_d:
        return False
    upper = params.mul(params.exp_public(g, epsilon - 1), params.inv(c_d))
    if _recombine(params, commitments[L:]) != upper:
        return False

    g_inv = params.inv(g)
    firsts = []
    for c, e0, z0, z1 in zip(commitments, e0s, z0s, z1s):
        e1 = (E - e0) % q
        a0 = params.mul(params.exp_public(h, z0), params.exp_public(c, q - e0))
        a1 = params.mul(params.exp_public(h, z1), params.exp_public(params.mul(c, g_inv), q - e1))
        firsts.append((a0, a1))
    return _challenge(keys, c_d, epsilon, commitments, firsts) == E
