"""Prover side: registration and generation of authentication proofs."""

from __future__ import annotations

import secrets
import time
from collections.abc import Sequence
from dataclasses import dataclass, fields

from biozero import mulproof, pedersen, rangeproof
from biozero.encoding import DecodeError, Reader, Writer
from biozero.group import GroupParams
from biozero.mulproof import AuthRelationProof
from biozero.pedersen import Commitment, commit_value
from biozero.rangeproof import RangeKeys, RangeProof
from biozero.transcript import NONCE_MAX, derive_challenge, encode_id

DEFAULT_FEATURE_BITS = 8
DEFAULT_LENGTH = 128

GAMMA_MAGIC = b"BZAP"
GAMMA_VERSION = 1
MAX_ID_LEN = 1024


class ProtocolError(ValueError):
    pass


def check_features(f: Sequence[int], feature_bits: int = DEFAULT_FEATURE_BITS) -> tuple[int, ...]:
    if len(f) == 0:
        raise ProtocolError("biometric vector is empty")
    limit = 1 << feature_bits
    out = tuple(int(x) for x in f)
    bad = [x for x in out if not 0 <= x < limit]
    if bad:
        raise ProtocolError(f"feature {bad[0]} outside [0, {limit})")
    return out


def compute_distance(f0: Sequence[int], f1: Sequence[int]) -> int:
    """Squared Euclidean distance over the integers."""
    if len(f0) != len(f1):
        raise ProtocolError("vectors differ in length")
    return sum((a - b) ** 2 for a, b in zip(f0, f1))


@dataclass
class RegistrationRecord:
    """What the user keeps after registering.  ``f0``/``r0`` never leave."""

    identity: bytes
    c0: tuple[int, ...]
    f0: tuple[int, ...]
    r0: tuple[int, ...]
    feature_bits: int = DEFAULT_FEATURE_BITS
    last_nonce: int | None = None

    def next_nonce(self) -> int:
        return 1 if self.last_nonce is None else self.last_nonce + 1

    def to_dict(self) -> dict:
        return {
            "id": self.identity.decode("utf-8", "backslashreplace"),
            "id_hex": self.identity.hex(),
            "c0": [hex(x) for x in self.c0],
            "f0": list(self.f0),
            "r0": [hex(x) for x in self.r0],
            "feature_bits": self.feature_bits,
            "last_nonce": self.last_nonce,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegistrationRecord":
        return cls(
            identity=bytes.fromhex(data["id_hex"]),
            c0=tuple(int(x, 16) for x in data["c0"]),
            f0=tuple(data["f0"]),
            r0=tuple(int(x, 16) for x in data["r0"]),
            feature_bits=data.get("feature_bits", DEFAULT_FEATURE_BITS),
            last_nonce=data.get("last_nonce"),
        )


def register(
    params: GroupParams,
    identity: bytes | str,
    f0: Sequence[int],
    rng=None,
    feature_bits: int = DEFAULT_FEATURE_BITS,
) -> RegistrationRecord:
    f0 = check_features(f0, feature_bits)
    rng = rng if rng is not None else secrets.SystemRandom()
    r0 = tuple(params.random_scalar(rng) for _ in f0)
    c0 = tuple(commit_value(params, f, r) for f, r in zip(f0, r0))
    return RegistrationRecord(encode_id(identity), c0, f0, r0, feature_bits)


@dataclass(frozen=True)
class AuthProof:
    """The package sent to the verifier.  c_d is not included."""

    identity: bytes
    nonce: int
    c1: tuple[int, ...]
    c00: tuple[int, ...]
    c11: tuple[int, ...]
    c01: tuple[int, ...]
    relations: AuthRelationProof
    pi: RangeProof

    @property
    def n(self) -> int:
        return len(self.c1)

    def to_bytes(self, params: GroupParams) -> bytes:
        rel = self.relations
        w = Writer(params)
        w.raw(GAMMA_MAGIC).u8(GAMMA_VERSION)
        w.blob(self.identity).u64(self.nonce)
        w.u32(self.n)
        for vec in (self.c1, self.c00, self.c11, self.c01):
            w.elements(vec)
        w.u8(mulproof.MODES[rel.mode]).u32(len(rel.alpha1))
        w.elements(rel.alpha1).elements(rel.alpha2)
        w.elements(rel.beta1).elements(rel.beta2).elements(rel.beta3)
        for name in AuthRelationProof.SCALAR_FIELDS:
            w.scalars(getattr(rel, name))
        w.blob(self.pi.to_bytes())
        return w.getvalue()

    @classmethod
    def from_bytes(cls, params: GroupParams, blob: bytes) -> "AuthProof":
        r = Reader(params, blob)
        if r.raw(4) != GAMMA_MAGIC:
            raise DecodeError("not an authentication proof")
        if r.u8() != GAMMA_VERSION:
            raise DecodeError("unsupported proof version")
        identity = r.blob(MAX_ID_LEN)
        nonce = r.u64()
        n = r.u32()
        if n == 0 or n * params.element_len > r.remaining():
            raise DecodeError("bad vector length")
        c1, c00, c11, c01 = (r.elements(n) for _ in range(4))
        tag = r.u8()
        if tag not in mulproof.MODE_BY_TAG:
            raise DecodeError("unknown relation mode")
        mode = mulproof.MODE_BY_TAG[tag]
        n_alpha = r.u32()
        if n_alpha != (n if mode == mulproof.REPAIRED else 1):
            raise DecodeError("alpha vector length does not match mode")
        alpha1, alpha2 = r.elements(n_alpha), r.elements(n_alpha)
        betas = [r.elements(n) for _ in range(3)]
        zs = [r.scalars(n) for _ in range(7)]
        pi = RangeProof.from_bytes(r.blob())
        r.done()
        rel = AuthRelationProof(mode, alpha1, alpha2, *betas, *zs)
        return cls(identity, nonce, c1, c00, c11, c01, rel, pi)

    def field_names(self) -> list[str]:
        return [f.name for f in fields(self)]


@dataclass(frozen=True)
class ProverSecrets:
    """Everything the prover used; handy for tests and audits."""

    f0: tuple[int, ...]
    r0: tuple[int, ...]
    f1: tuple[int, ...]
    r1: tuple[int, ...]
    r00: tuple[int, ...]
    r11: tuple[int, ...]
    r01: tuple[int, ...]
    d: int
    r_d: int
    c_d: int
    e: int

    def scalars(self) -> list[int]:
        out: list[int] = []
        for name in ("f0", "r0", "f1", "r1", "r00", "r11", "r01"):
            out.extend(getattr(self, name))
        out.extend([self.d, self.r_d])
        return out


def distance_commitment(
    params: GroupParams,
    c00: Sequence[int],
    c11: Sequence[int],
    c01: Sequence[int],
) -> Commitment:
    """Fold sum_i c00_i (+) c11_i (-) 2*c01_i with the homomorphic operators."""
    n = len(c00)
    if n == 0:
        raise ProtocolError("cannot fold empty commitment vectors")
    if len(c11) != n or len(c01) != n:
        raise ProtocolError("commitment vectors differ in length")
    bases = (params.g, params.h)
    acc = pedersen.identity(params)
    for a, b, c in zip(c00, c11, c01):
        acc = pedersen.add(params, acc, Commitment(a, bases))
        acc = pedersen.add(params, acc, Commitment(b, bases))
        acc = pedersen.sub(params, acc, pedersen.scale(params, Commitment(c, bases), 2))
    return acc


class _PhaseClock:
    def __init__(self, sink: dict | None):
        self.sink = sink
        self.last = time.perf_counter()

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        if self.sink is not None:
            self.sink[name] = self.sink.get(name, 0.0) + now - self.last
        self.last = now


def _generate(
    params: GroupParams,
    keys: RangeKeys,
    record: RegistrationRecord,
    f1: Sequence[int],
    nonce: int,
    epsilon: int,
    rng,
    mode: str,
    force: bool,
    phase_times: dict | None = None,
) -> tuple[AuthProof, ProverSecrets]:
    clock = _PhaseClock(phase_times)
    rng = rng if rng is not None else secrets.SystemRandom()
    f0, r0, c0 = record.f0, record.r0, record.c0
    f1 = check_features(f1, record.feature_bits)
    if len(f1) != len(f0):
        raise ProtocolError(f"probe has {len(f1)} features, registration has {len(f0)}")
    if not 0 <= nonce <= NONCE_MAX:
        raise ProtocolError("nonce must fit in 64 bits")
    if record.last_nonce is not None and nonce <= record.last_nonce:
        raise ProtocolError(f"nonce {nonce} is not above the last used nonce {record.last_nonce}")
    d = compute_distance(f0, f1)
    if d >= epsilon and not force:
        raise ProtocolError(f"distance {d} is not below the threshold {epsilon}; refusing to prove")

    q = params.q
    # 1. commitments, fresh blinding per entry
    r1, r00, r11, r01 = ([params.random_scalar(rng) for _ in f0] for _ in range(4))
    c1 = tuple(commit_value(params, a, r) for a, r in zip(f1, r1))
    c00 = tuple(commit_value(params, a * a, r) for a, r in zip(f0, r00))
    c11 = tuple(commit_value(params, b * b, r) for b, r in zip(f1, r11))
    c01 = tuple(commit_value(params, a * b, r) for a, b, r in zip(f0, f1, r01))
    clock.lap("commitments")

    # 2 + 3. relation proof; the challenge hashes its first message too
    def challenge(first_message: bytes) -> int:
        return derive_challenge(
            params, c0, c1, c00, c11, c01, record.identity, nonce, first_message
        )

    relations, e = mulproof.prove_auth_relations(
        params, f0, r0, f1, r1, r00, r11, r01, c0, c1, challenge, rng, mode
    )
    clock.lap("relations")

    # 4. distance commitment and range proof
    r_d = sum(a + b - 2 * c for a, b, c in zip(r00, r11, r01)) % q
    c_d = commit_value(params, d, r_d)
    if distance_commitment(params, c00, c11, c01).value != c_d:
        raise ProtocolError("distance commitment self-check failed")
    clock.lap("distance")
    if force:
        pi = rangeproof.force_prove_range_for_testing(keys, d, r_d, c_d, epsilon, rng)
    else:
        pi = rangeproof.prove_range(keys, d, r_d, c_d, epsilon, rng)
    clock.lap("range")

    record.last_nonce = nonce
    gamma = AuthProof(record.identity, nonce, c1, c00, c11, c01, relations, pi)
    secrets_ = ProverSecrets(
        f0, r0, f1, tuple(r1), tuple(r00), tuple(r11), tuple(r01), d, r_d, c_d, e
    )
    return gamma, secrets_


def generate_auth_session(
    params: GroupParams,
    keys: RangeKeys,
    record: RegistrationRecord,
    f1: Sequence[int],
    nonce: int,
    epsilon: int,
    rng=None,
    mode: str = mulproof.REPAIRED,
    phase_times: dict | None = None,
) -> tuple[AuthProof, ProverSecrets]:
    """Like :func:`generate_auth_proof` but also returns the prover's secrets.

    ``phase_times``, if given, accumulates wall-clock seconds per phase
    (commitments, relations, distance, range).
    """
    return _generate(params, keys, record, f1, nonce, epsilon, rng, mode, False, phase_times)


def generate_auth_proof(
    params: GroupParams,
    keys: RangeKeys,
    record: RegistrationRecord,
    f1: Sequence[int],
    nonce: int,
    epsilon: int,
    rng=None,
    mode: str = mulproof.REPAIRED,
) -> AuthProof:
    """Build an authentication proof for probe ``f1``.

    Refuses when ``nonce`` does not exceed the record's last nonce or when
    the probe does not match (distance >= epsilon).  On success the
    record's ``last_nonce`` advances.
    """
    return _generate(params, keys, record, f1, nonce, epsilon, rng, mode, force=False)[0]


def force_generate_auth_proof_for_testing(
    params: GroupParams,
    keys: RangeKeys,
    record: RegistrationRecord,
    f1: Sequence[int],
    nonce: int,
    epsilon: int,
    rng=None,
    mode: str = mulproof.REPAIRED,
) -> tuple[AuthProof, ProverSecrets]:
    """Generate a proof even when the probe does not match.

    Test-only.  The range proof is built over truncated bits and the
    verifier rejects it.
    """
    return _generate(params, keys, record, f1, nonce, epsilon, rng, mode, force=True)
