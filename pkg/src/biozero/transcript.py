"""Canonical transcript bytes and the Fiat-Shamir challenge.

Layout (all elements fixed-length big-endian)::

    c0 || c1 || c00 || c11 || c01 || first_message || len(id) || id || nonce

``first_message`` is the encoded block of auxiliary commitments (alpha and
beta vectors) produced by :mod:`biozero.mulproof`.  It must be hashed: a
challenge computed without it is known before alpha/beta are fixed, and any
statement can then be "proved" by solving for alpha/beta.  Passing
``first_message=None`` reproduces that unbound layout; it exists only so the
weakness can be demonstrated in tests.

``len(id)`` is 4 bytes, ``nonce`` 8 bytes, both big-endian.  ``framed=False``
drops the id length prefix.
"""

from __future__ import annotations

import hashlib
from collections.abc import Sequence

from biozero import metering
from biozero.group import GroupParams

NONCE_MAX = 2**64 - 1


class TranscriptError(ValueError):
    pass


def encode_id(identity: bytes | str) -> bytes:
    if isinstance(identity, str):
        identity = identity.encode("utf-8")
    return bytes(identity)


def build_transcript(
    params: GroupParams,
    c0: Sequence[int],
    c1: Sequence[int],
    c00: Sequence[int],
    c11: Sequence[int],
    c01: Sequence[int],
    identity: bytes | str,
    nonce: int,
    first_message: bytes | None = None,
    framed: bool = True,
) -> bytes:
    n = len(c0)
    if any(len(v) != n for v in (c1, c00, c11, c01)):
        raise TranscriptError("commitment vectors differ in length")
    if not 0 <= nonce <= NONCE_MAX:
        raise TranscriptError("nonce must fit in 64 bits")
    ident = encode_id(identity)
    enc = params.encode_element
    parts = [enc(x) for vec in (c0, c1, c00, c11, c01) for x in vec]
    if first_message is not None:
        parts.append(first_message)
    if framed:
        parts.append(len(ident).to_bytes(4, "big"))
    parts.append(ident)
    parts.append(nonce.to_bytes(8, "big"))
    return b"".join(parts)


def challenge_from_bytes(params: GroupParams, transcript: bytes) -> int:
    metering.count("hash")
    return int.from_bytes(hashlib.sha256(transcript).digest(), "big") % params.q


def derive_challenge(
    params: GroupParams,
    c0: Sequence[int],
    c1: Sequence[int],
    c00: Sequence[int],
    c11: Sequence[int],
    c01: Sequence[int],
    identity: bytes | str,
    nonce: int,
    first_message: bytes | None = None,
    framed: bool = True,
) -> int:
    """SHA-256 of the transcript, read big-endian and reduced mod q."""
    data = build_transcript(
        params, c0, c1, c00, c11, c01, identity, nonce, first_message, framed
    )
    return challenge_from_bytes(params, data)
