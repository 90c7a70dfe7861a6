"""Sigma proofs that committed values multiply correctly.

Two shapes share the same algebra:

* :func:`prove_product` / :func:`verify_product` - one triple
  (c0, c1, c01) with c01 committing to f0*f1, challenge supplied by the
  caller (interactive form).
* :func:`prove_auth_relations` / :func:`verify_auth_relations` - for every
  index i of the biometric vectors, that c00_i, c11_i and c01_i commit to
  f0_i^2, f1_i^2 and f0_i*f1_i.  Five equation families per index.

Product check (base c0 on the left, so the exponent comes out as f0*f1)::

    c0^z3 * h^z5 == gamma * c01^e,   z5 = b5 + e*(r01 - r0*f1)

In ``repaired`` mode every index draws its own b1..b7.  ``paper-faithful``
mode shares one set across all indices; then z1_i - z1_j = e*(f0_i - f0_j)
is public, so that mode is kept only for comparing against the original
layout.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, fields

from biozero.group import GroupParams
from biozero.pedersen import commit_value

REPAIRED = "repaired"
PAPER_FAITHFUL = "paper-faithful"
MODES = {REPAIRED: 1, PAPER_FAITHFUL: 2}
MODE_BY_TAG = {v: k for k, v in MODES.items()}

FAMILIES = {
    1: "opening of c0 (alpha1)",
    2: "square f0*f0 in c00 (beta1)",
    3: "opening of c1 (alpha2)",
    4: "square f1*f1 in c11 (beta2)",
    5: "product f0*f1 in c01 (beta3)",
}


class RelationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# single product


@dataclass(frozen=True)
class ProductWitness:
    f0: int
    r0: int
    f1: int
    r1: int
    r01: int

    def commitments(self, params: GroupParams) -> tuple[int, int, int]:
        return (
            commit_value(params, self.f0, self.r0),
            commit_value(params, self.f1, self.r1),
            commit_value(params, self.f0 * self.f1, self.r01),
        )


@dataclass(frozen=True)
class ProductProof:
    alpha: int
    beta: int
    gamma: int
    z1: int
    z2: int
    z3: int
    z4: int
    z5: int


def prove_product(
    params: GroupParams,
    witness: ProductWitness,
    e: int,
    rng=None,
    blinders: Sequence[int] | None = None,
) -> ProductProof:
    """Respond to challenge ``e``.

    ``blinders`` fixes (b1, ..., b5); reusing them across two challenges is
    exactly what the special-soundness extractor needs, and must never
    happen outside tests.
    """
    q = params.q
    if blinders is None:
        blinders = [params.random_scalar(rng) for _ in range(5)]
    b1, b2, b3, b4, b5 = (b % q for b in blinders)
    w = witness
    c0 = commit_value(params, w.f0, w.r0)
    return ProductProof(
        alpha=commit_value(params, b1, b2),
        beta=commit_value(params, b3, b4),
        gamma=commit_value(params, b3, b5, base_g=c0),
        z1=(b1 + e * w.f0) % q,
        z2=(b2 + e * w.r0) % q,
        z3=(b3 + e * w.f1) % q,
        z4=(b4 + e * w.r1) % q,
        z5=(b5 + e * (w.r01 - w.r0 * w.f1)) % q,
    )


def verify_product(
    params: GroupParams, c0: int, c1: int, c01: int, e: int, proof: ProductProof
) -> bool:
    ex, mul, g, h = params.exp_public, params.mul, params.g, params.h
    pr = proof
    if mul(ex(g, pr.z1), ex(h, pr.z2)) != mul(pr.alpha, ex(c0, e)):
        return False
    if mul(ex(g, pr.z3), ex(h, pr.z4)) != mul(pr.beta, ex(c1, e)):
        return False
    return mul(ex(c0, pr.z3), ex(h, pr.z5)) == mul(pr.gamma, ex(c01, e))


# ---------------------------------------------------------------------------
# batched relations for authentication


@dataclass(frozen=True)
class AuthRelationProof:
    """Auxiliary commitments (first message) and responses, index-aligned.

    ``alpha1``/``alpha2`` hold N entries in repaired mode and a single entry
    in paper-faithful mode.
    """

    mode: str
    alpha1: tuple[int, ...]
    alpha2: tuple[int, ...]
    beta1: tuple[int, ...]
    beta2: tuple[int, ...]
    beta3: tuple[int, ...]
    z1: tuple[int, ...]
    z2: tuple[int, ...]
    z3: tuple[int, ...]
    z4: tuple[int, ...]
    z5: tuple[int, ...]
    z6: tuple[int, ...]
    z7: tuple[int, ...]

    ELEMENT_FIELDS = ("alpha1", "alpha2", "beta1", "beta2", "beta3")
    SCALAR_FIELDS = ("z1", "z2", "z3", "z4", "z5", "z6", "z7")

    @property
    def n(self) -> int:
        return len(self.beta1)

    def first_message(self, params: GroupParams) -> bytes:
        return first_message_bytes(
            params, self.mode, self.alpha1, self.alpha2, self.beta1, self.beta2, self.beta3
        )

    def well_formed(self) -> str | None:
        """Reason the shape is wrong, or None."""
        if self.mode not in MODES:
            return f"unknown mode {self.mode!r}"
        n = self.n
        n_alpha = n if self.mode == REPAIRED else 1
        for name in ("alpha1", "alpha2"):
            if len(getattr(self, name)) != n_alpha:
                return f"{name} has {len(getattr(self, name))} entries, expected {n_alpha}"
        for name in ("beta2", "beta3", *self.SCALAR_FIELDS):
            if len(getattr(self, name)) != n:
                return f"{name} has {len(getattr(self, name))} entries, expected {n}"
        return None


def first_message_bytes(params, mode, alpha1, alpha2, beta1, beta2, beta3) -> bytes:
    enc = params.encode_element
    parts = [bytes([MODES[mode]])]
    for vec in (alpha1, alpha2, beta1, beta2, beta3):
        parts.extend(enc(x) for x in vec)
    return b"".join(parts)


@dataclass(frozen=True)
class RelationCheck:
    """Outcome of :func:`verify_auth_relations`; truthy on success."""

    ok: bool
    family: int | None = None
    index: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "all relations hold"
        if self.family is None:
            return self.reason
        return f"family {self.family} ({FAMILIES[self.family]}) failed at index {self.index}"


Challenge = int | Callable[[bytes], int]


def prove_auth_relations(
    params: GroupParams,
    f0: Sequence[int],
    r0: Sequence[int],
    f1: Sequence[int],
    r1: Sequence[int],
    r00: Sequence[int],
    r11: Sequence[int],
    r01: Sequence[int],
    c0: Sequence[int],
    c1: Sequence[int],
    challenge: Challenge,
    rng=None,
    mode: str = REPAIRED,
    blinders: Sequence[Sequence[int]] | None = None,
) -> tuple[AuthRelationProof, int]:
    """Build the relation proof; returns ``(proof, e)``.

    ``challenge`` is either a fixed scalar or a callable receiving the
    encoded first message (alpha/beta block) and returning e - the
    Fiat-Shamir path.  ``blinders`` optionally fixes b1..b7 per index (one
    row in paper-faithful mode) for golden tests.
    """
    n = len(f0)
    if n == 0:
        raise RelationError("empty vectors")
    if any(len(v) != n for v in (r0, f1, r1, r00, r11, r01, c0, c1)):
        raise RelationError("vector length mismatch")
    if mode not in MODES:
        raise RelationError(f"unknown mode {mode!r}")
    q = params.q
    rows = n if mode == REPAIRED else 1
    if blinders is None:
        blinders = [[params.random_scalar(rng) for _ in range(7)] for _ in range(rows)]
    if len(blinders) != rows or any(len(b) != 7 for b in blinders):
        raise RelationError(f"expected {rows} rows of 7 blinders")
    b = [[x % q for x in row] for row in blinders]

    alpha1 = tuple(commit_value(params, row[0], row[1]) for row in b)
    alpha2 = tuple(commit_value(params, row[2], row[3]) for row in b)
    beta1, beta2, beta3 = [], [], []
    for i in range(n):
        b1, _, b3, _, b5, b6, b7 = b[i if rows == n else 0]
        beta1.append(commit_value(params, b1, b5, base_g=c0[i]))
        beta2.append(commit_value(params, b3, b6, base_g=c1[i]))
        beta3.append(commit_value(params, b3, b7, base_g=c0[i]))

    if callable(challenge):
        e = challenge(first_message_bytes(params, mode, alpha1, alpha2, beta1, beta2, beta3))
    else:
        e = challenge
    e %= q

    z = [[] for _ in range(7)]
    for i in range(n):
        b1, b2, b3, b4, b5, b6, b7 = b[i if rows == n else 0]
        z[0].append((b1 + e * f0[i]) % q)
        z[1].append((b2 + e * r0[i]) % q)
        z[2].append((b3 + e * f1[i]) % q)
        z[3].append((b4 + e * r1[i]) % q)
        z[4].append((b5 + e * (r00[i] - r0[i] * f0[i])) % q)
        z[5].append((b6 + e * (r11[i] - r1[i] * f1[i])) % q)
        z[6].append((b7 + e * (r01[i] - r0[i] * f1[i])) % q)

    proof = AuthRelationProof(
        mode, alpha1, alpha2, tuple(beta1), tuple(beta2), tuple(beta3), *map(tuple, z)
    )
    return proof, e


def verify_auth_relations(
    params: GroupParams,
    c0: Sequence[int],
    c1: Sequence[int],
    c00: Sequence[int],
    c11: Sequence[int],
    c01: Sequence[int],
    e: int,
    proof: AuthRelationProof,
) -> RelationCheck:
    """Check all 5N equations; report the first failing family and index."""
    n = len(c0)
    if any(len(v) != n for v in (c1, c00, c11, c01)) or proof.n != n:
        return RelationCheck(False, reason="vector length mismatch")
    shape = proof.well_formed()
    if shape:
        return RelationCheck(False, reason=shape)

    ex, mul, g, h = params.exp_public, params.mul, params.g, params.h
    shared = proof.mode == PAPER_FAITHFUL
    pr = proof
    for i in range(n):
        a1 = pr.alpha1[0 if shared else i]
        a2 = pr.alpha2[0 if shared else i]
        if mul(ex(g, pr.z1[i]), ex(h, pr.z2[i])) != mul(a1, ex(c0[i], e)):
            return RelationCheck(False, 1, i)
        if mul(ex(c0[i], pr.z1[i]), ex(h, pr.z5[i])) != mul(pr.beta1[i], ex(c00[i], e)):
            return RelationCheck(False, 2, i)
        if mul(ex(g, pr.z3[i]), ex(h, pr.z4[i])) != mul(a2, ex(c1[i], e)):
            return RelationCheck(False, 3, i)
        if mul(ex(c1[i], pr.z3[i]), ex(h, pr.z6[i])) != mul(pr.beta2[i], ex(c11[i], e)):
            return RelationCheck(False, 4, i)
        if mul(ex(c0[i], pr.z3[i]), ex(h, pr.z7[i])) != mul(pr.beta3[i], ex(c01[i], e)):
            return RelationCheck(False, 5, i)
    return RelationCheck(True)


def proof_fields(proof: AuthRelationProof) -> list[str]:
    return [f.name for f in fields(proof) if f.name != "mode"]
