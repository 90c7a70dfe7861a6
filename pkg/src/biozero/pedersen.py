"""Pedersen commitments c = base_g^f * base_h^r and their homomorphisms."""

from __future__ import annotations

from dataclasses import dataclass

from biozero.group import GroupParams


class CommitmentError(ValueError):
    """Protocol misuse, e.g. combining commitments made over different bases."""


@dataclass(frozen=True)
class Opening:
    f: int
    r: int

    def reduced(self, params: GroupParams) -> "Opening":
        return Opening(self.f % params.q, self.r % params.q)


@dataclass(frozen=True)
class Commitment:
    value: int
    bases: tuple[int, int]

    def _check_same_bases(self, other: "Commitment") -> None:
        if self.bases != other.bases:
            raise CommitmentError("commitments use different base pairs")


def commit_value(params: GroupParams, f: int, r: int, base_g: int | None = None) -> int:
    """Raw group element base_g^f * h^r.

    Hot-path helper for the proof modules; ``base_g`` defaults to g.
    """
    base_g = params.g if base_g is None else base_g
    return params.mul(params.exp(base_g, f), params.exp(params.h, r))


def commit(
    params: GroupParams,
    opening: Opening,
    base_g: int | None = None,
    base_h: int | None = None,
) -> Commitment:
    base_g = params.g if base_g is None else base_g
    base_h = params.h if base_h is None else base_h
    value = params.mul(params.exp(base_g, opening.f), params.exp(base_h, opening.r))
    return Commitment(value, (base_g, base_h))


def add(params: GroupParams, a: Commitment, b: Commitment) -> Commitment:
    a._check_same_bases(b)
    return Commitment(params.mul(a.value, b.value), a.bases)


def sub(params: GroupParams, a: Commitment, b: Commitment) -> Commitment:
    a._check_same_bases(b)
    return Commitment(params.mul(a.value, params.inv(b.value)), a.bases)


def scale(params: GroupParams, a: Commitment, k: int) -> Commitment:
    # k is public (e.g. the constant 2 in the distance fold)
    return Commitment(params.exp_public(a.value, k), a.bases)


def verify_opening(params: GroupParams, c: Commitment, opening: Opening) -> bool:
    base_g, base_h = c.bases
    return commit(params, opening.reduced(params), base_g, base_h).value == c.value


def identity(params: GroupParams) -> Commitment:
    return Commitment(params.identity, (params.g, params.h))
