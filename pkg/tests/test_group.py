import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from biozero import group, metering
from biozero.group import GroupError, GroupParams, montgomery_ladder, setup_group


def naive_pow(x, k, p):
    acc = 1
    for _ in range(k):
        acc = acc * x % p
    return acc


def order(x, p):
    k, acc = 1, x % p
    while acc != 1:
        acc = acc * x % p
        k += 1
    return k


def test_toy_profile_constants(toy):
    assert (toy.p, toy.q, toy.g, toy.h) == (23, 11, 2, 3)
    assert order(2, 23) == 11
    assert order(3, 23) == 11


def test_toy_is_deterministic():
    assert setup_group("toy") == setup_group("toy")


def test_unknown_profile():
    with pytest.raises(GroupError):
        setup_group("tiny")


def test_production_constants_regenerate(prod):
    p, q = group.generate_schnorr_group(2048, 256)
    assert (p, q) == (prod.p, prod.q)
    assert p.bit_length() == 2048 and q.bit_length() == 256
    assert (p - 1) % q == 0


def test_production_generators(prod):
    assert prod.is_element(prod.g) and prod.g != 1
    assert prod.is_element(prod.h) and prod.h != 1
    assert prod.g != prod.h
    # h is derived from g, never chosen by hand
    expected = prod.hash_to_group(prod.encode_element(prod.g) + group.GENERATOR_H_TAG)
    assert prod.h == expected


def test_production_encoding_length(prod):
    assert prod.element_len == math.ceil(math.log2(prod.p) / 8) == 256
    assert prod.scalar_len == 32


def test_exp_examples(toy):
    assert toy.exp(2, 0) == 1
    assert toy.exp(2, 5) == 9
    assert toy.exp(toy.g, toy.q) == toy.identity


def test_exp_matches_naive_oracle_exhaustively(toy):
    subgroup = sorted({pow(2, k, 23) for k in range(11)})
    assert len(subgroup) == 11
    for x in subgroup:
        for k in range(11):
            assert toy.exp(x, k) == naive_pow(x, k, 23), (x, k)
            assert toy.exp_public(x, k) == naive_pow(x, k, 23), (x, k)


def test_ladder_iterations_do_not_depend_on_scalar(prod):
    nbits = prod.q.bit_length()
    for k in (0, 1, prod.q - 1, 1 << 200, 0x5555):
        value, steps = montgomery_ladder(prod.h * prod.g % prod.p, k, prod.p, nbits)
        assert steps == nbits
        assert value == pow(prod.h * prod.g % prod.p, k, prod.p)


def test_fixed_base_table_matches_pow(prod):
    rng = random.Random(3)
    for _ in range(20):
        k = rng.randrange(prod.q)
        assert prod.exp(prod.g, k) == pow(prod.g, k, prod.p)
        assert prod.exp(prod.h, k) == pow(prod.h, k, prod.p)


def test_mul_and_inv_examples(toy):
    assert toy.mul(6, 4) == 1
    assert toy.mul(9, toy.identity) == 9
    assert toy.inv(toy.identity) == toy.identity
    assert toy.inv(6) == 4
    assert [x for x in range(1, 23) if 6 * x % 23 == 1] == [4]


@given(st.integers(0, 10), st.integers(0, 10), st.integers(0, 10))
def test_toy_group_laws(i, j, k):
    toy = setup_group("toy")
    a, b, c = (pow(2, t, 23) for t in (i, j, k))
    assert toy.mul(toy.mul(a, b), c) == toy.mul(a, toy.mul(b, c))
    assert toy.mul(a, b) == toy.mul(b, a)
    assert toy.mul(a, toy.inv(a)) == toy.identity
    assert toy.exp(a, (j + k) % 11) == toy.mul(toy.exp(a, j), toy.exp(a, k))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**256), st.integers(0, 2**256))
def test_production_exp_additive(x, y):
    prod = setup_group("production")
    base = prod.hash_to_group(b"test-base")
    assert prod.exp(base, x + y) == prod.mul(prod.exp(base, x), prod.exp(base, y))


def test_random_scalar(toy, prod):
    a = [toy.random_scalar(random.Random(5)) for _ in range(2)]
    r1, r2 = random.Random(9), random.Random(9)
    assert [prod.random_scalar(r1) for _ in range(2)] == [prod.random_scalar(r2) for _ in range(2)]
    assert a[0] == a[1]
    rng = random.Random(11)
    draws = [toy.random_scalar(rng) for _ in range(10_000)]
    assert set(draws) == set(range(11))
    assert all(0 <= x < prod.q for x in (prod.random_scalar() for _ in range(100)))


def test_hash_to_group(toy, prod):
    for params in (toy, prod):
        x = params.hash_to_group(b"seed")
        assert x == params.hash_to_group(b"seed")
        assert params.exp_public(x, params.q) == params.identity
        assert params.is_element(x)
    assert prod.hash_to_group(b"tag-a") != prod.hash_to_group(b"tag-b")


def test_element_encoding_round_trip(toy, prod):
    assert toy.encode_element(9) == b"\x09"
    assert toy.decode_element(b"\x09") == 9
    x = prod.hash_to_group(b"x")
    assert prod.decode_element(prod.encode_element(x)) == x
    for bad in (b"\x00", b"\x17", b"\x00\x01"):
        with pytest.raises(GroupError):
            toy.decode_element(bad)


def test_scalar_encoding(toy):
    assert toy.encode_scalar(10) == b"\x0a"
    assert toy.encode_scalar(12) == b"\x01"
    with pytest.raises(GroupError):
        toy.decode_scalar(b"\x0b")


def test_exp_is_metered(toy):
    with metering.metered() as meter:
        toy.exp(2, 3)
        toy.mul(2, 3)
    assert meter.stages[0].exp == 1 and meter.stages[0].mul == 1


def test_fingerprint_distinguishes_groups(toy, prod):
    other = GroupParams("toy", 23, 11, 2, 4)
    assert toy.fingerprint != prod.fingerprint
    assert toy.fingerprint != other.fingerprint
