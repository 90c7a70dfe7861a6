import random

import pytest

from biozero import protocol, rangeproof
from biozero.group import setup_group
from biozero.ledger import Ledger


@pytest.fixture(scope="session")
def toy():
    return setup_group("toy")


@pytest.fixture(scope="session")
def prod():
    return setup_group("production")


@pytest.fixture(scope="session")
def prod_keys(prod):
    return rangeproof.setup(prod, 32, random.Random(1))


@pytest.fixture(scope="session")
def toy_keys(toy):
    # 2^(L+1) <= 11 caps the toy range domain at L = 2
    return rangeproof.setup(toy, 2, random.Random(1))


def honest_session(params, keys, rng, n, epsilon=10_000, identity="alice", mode="repaired"):
    """Register a random identity and build one accepted proof.

    Returns (ledger, record, gamma, secrets).
    """
    from biozero.bench import SynthError, synth_features

    while True:
        # a few targets are not sums of n squares when n is tiny; redraw
        try:
            f0, f1, _ = synth_features(rng.getrandbits(64), n, 8, rng.randrange(epsilon))
            break
        except SynthError:
            continue
    record = protocol.register(params, identity, f0, rng)
    ledger = Ledger(params)
    ledger.register_identity(record.identity, record.c0)
    gamma, sec = protocol.generate_auth_session(
        params, keys, record, f1, record.next_nonce(), epsilon, rng, mode
    )
    return ledger, record, gamma, sec


def mutate_gamma(params, gamma, rng):
    """Change exactly one serialized field of ``gamma``.

    Returns ``(field_label, blob)``.  Element fields get a different subgroup
    element, scalar fields a different scalar, the range proof one flipped
    byte, the id a different id and the nonce a larger nonce.
    """
    import dataclasses

    from biozero.rangeproof import RangeProof

    rel = gamma.relations
    choices = ["identity", "nonce", "pi", "c1", "c00", "c11", "c01"]
    choices += list(rel.ELEMENT_FIELDS) + list(rel.SCALAR_FIELDS)
    name = rng.choice(choices)

    def tweak_vec(vec, fresh):
        i = rng.randrange(len(vec))
        out = list(vec)
        while True:
            v = fresh()
            if v != out[i]:
                out[i] = v
                return tuple(out), i

    new_element = lambda: params.hash_to_group(rng.getrandbits(64).to_bytes(8, "big"))
    new_scalar = lambda: params.random_scalar(rng)

    if name == "identity":
        g2 = dataclasses.replace(gamma, identity=gamma.identity + b"~")
        label = name
    elif name == "nonce":
        g2 = dataclasses.replace(gamma, nonce=gamma.nonce + rng.randint(1, 1000))
        label = name
    elif name == "pi":
        data = bytearray(gamma.pi.to_bytes())
        pos = rng.randrange(len(data))
        data[pos] ^= rng.randrange(1, 256)
        g2 = dataclasses.replace(gamma, pi=RangeProof.from_bytes(bytes(data)))
        label = f"pi[{pos}]"
    elif name in ("c1", "c00", "c11", "c01"):
        vec, i = tweak_vec(getattr(gamma, name), new_element)
        g2 = dataclasses.replace(gamma, **{name: vec})
        label = f"{name}[{i}]"
    else:
        fresh = new_element if name in rel.ELEMENT_FIELDS else new_scalar
        vec, i = tweak_vec(getattr(rel, name), fresh)
        g2 = dataclasses.replace(gamma, relations=dataclasses.replace(rel, **{name: vec}))
        label = f"{name}[{i}]"
    return label, g2.to_bytes(params)


def witness_needles(params, sec):
    """Byte strings that would betray a run's secrets if found in ledger state.

    Blinding scalars are high-entropy, so each one is searched on its own
    (normative scalar encoding and decimal text).  Features and d are small
    integers whose encodings also occur as counters and length prefixes, so
    the feature vectors are searched whole instead.
    """
    needles = set()
    for x in (*sec.r0, *sec.r1, *sec.r00, *sec.r11, *sec.r01, sec.r_d):
        needles.add(params.encode_scalar(x))
        needles.add(str(x).encode())
    for vec in (sec.f0, sec.f1):
        needles.add(bytes(vec))
        needles.add(b"".join(params.encode_scalar(v) for v in vec))
        needles.add(b"".join(v.to_bytes(4, "big") for v in vec))
        needles.add(",".join(map(str, vec)).encode())
    return needles
