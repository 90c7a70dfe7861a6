"""Verifier state machine standing in for the on-chain contract.

A verification runs these stages in order and stops at the first failure::

    0 decode      parse the serialized proof
    1 nonce       nonce must exceed the last accepted one for this id
    2 registry    id must be registered (c0 fetched here)
    3 challenge   recompute e from the transcript
    4 relations   the 5N product/opening equations
    5 distance    fold c00, c11, c01 into c'_d
    6 range       range proof for c'_d < epsilon

Only a pass changes the registry (``last_nonce``); every request, passing
or not, is appended to the event log.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from biozero import metering
from biozero.encoding import DecodeError, Reader, Writer
from biozero.group import GroupParams
from biozero.metering import OpCounts
from biozero.mulproof import verify_auth_relations
from biozero.protocol import MAX_ID_LEN, AuthProof, distance_commitment
from biozero.rangeproof import RangeKeys, verify_range
from biozero.transcript import derive_challenge

STAGES = {
    0: "decode",
    1: "nonce",
    2: "registry",
    3: "challenge",
    4: "relations",
    5: "distance",
    6: "range",
}
STAGE_BY_NAME = {v: k for k, v in STAGES.items()}

LEDGER_MAGIC = b"BZLG"
LEDGER_VERSION = 1

EVENT_REGISTER = 0
EVENT_AUTH = 1


class LedgerError(Exception):
    pass


@dataclass
class RegistryEntry:
    identity: bytes
    c0: tuple[int, ...]
    last_nonce: int | None = None


@dataclass(frozen=True)
class CostReport:
    stages: tuple[OpCounts, ...]

    @classmethod
    def from_meter(cls, meter: metering.Meter) -> "CostReport":
        return cls(tuple(meter.stages.get(s, OpCounts()) for s in STAGES))

    @classmethod
    def empty(cls) -> "CostReport":
        return cls(tuple(OpCounts() for _ in STAGES))

    def stage(self, key: int | str) -> OpCounts:
        if isinstance(key, str):
            key = STAGE_BY_NAME[key]
        return self.stages[key]

    def span(self, first: int, last: int) -> OpCounts:
        total = OpCounts()
        for s in range(first, last + 1):
            total = total + self.stages[s]
        return total

    @property
    def total(self) -> OpCounts:
        return self.span(0, len(STAGES) - 1)

    def to_dict(self) -> dict:
        return {
            STAGES[i]: {"exp": c.exp, "mul": c.mul, "hash": c.hash}
            for i, c in enumerate(self.stages)
        }


@dataclass(frozen=True)
class VerificationResult:
    passed: bool
    stage: int | None  # failing stage; None on pass
    diagnostic: str
    cost: CostReport
    nonce: int | None = None

    def __bool__(self) -> bool:
        return self.passed

    @property
    def stage_name(self) -> str | None:
        return None if self.stage is None else STAGES[self.stage]

    def summary(self) -> str:
        if self.passed:
            return "pass"
        return f"fail at stage {self.stage} ({self.stage_name}): {self.diagnostic}"


@dataclass(frozen=True)
class Event:
    kind: int
    digest: bytes
    passed: bool
    stage: int | None
    diagnostic: str
    epsilon: int
    cost: CostReport
    payload: bytes


def _registration_payload(params: GroupParams, identity: bytes, c0: Sequence[int]) -> bytes:
    return Writer(params).blob(identity).u32(len(c0)).elements(c0).getvalue()


@dataclass
class ReverifyReport:
    events: int
    mismatches: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


class Ledger:
    """Registry, replay protection, verification and an append-only log.

    Verifications for one id are serialized; different ids may verify
    concurrently.
    """

    def __init__(self, params: GroupParams):
        self.params = params
        self.registry: dict[bytes, RegistryEntry] = {}
        self.events: list[Event] = []
        self._lock = threading.Lock()
        self._id_locks: dict[bytes, threading.Lock] = {}

    # -- registration -----------------------------------------------------

    def register_identity(self, identity: bytes | str, c0: Sequence[int]) -> RegistryEntry:
        if isinstance(identity, str):
            identity = identity.encode("utf-8")
        c0 = tuple(int(x) for x in c0)
        payload = _registration_payload(self.params, identity, c0)
        with self._lock:
            if identity in self.registry:
                problem = "identity already registered"
            elif not c0:
                problem = "empty commitment vector"
            elif not all(self.params.is_element(x) for x in c0):
                problem = "commitment is not a subgroup element"
            else:
                problem = ""
            passed = not problem
            self.events.append(
                Event(EVENT_REGISTER, hashlib.sha256(payload).digest(), passed,
                      None if passed else STAGE_BY_NAME["registry"], problem or "registered",
                      0, CostReport.empty(), payload)
            )
            if not passed:
                raise LedgerError(problem)
            entry = RegistryEntry(identity, c0)
            self.registry[identity] = entry
            return entry

    def lookup(self, identity: bytes | str) -> RegistryEntry | None:
        if isinstance(identity, str):
            identity = identity.encode("utf-8")
        return self.registry.get(identity)

    # -- verification -----------------------------------------------------

    def _id_lock(self, identity: bytes) -> threading.Lock:
        with self._lock:
            return self._id_locks.setdefault(identity, threading.Lock())

    def verify_auth(
        self, keys: RangeKeys, epsilon: int, gamma: AuthProof | bytes
    ) -> VerificationResult:
        params = self.params
        if isinstance(gamma, AuthProof):
            payload = gamma.to_bytes(params)
        else:
            payload = bytes(gamma)
            gamma = None

        with metering.metered() as meter:
            meter.enter(0)
            if gamma is None:
                try:
                    gamma = AuthProof.from_bytes(params, payload)
                except ValueError as exc:
                    result = self._fail(meter, 0, f"malformed proof: {exc}")
                    return self._log(result, epsilon, payload)
            with self._id_lock(gamma.identity):
                result = self._run(keys, epsilon, gamma, meter)
                return self._log(result, epsilon, payload)

    def _fail(self, meter, stage: int, why: str, nonce=None) -> VerificationResult:
        return VerificationResult(False, stage, why, CostReport.from_meter(meter), nonce)

    def _run(self, keys: RangeKeys, epsilon: int, gamma: AuthProof, meter) -> VerificationResult:
        params = self.params

        meter.enter(1)
        entry = self.registry.get(gamma.identity)
        if entry is not None and entry.last_nonce is not None and gamma.nonce <= entry.last_nonce:
            return self._fail(
                meter, 1, f"nonce {gamma.nonce} not greater than last used {entry.last_nonce}"
            )

        meter.enter(2)
        if entry is None:
            return self._fail(meter, 2, "unknown identity")
        c0 = entry.c0
        if len(c0) != gamma.n:
            return self._fail(meter, 2, f"proof has {gamma.n} entries, registration has {len(c0)}")

        meter.enter(3)
        rel = gamma.relations
        e = derive_challenge(
            params, c0, gamma.c1, gamma.c00, gamma.c11, gamma.c01,
            gamma.identity, gamma.nonce, rel.first_message(params),
        )

        meter.enter(4)
        check = verify_auth_relations(params, c0, gamma.c1, gamma.c00, gamma.c11, gamma.c01, e, rel)
        if not check:
            return self._fail(meter, 4, check.describe())

        meter.enter(5)
        c_d = distance_commitment(params, gamma.c00, gamma.c11, gamma.c01)

        meter.enter(6)
        if keys.params.fingerprint != params.fingerprint:
            return self._fail(meter, 6, "range keys belong to a different group")
        if not verify_range(keys, c_d.value, epsilon, gamma.pi):
            return self._fail(meter, 6, "range proof rejected: distance not shown below threshold")

        entry.last_nonce = gamma.nonce
        return VerificationResult(True, None, "pass", CostReport.from_meter(meter), gamma.nonce)

    def _log(self, result: VerificationResult, epsilon: int, payload: bytes) -> VerificationResult:
        event = Event(
            EVENT_AUTH, hashlib.sha256(payload).digest(), result.passed, result.stage,
            result.diagnostic, epsilon, result.cost, payload,
        )
        with self._lock:
            self.events.append(event)
        return result

    def reconstruct_distance_commitment(self, gamma: AuthProof):
        return distance_commitment(self.params, gamma.c00, gamma.c11, gamma.c01)

    # -- audit ------------------------------------------------------------

    def reverify_log(self, keys: RangeKeys) -> ReverifyReport:
        """Replay every logged request on an empty ledger and compare outcomes."""
        replay = Ledger(self.params)
        report = ReverifyReport(len(self.events))
        for i, ev in enumerate(list(self.events)):
            if ev.kind == EVENT_REGISTER:
                r = Reader(self.params, ev.payload)
                identity = r.blob(MAX_ID_LEN)
                c0 = r.elements(r.u32())
                try:
                    replay.register_identity(identity, c0)
                    passed = True
                except LedgerError:
                    passed = False
                if passed != ev.passed:
                    report.mismatches.append((i, "registration outcome differs"))
                continue
            res = replay.verify_auth(keys, ev.epsilon, ev.payload)
            if res.passed != ev.passed or res.stage != ev.stage:
                report.mismatches.append((i, f"recorded {ev.passed}/{ev.stage}, replayed {res.summary()}"))
            elif res.cost != ev.cost:
                report.mismatches.append((i, "cost report differs"))
        return report

    # -- persistence ------------------------------------------------------

    def to_bytes(self) -> bytes:
        params = self.params
        w = Writer(params)
        w.raw(LEDGER_MAGIC).u8(LEDGER_VERSION).raw(params.fingerprint)
        with self._lock:
            entries = list(self.registry.values())
            events = list(self.events)
        w.u32(len(entries))
        for entry in entries:
            w.blob(entry.identity)
            w.u8(entry.last_nonce is not None).u64(entry.last_nonce or 0)
            w.u32(len(entry.c0)).elements(entry.c0)
        w.u32(len(events))
        for ev in events:
            w.u8(ev.kind).raw(ev.digest).u8(ev.passed).u8(255 if ev.stage is None else ev.stage)
            w.blob(ev.diagnostic.encode("utf-8"))
            w.blob(ev.epsilon.to_bytes(ev.epsilon.bit_length() // 8 + 1, "big", signed=True))
            for c in ev.cost.stages:
                w.u64(c.exp).u64(c.mul).u64(c.hash)
            w.blob(ev.payload)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, params: GroupParams, blob: bytes) -> "Ledger":
        r = Reader(params, blob)
        if r.raw(4) != LEDGER_MAGIC:
            raise DecodeError("not a ledger file")
        if r.u8() != LEDGER_VERSION:
            raise DecodeError("unsupported ledger version")
        if r.raw(32) != params.fingerprint:
            raise DecodeError("ledger belongs to a different group")
        ledger = cls(params)
        for _ in range(r.u32()):
            identity = r.blob(MAX_ID_LEN)
            has_nonce, nonce = r.u8(), r.u64()
            c0 = r.elements(r.u32())
            ledger.registry[identity] = RegistryEntry(identity, c0, nonce if has_nonce else None)
        for _ in range(r.u32()):
            kind, digest, passed, stage = r.u8(), r.raw(32), bool(r.u8()), r.u8()
            diagnostic = r.blob().decode("utf-8")
            epsilon = int.from_bytes(r.blob(), "big", signed=True)
            cost = CostReport(tuple(OpCounts(r.u64(), r.u64(), r.u64()) for _ in STAGES))
            payload = r.blob()
            ledger.events.append(
                Event(kind, digest, passed, None if stage == 255 else stage,
                      diagnostic, epsilon, cost, payload)
            )
        r.done()
        return ledger

    def save(self, path: str | os.PathLike) -> None:
        """Write atomically: temp file in the same directory, then rename."""
        path = Path(path)
        data = self.to_bytes()
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, params: GroupParams, path: str | os.PathLike) -> "Ledger":
        return cls.from_bytes(params, Path(path).read_bytes())
