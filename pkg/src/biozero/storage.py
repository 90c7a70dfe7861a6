"""On-disk formats used by the CLI.

JSON for parameters, range keys and the user's registration record;
the binary encodings from :mod:`biozero.protocol` and :mod:`biozero.ledger`
for proofs and ledger state.  Feature files are one integer per line.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from biozero.group import GroupError, GroupParams, setup_group
from biozero.protocol import RegistrationRecord
from biozero.rangeproof import RangeKeys

PARAMS_FORMAT = "biozero-params/1"
KEYS_FORMAT = "biozero-range-keys/1"
RECORD_FORMAT = "biozero-registration/1"


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, obj: dict) -> None:
    atomic_write(path, (json.dumps(obj, indent=2) + "\n").encode())


def _read_json(path, fmt: str) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("format") != fmt:
        raise ValueError(f"{path}: expected format {fmt!r}, got {data.get('format')!r}")
    return data


def save_params(path, params: GroupParams) -> None:
    _write_json(path, {
        "format": PARAMS_FORMAT,
        "profile": params.name,
        "p": hex(params.p),
        "q": hex(params.q),
        "g": hex(params.g),
        "h": hex(params.h),
        "fingerprint": params.fingerprint.hex(),
    })


def load_params(path) -> GroupParams:
    data = _read_json(path, PARAMS_FORMAT)
    params = setup_group(data["profile"])
    stored = tuple(int(data[k], 16) for k in ("p", "q", "g", "h"))
    if stored != (params.p, params.q, params.g, params.h):
        raise GroupError(f"{path}: parameters do not match profile {data['profile']!r}")
    return params


def save_keys(path, keys: RangeKeys) -> None:
    _write_json(path, {"format": KEYS_FORMAT, **keys.to_dict()})


def load_keys(path, params: GroupParams) -> RangeKeys:
    return RangeKeys.from_dict(params, _read_json(path, KEYS_FORMAT))


def save_record(path, record: RegistrationRecord) -> None:
    _write_json(path, {"format": RECORD_FORMAT, **record.to_dict()})


def load_record(path) -> RegistrationRecord:
    return RegistrationRecord.from_dict(_read_json(path, RECORD_FORMAT))


def read_features(path) -> list[int]:
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not an integer: {line!r}") from None
    return values


def write_features(path, values) -> None:
    Path(path).write_text("".join(f"{v}\n" for v in values))
