"""Command-line front end.

Exit codes: 0 pass / success, 1 fail verdict, 2 usage or I/O error
(including a prover refusing to build a proof).
"""

from __future__ import annotations

import argparse
import json
import os
import random
import secrets
import sys
from pathlib import Path

from biozero import bench, mulproof, protocol, rangeproof, storage
from biozero.group import PROFILES, setup_group
from biozero.ledger import Ledger, LedgerError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _rng(seed):
    return random.Random(seed) if seed is not None else secrets.SystemRandom()


def _load_ledger(params, path, create=False) -> Ledger:
    if path and Path(path).exists():
        return Ledger.load(params, path)
    if create:
        return Ledger(params)
    raise UsageError(f"ledger file {path} does not exist")


def cmd_setup(args) -> int:
    profile = args.profile or os.environ.get("BIOZERO_PROFILE", "production")
    params = setup_group(profile)
    keys = rangeproof.setup(params, args.bits, _rng(args.seed))
    storage.save_params(args.params, params)
    storage.save_keys(args.keys, keys)
    if args.ledger:
        Ledger(params).save(args.ledger)
    print(f"group {params.name}: {params.p.bit_length()}-bit p, {params.q.bit_length()}-bit q; range L={args.bits}")
    return EXIT_OK


def cmd_register(args) -> int:
    params = storage.load_params(args.params)
    f0 = storage.read_features(args.features)
    record = protocol.register(params, args.id, f0, _rng(args.seed), args.feature_bits)
    ledger = _load_ledger(params, args.ledger, create=True)
    try:
        ledger.register_identity(record.identity, record.c0)
    except LedgerError as exc:
        raise UsageError(f"registration rejected: {exc}") from exc
    storage.save_record(args.out, record)
    ledger.save(args.ledger)
    print(f"registered {args.id!r} with N={len(f0)}; secret record written to {args.out}")
    return EXIT_OK


def cmd_prove(args) -> int:
    params = storage.load_params(args.params)
    keys = storage.load_keys(args.keys, params)
    record = storage.load_record(args.record)
    f1 = storage.read_features(args.features)
    if args.nonce == "auto":
        nonce = record.next_nonce()
        if args.ledger and Path(args.ledger).exists():
            entry = Ledger.load(params, args.ledger).lookup(record.identity)
            if entry is not None and entry.last_nonce is not None:
                nonce = max(nonce, entry.last_nonce + 1)
    else:
        nonce = int(args.nonce)
    rng = _rng(args.seed)
    if args.force_negative_test:
        gamma, _ = protocol.force_generate_auth_proof_for_testing(
            params, keys, record, f1, nonce, args.epsilon, rng, args.mode
        )
    else:
        gamma = protocol.generate_auth_proof(params, keys, record, f1, nonce, args.epsilon, rng, args.mode)
    storage.atomic_write(args.out, gamma.to_bytes(params))
    storage.save_record(args.record, record)
    print(f"proof for {record.identity.decode(errors='replace')!r}, nonce {nonce}: {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    params = storage.load_params(args.params)
    keys = storage.load_keys(args.keys, params)
    ledger = _load_ledger(params, args.ledger)
    blob = Path(args.gamma).read_bytes()
    result = ledger.verify_auth(keys, args.epsilon, blob)
    ledger.save(args.ledger)
    print(result.summary())
    print(json.dumps({"cost": result.cost.to_dict()}, sort_keys=True))
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_reverify(args) -> int:
    params = storage.load_params(args.params)
    keys = storage.load_keys(args.keys, params)
    ledger = _load_ledger(params, args.ledger)
    report = ledger.reverify_log(keys)
    for index, why in report.mismatches:
        print(f"event {index}: {why}")
    print(f"{report.events} events replayed, {len(report.mismatches)} mismatches")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_bench(args) -> int:
    profile = args.profile or os.environ.get("BIOZERO_PROFILE", "production")
    params = setup_group(profile)
    n_list = [int(x) for x in args.n_list.split(",")]

    def progress(r):
        print(f"N={r.n:4d} trial={r.trial} prove={r.prove_s:.3f}s verify={r.verify_s:.3f}s "
              f"|gamma|={r.gamma_bytes} |pi|={r.pi_bytes}", file=sys.stderr)

    records = bench.bench_sweep(
        params, n_list, args.trials, args.seed, args.bits, args.feature_bits,
        args.epsilon, args.mode, progress,
    )
    bench.write_csv(records, args.out)
    ok = True
    for name, (holds, detail) in bench.summarize(records).items():
        ok &= holds
        print(f"{'PASS' if holds else 'FAIL'} {name}: {detail}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biozero", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, keys=True):
        p.add_argument("--params", required=True, help="group parameters file (JSON)")
        if keys:
            p.add_argument("--keys", required=True, help="range-proof keys file (JSON)")

    p = sub.add_parser("setup", help="write group parameters and range-proof keys")
    common(p)
    p.add_argument("--profile", choices=PROFILES, help="overrides BIOZERO_PROFILE")
    p.add_argument("--bits", type=int, default=32, help="range bit-length L")
    p.add_argument("--ledger", help="also create an empty ledger here")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("register", help="commit to enrolment features and register the id")
    common(p, keys=False)
    p.add_argument("--ledger", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--feature-bits", type=int, default=protocol.DEFAULT_FEATURE_BITS)
    p.add_argument("--out", required=True, help="secret registration record (JSON)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("prove", help="build an authentication proof for a probe")
    common(p)
    p.add_argument("--record", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--epsilon", type=int, required=True)
    p.add_argument("--nonce", default="auto")
    p.add_argument("--ledger", help="consulted for the automatic nonce")
    p.add_argument("--mode", choices=sorted(mulproof.MODES), default=mulproof.REPAIRED)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--force-negative-test", action="store_true",
                   help="build a proof even if the probe does not match (testing only)")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", help="apply a proof file to the ledger")
    common(p)
    p.add_argument("--ledger", required=True)
    p.add_argument("--epsilon", type=int, required=True)
    p.add_argument("gamma", help="proof file written by 'prove'")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reverify-log", help="replay the ledger's event log")
    common(p)
    p.add_argument("--ledger", required=True)
    p.set_defaults(func=cmd_reverify)

    p = sub.add_parser("bench", help="scaling sweep over biometric lengths")
    p.add_argument("--profile", choices=PROFILES, help="overrides BIOZERO_PROFILE")
    p.add_argument("--n-list", default=",".join(map(str, bench.DEFAULT_N_LIST)))
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", type=int, default=32)
    p.add_argument("--feature-bits", type=int, default=8)
    p.add_argument("--epsilon", type=int, default=10_000)
    p.add_argument("--mode", choices=sorted(mulproof.MODES), default=mulproof.REPAIRED)
    p.add_argument("--out", default="bench.csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
