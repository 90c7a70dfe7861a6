import csv
import random

import pytest

from biozero import bench, protocol
from biozero.bench import BenchRecord, SynthError, synth_features


def test_synth_target_zero():
    f0, f1, d = synth_features(1, 10, 8, 0)
    assert f0 == f1 and d == 0


def test_synth_target_five():
    f0, f1, d = synth_features(2, 2, 8, 5)
    assert d == 5 == protocol.compute_distance(f0, f1)
    assert all(0 <= x <= 255 for x in f0 + f1)


def test_synth_deterministic():
    assert synth_features(3, 16, 8, 999) == synth_features(3, 16, 8, 999)
    assert synth_features(3, 16) == synth_features(3, 16)
    assert synth_features(3, 16) != synth_features(4, 16)


def test_synth_many_targets():
    rng = random.Random(0)
    for _ in range(200):
        n = rng.choice([4, 16, 128])
        target = rng.randrange(10_000)
        f0, f1, d = synth_features(rng.getrandbits(32), n, 8, target)
        assert d == target == protocol.compute_distance(f0, f1)


def test_synth_errors():
    with pytest.raises(SynthError):
        synth_features(0, 2, 8, 2 * 255**2 + 1)
    with pytest.raises(SynthError):
        synth_features(0, 1, 8, 2)  # 2 is not a square
    with pytest.raises(SynthError):
        synth_features(0, 0, 8, 0)
    assert synth_features(0, 2, 8, 2 * 255**2)[2] == 2 * 255**2


def test_affine_residual_exact():
    assert bench._affine_residual([1, 2, 3], [5, 7, 9]) == 0
    assert bench._affine_residual([1, 2, 3], [5, 7, 10]) > 0


def fake(n, trial, **kw):
    base = dict(
        n=n, trial=trial, mode="repaired", prove_s=1.0, commit_s=0.01 * n, relation_s=0.1,
        range_s=0.5, range_min_s=0.4, verify_s=1.0, total_s=2.0, gamma_bytes=100 + 10 * n, pi_bytes=7,
        exp_stage3_5=16 * n, ops_stage3_5=30 * n + 1, exp_stage6=9, ops_stage6=20, passed=True,
    )
    base.update(kw)
    return BenchRecord(**base)


def test_summarize_accepts_expected_shape():
    records = [fake(n, t) for n in (16, 64, 128) for t in range(3)]
    assert all(ok for ok, _ in bench.summarize(records).values())


def test_summarize_flags_violations():
    records = [fake(16, 0), fake(64, 0, pi_bytes=8), fake(128, 0, gamma_bytes=5000, range_min_s=0.9)]
    out = bench.summarize(records)
    assert not out["pi_constant"][0]
    assert not out["gamma_affine"][0]
    assert not out["range_time_flat"][0]


def test_small_sweep_and_csv(prod, tmp_path):
    records = bench.bench_sweep(prod, [2, 4], trials=2, seed=1, bits=32, epsilon=100)
    assert len(records) == 4 and all(r.passed for r in records)
    assert len({r.pi_bytes for r in records}) == 1
    path = tmp_path / "b.csv"
    bench.write_csv(records, path)
    rows = list(csv.DictReader(open(path)))
    assert rows[0]["schema"] == bench.SCHEMA and len(rows) == 4
    again = bench.bench_sweep(prod, [2, 4], trials=2, seed=1, bits=32, epsilon=100)
    timing = set(BenchRecord.TIMING_COLUMNS)
    strip = lambda r: {k: v for k, v in r.__dict__.items() if k not in timing}
    assert [strip(r) for r in records] == [strip(r) for r in again]
