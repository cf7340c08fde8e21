"""Ten acceptance checks, one verdict line each.

Run with `pytest -v tests/test_acceptance.py` (add -s to watch the verdict
lines stream).  Each check prints

    [criterion NN] PASS <measured numbers>

before asserting, so a red run still shows every measured value.
"""
import time

import numpy as np
import pytest

from dnacodec import rs
from dnacodec.channel import ChannelParams, consensus, sequence_reads, synthesize
from dnacodec.cli import main
from dnacodec.fsm import DEFAULT_MOTIFS, codes_to_str
from dnacodec.gf2kron import BitBlockTensor, gen_basis_library, kron_apply, kron_apply_dense
from dnacodec.metrics import _max_run_rows, ablation_table, measure
from dnacodec.pipeline import MODES, CodecConfig, decode_pool, encode_payload
from dnacodec.strand import rs_decode

PAY_LO, PAY_HI = 36, 188
CW_LO, CW_HI = 20, 220  # address + payload + parity

CORPUS_SEED = 20260823
CORPUS_BYTES = 380_000  # exactly 10000 naive strands of 38 bytes each


def _verdict(n: int, ok: bool, detail: str) -> None:
    print(f"[criterion {n:02d}] {'PASS' if ok else 'FAIL'} {detail}", flush=True)
    assert ok, f"criterion {n}: {detail}"


@pytest.fixture(scope="module")
def corpus() -> bytes:
    gen = np.random.default_rng(CORPUS_SEED)
    return gen.integers(0, 256, size=CORPUS_BYTES, dtype=np.uint8).tobytes()


@pytest.fixture(scope="module")
def full_pool(corpus):
    pool = encode_payload(corpus, CodecConfig(mode="full"))
    assert len(pool) >= 10_000
    return pool


def test_criterion_01_lossless_round_trip():
    gen = np.random.default_rng(7)
    sizes = [0, 1, 1024, 1 << 20, 10 << 20]
    payloads = [gen.integers(0, 256, size=s, dtype=np.uint8).tobytes() for s in sizes]
    t0 = time.perf_counter()
    trips = 0
    for mode in MODES:
        for data in payloads:
            pool = encode_payload(data, CodecConfig(mode=mode))
            out, erasures, _ = decode_pool(pool)
            assert out == data, f"{mode} round trip differs at {len(data)} B"
            assert erasures.is_empty
            trips += 1
    elapsed = time.perf_counter() - t0
    _verdict(1, elapsed < 60.0, f"{trips} round trips (0 B..10 MiB x {len(MODES)} modes) "
                                f"byte-identical in {elapsed:.1f}s (< 60s)")


def test_criterion_02_hard_constraints(full_pool):
    payloads = full_pool.seqs[:, PAY_LO:PAY_HI]
    n = payloads.shape[0]
    change = np.ones(payloads.shape, dtype=bool)
    change[:, 1:] = payloads[:, 1:] != payloads[:, :-1]
    run_violations = 0
    for row_change in change:
        starts = np.nonzero(row_change)[0]
        ends = np.append(starts[1:], row_change.size)
        if (ends - starts).max() > 3:
            run_violations += 1
    motif_hits = 0
    for row in payloads:
        seq = codes_to_str(row)
        if any(m in seq for m in DEFAULT_MOTIFS):
            motif_hits += 1
    ok = run_violations == 0 and motif_hits == 0
    _verdict(2, ok, f"{n} payloads: homopolymer>3 in {run_violations}, "
                    f"forbidden motifs in {motif_hits} (both must be 0)")


def test_criterion_03_density_band(corpus, full_pool):
    full_bpn = measure(full_pool).bpn
    naive_pool = encode_payload(corpus, CodecConfig(mode="naive"))
    naive_bpn = measure(naive_pool).bpn
    ok = 1.85 <= full_bpn <= 2.00 and naive_bpn == 2.0
    _verdict(3, ok, f"full bpn {full_bpn:.4f} over {len(full_pool)} strands "
                    f"(band [1.85, 2.00]), naive bpn {naive_bpn} (exactly 2.0)")


def test_criterion_04_gc_balance(full_pool):
    payloads = full_pool.seqs[:, PAY_LO:PAY_HI]
    isgc = (payloads == 1) | (payloads == 2)
    dev = float(np.abs(isgc.mean(axis=1) - 0.5).mean())
    g = isgc.sum(axis=1)
    # a 152-nt payload is inside [0.45, 0.55] exactly when it holds 69..83 GC
    band_violations = int(((g < 69) | (g > 83)).sum())
    ok = dev <= 0.02 and band_violations == 0
    _verdict(4, ok, f"payload GC deviation {dev:.5f} (<= 0.02), "
                    f"{band_violations} of {len(g)} payloads outside [0.45, 0.55]")


def test_criterion_05_kronecker_oracle():
    t0 = time.perf_counter()
    gen = np.random.default_rng(55)
    lib4 = gen_basis_library(5, 6, 4)
    blocks = 0
    for trial in range(2):
        wt, wy, wx = (lib4[int(i)] for i in gen.integers(0, 6, size=3))
        tensor = BitBlockTensor(gen.integers(0, 2, size=(4, 4, 4 * 500, 8), dtype=np.uint8))
        mixed = kron_apply(tensor, wt, wy, wx)
        for bx in range(500):
            for k in range(8):
                block = tensor.bits[:, :, 4 * bx : 4 * bx + 4, k].reshape(-1)
                want = kron_apply_dense(block, wt, wy, wx)
                got = mixed.bits[:, :, 4 * bx : 4 * bx + 4, k].reshape(-1)
                assert np.array_equal(got, want)
                blocks += 1
    lib2 = gen_basis_library(9, 4, 2)
    wt, wy, wx = lib2[1], lib2[2], lib2[3]
    exhaustive = 0
    for value in range(256):
        block = np.array([(value >> b) & 1 for b in range(8)], dtype=np.uint8)
        tensor = BitBlockTensor(block.reshape(2, 2, 2, 1))
        got = kron_apply(tensor, wt, wy, wx).bits.reshape(-1)
        assert np.array_equal(got, kron_apply_dense(block, wt, wy, wx))
        exhaustive += 1
    elapsed = time.perf_counter() - t0
    ok = blocks >= 8000 and exhaustive == 256 and elapsed < 10.0
    _verdict(5, ok, f"{blocks} random 4x4x4 blocks across 8 bit-planes + "
                    f"{exhaustive}/256 exhaustive 2x2x2 blocks bit-exact in {elapsed:.1f}s (< 10s)")


def test_criterion_06_rs_capability(full_pool):
    gen = np.random.default_rng(66)
    n = 10_000
    words = full_pool.seqs[:n, CW_LO:CW_HI]
    recovered = 0
    for i in range(n):
        cw = words[i].copy()
        pos = gen.choice(cw.size, size=2, replace=False)
        cw[pos] = (cw[pos] + gen.integers(1, 4, size=2)) % 4
        data, _ = rs_decode(codes_to_str(cw))
        recovered += data == codes_to_str(words[i, :168])
    silent = 0
    refused = 0
    for i in range(n):
        cw = words[i].copy()
        syms = gen.choice(50, size=5, replace=False)
        pos = syms * 4 + gen.integers(0, 4, size=5)
        cw[pos] = (cw[pos] + gen.integers(1, 4, size=5)) % 4
        try:
            rs_decode(codes_to_str(cw))
            silent += 1
        except rs.DecodeFailure:
            refused += 1
    ok = recovered == n and silent == 0
    _verdict(6, ok, f"2-substitution recovery {recovered}/{n} (must be 100%), "
                    f"5-symbol corruption refused {refused}/{n} with {silent} silent decodes")


def test_criterion_07_channel_end_to_end(corpus, full_pool):
    t0 = time.perf_counter()
    params = ChannelParams(seed=42)
    reads = sequence_reads(synthesize(full_pool, params), params)
    data, erasures, report = decode_pool(reads, full_pool.manifest)
    frac = report.strands_recovered / report.strands_expected
    m = full_pool.manifest

    # bits inside any group touched by an erasure are allowed to differ;
    # everything else must be exact
    want = np.unpackbits(np.frombuffer(corpus, dtype=np.uint8))
    got = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[: want.size]
    vol = int(np.prod(m.group_shape))
    blocked = np.zeros(want.size, dtype=bool)
    for r in erasures:
        glo, ghi = r.offset // vol, (r.end - 1) // vol
        blocked[glo * vol : min((ghi + 1) * vol, want.size)] = True
    exact_elsewhere = bool((want[~blocked] == got[~blocked]).all())

    span_of = {int(off): int(b) for off, b in zip(m.offsets, m.strand_bits)}
    map_ok = all(span_of.get(r.offset) == r.length for r in erasures)
    elapsed = time.perf_counter() - t0
    ok = frac >= 0.999 and exact_elsewhere and map_ok and elapsed < 300.0
    _verdict(7, ok, f"{report.strands_recovered}/{report.strands_expected} strands "
                    f"({100 * frac:.3f}% >= 99.9%) from {len(reads)} reads, "
                    f"{len(erasures)} erasures all aligned to strand spans, "
                    f"exact outside erased groups: {exact_elsewhere}, {elapsed:.0f}s (< 300s)")


def test_criterion_08_consensus_boundary():
    base = "ACGTACGTACGT"
    variant = "ACGTACGTACGA"
    _, flags24 = consensus([base] * 24 + [variant] * 6)
    _, flags25 = consensus([base] * 25 + [variant] * 5)
    ok = flags24 == {11} and flags25 == set()
    _verdict(8, ok, f"24/30 agreement flags {sorted(flags24)} (expect [11]), "
                    f"25/30 flags {sorted(flags25)} (expect [])")


def test_criterion_09_ablation_direction(run_heavy_bytes):
    reports = ablation_table(run_heavy_bytes(65_536))
    gc_naive = reports["naive"].gc_deviation_payload
    gc_kron = reports["kron_only"].gc_deviation_payload
    pad_fsm = reports["fsm_only"].padding_pct
    pad_full = reports["full"].padding_pct
    homo_naive = reports["naive"].max_homopolymer_payload
    homo_full = reports["full"].max_homopolymer_payload
    ok = gc_naive > gc_kron and pad_fsm > pad_full and homo_naive > 3 and homo_full == 3
    _verdict(9, ok, f"gc dev naive {gc_naive:.3f} > kron_only {gc_kron:.3f}; "
                    f"padding fsm_only {pad_fsm:.2f}% > full {pad_full:.2f}%; "
                    f"max homo naive {homo_naive} > 3 == full {homo_full}")


def test_criterion_10_cli_determinism(tmp_path, run_heavy_bytes, capsys):
    inp = tmp_path / "input.bin"
    inp.write_bytes(run_heavy_bytes(4096))
    artifacts = {}
    codes = {}
    for run in ("one", "two"):
        d = tmp_path / run
        d.mkdir()
        pool, man = d / "pool.fasta", d / "manifest.json"
        reads, out, out_r = d / "reads.fasta", d / "out.bin", d / "out_r.bin"
        rc = [
            main(["encode", str(inp), "-o", str(pool), "-m", str(man)]),
            main(["simulate", str(pool), "-m", str(man), "-o", str(reads), "--seed", "3"]),
            main(["decode", str(pool), "-m", str(man), "-o", str(out), "--strict"]),
            main(["decode", str(reads), "-m", str(man), "-o", str(out_r), "--strict"]),
            main(["stats", str(pool), "-m", str(man)]),
            main(["ablate", str(inp)]),
        ]
        codes[run] = rc
        artifacts[run] = (
            pool.read_bytes(), man.read_bytes(), reads.read_bytes(),
            out.read_bytes(), out_r.read_bytes(), capsys.readouterr().out,
        )
    same_bytes = artifacts["one"] == artifacts["two"]
    same_codes = codes["one"] == codes["two"] == [0] * 6
    payload_back = artifacts["one"][3] == inp.read_bytes()
    ok = same_bytes and same_codes and payload_back
    _verdict(10, ok, f"2 runs x 6 subcommand invocations: byte-identical artifacts {same_bytes}, "
                     f"exit codes {codes['one']} == {codes['two']}, payload recovered {payload_back}")
