"""Pool measurement: density, GC deviation, runs, padding, ablation."""
import numpy as np
import pytest

from dnacodec.fsm import FsmConfig
from dnacodec.metrics import (
    _gc_stats,
    _max_run_rows,
    ablation_table,
    format_ablation_table,
    max_run,
    measure,
)
from dnacodec.pipeline import CodecConfig, ManifestMismatchError, encode_payload
from dnacodec.strand import DEFAULT_PRIMERS, OligoPool, PoolManifest, frame_strand


def _naive_manifest(strand_bits) -> PoolManifest:
    return PoolManifest(
        mode="naive",
        total_payload_bits=int(np.sum(strand_bits)),
        group_shape=(8, 16, 16, 16),
        block_dims=(4, 4, 4),
        fsm=FsmConfig(),
        primers=DEFAULT_PRIMERS,
        library_seed=1,
        library_dim=4,
        library_rows=[],
        library_checksum="",
        basis_choices=[],
        strand_bits=np.asarray(strand_bits, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# run length


def test_max_run_examples():
    assert max_run("A" * 12) == 12
    assert max_run("") == 0
    assert max_run("A") == 1
    assert max_run("AACGGGT") == 3


def test_max_run_reversal_invariant(rng):
    for trial in range(20):
        seq = "".join(np.array(list("ACGT"))[rng.integers(0, 4, 30)])
        assert max_run(seq) == max_run(seq[::-1])


def test_max_run_rows_matches_scalar(rng):
    rows = rng.integers(0, 4, size=(20, 50), dtype=np.uint8)
    want = max(max_run("".join("ACGT"[c] for c in row)) for row in rows)
    assert _max_run_rows(rows) == want


def test_max_run_rows_never_spans_rows():
    rows = np.ones((2, 3), dtype=np.uint8)
    assert _max_run_rows(rows) == 3
    assert _max_run_rows(np.zeros((0, 4), dtype=np.uint8)) == 0


# ---------------------------------------------------------------------------
# GC statistics


def test_gc_stats_balanced_rows():
    rows = np.array([[0, 1, 2, 3], [1, 2, 1, 2]], dtype=np.uint8)
    per, pooled = _gc_stats(rows)
    assert per == pytest.approx(0.25)  # rows deviate 0 and 0.5
    assert pooled == pytest.approx(0.25)


def test_gc_stats_complement_invariant(rng):
    # complementing every base (A<->T, C<->G) maps code c to 3 - c and
    # preserves GC content exactly
    rows = rng.integers(0, 4, size=(30, 40), dtype=np.uint8)
    assert _gc_stats(rows) == _gc_stats(3 - rows)


# ---------------------------------------------------------------------------
# measure on a hand-built pool


def test_measure_hand_checked_single_strand():
    strand = frame_strand(0, "ACGT" * 38)
    pool = OligoPool.from_strands([strand], _naive_manifest([304]))
    rep = measure(pool)
    assert rep.mode == "naive"
    assert rep.strand_count == 1
    assert rep.bpn == 2.0
    assert rep.gc_deviation_payload == 0.0
    assert rep.max_homopolymer_payload == 1
    assert rep.padding_pct == 0.0


def test_measure_empty_pool(rng):
    pool = encode_payload(b"", CodecConfig(mode="full"))
    rep = measure(pool)
    assert rep.strand_count == 0
    assert rep.bpn == 0.0
    assert rep.max_homopolymer == 0


def test_naive_density_is_exactly_two_on_whole_units(rng):
    data = rng.integers(0, 256, size=38 * 5, dtype=np.uint8).tobytes()
    pool = encode_payload(data, CodecConfig(mode="naive"))
    rep = measure(pool)
    assert rep.bpn == 2.0
    assert rep.padding_pct == 0.0


def test_naive_partial_final_strand_dilutes_density(rng):
    data = rng.integers(0, 256, size=100, dtype=np.uint8).tobytes()
    pool = encode_payload(data, CodecConfig(mode="naive"))
    rep = measure(pool)
    assert rep.bpn == pytest.approx(800 / (152 * 3))
    assert rep.padding_pct > 0.0


def test_measure_rejects_strand_count_mismatch(rng):
    data = rng.integers(0, 256, size=200, dtype=np.uint8).tobytes()
    pool = encode_payload(data, CodecConfig(mode="full"))
    short = OligoPool(pool.seqs[:-1], pool.indices[:-1], pool.manifest)
    with pytest.raises(ManifestMismatchError):
        measure(short)


def test_measure_rejects_unreplayable_payload(rng):
    data = rng.integers(0, 256, size=200, dtype=np.uint8).tobytes()
    pool = encode_payload(data, CodecConfig(mode="full"))
    seqs = pool.seqs.copy()
    seqs[0, 36:40] = 0  # AAAA violates the run rule, so the replay must fail
    with pytest.raises(ManifestMismatchError):
        measure(OligoPool(seqs, pool.indices, pool.manifest))


# ---------------------------------------------------------------------------
# ablation


def test_ablation_directions_on_run_heavy_input(run_heavy_bytes):
    data = run_heavy_bytes(2048)
    reports = ablation_table(data)
    assert sorted(reports) == ["fsm_only", "full", "kron_only", "naive"]
    # mixing alone repairs GC balance, constraints alone cap the runs, and
    # mixing ahead of the mapper reduces how often it hits forced positions
    assert reports["naive"].gc_deviation_payload > reports["kron_only"].gc_deviation_payload
    assert reports["fsm_only"].padding_pct > reports["full"].padding_pct
    assert reports["naive"].max_homopolymer_payload > 3
    assert reports["full"].max_homopolymer_payload <= 3
    assert reports["fsm_only"].max_homopolymer_payload <= 3


def test_format_ablation_table_layout(rng):
    data = rng.integers(0, 256, size=38 * 4, dtype=np.uint8).tobytes()
    text = format_ablation_table(ablation_table(data))
    lines = text.splitlines()
    assert "mode" in lines[0] and "bpn" in lines[0] and "pad %" in lines[0]
    assert len(lines) == 6  # header, rule, four mode rows
    naive_row = next(l for l in lines if l.startswith("naive"))
    assert "2.00" in naive_row


def test_format_ablation_table_skips_missing_modes(rng):
    data = rng.integers(0, 256, size=64, dtype=np.uint8).tobytes()
    reports = ablation_table(data)
    del reports["kron_only"]
    text = format_ablation_table(reports)
    assert "kron_only" not in text
    assert len(text.splitlines()) == 5
