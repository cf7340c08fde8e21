"""Noise model determinism, clustering, and consensus calling."""
import numpy as np
import pytest

from dnacodec.channel import (
    ChannelParams,
    ClusterResult,
    ReadSet,
    cluster_reads,
    consensus,
    sequence_reads,
    synthesize,
)
from dnacodec.fsm import fsm_encode
from dnacodec.strand import STRAND_NT, OligoPool, frame_strand, str_to_codes


def _code_pool(rng, n: int) -> OligoPool:
    """A pool of uniformly random code rows; fine for noise statistics."""
    seqs = rng.integers(0, 4, size=(n, STRAND_NT), dtype=np.uint8)
    return OligoPool(seqs, np.arange(n), None)


def _framed_pool(rng, n: int) -> OligoPool:
    strands = []
    for i in range(n):
        bits = rng.integers(0, 2, size=300, dtype=np.uint8)
        payload, _ = fsm_encode(bits, 152)
        strands.append(frame_strand(i, payload))
    return OligoPool.from_strands(strands, None)


def _sorted_rows(arr: np.ndarray) -> np.ndarray:
    if arr.size == 0:
        return arr
    return arr[np.lexsort(arr.T[::-1])]


# ---------------------------------------------------------------------------
# parameters


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(synthesis_sub_rate=-0.1)
    with pytest.raises(ValueError):
        ChannelParams(dropout_rate=1.5)
    with pytest.raises(ValueError):
        ChannelParams(coverage=0)


def test_readset_shape_guard():
    with pytest.raises(ValueError):
        ReadSet(np.zeros((3, 100), dtype=np.uint8))
    assert len(ReadSet(np.zeros((0, STRAND_NT), dtype=np.uint8))) == 0


# ---------------------------------------------------------------------------
# noise statistics


def test_zero_rates_are_identity(rng):
    pool = _code_pool(rng, 40)
    params = ChannelParams(synthesis_sub_rate=0.0, sequencing_sub_rate=0.0, coverage=3, seed=5)
    out = synthesize(pool, params)
    assert np.array_equal(out.seqs, pool.seqs)
    assert np.array_equal(out.indices, pool.indices)
    assert out.manifest is pool.manifest
    reads = sequence_reads(out, params)
    assert len(reads) == 3 * 40
    # every strand appears exactly coverage times, bit for bit
    assert np.array_equal(
        _sorted_rows(reads.codes), _sorted_rows(np.repeat(pool.seqs, 3, axis=0))
    )


def test_synthesis_substitution_rate_is_calibrated(rng):
    pool = _code_pool(rng, 4200)  # 4200 * 240 = 1.008M bases
    params = ChannelParams(synthesis_sub_rate=1 / 7500, sequencing_sub_rate=0.0, seed=9)
    out = synthesize(pool, params)
    hits = int((out.seqs != pool.seqs).sum())
    mean = pool.seqs.size / 7500
    sigma = (pool.seqs.size * (1 / 7500) * (1 - 1 / 7500)) ** 0.5
    assert mean - 3 * sigma <= hits <= mean + 3 * sigma


def test_sequencing_substitution_rate_is_calibrated(rng):
    # identical source rows make the per-read reference unambiguous even
    # after the output shuffle
    row = rng.integers(0, 4, size=STRAND_NT, dtype=np.uint8)
    pool = OligoPool(np.tile(row, (140, 1)), np.arange(140), None)
    params = ChannelParams(sequencing_sub_rate=0.00109, coverage=30, seed=17)
    reads = sequence_reads(pool, params)
    assert len(reads) == 140 * 30
    hits = int((reads.codes != row[None, :]).sum())
    total = reads.codes.size
    mean = total * 0.00109
    sigma = (total * 0.00109 * (1 - 0.00109)) ** 0.5
    assert mean - 3 * sigma <= hits <= mean + 3 * sigma


def test_substitutions_never_keep_the_original_base(rng):
    # the +1..3 mod 4 construction guarantees every hit changes the base, so
    # observed changes equal the binomial draw exactly rather than 3/4 of it
    pool = _code_pool(rng, 500)
    params = ChannelParams(synthesis_sub_rate=0.02, sequencing_sub_rate=0.0, seed=3)
    out = synthesize(pool, params)
    hits = int((out.seqs != pool.seqs).sum())
    mean = pool.seqs.size * 0.02
    sigma = (pool.seqs.size * 0.02 * 0.98) ** 0.5
    assert mean - 3 * sigma <= hits <= mean + 3 * sigma


def test_dropout_extremes_and_rate(rng):
    pool = _code_pool(rng, 4000)
    gone = synthesize(pool, ChannelParams(dropout_rate=1.0, seed=2))
    assert len(gone) == 0
    half = synthesize(pool, ChannelParams(dropout_rate=0.5, seed=2))
    sigma = (4000 * 0.25) ** 0.5
    assert 2000 - 3 * sigma <= len(half) <= 2000 + 3 * sigma
    # surviving rows keep their index pairing
    surv = set(half.indices.tolist())
    for row, idx in zip(half.seqs, half.indices):
        assert idx in surv


def test_indel_marking_keeps_length(rng):
    pool = _code_pool(rng, 100)
    params = ChannelParams(synthesis_sub_rate=0.0, indel_strand_rate=1.0, seed=8)
    out = synthesize(pool, params)
    assert out.seqs.shape == pool.seqs.shape
    changed = (out.seqs != pool.seqs).any(axis=1).mean()
    assert changed > 0.9


# ---------------------------------------------------------------------------
# determinism


def test_same_seed_reproduces_everything(rng):
    pool = _framed_pool(rng, 12)
    params = ChannelParams(dropout_rate=0.2, seed=77)
    a = sequence_reads(synthesize(pool, params), params)
    b = sequence_reads(synthesize(pool, params), params)
    assert np.array_equal(a.codes, b.codes)
    c = sequence_reads(synthesize(pool, ChannelParams(dropout_rate=0.2, seed=78)),
                       ChannelParams(dropout_rate=0.2, seed=78))
    assert a.codes.shape != c.codes.shape or not np.array_equal(a.codes, c.codes)


def test_noise_is_keyed_by_strand_index_not_row_order(rng):
    # permuting the pool must not change any strand's noise draw: substreams
    # hang off (seed, stage, strand index), never off the row number
    pool = _code_pool(rng, 60)
    perm = rng.permutation(60)
    shuffled = OligoPool(pool.seqs[perm], pool.indices[perm], None)
    params = ChannelParams(dropout_rate=0.3, seed=21)
    a = synthesize(pool, params)
    b = synthesize(shuffled, params)
    assert set(a.indices.tolist()) == set(b.indices.tolist())
    by_idx = {int(i): row for i, row in zip(b.indices, b.seqs)}
    for i, row in zip(a.indices, a.seqs):
        assert np.array_equal(row, by_idx[int(i)])
    ra = sequence_reads(a, params)
    rb = sequence_reads(b, params)
    assert np.array_equal(_sorted_rows(ra.codes), _sorted_rows(rb.codes))


# ---------------------------------------------------------------------------
# clustering


def test_cluster_noiseless_reads_exactly(rng):
    pool = _framed_pool(rng, 20)
    params = ChannelParams(synthesis_sub_rate=0.0, sequencing_sub_rate=0.0, coverage=5, seed=1)
    reads = sequence_reads(pool, params)
    result = cluster_reads(reads, 20)
    assert sorted(result.groups) == list(range(20))
    assert result.discarded == 0
    assert result.assigned == 100
    for idx, rows in result.groups.items():
        assert len(rows) == 5
        assert (reads.codes[rows] == pool.seqs[idx]).all()


def test_cluster_tolerates_two_address_substitutions(rng):
    pool = _framed_pool(rng, 1)
    clean = pool.seqs[0]
    two = clean.copy()
    for pos in (22, 30):  # inside the address region (20..36)
        two[pos] = (two[pos] + 1) % 4
    three = clean.copy()
    for pos in (21, 27, 33):
        three[pos] = (three[pos] + 2) % 4
    reads = ReadSet(np.stack([clean, two, three]))
    result = cluster_reads(reads, 1)
    assert result.discarded == 1
    assert result.groups.keys() == {0}
    assert sorted(result.groups[0].tolist()) == [0, 1]


def test_cluster_empty_inputs():
    empty = ReadSet(np.zeros((0, STRAND_NT), dtype=np.uint8))
    result = cluster_reads(empty, 5)
    assert result.groups == {} and result.discarded == 0
    reads = ReadSet(np.zeros((3, STRAND_NT), dtype=np.uint8))
    result = cluster_reads(reads, 0)
    assert result.groups == {} and result.discarded == 3


def test_cluster_result_assigned_counter():
    r = ClusterResult({0: np.arange(3), 4: np.arange(2)}, 7)
    assert r.assigned == 5


# ---------------------------------------------------------------------------
# consensus


def test_consensus_unanimous_has_no_flags():
    seq, flags = consensus(["ACGTACGT"] * 30)
    assert seq == "ACGTACGT"
    assert flags == set()


def test_consensus_flag_threshold_is_five_sixths():
    # 24 of 30 sits below 5/6 agreement and gets flagged; 25 of 30 sits
    # exactly on the threshold and does not
    base = "ACGTACGTACGT"
    variant = "ACGTACGTACGA"
    seq, flags = consensus([base] * 24 + [variant] * 6)
    assert seq == base
    assert flags == {11}
    seq, flags = consensus([base] * 25 + [variant] * 5)
    assert seq == base
    assert flags == set()


def test_consensus_tie_resolves_to_canonical_order():
    seq, flags = consensus(["AAAA"] * 15 + ["AAAT"] * 15)
    assert seq == "AAAA"
    assert 3 in flags


def test_consensus_accepts_code_arrays():
    block = np.array([str_to_codes("ACGT")] * 4)
    seq, flags = consensus(block)
    assert seq == "ACGT" and flags == set()


def test_consensus_empty_group_rejected():
    with pytest.raises(ValueError):
        consensus([])
    with pytest.raises(ValueError):
        consensus(np.zeros((0, 8), dtype=np.uint8))
