"""Density and constraint measurement over encoded pools.

The headline numbers: bits per payload nucleotide, mean per-strand GC
deviation, worst homopolymer run, and the share of payload positions that
carry no information (forced bases plus end padding).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fsmkern as K
from .fsm import _kernel_params
from .pipeline import (
    CodecConfig,
    MODES,
    ManifestMismatchError,
    _fsm_stream_encode,
    _validate_manifest,
    encode_payload,
)
from .strand import PAYLOAD_NT, PRIMER_NT, ADDRESS_NT, OligoPool, PoolManifest

__all__ = [
    "EncodingReport",
    "measure",
    "max_run",
    "ablation_table",
    "format_ablation_table",
]

_PAYLOAD_LO = PRIMER_NT + ADDRESS_NT
_PAYLOAD_HI = _PAYLOAD_LO + PAYLOAD_NT


@dataclass
class EncodingReport:
    """Pool-level quality numbers for one encoding."""

    mode: str
    strand_count: int
    bpn: float
    gc_deviation: float
    gc_deviation_payload: float
    pool_gc_deviation: float
    pool_gc_deviation_payload: float
    max_homopolymer: int
    max_homopolymer_payload: int
    padding_pct: float
    discards: int = 0
    rs_correction_histogram: dict = field(default_factory=dict)


def max_run(seq: str) -> int:
    """Longest run of one repeated base; 0 for the empty sequence."""
    best = cur = 0
    prev = None
    for ch in seq:
        cur = cur + 1 if ch == prev else 1
        prev = ch
        if cur > best:
            best = cur
    return best


def _max_run_rows(rows: np.ndarray) -> int:
    """Longest identical-value run across each row of a 2-d array."""
    if rows.size == 0:
        return 0
    n, m = rows.shape
    # boundaries[i, j] marks a change at column j (column 0 always starts a run)
    change = np.ones((n, m), dtype=bool)
    change[:, 1:] = rows[:, 1:] != rows[:, :-1]
    best = 0
    flat = change.reshape(-1)
    starts = np.nonzero(flat)[0]
    if starts.size:
        ends = np.append(starts[1:], flat.size)
        # runs never span rows because column 0 always restarts
        best = int((ends - starts).max())
    return best


def _gc_stats(rows: np.ndarray) -> tuple[float, float]:
    """(mean per-row |GC - 0.5|, pooled |GC - 0.5|) of a code array."""
    if rows.size == 0:
        return 0.0, 0.0
    isgc = (rows == 1) | (rows == 2)
    per = np.abs(isgc.mean(axis=1) - 0.5)
    return float(per.mean()), float(abs(isgc.mean() - 0.5))


def _zero_info_nt(pool: OligoPool, manifest: PoolManifest) -> int:
    """Payload positions carrying no information: forced bases plus padding."""
    payloads = pool.seqs[:, _PAYLOAD_LO:_PAYLOAD_HI]
    n = payloads.shape[0]
    if n == 0:
        return 0
    if manifest.mode in ("naive", "kron_only"):
        return int((2 * PAYLOAD_NT * n - manifest.encoded_bits) // 2)
    # FSM modes: replay the decode to recover the bit stream, then re-run the
    # greedy encoder which reports forced positions as it goes
    stream = np.zeros(manifest.encoded_bits, dtype=np.uint8)
    budgets = manifest.strand_bits
    offsets = manifest.offsets
    written = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    K._decode_batch(np.ascontiguousarray(payloads), budgets, stream, offsets,
                    written, status, *_kernel_params(manifest.fsm))
    if (status != K.OK).any():
        raise ManifestMismatchError("pool payloads do not replay against the manifest")
    _, used, zeros = _fsm_stream_encode(stream, manifest.fsm)
    if used.size != n or (used != budgets).any():
        raise ManifestMismatchError("pool strandization does not match the manifest")
    return int(zeros.sum())


def measure(pool: OligoPool, manifest: PoolManifest | None = None) -> EncodingReport:
    """Compute an EncodingReport for a clean pool and its manifest."""
    if manifest is None:
        manifest = pool.manifest
    _validate_manifest(manifest)
    n = len(pool)
    if n != manifest.strand_count:
        raise ManifestMismatchError(f"pool has {n} strands, manifest lists {manifest.strand_count}")

    payloads = pool.seqs[:, _PAYLOAD_LO:_PAYLOAD_HI]
    gc_full, gc_full_pool = _gc_stats(pool.seqs)
    gc_pay, gc_pay_pool = _gc_stats(payloads)
    bpn = manifest.total_payload_bits / (PAYLOAD_NT * n) if n else 0.0
    pad_nt = _zero_info_nt(pool, manifest)
    pad_pct = 100.0 * pad_nt / (PAYLOAD_NT * n) if n else 0.0

    return EncodingReport(
        mode=manifest.mode,
        strand_count=n,
        bpn=bpn,
        gc_deviation=gc_full,
        gc_deviation_payload=gc_pay,
        pool_gc_deviation=gc_full_pool,
        pool_gc_deviation_payload=gc_pay_pool,
        max_homopolymer=_max_run_rows(pool.seqs),
        max_homopolymer_payload=_max_run_rows(payloads),
        padding_pct=pad_pct,
    )


def ablation_table(data: bytes, cfg: CodecConfig = CodecConfig()) -> dict[str, EncodingReport]:
    """Encode the same payload in all four modes and measure each pool."""
    out: dict[str, EncodingReport] = {}
    for mode in MODES:
        mode_cfg = CodecConfig(
            mode=mode,
            group_shape=cfg.group_shape,
            fsm=cfg.fsm,
            library_seed=cfg.library_seed,
            library_count=cfg.library_count,
            library_dim=cfg.library_dim,
            selection=cfg.selection,
            score_eval_bits=cfg.score_eval_bits,
            primers=cfg.primers,
        )
        pool = encode_payload(data, mode_cfg)
        out[mode] = measure(pool, pool.manifest)
    return out


def format_ablation_table(reports: dict[str, EncodingReport]) -> str:
    """Aligned text table, one row per mode."""
    header = f"{'mode':<10} {'strands':>8} {'bpn':>6} {'GC dev':>8} {'max homo':>9} {'pad %':>7}"
    lines = [header, "-" * len(header)]
    for mode in MODES:
        if mode not in reports:
            continue
        r = reports[mode]
        lines.append(
            f"{mode:<10} {r.strand_count:>8} {r.bpn:>6.2f} {r.gc_deviation_payload:>8.3f} "
            f"{r.max_homopolymer_payload:>9} {r.padding_pct:>7.2f}"
        )
    return "\n".join(lines)
