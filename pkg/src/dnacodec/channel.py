"""Synthesis/sequencing noise simulation, read clustering, consensus calling.

Noise is substitution-only (plus optional whole-strand indel marking).  Every
random decision comes from a per-strand substream seeded by
SeedSequence((seed, stage, strand_index)), so results are identical no matter
how the work is scheduled or batched.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fsmkern as K
from .fsm import FsmConfig, _kernel_params, codes_to_str, str_to_codes
from .strand import ADDRESS_BITS, ADDRESS_NT, PRIMER_NT, STRAND_NT, OligoPool, encode_addresses

__all__ = [
    "ChannelParams",
    "ReadSet",
    "ClusterResult",
    "synthesize",
    "sequence_reads",
    "cluster_reads",
    "consensus",
]

# Stage words keep the synthesis / dropout / sequencing / shuffle substreams
# of one strand independent of each other.
STAGE_SYNTH = 1
STAGE_DROP = 2
STAGE_SEQ = 3
STAGE_SHUFFLE = 4
STAGE_INDEL = 5


@dataclass(frozen=True)
class ChannelParams:
    """Noise model knobs; defaults follow common synthesis/NovaSeq figures."""

    synthesis_sub_rate: float = 1.0 / 7500.0
    sequencing_sub_rate: float = 0.00109
    coverage: int = 30
    dropout_rate: float = 0.0
    seed: int = 0
    indel_strand_rate: float = 0.0

    def __post_init__(self):
        for name in ("synthesis_sub_rate", "sequencing_sub_rate", "dropout_rate", "indel_strand_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.coverage < 1:
            raise ValueError("coverage must be at least 1")


class ReadSet:
    """Unordered pile of fixed-length reads, stored as one (m, 240) code array."""

    def __init__(self, codes: np.ndarray):
        self.codes = np.ascontiguousarray(codes, dtype=np.uint8)
        if self.codes.ndim != 2 or (self.codes.size and self.codes.shape[1] != STRAND_NT):
            raise ValueError(f"reads must be (m, {STRAND_NT})")

    def __len__(self) -> int:
        return self.codes.shape[0]

    @property
    def reads(self) -> list[str]:
        return [codes_to_str(row) for row in self.codes]

    @classmethod
    def from_reads(cls, reads) -> "ReadSet":
        if len(reads) == 0:
            return cls(np.zeros((0, STRAND_NT), np.uint8))
        return cls(np.stack([str_to_codes(r) for r in reads]))


@dataclass
class ClusterResult:
    """groups maps strand index to row numbers in the ReadSet; discarded counts
    reads whose address could not be resolved."""

    groups: dict[int, np.ndarray]
    discarded: int

    @property
    def assigned(self) -> int:
        return sum(len(v) for v in self.groups.values())


def _strand_rng(seed: int, stage: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, stage, index)))


def _substitute(codes: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each base with probability `rate` to one of the three others."""
    if rate <= 0.0:
        return codes
    hit = rng.random(codes.shape) < rate
    n = int(hit.sum())
    if n == 0:
        return codes
    out = codes.copy()
    # adding 1..3 mod 4 always lands on a different base, uniformly
    out[hit] = (out[hit] + rng.integers(1, 4, size=n, dtype=np.uint8)) % 4
    return out


def synthesize(pool: OligoPool, params: ChannelParams) -> OligoPool:
    """Apply synthesis substitutions, strand dropout, and optional indel marking.

    Returns a new pool sharing the input manifest; dropped strands are simply
    absent from it.
    """
    n = len(pool)
    keep = np.ones(n, dtype=bool)
    seqs = pool.seqs.copy()
    for row in range(n):
        idx = int(pool.indices[row])
        if params.dropout_rate > 0.0:
            if _strand_rng(params.seed, STAGE_DROP, idx).random() < params.dropout_rate:
                keep[row] = False
                continue
        seqs[row] = _substitute(seqs[row], params.synthesis_sub_rate,
                                _strand_rng(params.seed, STAGE_SYNTH, idx))
        if params.indel_strand_rate > 0.0:
            rng = _strand_rng(params.seed, STAGE_INDEL, idx)
            if rng.random() < params.indel_strand_rate:
                # single deletion with a random tail base: keeps the read length
                # fixed while making the strand unrecoverable downstream, which
                # is how an unaligned indel presents to this pipeline
                pos = int(rng.integers(0, STRAND_NT))
                seqs[row, pos:-1] = seqs[row, pos + 1 :]
                seqs[row, -1] = rng.integers(0, 4)
    return OligoPool(seqs[keep], pool.indices[keep], pool.manifest)


def sequence_reads(pool: OligoPool, params: ChannelParams) -> ReadSet:
    """Emit `coverage` noisy copies of every surviving strand, shuffled."""
    n = len(pool)
    cov = params.coverage
    out = np.empty((n * cov, STRAND_NT), dtype=np.uint8)
    for row in range(n):
        idx = int(pool.indices[row])
        rng = _strand_rng(params.seed, STAGE_SEQ, idx)
        block = np.broadcast_to(pool.seqs[row], (cov, STRAND_NT)).copy()
        hit = rng.random(block.shape) < params.sequencing_sub_rate
        k = int(hit.sum())
        if k:
            block[hit] = (block[hit] + rng.integers(1, 4, size=k, dtype=np.uint8)) % 4
        out[row * cov : (row + 1) * cov] = block
    order = np.random.default_rng(
        np.random.SeedSequence((params.seed, STAGE_SHUFFLE))
    ).permutation(out.shape[0])
    return ReadSet(out[order])


def _hamming_assign(regions: np.ndarray, known: np.ndarray, max_dist: int) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-known-address lookup; returns (best_index, ok) per row.

    ok is False only when the minimum distance exceeds max_dist.  Ties go to
    the lowest index: encoded addresses of nearby indices can sit within one
    substitution of each other, so a discarded tie would silently drop every
    copy of a strand, while a misassigned pile merely fuses two strands into
    one group and the decoder pulls them apart again by RS-corrected address.
    """
    m = regions.shape[0]
    best = np.zeros(m, dtype=np.int64)
    ok = np.zeros(m, dtype=bool)
    for start in range(0, m, 1024):
        chunk = regions[start : start + 1024]
        dist = (chunk[:, None, :] != known[None, :, :]).sum(axis=2)
        lo = dist.min(axis=1)
        sel = slice(start, start + chunk.shape[0])
        best[sel] = dist.argmin(axis=1)
        ok[sel] = lo <= max_dist
    return best, ok


def cluster_reads(
    reads: ReadSet,
    strand_count: int,
    cfg: FsmConfig = FsmConfig(),
    max_hamming: int = 2,
) -> ClusterResult:
    """Group reads by decoded address.

    Exact FSM replay of the address region wins; failing that, the nearest
    known address within `max_hamming` substitutions (ties to lowest), else
    the read is discarded.
    """
    m = len(reads)
    if m == 0 or strand_count == 0:
        return ClusterResult({}, m)
    regions = np.ascontiguousarray(reads.codes[:, PRIMER_NT : PRIMER_NT + ADDRESS_NT])

    outbits = np.empty(m * ADDRESS_BITS, dtype=np.uint8)
    offsets = np.arange(m, dtype=np.int64) * ADDRESS_BITS
    budgets = np.full(m, ADDRESS_BITS, dtype=np.int64)
    written = np.empty(m, dtype=np.int64)
    status = np.empty(m, dtype=np.int64)
    K._decode_batch(regions.copy(), budgets, outbits, offsets, written, status,
                    *_kernel_params(cfg))
    weights = 1 << np.arange(ADDRESS_BITS - 1, -1, -1, dtype=np.int64)
    values = (outbits.reshape(m, ADDRESS_BITS).astype(np.int64) * weights).sum(axis=1)

    assigned = np.full(m, -1, dtype=np.int64)
    exact = (status == K.OK) & (values >= 0) & (values < strand_count)
    assigned[exact] = values[exact]

    rest = np.nonzero(~exact)[0]
    if rest.size:
        known = encode_addresses(np.arange(strand_count), cfg)
        best, ok = _hamming_assign(regions[rest], known, max_hamming)
        assigned[rest[ok]] = best[ok]

    groups: dict[int, np.ndarray] = {}
    good = assigned >= 0
    order = np.argsort(assigned[good], kind="stable")
    rows = np.nonzero(good)[0][order]
    keys = assigned[rows]
    if rows.size:
        cuts = np.nonzero(np.diff(keys))[0] + 1
        for part, key_row in zip(np.split(rows, cuts), np.split(keys, cuts)):
            groups[int(key_row[0])] = part
    return ClusterResult(groups, int(m - rows.size))


def _consensus_codes(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Plurality call per column of a (g, L) code block.

    Returns (winner codes, uncertain mask).  argmax takes the first maximum,
    so ties resolve in canonical base order.
    """
    g = block.shape[0]
    counts = (block[:, :, None] == np.arange(4, dtype=np.uint8)).sum(axis=0)
    winners = counts.argmax(axis=1).astype(np.uint8)
    top = counts.max(axis=1)
    uncertain = 6 * top < 5 * g
    return winners, uncertain


def consensus(group) -> tuple[str, set[int]]:
    """Majority-vote a read group into one sequence plus uncertain positions.

    A position is flagged when agreement is below 5/6 of the group (the
    25-of-30 rule at default coverage); flags are advisory, decoding proceeds
    regardless.
    """
    if isinstance(group, np.ndarray):
        block = np.ascontiguousarray(group, dtype=np.uint8)
    else:
        rows = list(group)
        if not rows:
            raise ValueError("consensus needs a nonempty group")
        block = np.stack([str_to_codes(r) if isinstance(r, str) else np.asarray(r, np.uint8) for r in rows])
    if block.ndim != 2 or block.shape[0] == 0:
        raise ValueError("consensus needs a nonempty group")
    winners, uncertain = _consensus_codes(block)
    return codes_to_str(winners), set(int(i) for i in np.nonzero(uncertain)[0])
