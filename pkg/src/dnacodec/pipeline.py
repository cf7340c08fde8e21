"""End-to-end codec: bytes to oligo pool and back, with selectable stages.

Four modes:

    naive      fixed 2-bit base map, no mixing, no constraints
    kron_only  per-group basis selection + Kronecker mixing, then the 2-bit map
    fsm_only   constrained FSM mapping of the raw bitstream
    full       mixing followed by FSM mapping

The mixed (or raw) bitstream is cut greedily into 152-nt payloads, one FSM
reset per strand, so damage to one strand can never leak into another
strand's bits.  Strand boundaries therefore fall wherever the mapper happens
to finish a payload, and the manifest records the bit span of every strand.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import _fsmkern as K
from . import rs
from .basis_select import BasisChoice, Sampled, DEFAULT_EVAL_BITS, select_basis
from .channel import ReadSet, _consensus_codes, cluster_reads
from .fsm import FsmConfig, _kernel_params, str_to_codes
from .gf2kron import BasisLibrary, BitBlockTensor, gen_basis_library, gf2_invert, kron_apply
from .strand import (
    ADDRESS_BITS,
    ADDRESS_NT,
    DEFAULT_PRIMERS,
    PARITY_NT,
    PAYLOAD_NT,
    PRIMER_NT,
    PROTECTED_NT,
    STRAND_NT,
    CapacityExceededError,
    OligoPool,
    PoolManifest,
    codes_to_symbols,
    decode_addresses,
    encode_addresses,
    symbols_to_codes,
)

__all__ = [
    "MODES",
    "CodecConfig",
    "ErasureRange",
    "ErasureMap",
    "DecodeReport",
    "ManifestMismatchError",
    "encode_payload",
    "decode_pool",
]

MODES = ("naive", "kron_only", "fsm_only", "full")
MAX_STRAND_BITS = 2 * PAYLOAD_NT  # 304, the unconstrained 2-bit ceiling

# Uncertain-position count above which a read group is treated as a possible
# fusion of two strands.  Channel noise flags at most a handful of positions;
# two fused piles disagree at dozens.
RESCUE_UNCERTAIN_MIN = 16

# 2-bit map used by the unconstrained modes: bit pair value -> base code and
# back again (the map is its own inverse).
_PAIR2CODE = np.array([0, 3, 2, 1], dtype=np.uint8)


class ManifestMismatchError(ValueError):
    """Manifest is internally inconsistent or does not belong to this pool."""


@dataclass(frozen=True)
class CodecConfig:
    """Knobs for encode_payload; the manifest echoes everything a decoder needs."""

    mode: str = "full"
    group_shape: tuple[int, int, int, int] = (8, 16, 16, 16)
    fsm: FsmConfig = field(default_factory=FsmConfig)
    library_seed: int = 1
    library_count: int = 32
    library_dim: int = 4
    selection: object = field(default_factory=Sampled)
    score_eval_bits: int = DEFAULT_EVAL_BITS
    primers: tuple[str, str] = DEFAULT_PRIMERS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        t, h, w, k = self.group_shape
        d = self.library_dim
        if min(t, h, w, k) < 1 or t % d or h % d or w % d:
            raise ValueError(f"group shape {self.group_shape} must have spatial axes divisible by {d}")
        if len(self.primers[0]) != PRIMER_NT or len(self.primers[1]) != PRIMER_NT:
            raise ValueError(f"primers must be {PRIMER_NT} nt")

    @property
    def mixes(self) -> bool:
        return self.mode in ("kron_only", "full")

    @property
    def constrains(self) -> bool:
        return self.mode in ("fsm_only", "full")


@dataclass(frozen=True)
class ErasureRange:
    """One unrecovered span of the encoded bitstream."""

    offset: int
    length: int
    cause: str  # dropout | rs_failure | cluster_loss

    @property
    def end(self) -> int:
        return self.offset + self.length


@dataclass
class ErasureMap:
    """Sorted, disjoint unrecovered ranges; empty map means bit-exact output."""

    ranges: list[ErasureRange] = field(default_factory=list)

    def __post_init__(self):
        self.ranges = sorted(self.ranges, key=lambda r: r.offset)
        for a, b in zip(self.ranges, self.ranges[1:]):
            if a.end > b.offset:
                raise ValueError("erasure ranges overlap")

    def __len__(self) -> int:
        return len(self.ranges)

    def __iter__(self):
        return iter(self.ranges)

    @property
    def total_bits(self) -> int:
        return sum(r.length for r in self.ranges)

    @property
    def is_empty(self) -> bool:
        return not self.ranges


@dataclass
class DecodeReport:
    """Counters describing one decode_pool run."""

    mode: str
    strands_expected: int
    rows_received: int
    strands_recovered: int
    rs_failures: int
    reads_total: int = 0
    reads_discarded: int = 0
    uncertain_positions: int = 0
    groups_rescued: int = 0
    rs_correction_histogram: dict = field(default_factory=dict)

    @property
    def strands_missing(self) -> int:
        return self.strands_expected - self.strands_recovered


def _plan_groups(total_bits: int, group_shape, dim: int) -> list[tuple[tuple[int, int, int, int], int]]:
    """Cut a bit count into mixing groups: (dims, data_bits) per group.

    Full groups use group_shape; the remainder gets the smallest
    (dim, dim, dim*q, 1) tensor that holds it, so tail zero-fill is always
    under one block volume.
    """
    t, h, w, k = group_shape
    vol = t * h * w * k
    plans = [((t, h, w, k), vol)] * (total_bits // vol)
    r = total_bits % vol
    if r:
        unit = dim ** 3
        q = -(-r // unit)
        plans.append(((dim, dim, dim * q, 1), r))
    return plans


def _encoded_length(total_bits: int, cfg_mixes: bool, group_shape, dim: int) -> int:
    if not cfg_mixes:
        return total_bits
    return sum(int(np.prod(dims)) for dims, _ in _plan_groups(total_bits, group_shape, dim))


def _mix_stream(bits: np.ndarray, cfg: CodecConfig, lib: BasisLibrary) -> tuple[np.ndarray, list[BasisChoice]]:
    plans = _plan_groups(bits.size, cfg.group_shape, cfg.library_dim)
    parts = []
    choices: list[BasisChoice] = []
    # identical group content yields the identical choice, so structured
    # payloads with repeated groups skip most of the candidate scoring
    seen: dict[bytes, BasisChoice] = {}
    pos = 0
    for dims, databits in plans:
        tensor = BitBlockTensor.from_stream(bits[pos : pos + databits], dims)
        pos += databits
        key = hashlib.sha1(tensor.bits.tobytes() + bytes(str(dims), "ascii")).digest()
        choice = seen.get(key)
        if choice is None:
            choice = select_basis(tensor, lib, cfg.fsm, cfg.selection, eval_bits=cfg.score_eval_bits)
            seen[key] = choice
        mixed = kron_apply(tensor, lib[choice.i], lib[choice.j], lib[choice.k])
        parts.append(mixed.flat())
        choices.append(choice)
    stream = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)
    return stream, choices


def _unmix_stream(stream: np.ndarray, total_bits: int, cfg_like, lib: BasisLibrary,
                  choices: list[BasisChoice]) -> np.ndarray:
    plans = _plan_groups(total_bits, cfg_like.group_shape, lib.dim)
    inv_cache: dict[int, object] = {}

    def inv(i: int):
        if i not in inv_cache:
            inv_cache[i] = gf2_invert(lib[i])
        return inv_cache[i]

    parts = []
    pos = 0
    for (dims, databits), choice in zip(plans, choices):
        vol = int(np.prod(dims))
        tensor = BitBlockTensor(stream[pos : pos + vol].reshape(dims), pad_len=vol - databits)
        pos += vol
        un = kron_apply(tensor, inv(choice.i), inv(choice.j), inv(choice.k))
        parts.append(un.flat()[: databits])
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def _fsm_stream_encode(bits: np.ndarray, cfg: FsmConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Greedy strandization: (payload codes (n, 152), bits per strand, zero-info nt)."""
    params = _kernel_params(cfg)
    blocks, useds, zs = [], [], []
    pos = 0
    while pos < bits.size:
        cap = max(16, (bits.size - pos) // PAYLOAD_NT + 4)
        out = np.empty((cap, PAYLOAD_NT), dtype=np.uint8)
        used = np.empty(cap, dtype=np.int64)
        zeros = np.empty(cap, dtype=np.int64)
        count, pos, status = K._encode_stream(bits, pos, out, used, zeros, *params)
        if status != K.OK:
            raise RuntimeError(f"mapper failed with status {status}")  # unreachable by construction
        blocks.append(out[:count])
        useds.append(used[:count])
        zs.append(zeros[:count])
    if not blocks:
        return np.zeros((0, PAYLOAD_NT), np.uint8), np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(blocks), np.concatenate(useds), np.concatenate(zs)


def _pair_stream_encode(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained strandization: 2 bits per nt, zero-padded final strand."""
    if bits.size == 0:
        return np.zeros((0, PAYLOAD_NT), np.uint8), np.zeros(0, np.int64)
    n = -(-bits.size // MAX_STRAND_BITS)
    padded = np.zeros(n * MAX_STRAND_BITS, dtype=np.uint8)
    padded[: bits.size] = bits
    pairs = (padded[0::2] << 1) | padded[1::2]
    codes = _PAIR2CODE[pairs].reshape(n, PAYLOAD_NT)
    used = np.full(n, MAX_STRAND_BITS, dtype=np.int64)
    used[-1] = bits.size - (n - 1) * MAX_STRAND_BITS
    return codes, used


def _pair_rows_decode(codes: np.ndarray) -> np.ndarray:
    """(r, 152) base codes -> (r, 304) bits via the inverse 2-bit map."""
    vals = _PAIR2CODE[codes]
    out = np.empty((codes.shape[0], MAX_STRAND_BITS), dtype=np.uint8)
    out[:, 0::2] = vals >> 1
    out[:, 1::2] = vals & 1
    return out


def encode_payload(data: bytes, cfg: CodecConfig = CodecConfig()) -> OligoPool:
    """Encode a byte payload into a framed oligo pool with its manifest."""
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    bits = np.unpackbits(raw)
    total_bits = int(bits.size)

    lib = gen_basis_library(cfg.library_seed, cfg.library_count, cfg.library_dim)
    if cfg.mixes and total_bits:
        stream, choices = _mix_stream(bits, cfg, lib)
    else:
        stream, choices = bits, []

    if cfg.constrains:
        payloads, used, _ = _fsm_stream_encode(stream, cfg.fsm)
    else:
        payloads, used = _pair_stream_encode(stream)

    n = payloads.shape[0]
    if n > 1 << ADDRESS_BITS:
        raise CapacityExceededError(f"payload needs {n} strands, address space holds {1 << ADDRESS_BITS}")

    addresses = encode_addresses(np.arange(n), cfg.fsm)
    protected = np.concatenate([addresses, payloads], axis=1)
    parity = symbols_to_codes(rs.rs_encode_symbols(codes_to_symbols(protected)))

    seqs = np.empty((n, STRAND_NT), dtype=np.uint8)
    seqs[:, :PRIMER_NT] = str_to_codes(cfg.primers[0])
    seqs[:, PRIMER_NT : PRIMER_NT + PROTECTED_NT] = protected
    seqs[:, PRIMER_NT + PROTECTED_NT : STRAND_NT - PRIMER_NT] = parity
    seqs[:, STRAND_NT - PRIMER_NT :] = str_to_codes(cfg.primers[1])

    manifest = PoolManifest(
        mode=cfg.mode,
        total_payload_bits=total_bits,
        group_shape=tuple(cfg.group_shape),
        block_dims=(cfg.library_dim,) * 3,
        fsm=cfg.fsm,
        primers=tuple(cfg.primers),
        library_seed=cfg.library_seed,
        library_dim=cfg.library_dim,
        library_rows=lib.serial_rows() if cfg.mixes else [],
        library_checksum=lib.checksum if cfg.mixes else "",
        basis_choices=choices,
        strand_bits=used,
        pool_sha256=hashlib.sha256(np.ascontiguousarray(seqs).tobytes()).hexdigest(),
    )
    return OligoPool(seqs, np.arange(n, dtype=np.int64), manifest)


def _validate_manifest(manifest: PoolManifest) -> None:
    if manifest.mode not in MODES:
        raise ManifestMismatchError(f"unknown mode {manifest.mode!r}")
    bits = manifest.strand_bits
    if bits.size and (bits.min() < 0 or bits.max() > MAX_STRAND_BITS):
        raise ManifestMismatchError("per-strand bit counts out of range")
    mixes = manifest.mode in ("kron_only", "full")
    expected = _encoded_length(manifest.total_payload_bits, mixes,
                               manifest.group_shape, manifest.library_dim)
    if manifest.encoded_bits != expected:
        raise ManifestMismatchError(
            f"strand bit spans sum to {manifest.encoded_bits}, expected {expected}"
        )
    if mixes:
        plans = _plan_groups(manifest.total_payload_bits, manifest.group_shape, manifest.library_dim)
        if len(manifest.basis_choices) != len(plans):
            raise ManifestMismatchError("basis choice count does not match group count")
        if not manifest.library_rows:
            raise ManifestMismatchError("mixing mode but no basis library in manifest")
        got = BasisLibrary.content_checksum(manifest.library_seed, manifest.library_dim,
                                            manifest.library_rows)
        if got != manifest.library_checksum:
            raise ManifestMismatchError("basis library checksum mismatch")
    elif manifest.basis_choices:
        raise ManifestMismatchError("basis choices present for a non-mixing mode")


def _split_sides(group_codes: np.ndarray) -> list[np.ndarray]:
    """Partition a read pile two ways by similarity; return each side's consensus.

    A synthesis substitution inside the address region relabels every copy of
    a strand at once, so the whole pile lands in another strand's group.  Two
    fused piles disagree at many positions with near-even votes, so the seed
    is the column where the runner-up base polls strongest (a lone stray read
    cannot fake that), followed by nearest-consensus refinement.  The caller
    re-identifies each side by its RS-corrected address, so a side can never
    be accepted into the wrong slot.
    """
    counts = (group_codes[:, :, None] == np.arange(4, dtype=np.uint8)).sum(axis=0)
    order = counts.argsort(axis=1)
    runner_votes = np.take_along_axis(counts, order[:, 2:3], axis=1)[:, 0]
    col = int(runner_votes.argmax())
    if runner_votes[col] < 2:
        return []
    side = group_codes[:, col] == order[col, 2]
    for _ in range(3):
        if side.all() or not side.any():
            break
        ca, _ = _consensus_codes(group_codes[~side])
        cb, _ = _consensus_codes(group_codes[side])
        new = (group_codes != cb).sum(axis=1) < (group_codes != ca).sum(axis=1)
        if (new == side).all():
            break
        side = new
    out = []
    for sel in (~side, side):
        if sel.any():
            out.append(_consensus_codes(group_codes[sel])[0])
    return out


def decode_pool(
    source: OligoPool | ReadSet,
    manifest: PoolManifest | None = None,
    *,
    strict: bool = False,
) -> tuple[bytes, ErasureMap, DecodeReport]:
    """Recover the byte payload from a pool or a pile of noisy reads.

    Never aborts on data damage: unrecoverable strands zero-fill their bit
    spans and show up in the ErasureMap instead.  strict additionally
    requires an exact pool checksum match (only meaningful for noise-free
    pools).
    """
    if manifest is None:
        if not isinstance(source, OligoPool):
            raise ManifestMismatchError("decoding reads requires an explicit manifest")
        manifest = source.manifest
    _validate_manifest(manifest)
    n_strands = manifest.strand_count
    cfgf = manifest.fsm

    reads_total = reads_discarded = uncertain_total = 0
    read_groups = None
    unc_rows = None
    if isinstance(source, ReadSet):
        reads_total = len(source)
        cres = cluster_reads(source, n_strands, cfgf)
        reads_discarded = cres.discarded
        keys = sorted(cres.groups)
        rows = np.empty((len(keys), STRAND_NT), dtype=np.uint8)
        read_groups = [cres.groups[k] for k in keys]
        unc_rows = np.zeros(len(keys), dtype=np.int64)
        for r, idx in enumerate(keys):
            win, unc = _consensus_codes(source.codes[cres.groups[idx]])
            rows[r] = win
            unc_rows[r] = int(unc.sum())
        uncertain_total = int(unc_rows.sum())
    else:
        if strict and manifest.pool_sha256:
            got = source.content_sha256()
            if got != manifest.pool_sha256:
                raise ManifestMismatchError("pool checksum does not match manifest")
        rows = source.seqs

    region = np.ascontiguousarray(rows[:, PRIMER_NT : PRIMER_NT + PROTECTED_NT + PARITY_NT])
    words = codes_to_symbols(region)
    synd = rs.syndromes(words) if words.shape[0] else np.zeros((0, rs.N_PARITY), np.uint8)
    dirty = np.nonzero(synd.any(axis=1))[0]

    corrected = words.copy()
    n_corr = np.zeros(words.shape[0], dtype=np.int64)
    rs_ok = np.ones(words.shape[0], dtype=bool)
    for r in dirty:
        try:
            corrected[r], n_corr[r] = rs.rs_decode_symbols(words[r])
        except rs.DecodeFailure:
            rs_ok[r] = False

    data_nt = symbols_to_codes(corrected[:, : rs.K_SYMBOLS])
    addr_vals, addr_ok = (decode_addresses(data_nt[:, :ADDRESS_NT], cfgf)
                          if words.shape[0] else (np.zeros(0, np.int64), np.zeros(0, bool)))

    usable = rs_ok & addr_ok & (addr_vals >= 0) & (addr_vals < n_strands)
    got = np.zeros(n_strands, dtype=bool)
    payload_rows = np.zeros((n_strands, PAYLOAD_NT), dtype=np.uint8)
    corr_of = np.zeros(n_strands, dtype=np.int64)
    for r in np.nonzero(usable)[0]:
        idx = int(addr_vals[r])
        if not got[idx]:
            got[idx] = True
            payload_rows[idx] = data_nt[r, ADDRESS_NT:]
            corr_of[idx] = n_corr[r]

    # a group that failed RS, or that voted with far more contested positions
    # than channel noise produces, may be two strands fused by an address
    # alias; split it and keep any side that decodes cleanly on its own
    groups_rescued = 0
    if read_groups is not None:
        suspect = ~rs_ok | (unc_rows >= RESCUE_UNCERTAIN_MIN)
        for r in np.nonzero(suspect)[0]:
            grp = source.codes[read_groups[r]]
            if grp.shape[0] < 2:
                continue
            for cons in _split_sides(grp):
                w = codes_to_symbols(
                    np.ascontiguousarray(cons[PRIMER_NT : PRIMER_NT + PROTECTED_NT + PARITY_NT])[None]
                )[0]
                try:
                    corr, nc = rs.rs_decode_symbols(w)
                except rs.DecodeFailure:
                    continue
                dn = symbols_to_codes(corr[None, : rs.K_SYMBOLS])[0]
                vals, ok = decode_addresses(dn[None, :ADDRESS_NT], cfgf)
                idx = int(vals[0])
                if ok[0] and 0 <= idx < n_strands and not got[idx]:
                    got[idx] = True
                    payload_rows[idx] = dn[ADDRESS_NT:]
                    corr_of[idx] = int(nc)
                    groups_rescued += 1

    # rows RS could not repair: locate them by their raw address when it still
    # replays cleanly, so the erasure can name the right span
    located_fail: dict[int, str] = {}
    failed_rows = np.nonzero(~(rs_ok & addr_ok))[0]
    if failed_rows.size:
        raw_vals, raw_ok = decode_addresses(region[failed_rows, :ADDRESS_NT], cfgf)
        for r, v, ok in zip(failed_rows, raw_vals, raw_ok):
            if ok and 0 <= v < n_strands and not got[v]:
                located_fail[int(v)] = "rs_failure"

    stream = np.zeros(manifest.encoded_bits, dtype=np.uint8)
    offsets = manifest.offsets
    budgets = manifest.strand_bits
    rs_fail_count = int((~rs_ok).sum())

    present = np.nonzero(got)[0]
    if present.size:
        if manifest.mode in ("fsm_only", "full"):
            codes2d = np.ascontiguousarray(payload_rows[present])
            written = np.empty(present.size, dtype=np.int64)
            status = np.empty(present.size, dtype=np.int64)
            K._decode_batch(codes2d, budgets[present], stream, offsets[present],
                            written, status, *_kernel_params(cfgf))
            for pos_in, st in zip(range(present.size), status):
                if st != K.OK:
                    idx = int(present[pos_in])
                    got[idx] = False
                    located_fail[idx] = "rs_failure"
                    rs_fail_count += 1
                    stream[offsets[idx] : offsets[idx] + budgets[idx]] = 0
        else:
            bits2d = _pair_rows_decode(payload_rows[present])
            for pos_in, idx in enumerate(present):
                b = int(budgets[idx])
                stream[offsets[idx] : offsets[idx] + b] = bits2d[pos_in, :b]

    default_cause = "cluster_loss" if isinstance(source, ReadSet) else "dropout"
    ranges = []
    for idx in np.nonzero(~got)[0]:
        if budgets[idx] == 0:
            continue
        cause = located_fail.get(int(idx), default_cause)
        ranges.append(ErasureRange(int(offsets[idx]), int(budgets[idx]), cause))
    erasures = ErasureMap(ranges)

    if manifest.mode in ("kron_only", "full"):
        lib = BasisLibrary.from_serial(manifest.library_seed, manifest.library_dim,
                                       manifest.library_rows, manifest.library_checksum)
        data_bits = _unmix_stream(stream, manifest.total_payload_bits, manifest, lib,
                                  manifest.basis_choices)
    else:
        data_bits = stream[: manifest.total_payload_bits]

    data = np.packbits(data_bits).tobytes() if data_bits.size else b""
    report = DecodeReport(
        mode=manifest.mode,
        strands_expected=n_strands,
        rows_received=int(rows.shape[0]),
        strands_recovered=int(got.sum()),
        rs_failures=rs_fail_count,
        reads_total=reads_total,
        reads_discarded=reads_discarded,
        uncertain_positions=uncertain_total,
        groups_rescued=groups_rescued,
        rs_correction_histogram=_histogram(corr_of[got]),
    )
    return data, erasures, report


def _histogram(values: np.ndarray) -> dict:
    uniq, counts = np.unique(np.asarray(values, dtype=np.int64), return_counts=True)
    return {int(u): int(c) for u, c in zip(uniq, counts)}
