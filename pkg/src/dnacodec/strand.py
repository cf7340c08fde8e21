"""Strand framing: primers, FSM-coded addresses, RS parity, pools and manifests.

Strand layout (240 nt):

    [ primer_fwd 20 | address 16 | payload 152 | rs_parity 32 | primer_rev 20 ]

The address is the strand's 24-bit index pushed through the constraint FSM
from a fresh state and padded to 16 nt, so addresses inherit the run and
motif guarantees (the GC rule never activates below gc_grace).  RS parity
covers address + payload: 168 nt = 42 GF(256) symbols at 4 nt per symbol,
8 parity symbols = 32 nt, correcting any 4 symbol errors, hence any 2 base
errors anywhere in the protected region.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _fsmkern as K
from . import rs
from .fsm import (
    FsmConfig,
    InvalidBaseError,
    _kernel_params,
    codes_to_str,
    str_to_codes,
)
from .rs import DecodeFailure

__all__ = [
    "PRIMER_FWD",
    "PRIMER_REV",
    "PRIMER_NT",
    "ADDRESS_NT",
    "ADDRESS_BITS",
    "PAYLOAD_NT",
    "PARITY_NT",
    "STRAND_NT",
    "CapacityExceededError",
    "InvalidAddressError",
    "PrimerMismatchError",
    "Strand",
    "OligoPool",
    "PoolManifest",
    "encode_address",
    "decode_address",
    "rs_encode",
    "rs_decode",
    "frame_strand",
    "deframe_strand",
]

# Fixed 20-mers: 50% GC, no run over 2, no forbidden motif, no shared 6-mer,
# Hamming distance 16 apart.  Found by seeded search; see tests for the checks.
PRIMER_FWD = "GCGTCATGCCTCTTATGATC"
PRIMER_REV = "CTGAACTCTAGTATCGGCAG"
DEFAULT_PRIMERS = (PRIMER_FWD, PRIMER_REV)

PRIMER_NT = 20
ADDRESS_NT = 16
ADDRESS_BITS = 24
PAYLOAD_NT = 152
PARITY_NT = 32
STRAND_NT = 2 * PRIMER_NT + ADDRESS_NT + PAYLOAD_NT + PARITY_NT
PROTECTED_NT = ADDRESS_NT + PAYLOAD_NT  # region covered by RS parity
NT_PER_SYMBOL = 4


class CapacityExceededError(ValueError):
    """More bits than the region can carry under worst-case FSM restrictions."""


class InvalidAddressError(ValueError):
    """Address region does not replay as an FSM encoding of a 24-bit index."""


class PrimerMismatchError(ValueError):
    """Primer regions differ from the expected constants."""


@dataclass(frozen=True)
class Strand:
    """One 240-nt oligo split into its five regions."""

    primer_fwd: str
    address: str
    payload: str
    rs_parity: str
    primer_rev: str

    def __post_init__(self):
        for name, value, want in (
            ("primer_fwd", self.primer_fwd, PRIMER_NT),
            ("address", self.address, ADDRESS_NT),
            ("payload", self.payload, PAYLOAD_NT),
            ("rs_parity", self.rs_parity, PARITY_NT),
            ("primer_rev", self.primer_rev, PRIMER_NT),
        ):
            if len(value) != want:
                raise ValueError(f"{name} must be {want} nt, got {len(value)}")
            if any(ch not in "ACGT" for ch in value):
                raise InvalidBaseError(f"{name} contains a non-ACGT character")

    @property
    def sequence(self) -> str:
        return self.primer_fwd + self.address + self.payload + self.rs_parity + self.primer_rev

    @classmethod
    def from_sequence(cls, seq: str) -> "Strand":
        if len(seq) != STRAND_NT:
            raise ValueError(f"strand must be {STRAND_NT} nt, got {len(seq)}")
        o = 0
        parts = []
        for width in (PRIMER_NT, ADDRESS_NT, PAYLOAD_NT, PARITY_NT, PRIMER_NT):
            parts.append(seq[o : o + width])
            o += width
        return cls(*parts)


def _index_bits(indices: np.ndarray) -> np.ndarray:
    """MSB-first 24-bit rows for an array of indices."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    shifts = np.arange(ADDRESS_BITS - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def encode_addresses(indices, cfg: FsmConfig = FsmConfig()) -> np.ndarray:
    """Vector form of encode_address: (n,) indices -> (n, 16) base codes."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= 1 << ADDRESS_BITS):
        raise ValueError(f"addresses must be in [0, 2^{ADDRESS_BITS})")
    bits = _index_bits(idx)
    out = np.empty((idx.size, ADDRESS_NT), dtype=np.uint8)
    consumed = np.empty(idx.size, dtype=np.int64)
    zeros = np.empty(idx.size, dtype=np.int64)
    status = np.empty(idx.size, dtype=np.int64)
    K._encode_batch(bits, ADDRESS_BITS, ADDRESS_NT, out, consumed, zeros, status,
                    *_kernel_params(cfg))
    if (status != K.OK).any() or (consumed != ADDRESS_BITS).any():
        bad = int(idx[(status != K.OK) | (consumed != ADDRESS_BITS)][0])
        raise CapacityExceededError(
            f"index {bad} does not fit {ADDRESS_BITS} bits in {ADDRESS_NT} nt under this config"
        )
    return out


def decode_addresses(codes: np.ndarray, cfg: FsmConfig = FsmConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Vector form of decode_address: (n, 16) codes -> (indices, ok_mask).

    Invalid rows get ok=False instead of raising; callers that need the
    strict behavior use decode_address.
    """
    arr = np.ascontiguousarray(codes, dtype=np.uint8)
    n = arr.shape[0]
    outbits = np.empty(n * ADDRESS_BITS, dtype=np.uint8)
    offsets = np.arange(n, dtype=np.int64) * ADDRESS_BITS
    budgets = np.full(n, ADDRESS_BITS, dtype=np.int64)
    written = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    K._decode_batch(arr.copy(), budgets, outbits, offsets, written, status,
                    *_kernel_params(cfg))
    bits = outbits.reshape(n, ADDRESS_BITS).astype(np.int64)
    weights = 1 << np.arange(ADDRESS_BITS - 1, -1, -1, dtype=np.int64)
    values = (bits * weights).sum(axis=1)
    return values, status == K.OK


def encode_address(index: int, cfg: FsmConfig = FsmConfig()) -> str:
    """FSM-encode a 24-bit strand index into 16 nt (fresh state, then padding).

    Injective by construction (decode_address inverts it).  Raises
    CapacityExceededError if the index bits do not fit, which an exhaustive
    reachable-state bound shows cannot happen under the default config.
    """
    return codes_to_str(encode_addresses([index], cfg)[0])


def decode_address(bases: str, cfg: FsmConfig = FsmConfig()) -> int:
    """Inverse of encode_address; raises InvalidAddressError on any mismatch."""
    codes = str_to_codes(bases)
    if codes.size != ADDRESS_NT:
        raise InvalidAddressError(f"address must be {ADDRESS_NT} nt, got {codes.size}")
    values, ok = decode_addresses(codes[None, :], cfg)
    if not ok[0]:
        raise InvalidAddressError("address region does not replay as an FSM encoding")
    return int(values[0])


@lru_cache(maxsize=8)
def _pack_weights() -> np.ndarray:
    return (np.uint16(1) << np.arange(3, -1, -1, dtype=np.uint16) * 2).astype(np.uint16)


def codes_to_symbols(codes: np.ndarray) -> np.ndarray:
    """Pack base codes (..., 4*m) into GF(256) symbols (..., m), first base high bits."""
    arr = np.asarray(codes, dtype=np.uint16)
    if arr.shape[-1] % NT_PER_SYMBOL:
        raise ValueError("length must be a multiple of 4 nt")
    grouped = arr.reshape(arr.shape[:-1] + (arr.shape[-1] // NT_PER_SYMBOL, NT_PER_SYMBOL))
    return (grouped * _pack_weights()).sum(axis=-1).astype(np.uint8)


def symbols_to_codes(symbols: np.ndarray) -> np.ndarray:
    arr = np.asarray(symbols, dtype=np.uint8)
    shifts = np.array([6, 4, 2, 0], dtype=np.uint8)
    codes = (arr[..., None] >> shifts) & 3
    return codes.reshape(arr.shape[:-1] + (arr.shape[-1] * NT_PER_SYMBOL,)).astype(np.uint8)


def rs_encode(data_nt: str) -> str:
    """Parity nucleotides (32) for the 168-nt address + payload region."""
    codes = str_to_codes(data_nt)
    if codes.size != PROTECTED_NT:
        raise ValueError(f"expected {PROTECTED_NT} nt, got {codes.size}")
    parity = rs.rs_encode_symbols(codes_to_symbols(codes))
    return codes_to_str(symbols_to_codes(parity))


def rs_decode(codeword_nt: str) -> tuple[str, int]:
    """Correct a 200-nt protected region + parity; returns (data_nt, corrections).

    Raises DecodeFailure beyond 4 symbol errors rather than ever returning a
    silently wrong word.
    """
    codes = str_to_codes(codeword_nt)
    if codes.size != PROTECTED_NT + PARITY_NT:
        raise ValueError(f"expected {PROTECTED_NT + PARITY_NT} nt, got {codes.size}")
    word = codes_to_symbols(codes)
    corrected, n_corr = rs.rs_decode_symbols(word)
    data = symbols_to_codes(corrected[: rs.K_SYMBOLS])
    return codes_to_str(data), n_corr


def frame_strand(
    index: int,
    payload_bases: str,
    cfg: FsmConfig = FsmConfig(),
    primers: tuple[str, str] = DEFAULT_PRIMERS,
) -> Strand:
    """Assemble a full strand around an encoded 152-nt payload."""
    if len(payload_bases) != PAYLOAD_NT:
        raise ValueError(f"payload must be {PAYLOAD_NT} nt, got {len(payload_bases)}")
    address = encode_address(index, cfg)
    parity = rs_encode(address + payload_bases)
    return Strand(primers[0], address, payload_bases, parity, primers[1])


def deframe_strand(
    strand: Strand | str,
    cfg: FsmConfig = FsmConfig(),
    primers: tuple[str, str] = DEFAULT_PRIMERS,
) -> tuple[int, str, str]:
    """Split and validate a strand; returns (index, payload, rs_parity).

    Primers must match exactly at this layer (PrimerMismatchError otherwise);
    noisy-pool decoding deliberately bypasses this check because primers
    carry no data.
    """
    s = strand if isinstance(strand, Strand) else Strand.from_sequence(strand)
    if s.primer_fwd != primers[0] or s.primer_rev != primers[1]:
        raise PrimerMismatchError("primer regions do not match the expected constants")
    index = decode_address(s.address, cfg)
    return index, s.payload, s.rs_parity


class OligoPool:
    """Ordered pool of strands plus the manifest needed to decode it.

    Internally a compact (n, 240) base-code array; Strand objects are
    materialized lazily because pools can run to hundreds of thousands of
    rows.
    """

    def __init__(self, seqs: np.ndarray, indices: np.ndarray, manifest: "PoolManifest"):
        self.seqs = np.ascontiguousarray(seqs, dtype=np.uint8)
        if self.seqs.ndim != 2 or (self.seqs.size and self.seqs.shape[1] != STRAND_NT):
            raise ValueError(f"pool array must be (n, {STRAND_NT})")
        self.indices = np.asarray(indices, dtype=np.int64).reshape(-1)
        if self.indices.size != self.seqs.shape[0]:
            raise ValueError("indices and sequences disagree in length")
        self.manifest = manifest

    def __len__(self) -> int:
        return self.seqs.shape[0]

    @property
    def strands(self) -> list[Strand]:
        cached = getattr(self, "_strands", None)
        if cached is None or len(cached) != len(self):
            cached = [Strand.from_sequence(codes_to_str(row)) for row in self.seqs]
            self._strands = cached
        return cached

    def sequences(self) -> list[str]:
        return [codes_to_str(row) for row in self.seqs]

    @classmethod
    def from_strands(cls, strands: list[Strand], manifest: "PoolManifest", indices=None) -> "OligoPool":
        seqs = np.stack([str_to_codes(s.sequence) for s in strands]) if strands else np.zeros((0, STRAND_NT), np.uint8)
        if indices is None:
            indices = [decode_address(s.address) for s in strands]
        return cls(seqs, np.asarray(indices, dtype=np.int64), manifest)

    def content_sha256(self) -> str:
        import hashlib

        return hashlib.sha256(self.seqs.tobytes()).hexdigest()


@dataclass
class PoolManifest:
    """Everything the decoder needs besides the strands themselves.

    strand_bits[i] is the bit count consumed by strand i; offsets are the
    exclusive prefix sums.  Basis choices apply per block group in order and
    are empty for the non-mixing modes.
    """

    mode: str
    total_payload_bits: int
    group_shape: tuple[int, int, int, int]
    block_dims: tuple[int, int, int]
    fsm: FsmConfig
    primers: tuple[str, str]
    library_seed: int
    library_dim: int
    library_rows: list[list[int]]
    library_checksum: str
    basis_choices: list
    strand_bits: np.ndarray
    pool_sha256: str = ""
    format_version: int = 1

    def __post_init__(self):
        self.strand_bits = np.asarray(self.strand_bits, dtype=np.int64).reshape(-1)

    @property
    def strand_count(self) -> int:
        return int(self.strand_bits.size)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.strand_bits)[:-1]]).astype(np.int64)

    @property
    def encoded_bits(self) -> int:
        return int(self.strand_bits.sum())
