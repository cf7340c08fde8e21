"""Constraint-aware codec for DNA data storage.

Encodes byte payloads into pools of fixed-layout 240-nt oligos: an optional
GF(2) Kronecker mixing stage whitens the bitstream, a finite-state base
mapper guarantees homopolymer, GC-band and motif constraints inside every
152-nt payload, and Reed-Solomon parity over GF(256) protects each strand.
A substitution channel simulator with clustering and consensus closes the
loop back to bytes.
"""

from .gf2kron import (
    BasisLibrary,
    BitBlockTensor,
    Gf2Matrix,
    ShapeError,
    SingularMatrixError,
    SplitMix64,
    gen_basis_library,
    gf2_invert,
    gf2_mul,
    gf2_rank,
    kron_apply,
    kron_apply_dense,
)
from .fsm import (
    EmptyValidSetError,
    FsmConfig,
    FsmState,
    InvalidBaseError,
    PaddingMismatchError,
    fsm_decode,
    fsm_encode,
    fsm_pad,
    soft_cost,
    valid_bases,
)
from .basis_select import (
    BasisChoice,
    Exhaustive,
    Sampled,
    score_choice,
    select_basis,
)
from .rs import DecodeFailure
from .strand import (
    CapacityExceededError,
    InvalidAddressError,
    OligoPool,
    PoolManifest,
    PrimerMismatchError,
    Strand,
    decode_address,
    deframe_strand,
    encode_address,
    frame_strand,
    rs_decode,
    rs_encode,
)
from .channel import (
    ChannelParams,
    ClusterResult,
    ReadSet,
    cluster_reads,
    consensus,
    sequence_reads,
    synthesize,
)
from .pipeline import (
    CodecConfig,
    DecodeReport,
    ErasureMap,
    ErasureRange,
    ManifestMismatchError,
    decode_pool,
    encode_payload,
)
from .metrics import EncodingReport, ablation_table, format_ablation_table, max_run, measure

__version__ = "0.1.0"

__all__ = [
    "BasisChoice",
    "BasisLibrary",
    "BitBlockTensor",
    "CapacityExceededError",
    "ChannelParams",
    "ClusterResult",
    "CodecConfig",
    "DecodeFailure",
    "DecodeReport",
    "EmptyValidSetError",
    "EncodingReport",
    "ErasureMap",
    "ErasureRange",
    "Exhaustive",
    "FsmConfig",
    "FsmState",
    "Gf2Matrix",
    "InvalidAddressError",
    "InvalidBaseError",
    "ManifestMismatchError",
    "OligoPool",
    "PaddingMismatchError",
    "PoolManifest",
    "PrimerMismatchError",
    "ReadSet",
    "Sampled",
    "ShapeError",
    "SingularMatrixError",
    "SplitMix64",
    "Strand",
    "ablation_table",
    "cluster_reads",
    "consensus",
    "decode_address",
    "decode_pool",
    "deframe_strand",
    "encode_address",
    "encode_payload",
    "format_ablation_table",
    "frame_strand",
    "fsm_decode",
    "fsm_encode",
    "fsm_pad",
    "gen_basis_library",
    "gf2_invert",
    "gf2_mul",
    "gf2_rank",
    "kron_apply",
    "kron_apply_dense",
    "max_run",
    "measure",
    "rs_decode",
    "rs_encode",
    "score_choice",
    "select_basis",
    "sequence_reads",
    "soft_cost",
    "synthesize",
    "valid_bases",
]
