"""Byte-stable artifact files: FASTA pools, FASTA reads, JSON manifests.

Pool strands serialize one record each, header then the full 240-nt sequence
on a single line:

    >helix|idx=<n>|bits=<m>
    GCGTCATGCC...

idx is the strand address and bits the number of payload bits the strand
consumed; both repeat sidecar facts so a pool file stays interpretable on
its own.  The manifest is a versioned JSON document with sorted keys, a
fixed indent, and a self checksum over its canonical compact dump, so two
encodes of the same input with the same seeds produce identical bytes.

Reads use plain FASTA with free-form headers; foreign files are accepted as
long as every sequence is exactly one strand long over ACGT.
"""
from __future__ import annotations

import hashlib
import json
import re

import numpy as np

from .basis_select import pack_choices, unpack_choices
from .channel import ReadSet
from .fsm import FsmConfig, codes_to_str, str_to_codes
from .strand import STRAND_NT, OligoPool, PoolManifest

__all__ = [
    "FormatError",
    "MANIFEST_KIND",
    "write_pool_fasta",
    "read_pool_fasta",
    "write_reads_fasta",
    "read_reads_fasta",
    "manifest_to_json",
    "manifest_from_json",
    "write_manifest",
    "read_manifest",
    "load_pool",
]

MANIFEST_KIND = "dnacodec-pool-manifest"

_POOL_HEADER = re.compile(r"^>helix\|idx=(\d+)\|bits=(\d+)$")


class FormatError(ValueError):
    """An artifact file does not parse or contradicts its sidecar."""


# ---------------------------------------------------------------------------
# pool FASTA


def write_pool_fasta(pool: OligoPool, path) -> None:
    bits = pool.manifest.strand_bits
    lines = []
    for row, idx in zip(pool.seqs, pool.indices):
        if not 0 <= idx < bits.size:
            raise FormatError(f"strand index {idx} outside manifest range")
        lines.append(f">helix|idx={idx}|bits={bits[idx]}\n{codes_to_str(row)}\n")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("".join(lines))


def read_pool_fasta(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse a pool file into (codes (n, 240), indices, header bit counts).

    Strict on structure: every record is exactly two lines in the header
    form above, addresses are unique, sequences are full strands over ACGT.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    while lines and not lines[-1]:
        lines.pop()
    if len(lines) % 2:
        raise FormatError("pool FASTA must alternate header and sequence lines")
    n = len(lines) // 2
    seqs = np.empty((n, STRAND_NT), dtype=np.uint8)
    indices = np.empty(n, dtype=np.int64)
    bits = np.empty(n, dtype=np.int64)
    for i in range(n):
        m = _POOL_HEADER.match(lines[2 * i])
        if m is None:
            raise FormatError(f"bad pool header at record {i}: {lines[2 * i]!r}")
        seq = lines[2 * i + 1]
        if len(seq) != STRAND_NT:
            raise FormatError(f"record {i}: sequence length {len(seq)}, expected {STRAND_NT}")
        try:
            seqs[i] = str_to_codes(seq)
        except ValueError as exc:
            raise FormatError(f"record {i}: {exc}") from exc
        indices[i] = int(m.group(1))
        bits[i] = int(m.group(2))
    if n and np.unique(indices).size != n:
        raise FormatError("duplicate strand addresses in pool file")
    return seqs, indices, bits


def load_pool(path, manifest: PoolManifest) -> OligoPool:
    """Read a pool file and bind it to its manifest, cross-checking headers.

    The pool may be partial (dropped strands decode as erasures) but every
    present record must agree with the manifest on its bit count.
    """
    seqs, indices, bits = read_pool_fasta(path)
    sb = manifest.strand_bits
    for idx, b in zip(indices, bits):
        if not 0 <= idx < sb.size:
            raise FormatError(f"strand index {idx} outside manifest range")
        if b != sb[idx]:
            raise FormatError(f"strand {idx}: header bits={b} but manifest says {sb[idx]}")
    return OligoPool(seqs, indices, manifest)


# ---------------------------------------------------------------------------
# reads FASTA


def write_reads_fasta(reads: ReadSet, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for i, row in enumerate(reads.codes):
            fh.write(f">read|n={i}\n{codes_to_str(row)}\n")


def read_reads_fasta(path) -> ReadSet:
    """Parse reads from FASTA; headers are free-form, sequences may wrap."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh]
    seqs: list[str] = []
    cur: list[str] = []
    for ln in lines:
        if not ln:
            continue
        if ln.startswith(">"):
            if cur:
                seqs.append("".join(cur))
                cur = []
        else:
            cur.append(ln)
    if cur:
        seqs.append("".join(cur))
    codes = np.empty((len(seqs), STRAND_NT), dtype=np.uint8)
    for i, seq in enumerate(seqs):
        if len(seq) != STRAND_NT:
            raise FormatError(f"read {i}: length {len(seq)}, expected {STRAND_NT}")
        try:
            codes[i] = str_to_codes(seq)
        except ValueError as exc:
            raise FormatError(f"read {i}: {exc}") from exc
    return ReadSet(codes)


# ---------------------------------------------------------------------------
# manifest JSON


def _manifest_doc(manifest: PoolManifest) -> dict:
    lib_len = len(manifest.library_rows)
    return {
        "format": MANIFEST_KIND,
        "format_version": manifest.format_version,
        "mode": manifest.mode,
        "total_payload_bits": manifest.total_payload_bits,
        "group_shape": list(manifest.group_shape),
        "block_dims": list(manifest.block_dims),
        "fsm": {
            "max_run": manifest.fsm.max_run,
            "gc_low": manifest.fsm.gc_low,
            "gc_high": manifest.fsm.gc_high,
            "window": manifest.fsm.window,
            "gc_grace": manifest.fsm.gc_grace,
            "motifs": sorted(manifest.fsm.motifs),
        },
        "primers": list(manifest.primers),
        "library": {
            "seed": manifest.library_seed,
            "dim": manifest.library_dim,
            "rows": [[f"{v:x}" for v in rows] for rows in manifest.library_rows],
            "checksum": manifest.library_checksum,
        },
        "basis_choices": {
            "count": len(manifest.basis_choices),
            "packed": pack_choices(manifest.basis_choices, lib_len).hex(),
        },
        "strand_bits": [int(v) for v in manifest.strand_bits],
        "pool_sha256": manifest.pool_sha256,
        "checksum": "",
    }


def _doc_checksum(doc: dict) -> str:
    body = dict(doc, checksum="")
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


def manifest_to_json(manifest: PoolManifest) -> str:
    doc = _manifest_doc(manifest)
    doc["checksum"] = _doc_checksum(doc)
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def manifest_from_json(text: str) -> PoolManifest:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_KIND:
        raise FormatError("not a pool manifest")
    if doc.get("format_version") != 1:
        raise FormatError(f"unsupported manifest version {doc.get('format_version')!r}")
    if doc.get("checksum") != _doc_checksum(doc):
        raise FormatError("manifest checksum mismatch")
    try:
        fsm = FsmConfig(
            max_run=doc["fsm"]["max_run"],
            gc_low=doc["fsm"]["gc_low"],
            gc_high=doc["fsm"]["gc_high"],
            window=doc["fsm"]["window"],
            gc_grace=doc["fsm"]["gc_grace"],
            motifs=frozenset(doc["fsm"]["motifs"]),
        )
        rows = [[int(v, 16) for v in mat] for mat in doc["library"]["rows"]]
        choices = unpack_choices(
            bytes.fromhex(doc["basis_choices"]["packed"]),
            doc["basis_choices"]["count"],
            len(rows),
        )
        return PoolManifest(
            mode=doc["mode"],
            total_payload_bits=doc["total_payload_bits"],
            group_shape=tuple(doc["group_shape"]),
            block_dims=tuple(doc["block_dims"]),
            fsm=fsm,
            primers=(doc["primers"][0], doc["primers"][1]),
            library_seed=doc["library"]["seed"],
            library_dim=doc["library"]["dim"],
            library_rows=rows,
            library_checksum=doc["library"]["checksum"],
            basis_choices=choices,
            strand_bits=np.asarray(doc["strand_bits"], dtype=np.int64),
            pool_sha256=doc["pool_sha256"],
            format_version=doc["format_version"],
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed manifest field: {exc}") from exc


def write_manifest(manifest: PoolManifest, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(manifest_to_json(manifest))


def read_manifest(path) -> PoolManifest:
    with open(path, "r", encoding="ascii") as fh:
        return manifest_from_json(fh.read())
