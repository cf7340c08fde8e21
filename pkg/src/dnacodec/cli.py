"""Command-line front end: encode, decode, simulate, stats, ablate.

Exit codes follow one convention everywhere: 0 success, 1 data error
(unreadable artifact, inconsistent manifest), 2 usage error (bad flags or
paths).  decode exits 1 when erasures are present only under --strict;
without it a damaged pool still yields best-effort output and exit 0.

Every flag default equals the library default, so a bare `encode` and
`encode_payload(data, CodecConfig())` produce identical artifacts.  Given
identical inputs and seeds, every subcommand writes byte-identical files.
"""
from __future__ import annotations

import argparse
import sys

from .basis_select import Exhaustive, Sampled
from .channel import ChannelParams, sequence_reads, synthesize
from .fsm import FsmConfig
from .formats import (
    FormatError,
    load_pool,
    read_manifest,
    read_reads_fasta,
    write_manifest,
    write_pool_fasta,
    write_reads_fasta,
)
from .metrics import ablation_table, format_ablation_table, measure
from .pipeline import CodecConfig, ManifestMismatchError, decode_pool, encode_payload
from .strand import DEFAULT_PRIMERS

__all__ = ["main", "build_parser"]


class UsageError(Exception):
    """Bad paths or flag combinations detected before any work runs."""


def _rate(text: str) -> float:
    """Probability flag: plain decimal or a fraction like 1/7500."""
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            value = float(num) / float(den)
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rate: {text!r}") from exc
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"rate {text} outside [0, 1]")
    return value


def _shape(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4 or not all(p.strip().isdigit() for p in parts):
        raise argparse.ArgumentTypeError(f"group shape must be T,H,W,K integers, got {text!r}")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _motifs(text: str) -> frozenset[str]:
    if not text.strip():
        return frozenset()
    return frozenset(m.strip().upper() for m in text.split(","))


def _codec_flags(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
    g = p.add_argument_group("codec")
    if with_mode:
        g.add_argument("--mode", choices=["naive", "kron_only", "fsm_only", "full"],
                       default="full", help="pipeline stages to apply (default: full)")
    g.add_argument("--group-shape", type=_shape, default=(8, 16, 16, 16), metavar="T,H,W,K",
                   help="bits per mixing group as a 4-d tensor (default: 8,16,16,16)")
    g.add_argument("--library-seed", type=int, default=1,
                   help="basis library generator seed (default: 1)")
    g.add_argument("--library-count", type=int, default=32,
                   help="matrices in the basis library (default: 32)")
    g.add_argument("--library-dim", type=int, default=4,
                   help="basis matrix dimension (default: 4)")
    g.add_argument("--selection", choices=["sampled", "exhaustive"], default="sampled",
                   help="basis candidate strategy (default: sampled)")
    g.add_argument("--selection-count", type=int, default=64,
                   help="candidate triples for sampled selection (default: 64)")
    g.add_argument("--selection-seed", type=int, default=0,
                   help="candidate sampler seed (default: 0)")
    g.add_argument("--score-eval-bits", type=int, default=1024,
                   help="mixed-prefix length scored per candidate (default: 1024)")
    g.add_argument("--primer-fwd", default=DEFAULT_PRIMERS[0],
                   help=f"5' primer, 20 nt (default: {DEFAULT_PRIMERS[0]})")
    g.add_argument("--primer-rev", default=DEFAULT_PRIMERS[1],
                   help=f"3' primer, 20 nt (default: {DEFAULT_PRIMERS[1]})")
    f = p.add_argument_group("constraints")
    f.add_argument("--max-run", type=int, default=3,
                   help="homopolymer cap (default: 3)")
    f.add_argument("--gc-low", type=float, default=0.45,
                   help="windowed GC lower bound (default: 0.45)")
    f.add_argument("--gc-high", type=float, default=0.55,
                   help="windowed GC upper bound (default: 0.55)")
    f.add_argument("--gc-window", type=int, default=152,
                   help="GC window length in nt (default: 152)")
    f.add_argument("--gc-grace", type=int, default=20,
                   help="positions before the GC band engages (default: 20)")
    f.add_argument("--motifs", type=_motifs, default=None, metavar="M1,M2,...",
                   help="forbidden 6-mers, empty string for none "
                        "(default: GAATTC,GGATCC,AAGCTT,GCGGCC,CGGCCG,GGCCGC)")


def _channel_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("channel")
    g.add_argument("--synthesis-sub-rate", type=_rate, default=1 / 7500, metavar="RATE",
                   help="per-base synthesis substitution rate (default: 1/7500)")
    g.add_argument("--sequencing-sub-rate", type=_rate, default=0.00109, metavar="RATE",
                   help="per-base sequencing substitution rate (default: 0.00109)")
    g.add_argument("--coverage", type=int, default=30,
                   help="reads per surviving strand (default: 30)")
    g.add_argument("--dropout-rate", type=_rate, default=0.0, metavar="RATE",
                   help="per-strand dropout probability (default: 0)")
    g.add_argument("--indel-strand-rate", type=_rate, default=0.0, metavar="RATE",
                   help="per-strand single-indel probability (default: 0)")
    g.add_argument("--seed", type=int, default=0,
                   help="channel RNG seed (default: 0)")


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None, metavar="N",
                   help="compiled-kernel thread cap (default: library setting)")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="print a progress summary to stderr")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="dnacodec",
        description="Encode binary data into constraint-respecting DNA strands and back.",
    )
    sub = top.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("encode", help="file -> pool FASTA + manifest",
                       description="Encode a binary file into an oligo pool.")
    p.add_argument("input", help="binary input file")
    p.add_argument("-o", "--pool", required=True, help="output pool FASTA path")
    p.add_argument("-m", "--manifest", required=True, help="output manifest JSON path")
    _codec_flags(p)
    _common_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="pool or reads + manifest -> file",
                       description="Recover the binary payload from a pool or reads file.")
    p.add_argument("input", help="pool FASTA or reads FASTA")
    p.add_argument("-m", "--manifest", required=True, help="manifest JSON path")
    p.add_argument("-o", "--output", required=True, help="output binary path")
    p.add_argument("--input-kind", choices=["auto", "pool", "reads"], default="auto",
                   help="how to read the input file (default: auto-detect by header)")
    p.add_argument("--strict", action="store_true",
                   help="exit nonzero when any erasure remains")
    _common_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="pool -> noisy reads FASTA",
                       description="Run a pool through the synthesis and sequencing channel.")
    p.add_argument("input", help="pool FASTA")
    p.add_argument("-m", "--manifest", required=True, help="manifest JSON path")
    p.add_argument("-o", "--reads", required=True, help="output reads FASTA path")
    _channel_flags(p)
    _common_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="pool + manifest -> quality report",
                       description="Print the encoding quality report for a pool.")
    p.add_argument("input", help="pool FASTA")
    p.add_argument("-m", "--manifest", required=True, help="manifest JSON path")
    _common_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("ablate", help="file -> four-mode comparison table",
                       description="Encode one file in all four modes and tabulate quality.")
    p.add_argument("input", help="binary input file")
    _codec_flags(p, with_mode=False)
    _common_flags(p)
    p.set_defaults(func=cmd_ablate)

    return top


def _codec_config(args: argparse.Namespace, mode: str | None = None) -> CodecConfig:
    fsm_kwargs = dict(
        max_run=args.max_run,
        gc_low=args.gc_low,
        gc_high=args.gc_high,
        window=args.gc_window,
        gc_grace=args.gc_grace,
    )
    if args.motifs is not None:
        fsm_kwargs["motifs"] = args.motifs
    selection = (Exhaustive() if args.selection == "exhaustive"
                 else Sampled(args.selection_count, args.selection_seed))
    return CodecConfig(
        mode=mode if mode is not None else args.mode,
        group_shape=args.group_shape,
        fsm=FsmConfig(**fsm_kwargs),
        library_seed=args.library_seed,
        library_count=args.library_count,
        library_dim=args.library_dim,
        selection=selection,
        score_eval_bits=args.score_eval_bits,
        primers=(args.primer_fwd.upper(), args.primer_rev.upper()),
    )


def _channel_params(args: argparse.Namespace) -> ChannelParams:
    return ChannelParams(
        synthesis_sub_rate=args.synthesis_sub_rate,
        sequencing_sub_rate=args.sequencing_sub_rate,
        coverage=args.coverage,
        dropout_rate=args.dropout_rate,
        indel_strand_rate=args.indel_strand_rate,
        seed=args.seed,
    )


def _read_binary(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _apply_threads(args: argparse.Namespace) -> None:
    if args.threads is None:
        return
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    import numba

    try:
        numba.set_num_threads(args.threads)
    except ValueError as exc:
        raise UsageError(f"--threads {args.threads}: {exc}") from exc


def _note(args: argparse.Namespace, text: str) -> None:
    if args.verbose:
        print(text, file=sys.stderr)


def cmd_encode(args: argparse.Namespace) -> int:
    cfg = _codec_config(args)
    data = _read_binary(args.input)
    pool = encode_payload(data, cfg)
    write_pool_fasta(pool, args.pool)
    write_manifest(pool.manifest, args.manifest)
    _note(args, f"encoded {len(data)} B into {len(pool)} strands ({cfg.mode})")
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest)
    kind = args.input_kind
    if kind == "auto":
        try:
            with open(args.input, "r", encoding="ascii") as fh:
                first = fh.readline()
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc.strerror or exc}") from exc
        kind = "pool" if first.startswith(">helix|") else "reads"
    if kind == "pool":
        source = load_pool(args.input, manifest)
    else:
        source = read_reads_fasta(args.input)
    data, erasures, report = decode_pool(source, manifest)
    with open(args.output, "wb") as fh:
        fh.write(data)
    for r in erasures:
        print(f"erasure offset={r.offset} length={r.length} cause={r.cause}", file=sys.stderr)
    _note(args, f"recovered {report.strands_recovered}/{report.strands_expected} strands "
                f"({kind} input), {erasures.total_bits} bits erased")
    if args.strict and not erasures.is_empty:
        return 1
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    params = _channel_params(args)
    manifest = read_manifest(args.manifest)
    pool = load_pool(args.input, manifest)
    reads = sequence_reads(synthesize(pool, params), params)
    write_reads_fasta(reads, args.reads)
    _note(args, f"simulated {len(reads)} reads from {len(pool)} strands")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest)
    pool = load_pool(args.input, manifest)
    report = measure(pool, manifest)
    print(f"mode                      {report.mode}")
    print(f"strands                   {report.strand_count}")
    print(f"bits per nucleotide       {report.bpn:.4f}")
    print(f"gc deviation (strand)     {report.gc_deviation:.4f}")
    print(f"gc deviation (payload)    {report.gc_deviation_payload:.4f}")
    print(f"gc deviation (pool)       {report.pool_gc_deviation:.4f}")
    print(f"max homopolymer (strand)  {report.max_homopolymer}")
    print(f"max homopolymer (payload) {report.max_homopolymer_payload}")
    print(f"padding                   {report.padding_pct:.3f}%")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _codec_config(args, mode="full")
    data = _read_binary(args.input)
    print(format_ablation_table(ablation_table(data, cfg)))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_threads(args)
        return args.func(args)
    except UsageError as exc:
        print(f"dnacodec {args.command}: {exc}", file=sys.stderr)
        return 2
    except (FormatError, ManifestMismatchError, ValueError) as exc:
        print(f"dnacodec {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"dnacodec {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
