"""Measure what each pipeline stage contributes on hostile input.

The worst case for a DNA code is low-entropy data: long 0x00 and 0xFF runs
become homopolymer tracts and GC skew under a direct base mapping.  Encode
one such corpus in all four modes and compare the pools.
"""
import numpy as np

from dnacodec import ablation_table, format_ablation_table


def run_heavy(n: int, seed: int = 11) -> bytes:
    """Bytes dominated by long 0x00/0xFF runs with occasional noise."""
    rng = np.random.default_rng(seed)
    chunks, total = [], 0
    while total < n:
        if rng.random() < 0.85:
            value = 255 * int(rng.integers(0, 2))
            length = int(rng.integers(16, 96))
        else:
            value = int(rng.integers(0, 256))
            length = int(rng.integers(1, 8))
        chunks.append(bytes([value]) * length)
        total += length
    return b"".join(chunks)[:n]


data = run_heavy(65536)
zeros = data.count(0)
print(f"corpus: {len(data)} bytes, {zeros} x 0x00, {data.count(255)} x 0xFF, "
      f"{len(data) - zeros - data.count(255)} other")

reports = ablation_table(data)
print()
print(format_ablation_table(reports))

print("""
reading the table:
  naive      two bits per base, no constraints: the run structure lands
             directly on the strands as homopolymer tracts and GC skew
  kron_only  mixing spreads mixed 0/1 regions, so GC evens out, but the
             transform is linear: an all-zero block stays all zero and the
             longest tracts survive untouched
  fsm_only   the constrained walk enforces runs <= 3 and the GC band on any
             input, paying for hostile stretches with padding positions
  full       mixing first hands the walk near-uniform bits, so it rarely
             needs to pad and keeps the density close to 2 bits/nt""")

naive, full = reports["naive"], reports["full"]
print(f"\nhomopolymer: {naive.max_homopolymer_payload} -> "
      f"{full.max_homopolymer_payload}   GC deviation: "
      f"{naive.gc_deviation_payload:.3f} -> {full.gc_deviation_payload:.3f}   "
      f"density: {naive.bpn:.2f} -> {full.bpn:.2f} bits/nt")
