"""Dissect one 240-nt strand and exercise its error correction.

Layout: 20 nt forward primer | 16 nt address | 152 nt payload | 32 nt RS
parity | 20 nt reverse primer.  The parity covers address + payload as 42
data symbols of 4 nt each, with 8 parity symbols appended.
"""
import numpy as np

from dnacodec import DecodeFailure, fsm_encode, frame_strand, deframe_strand, rs_decode

rng = np.random.default_rng(12)
payload, _ = fsm_encode(rng.integers(0, 2, size=300, dtype=np.uint8), 152)
strand = frame_strand(index=1234, payload_bases=payload)

print("regions:")
print(f"  primer_fwd  {strand.primer_fwd}")
print(f"  address     {strand.address}   (encodes 1234)")
print(f"  payload     {strand.payload[:48]}... ({len(strand.payload)} nt)")
print(f"  rs_parity   {strand.rs_parity}")
print(f"  primer_rev  {strand.primer_rev}")

index, got_payload, parity = deframe_strand(strand)
print(f"\ndeframe: index={index}, payload intact: {got_payload == payload}")

# Two substitutions anywhere in the protected region are always repaired.
codeword = strand.address + strand.payload + strand.rs_parity
pos = rng.choice(len(codeword), size=2, replace=False)
damaged = list(codeword)
for p in pos:
    damaged[p] = "ACGT"[("ACGT".index(damaged[p]) + 1) % 4]
data, corrections = rs_decode("".join(damaged))
print(f"\ntwo substitutions at {sorted(int(p) for p in pos)}: "
      f"repaired with {corrections} symbol corrections, "
      f"payload intact: {data[16:] == payload}")

# Five damaged symbols exceed the 4-symbol capability.  The decoder refuses
# instead of guessing; a wrong-but-plausible answer never comes back.
damaged = list(codeword)
for sym in range(5):
    p = sym * 16  # five distinct symbols, one base each
    damaged[p] = "ACGT"[("ACGT".index(damaged[p]) + 2) % 4]
try:
    rs_decode("".join(damaged))
    print("five corrupted symbols: decoded (unexpected)")
except DecodeFailure as exc:
    print(f"five corrupted symbols: refused ({exc})")
