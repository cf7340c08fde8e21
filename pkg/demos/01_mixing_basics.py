"""Walk through the GF(2) mixing layer: libraries, one block, and the inverse.

Everything here is exact bit arithmetic; there is no float anywhere in the
mixing path.  Run it with python3 demos/01_mixing_basics.py.
"""
import numpy as np

from dnacodec import (
    BitBlockTensor,
    SplitMix64,
    gen_basis_library,
    gf2_invert,
    kron_apply,
    kron_apply_dense,
)

# The library generator is a splitmix64 stream, nothing fancier.  Same seed,
# same library, on any machine.
rng = SplitMix64(0)
print("first splitmix64 draws for seed 0:")
for _ in range(3):
    print(f"  {rng.next_u64():016x}")

# A library is a list of distinct invertible dim x dim bit matrices.
lib = gen_basis_library(seed=1, count=4, dim=4)
print(f"\nlibrary: {len(lib)} invertible 4x4 matrices, checksum {lib.checksum[:16]}...")
print("matrix 0 rows (each row is one integer, bit j = column j):")
for row in lib[0].rows:
    print("  " + "".join(str(b) for b in row))

# One 4x4x4 block of bits, mixed along all three axes.
bits = np.random.default_rng(42).integers(0, 2, size=(4, 4, 4, 1), dtype=np.uint8)
tensor = BitBlockTensor(bits)
wt, wy, wx = lib[0], lib[1], lib[2]
mixed = kron_apply(tensor, wt, wy, wx)
print(f"\ninput block ones: {int(tensor.bits.sum())} of 64")
print(f"mixed block ones: {int(mixed.bits.sum())} of 64")

# The separable apply must agree with the dense Kronecker matrix, built the
# expensive way.  This is the oracle the test suite leans on.
dense = kron_apply_dense(tensor.bits.reshape(-1), wt, wy, wx)
print(f"separable == dense Kronecker: {bool((mixed.bits.reshape(-1) == dense).all())}")

# Mixing is invertible: apply the inverse matrices and the block comes back.
unmixed = kron_apply(mixed, gf2_invert(wt), gf2_invert(wy), gf2_invert(wx))
print(f"inverse restores the block:   {bool((unmixed.bits == tensor.bits).all())}")

# And linear: mixing a XOR of blocks equals the XOR of mixed blocks.
other = BitBlockTensor(np.random.default_rng(43).integers(0, 2, size=(4, 4, 4, 1), dtype=np.uint8))
both = BitBlockTensor(tensor.bits ^ other.bits)
lhs = kron_apply(both, wt, wy, wx).bits
rhs = kron_apply(tensor, wt, wy, wx).bits ^ kron_apply(other, wt, wy, wx).bits
print(f"linearity over XOR:           {bool((lhs == rhs).all())}")
