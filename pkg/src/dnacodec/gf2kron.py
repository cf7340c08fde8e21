"""GF(2) linear algebra and separable Kronecker mixing of binary block tensors.

Matrices are dense 0/1 numpy arrays; all arithmetic is mod 2.  A bit tensor of
shape (T, H, W, k) is partitioned into contiguous t*h*w blocks along its first
three axes and each block is transformed by (Wt kron Wy kron Wx) acting on the
block flattened in row-major (t, y, x) order.  Applying the three small
matrices separably along their own axes is algebraically identical to the
dense Kronecker product and costs O(n * (t + h + w)) bit operations for n
tensor bits instead of O(n * t*h*w).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SingularMatrixError",
    "ShapeError",
    "SplitMix64",
    "Gf2Matrix",
    "BasisLibrary",
    "BitBlockTensor",
    "OpCounter",
    "gf2_mul",
    "gf2_rank",
    "gf2_invert",
    "gen_basis_library",
    "kron_apply",
    "kron_apply_dense",
]

# Largest block volume accepted by the dense reference path.
MAX_DENSE_BLOCK = 4096


class SingularMatrixError(ValueError):
    """Raised when a GF(2) matrix has no inverse."""


class ShapeError(ValueError):
    """Raised for dimension mismatches, non-divisible block axes and oversize blocks."""


_U64 = (1 << 64) - 1
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MIX1 = 0xBF58476D1CE4E5B9
_SM_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 generator: state += 0x9E3779B97F4A7C15, then xor-shift mixing.

    The update constants (gamma 0x9E3779B97F4A7C15, multipliers
    0xBF58476D1CE4E5B9 and 0x94D049BB133111EB, shifts 30/27/31) fully define
    the stream, so any implementation reproduces it bit for bit.
    """

    def __init__(self, seed: int):
        self._state = seed & _U64

    def next_u64(self) -> int:
        self._state = (self._state + _SM_GAMMA) & _U64
        z = self._state
        z = ((z ^ (z >> 30)) * _SM_MIX1) & _U64
        z = ((z ^ (z >> 27)) * _SM_MIX2) & _U64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Draw an integer in [0, bound) by modulo reduction."""
        return self.next_u64() % bound


@dataclass(frozen=True, eq=False)
class Gf2Matrix:
    """Square bit matrix over GF(2), stored as a read-only (m, m) uint8 array."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.uint8) & 1
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {rows.shape}")
        if rows.shape[0] == 0:
            raise ShapeError("empty matrix")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return self.rows.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Gf2Matrix":
        return cls(np.eye(dim, dtype=np.uint8))

    def row_ints(self) -> list[int]:
        """Rows packed to integers, bit j of the value holding column j."""
        weights = (1 << np.arange(self.dim, dtype=np.uint64))
        return [int(v) for v in (self.rows.astype(np.uint64) * weights).sum(axis=1)]

    @classmethod
    def from_row_ints(cls, values: list[int], dim: int) -> "Gf2Matrix":
        rows = np.array([[(v >> j) & 1 for j in range(dim)] for v in values], dtype=np.uint8)
        return cls(rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, Gf2Matrix) and np.array_equal(self.rows, other.rows)

    def __hash__(self) -> int:
        return hash((self.rows.shape[0], self.rows.tobytes()))

    def __repr__(self) -> str:
        return f"Gf2Matrix({self.rows.tolist()!r})"


def gf2_mul(a: Gf2Matrix, b: Gf2Matrix) -> Gf2Matrix:
    """Matrix product mod 2."""
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return Gf2Matrix((a.rows.astype(np.uint32) @ b.rows) & 1)


def gf2_rank(m: Gf2Matrix | np.ndarray) -> int:
    """Rank over GF(2) by row reduction."""
    a = (m.rows if isinstance(m, Gf2Matrix) else np.asarray(m, dtype=np.uint8)).copy() & 1
    nrows, ncols = a.shape
    rank = 0
    for col in range(ncols):
        pivot = None
        for r in range(rank, nrows):
            if a[r, col]:
                pivot = r
                break
        if pivot is None:
            continue
        a[[rank, pivot]] = a[[pivot, rank]]
        mask = a[:, col].copy()
        mask[rank] = 0
        a[mask == 1] ^= a[rank]
        rank += 1
        if rank == nrows:
            break
    return rank

def gf2_invert(m: Gf2Matrix) -> Gf2Matrix:
    """Inverse over GF(2) by Gauss-Jordan elimination on [M | I].

    Raises SingularMatrixError when no inverse exists.
    """
    dim = m.dim
    aug = np.concatenate([m.rows.copy(), np.eye(dim, dtype=np.uint8)], axis=1)
    for col in range(dim):
        pivot = None
        for r in range(col, dim):
            if aug[r, col]:
                pivot = r
                break
        if pivot is None:
            raise SingularMatrixError(f"singular {dim}x{dim} matrix over GF(2)")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        mask = aug[:, col].copy()
        mask[col] = 0
        aug[mask == 1] ^= aug[col]
    return Gf2Matrix(aug[:, dim:])


@dataclass(frozen=True)
class BasisLibrary:
    """Seeded library of distinct invertible GF(2) matrices shared by all three axes."""

    matrices: tuple[Gf2Matrix, ...]
    seed: int
    dim: int
    checksum: str = field(compare=False)

    def __len__(self) -> int:
        return len(self.matrices)

    def __getitem__(self, i: int) -> Gf2Matrix:
        return self.matrices[i]

    def serial_rows(self) -> list[list[int]]:
        return [m.row_ints() for m in self.matrices]

    @staticmethod
    def content_checksum(seed: int, dim: int, serial_rows: list[list[int]]) -> str:
        body = f"{seed}:{len(serial_rows)}:{dim}:" + ";".join(
            ",".join(f"{v:x}" for v in rows) for rows in serial_rows
        )
        return hashlib.sha256(body.encode("ascii")).hexdigest()

    @classmethod
    def from_serial(cls, seed: int, dim: int, serial_rows: list[list[int]], checksum: str | None = None) -> "BasisLibrary":
        expect = cls.content_checksum(seed, dim, serial_rows)
        if checksum is not None and checksum != expect:
            raise ValueError("basis library checksum mismatch")
        mats = tuple(Gf2Matrix.from_row_ints(rows, dim) for rows in serial_rows)
        return cls(matrices=mats, seed=seed, dim=dim, checksum=expect)


def gen_basis_library(seed: int, count: int = 32, dim: int = 4) -> BasisLibrary:
    """Generate `count` distinct invertible dim x dim matrices from a splitmix64 stream.

    Each candidate row takes the low `dim` bits of one 64-bit draw (bit j is
    column j); singular or repeated candidates are rejected and drawing
    continues, so the result is a pure function of (seed, count, dim).
    """
    if count < 1 or dim < 1:
        raise ValueError("count and dim must be positive")
    if count > (1 << (dim * dim)):
        raise ValueError("count exceeds the number of distinct matrices")
    rng = SplitMix64(seed)
    mats: list[Gf2Matrix] = []
    seen: set[bytes] = set()
    while len(mats) < count:
        rows = np.empty((dim, dim), dtype=np.uint8)
        for r in range(dim):
            draw = rng.next_u64()
            for j in range(dim):
                rows[r, j] = (draw >> j) & 1
        if gf2_rank(rows) < dim:
            continue
        key = rows.tobytes()
        if key in seen:
            continue
        seen.add(key)
        mats.append(Gf2Matrix(rows))
    serial = [m.row_ints() for m in mats]
    checksum = BasisLibrary.content_checksum(seed, dim, serial)
    return BasisLibrary(matrices=tuple(mats), seed=seed, dim=dim, checksum=checksum)


@dataclass(frozen=True)
class BitBlockTensor:
    """4-D bit tensor (T, H, W, k) whose flat order is row-major (t, y, x, plane).

    pad_len counts trailing zero-fill bits that were appended to the flat
    stream so it fills the tensor volume exactly.
    """

    bits: np.ndarray
    pad_len: int = 0

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8) & 1
        if bits.ndim != 4:
            raise ShapeError(f"expected a 4-d tensor, got ndim {bits.ndim}")
        if not (0 <= self.pad_len <= bits.size):
            raise ShapeError(f"pad_len {self.pad_len} outside [0, {bits.size}]")
        object.__setattr__(self, "bits", bits)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.bits.shape

    @property
    def nbits(self) -> int:
        return self.bits.size

    def flat(self) -> np.ndarray:
        """Flat bit view in (t, y, x, plane) row-major order."""
        return self.bits.reshape(-1)

    @classmethod
    def from_stream(cls, bits: np.ndarray, dims: tuple[int, int, int, int]) -> "BitBlockTensor":
        """Shape a flat bit stream into `dims`, zero-filling the tail."""
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        volume = int(np.prod(dims))
        if bits.size > volume:
            raise ShapeError(f"{bits.size} bits do not fit volume {volume}")
        pad = volume - bits.size
        if pad:
            bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
        return cls(bits.reshape(dims), pad_len=pad)


class OpCounter:
    """Accumulates the number of bit multiply-accumulate operations performed."""

    def __init__(self):
        self.ops = 0


def _apply_axis(arr: np.ndarray, w: np.ndarray, axis: int, counter: OpCounter | None) -> np.ndarray:
    m = w.shape[0]
    moved = np.moveaxis(arr, axis, -1)
    shp = moved.shape
    blocked = np.ascontiguousarray(moved).reshape(-1, shp[-1] // m, m)
    # uint8 matmul wraps mod 256, which preserves parity; & 1 recovers GF(2).
    out = (blocked @ w.T) & 1
    if counter is not None:
        counter.ops += out.size * m
    return np.moveaxis(out.reshape(shp), -1, axis)


def kron_apply(
    tensor: BitBlockTensor,
    wt: Gf2Matrix,
    wy: Gf2Matrix,
    wx: Gf2Matrix,
    counter: OpCounter | None = None,
) -> BitBlockTensor:
    """Apply (wt kron wy kron wx) to every block of the tensor, separably per axis."""
    T, H, W, _ = tensor.dims
    for name, size, mat in (("T", T, wt), ("H", H, wy), ("W", W, wx)):
        if size % mat.dim != 0:
            raise ShapeError(f"axis {name} of size {size} not divisible by block size {mat.dim}")
    arr = tensor.bits
    arr = _apply_axis(arr, wx.rows, 2, counter)
    arr = _apply_axis(arr, wy.rows, 1, counter)
    arr = _apply_axis(arr, wt.rows, 0, counter)
    return BitBlockTensor(np.ascontiguousarray(arr), pad_len=tensor.pad_len)


def kron_apply_dense(
    block: np.ndarray,
    wt: Gf2Matrix,
    wy: Gf2Matrix,
    wx: Gf2Matrix,
) -> np.ndarray:
    """Reference path: materialize the dense Kronecker matrix for one block.

    `block` is a flat bit vector of length t*h*w in row-major (t, y, x) order.
    Kept deliberately independent of kron_apply so the two can cross-check
    each other; rejects blocks larger than 4096 bits.
    """
    n = wt.dim * wy.dim * wx.dim
    if n > MAX_DENSE_BLOCK:
        raise ShapeError(f"dense path refuses block volume {n} > {MAX_DENSE_BLOCK}")
    vec = np.asarray(block, dtype=np.uint8).reshape(-1) & 1
    if vec.size != n:
        raise ShapeError(f"block has {vec.size} bits, expected {n}")
    k = np.kron(np.kron(wt.rows, wy.rows), wx.rows)
    return (k.astype(np.uint32) @ vec) & 1
