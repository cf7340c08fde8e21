"""Content-adaptive choice of mixing matrices for one block group.

The selector is a deterministic search: every candidate triple (i, j, k)
indexes the shared basis library for the t, y and x axes, the candidate
transform is applied to (a prefix of) the group, the constrained mapper is
dry-run over the result, and the candidate minimizing

    lam * padding_rate + mean per-position soft cost

wins, ties resolved lexicographically.  With default parameters this is the
whole selection story; there is nothing trained or stochastic beyond the
seeded candidate sample.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fsmkern as K
from .fsm import EmptyValidSetError, FsmConfig, _kernel_params, _sigmoid
from .gf2kron import BasisLibrary, BitBlockTensor, ShapeError, SplitMix64

__all__ = [
    "BasisChoice",
    "Exhaustive",
    "Sampled",
    "score_choice",
    "select_basis",
    "pack_choices",
    "unpack_choices",
]

# Dry-run length cap for scoring; covers the leading blocks of a group.
DEFAULT_EVAL_BITS = 1024
# Payload length used by the scoring dry-run's virtual strands.
SCORE_UNIT_LEN = 152


@dataclass(frozen=True, order=True)
class BasisChoice:
    """Indices into the basis library for the t, y and x axes."""

    i: int
    j: int
    k: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.i, self.j, self.k)


@dataclass(frozen=True)
class Exhaustive:
    """Try all L^3 triples."""


@dataclass(frozen=True)
class Sampled:
    """Try n seeded splitmix64-sampled distinct triples, always including (0, 0, 0)."""

    n: int = 64
    seed: int = 0


_CAND_CACHE: dict[tuple, np.ndarray] = {}


def _candidates(strategy, lib_len: int) -> np.ndarray:
    """Sorted (n, 3) candidate array; memoized, the set is data-independent."""
    if isinstance(strategy, Exhaustive):
        key = ("x", lib_len)
    elif isinstance(strategy, Sampled):
        key = ("s", strategy.n, strategy.seed, lib_len)
    else:
        raise TypeError(f"unknown selection strategy {strategy!r}")
    cached = _CAND_CACHE.get(key)
    if cached is not None:
        return cached
    if isinstance(strategy, Exhaustive):
        triples = [(i, j, k) for i in range(lib_len) for j in range(lib_len) for k in range(lib_len)]
    else:
        total = min(strategy.n, lib_len**3)
        picked = {(0, 0, 0)}
        rng = SplitMix64(strategy.seed)
        while len(picked) < total:
            picked.add((rng.below(lib_len), rng.below(lib_len), rng.below(lib_len)))
        triples = sorted(picked)
    arr = np.array(triples, dtype=np.int64).reshape(-1, 3)
    _CAND_CACHE[key] = arr
    return arr


def _lib_array(lib: BasisLibrary) -> np.ndarray:
    arr = np.stack([m.rows for m in lib.matrices])
    return np.ascontiguousarray(arr, dtype=np.uint8)


def _check_divisible(tensor: BitBlockTensor, dim: int) -> None:
    T, H, W, _ = tensor.dims
    for name, size in (("T", T), ("H", H), ("W", W)):
        if size % dim != 0:
            raise ShapeError(f"axis {name} of size {size} not divisible by {dim}")


def _scores_from_counts(counts: np.ndarray, lam: float, tau: float, eps: float) -> np.ndarray:
    """Score per candidate from integer dry-run counts.

    Matches lam * padding_rate + mean(soft_cost per-position) evaluated on the
    one-hot dry-run sequence: for one-hot rows the GC term collapses to a
    constant and the similarity term to 0.5 per equal adjacent pair.
    """
    if (counts[:, 4] != K.OK).any():
        raise EmptyValidSetError("dry-run hit an empty valid set")
    total = counts[:, 0].astype(np.float64)
    safe = np.where(total > 0, total, 1.0)
    pr = counts[:, 1] / safe
    dev = np.abs(counts[:, 2] / safe - 0.5)
    gc_term = _sigmoid(tau * (dev - eps)) * dev
    scores = lam * pr + gc_term + 0.5 * counts[:, 3] / safe
    return np.where(total > 0, scores, 0.0)


def score_choice(
    tensor: BitBlockTensor,
    choice: BasisChoice,
    lib: BasisLibrary,
    cfg: FsmConfig = FsmConfig(),
    *,
    lam: float = 1.0,
    tau: float = 5.0,
    eps: float = 0.05,
    eval_bits: int = DEFAULT_EVAL_BITS,
) -> float:
    """Score one candidate triple (lower is better).

    The candidate transform is applied to the leading eval_bits of the group
    (the whole group when it is smaller), the constrained mapper is dry-run
    over the mixed bits in 152-nt virtual strands, and the score combines the
    zero-information-position rate with the mean soft cost of the emitted
    one-hot sequence.  Deterministic in all inputs.
    """
    _check_divisible(tensor, lib.dim)
    for idx in choice.as_tuple():
        if not 0 <= idx < len(lib):
            raise IndexError(f"basis index {idx} outside library of {len(lib)}")
    cands = np.array([choice.as_tuple()], dtype=np.int64)
    counts = np.zeros((1, 5), dtype=np.int64)
    K._score_candidates(tensor.bits, _lib_array(lib), cands, eval_bits, SCORE_UNIT_LEN,
                        counts, *_kernel_params(cfg))
    return float(_scores_from_counts(counts, lam, tau, eps)[0])


def select_basis(
    tensor: BitBlockTensor,
    lib: BasisLibrary,
    cfg: FsmConfig = FsmConfig(),
    strategy=Sampled(),
    *,
    eval_bits: int = DEFAULT_EVAL_BITS,
) -> BasisChoice:
    """Argmin of score_choice over the strategy's candidate set.

    Candidates are evaluated in lexicographic order and the first strict
    minimum wins, so ties always resolve to the lexicographically smallest
    triple.
    """
    _check_divisible(tensor, lib.dim)
    cands = _candidates(strategy, len(lib))
    counts = np.zeros((cands.shape[0], 5), dtype=np.int64)
    K._score_candidates(tensor.bits, _lib_array(lib), cands, eval_bits, SCORE_UNIT_LEN,
                        counts, *_kernel_params(cfg))
    scores = _scores_from_counts(counts, 1.0, 5.0, 0.05)
    best = int(np.argmin(scores))  # argmin returns the first minimum: lexicographic tie-break
    return BasisChoice(int(cands[best, 0]), int(cands[best, 1]), int(cands[best, 2]))


def pack_choices(choices: list[BasisChoice], lib_len: int) -> bytes:
    """Serialize choices at 3 * ceil(log2(L)) bits each (15 bits for L = 32)."""
    width = max(1, (lib_len - 1).bit_length())
    acc = 0
    nbits = 0
    out = bytearray()
    for ch in choices:
        for idx in ch.as_tuple():
            if not 0 <= idx < lib_len:
                raise ValueError(f"choice index {idx} out of range for library {lib_len}")
            acc = (acc << width) | idx
            nbits += width
            while nbits >= 8:
                nbits -= 8
                out.append((acc >> nbits) & 0xFF)
    if nbits:
        out.append((acc << (8 - nbits)) & 0xFF)
    return bytes(out)


def unpack_choices(blob: bytes, count: int, lib_len: int) -> list[BasisChoice]:
    width = max(1, (lib_len - 1).bit_length())
    need = 3 * width * count
    if len(blob) * 8 < need:
        raise ValueError("choice blob too short")
    acc = 0
    nbits = 0
    vals = []
    it = iter(blob)
    for _ in range(3 * count):
        while nbits < width:
            acc = (acc << 8) | next(it)
            nbits += 8
        nbits -= width
        vals.append((acc >> nbits) & ((1 << width) - 1))
        acc &= (1 << nbits) - 1
    return [BasisChoice(*vals[i : i + 3]) for i in range(0, len(vals), 3)]
