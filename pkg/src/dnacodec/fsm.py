"""Constraint FSM mapping bits to bases at a variable rate.

Every emitted nucleotide is chosen from the currently valid base set:

  * 4 valid bases consume two bits (00->A, 01->T, 10->G, 11->C),
  * 2 or 3 valid bases consume one bit (0 -> first, 1 -> second valid base in
    canonical order A < C < G < T; a third valid base is never emitted),
  * 1 valid base consumes nothing.

A base is invalid when it would extend a homopolymer run beyond max_run,
push the windowed GC fraction outside [gc_low, gc_high] (only once gc_grace
bases have been emitted), or complete a forbidden 6-mer motif.  Once the bit
supply is exhausted the remaining positions are padding chosen to pull the
whole-prefix GC fraction toward 0.5, and the decoder re-simulates the same
walk to verify it.

GC thresholds are compared as exact rationals derived from the decimal form
of the configured floats, so a window of 20 bases at fraction 11/20 sits
exactly on a 0.55 boundary rather than a float approximation of it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _fsmkern as K

__all__ = [
    "BASES",
    "DEFAULT_MOTIFS",
    "EmptyValidSetError",
    "InvalidBaseError",
    "PaddingMismatchError",
    "FsmConfig",
    "FsmState",
    "valid_bases",
    "fsm_encode",
    "fsm_pad",
    "fsm_decode",
    "soft_cost",
]

BASES = "ACGT"
_CODE = {b: i for i, b in enumerate(BASES)}
_ISGC = (0, 1, 1, 0)

# Six restriction-site 6-mers: EcoRI, BamHI, HindIII and the three 6-mers
# covering NotI's GCGGCCGC.  Their 5-prefixes are pairwise distinct, so the
# motif rule never excludes more than one base at a time.
DEFAULT_MOTIFS = frozenset({"GAATTC", "GGATCC", "AAGCTT", "GCGGCC", "CGGCCG", "GGCCGC"})


class EmptyValidSetError(ValueError):
    """No base is allowed at the current state (impossible under the default config)."""


class InvalidBaseError(ValueError):
    """A sequence contains a base that the encoder could never have produced."""


class PaddingMismatchError(ValueError):
    """The padding region does not replay correctly: corruption survived upstream."""


@dataclass(frozen=True)
class FsmConfig:
    """Constraint parameters.  canonical_order is fixed and documented, not a knob."""

    max_run: int = 3
    gc_low: float = 0.45
    gc_high: float = 0.55
    window: int = 152
    gc_grace: int = 20
    motifs: frozenset[str] = DEFAULT_MOTIFS

    canonical_order = BASES

    def __post_init__(self):
        if self.max_run < 1:
            raise ValueError("max_run must be >= 1")
        if not (0.0 < self.gc_low < 0.5 < self.gc_high < 1.0):
            raise ValueError("need 0 < gc_low < 0.5 < gc_high < 1")
        if self.window < 1 or self.gc_grace < 0:
            raise ValueError("window must be >= 1 and gc_grace >= 0")
        motifs = frozenset(str(m).upper() for m in self.motifs)
        for m in motifs:
            if len(m) != 6 or any(ch not in BASES for ch in m):
                raise ValueError(f"motif {m!r} is not a 6-mer over ACGT")
        object.__setattr__(self, "motifs", motifs)


def _as_ratio(x: float) -> tuple[int, int]:
    f = Fraction(repr(float(x))).limit_denominator(10**6)
    return f.numerator, f.denominator


@lru_cache(maxsize=32)
def _kernel_params(cfg: FsmConfig):
    """(max_run, grace, window, gmin_tab, gmax_tab, motif_tab) for the kernels.

    The GC band becomes two integer tables indexed by emitted-window length n:
    a count g is in band after n bases iff gmin_tab[n] <= g <= gmax_tab[n].
    Built from exact rationals so float thresholds like 0.55 behave as the
    decimal they look like.
    """
    lo_n, lo_d = _as_ratio(cfg.gc_low)
    hi_n, hi_d = _as_ratio(cfg.gc_high)
    ns = np.arange(cfg.window + 1, dtype=np.int64)
    gmin = -(-(lo_n * ns) // lo_d)
    gmax = (hi_n * ns) // hi_d
    tab = np.zeros(1024, dtype=np.uint8)
    for m in sorted(cfg.motifs):
        v = 0
        for ch in m[:5]:
            v = (v << 2) | _CODE[ch]
        tab[v] |= 1 << _CODE[m[5]]
    return (cfg.max_run, cfg.gc_grace, cfg.window, gmin, gmax, tab)


@dataclass
class FsmState:
    """Mutable encoder/decoder state; fresh() starts a new strand."""

    history: deque = field(default_factory=deque)
    gc_count: int = 0
    run_base: str | None = None
    run_len: int = 0
    motif_buffer: deque = field(default_factory=lambda: deque(maxlen=6))
    emitted: int = 0
    total_gc: int = 0

    @classmethod
    def fresh(cls, cfg: FsmConfig) -> "FsmState":
        return cls(history=deque(maxlen=cfg.window))

    def push(self, base: str, cfg: FsmConfig) -> None:
        if base not in _CODE:
            raise InvalidBaseError(f"unknown base {base!r}")
        if len(self.history) == cfg.window:
            self.gc_count -= _ISGC[_CODE[self.history[0]]]
        self.history.append(base)
        self.gc_count += _ISGC[_CODE[base]]
        self.total_gc += _ISGC[_CODE[base]]
        if base == self.run_base:
            self.run_len += 1
        else:
            self.run_base = base
            self.run_len = 1
        self.motif_buffer.append(base)
        self.emitted += 1

    def copy(self) -> "FsmState":
        dup = FsmState(
            history=deque(self.history, maxlen=self.history.maxlen),
            gc_count=self.gc_count,
            run_base=self.run_base,
            run_len=self.run_len,
            motif_buffer=deque(self.motif_buffer, maxlen=6),
            emitted=self.emitted,
            total_gc=self.total_gc,
        )
        return dup


def valid_bases(state: FsmState, cfg: FsmConfig) -> str:
    """Allowed next bases in canonical order.  Raises EmptyValidSetError when none."""
    lo_n, lo_d = _as_ratio(cfg.gc_low)
    hi_n, hi_d = _as_ratio(cfg.gc_high)
    allowed = []
    gc_active = state.emitted >= cfg.gc_grace
    if gc_active:
        if state.emitted >= cfg.window:
            g = state.gc_count - _ISGC[_CODE[state.history[0]]]
            n_after = cfg.window
        else:
            g = state.gc_count
            n_after = state.emitted + 1
    if len(state.motif_buffer) >= 5:
        prefix5 = "".join(list(state.motif_buffer)[-5:])
    else:
        prefix5 = None
    for base in BASES:
        if state.run_len >= cfg.max_run and base == state.run_base:
            continue
        if gc_active:
            if _ISGC[_CODE[base]]:
                if (g + 1) * hi_d > hi_n * n_after:
                    continue
            elif g * lo_d < lo_n * n_after:
                continue
        if prefix5 is not None and prefix5 + base in cfg.motifs:
            continue
        allowed.append(base)
    if not allowed:
        raise EmptyValidSetError("no valid base at this state")
    return "".join(allowed)


def _coerce_bits(bits) -> np.ndarray:
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise ValueError("bits must be 0/1")
    return np.ascontiguousarray(arr)


_STATUS_ERRORS = {
    K.EMPTY_SET: EmptyValidSetError,
    K.BAD_BASE: InvalidBaseError,
    K.PAD_MISMATCH: PaddingMismatchError,
}


def _raise_status(status: int, context: str) -> None:
    exc = _STATUS_ERRORS.get(status)
    if exc is not None:
        raise exc(context)
    if status == K.SHORT_BUDGET:
        raise PaddingMismatchError(f"{context}: sequence too short for the stated bit budget")


def codes_to_str(codes: np.ndarray) -> str:
    return codes.tobytes().translate(bytes.maketrans(bytes(range(4)), b"ACGT")).decode("ascii")


def str_to_codes(seq: str) -> np.ndarray:
    table = np.full(256, 255, dtype=np.uint8)
    for b, c in _CODE.items():
        table[ord(b)] = c
        table[ord(b.lower())] = c
    codes = table[np.frombuffer(seq.encode("ascii"), dtype=np.uint8)]
    if codes.size and codes.max() > 3:
        raise InvalidBaseError("sequence contains a character outside ACGT")
    return codes


def fsm_encode(bits, target_len: int, cfg: FsmConfig = FsmConfig()) -> tuple[str, int]:
    """Map a bit sequence to exactly target_len bases.

    Consumes as many leading bits as fit; once they run out the remaining
    positions are GC-compensating padding.  Returns (bases, bits_consumed).
    """
    arr = _coerce_bits(bits)
    out = np.empty(target_len, dtype=np.uint8)
    consumed, _, status = K._encode_unit(arr, arr.size, 0, target_len, out,
                                         *_kernel_params(cfg))
    _raise_status(status, "fsm_encode")
    return codes_to_str(out), int(consumed)


def fsm_decode(bases, bit_budget: int, cfg: FsmConfig = FsmConfig()) -> np.ndarray:
    """Recover exactly bit_budget bits from an encoded sequence.

    Re-simulates the encoder walk; the padding tail must replay exactly or
    PaddingMismatchError is raised (corruption survived the outer code).
    """
    codes = bases if isinstance(bases, np.ndarray) else str_to_codes(bases)
    codes = np.ascontiguousarray(codes, dtype=np.uint8)
    if bit_budget < 0:
        raise ValueError("bit_budget must be >= 0")
    out = np.empty(bit_budget, dtype=np.uint8)
    written, status = K._decode_unit(codes.copy(), codes.size, bit_budget, out,
                                     *_kernel_params(cfg))
    _raise_status(status, "fsm_decode")
    return out


def fsm_pad(state: FsmState, remaining: int, cfg: FsmConfig = FsmConfig()) -> str:
    """Padding continuation: remaining bases pulling prefix GC toward 0.5.

    The caller's state is not modified.  Each position picks the valid base
    minimizing |GC_after - 0.5| over the full emitted prefix, ties resolved
    in canonical order.
    """
    st = state.copy()
    out = []
    for _ in range(remaining):
        options = valid_bases(st, cfg)
        best = None
        best_val = None
        n_after = st.emitted + 1
        for b in options:
            v = abs(2 * (st.total_gc + _ISGC[_CODE[b]]) - n_after)
            if best is None or v < best_val:
                best, best_val = b, v
        out.append(best)
        st.push(best, cfg)
    return "".join(out)


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + np.exp(-x))


def soft_cost(
    prob_seq,
    cfg: FsmConfig | None = None,
    tau: float = 5.0,
    eps: float = 0.05,
    lam: float = 1.0,
    padding_rate: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Differentiable-style constraint relaxation over a base probability sequence.

    prob_seq is (N, 4) with rows summing to 1 (order A, C, G, T).  Each
    position pays sigmoid(tau * (|mean_GC - 0.5| - eps)) * |mean_GC - 0.5|
    plus relu(cos_sim(p_t, p_{t-1}) - 0.5); the first position has no
    similarity term.  Returns (sum + lam * padding_rate, per_position).

    cfg is accepted for signature parity with the hard rules; the relaxation
    itself only depends on the explicit parameters.
    """
    p = np.asarray(prob_seq, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 4:
        raise ValueError(f"prob_seq must be (N, 4), got {p.shape}")
    n = p.shape[0]
    if n == 0:
        return float(lam * padding_rate), np.zeros(0)
    if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("rows of prob_seq must be probabilities summing to 1")
    gc_bar = float(p[:, 1].mean() + p[:, 2].mean())
    dev = abs(gc_bar - 0.5)
    gc_term = _sigmoid(tau * (dev - eps)) * dev
    per = np.full(n, gc_term)
    if n > 1:
        norms = np.linalg.norm(p, axis=1)
        sims = (p[1:] * p[:-1]).sum(axis=1) / (norms[1:] * norms[:-1])
        per[1:] += np.maximum(sims - 0.5, 0.0)
    return float(per.sum() + lam * padding_rate), per
