"""Reed-Solomon codec over GF(256) for per-strand parity.

Field: primitive polynomial 0x11D, generator element alpha = 2.  Code:
systematic (n, k) = (50, 42) with 8 parity symbols, generator polynomial
prod_{i=1..8} (x - alpha^i) (first consecutive root alpha^1), correcting up
to 4 symbol errors.  Encoding is vectorized across strands; decode screens
syndromes in bulk and only runs Berlekamp-Massey on the strands that need it.
"""
from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "DecodeFailure",
    "N_SYMBOLS",
    "K_SYMBOLS",
    "N_PARITY",
    "rs_encode_symbols",
    "rs_decode_symbols",
    "syndromes",
]

PRIM_POLY = 0x11D
GENERATOR = 2
N_SYMBOLS = 50
K_SYMBOLS = 42
N_PARITY = N_SYMBOLS - K_SYMBOLS
FCR = 1  # first consecutive root exponent


class DecodeFailure(ValueError):
    """The received word is beyond the correction capability (or inconsistent)."""


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIM_POLY
    exp[255:510] = exp[:255]
    return exp, log


GF_EXP, GF_LOG = _build_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(GF_EXP[GF_LOG[a] + GF_LOG[b]])


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return int(GF_EXP[(GF_LOG[a] - GF_LOG[b]) % 255])


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0 if n else 1
    return int(GF_EXP[(GF_LOG[a] * n) % 255])


def _poly_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] ^= gf_mul(a, b)
    return out


def _gen_poly() -> list[int]:
    g = [1]
    for i in range(FCR, FCR + N_PARITY):
        g = _poly_mul(g, [1, gf_pow(GENERATOR, i)])
    return g


GEN_POLY = _gen_poly()
_GEN_TAIL_LOG = np.array([GF_LOG[c] for c in GEN_POLY[1:]], dtype=np.int64)


@njit(cache=True)
def _parity_rows(msg, out):
    rem = np.zeros(N_PARITY, dtype=np.uint8)
    for r in range(msg.shape[0]):
        for j in range(N_PARITY):
            rem[j] = 0
        for i in range(K_SYMBOLS):
            fb = msg[r, i] ^ rem[0]
            if fb:
                lf = GF_LOG[fb]
                for j in range(N_PARITY - 1):
                    rem[j] = rem[j + 1] ^ GF_EXP[lf + _GEN_TAIL_LOG[j]]
                rem[N_PARITY - 1] = GF_EXP[lf + _GEN_TAIL_LOG[N_PARITY - 1]]
            else:
                for j in range(N_PARITY - 1):
                    rem[j] = rem[j + 1]
                rem[N_PARITY - 1] = 0
        for j in range(N_PARITY):
            out[r, j] = rem[j]


@njit(cache=True)
def _syndrome_rows(cw, out):
    for r in range(cw.shape[0]):
        for j in range(N_PARITY):
            alog = ((FCR + j) * GF_LOG[GENERATOR]) % 255
            acc = np.int64(0)
            for i in range(N_SYMBOLS):
                if acc:
                    acc = np.int64(GF_EXP[GF_LOG[acc] + alog])
                acc ^= cw[r, i]
            out[r, j] = acc


def rs_encode_symbols(data: np.ndarray) -> np.ndarray:
    """Parity symbols for data shaped (..., 42); returns (..., 8).

    Synthetic division of data * x^8 by the generator polynomial, row by row
    in compiled code.
    """
    arr = np.asarray(data, dtype=np.uint8)
    if arr.shape[-1] != K_SYMBOLS:
        raise ValueError(f"expected {K_SYMBOLS} data symbols, got {arr.shape[-1]}")
    rows = np.ascontiguousarray(arr.reshape(-1, K_SYMBOLS))
    out = np.empty((rows.shape[0], N_PARITY), dtype=np.uint8)
    _parity_rows(rows, out)
    return out.reshape(arr.shape[:-1] + (N_PARITY,))


def syndromes(codewords: np.ndarray) -> np.ndarray:
    """Syndromes S_j = c(alpha^(j+1)), j = 0..7, for codewords shaped (..., 50)."""
    arr = np.asarray(codewords, dtype=np.uint8)
    if arr.shape[-1] != N_SYMBOLS:
        raise ValueError(f"expected {N_SYMBOLS} symbols, got {arr.shape[-1]}")
    rows = np.ascontiguousarray(arr.reshape(-1, N_SYMBOLS))
    out = np.empty((rows.shape[0], N_PARITY), dtype=np.uint8)
    _syndrome_rows(rows, out)
    return out.reshape(arr.shape[:-1] + (N_PARITY,))


def _poly_eval(poly: list[int], x: int) -> int:
    y = 0
    for c in poly:
        y = gf_mul(y, x) ^ c
    return y


def rs_decode_symbols(codeword: np.ndarray) -> tuple[np.ndarray, int]:
    """Correct one 50-symbol word in place of up to 4 symbol errors.

    Returns (corrected_word, corrections).  Raises DecodeFailure when the
    error pattern exceeds the correction capability; the check re-verifies
    locator degree, root count and the syndromes of the corrected word, so a
    partially-corrected word is never returned.
    """
    cw = np.asarray(codeword, dtype=np.uint8).reshape(-1)
    if cw.size != N_SYMBOLS:
        raise ValueError(f"expected {N_SYMBOLS} symbols, got {cw.size}")
    synd = [int(s) for s in syndromes(cw)]
    if not any(synd):
        return cw.copy(), 0

    # Berlekamp-Massey for the error locator sigma(x) (ascending powers).
    def _bm_mix(base: list[int], other: list[int], scale: int, shift: int) -> list[int]:
        shifted = [0] * shift + [gf_mul(scale, c) for c in other]
        out = [0] * max(len(base), len(shifted))
        for i in range(len(out)):
            a = base[i] if i < len(base) else 0
            c = shifted[i] if i < len(shifted) else 0
            out[i] = a ^ c
        return out

    sigma = [1]
    prev = [1]
    l = 0
    m = 1
    b = 1
    for n in range(N_PARITY):
        d = synd[n]
        for i in range(1, l + 1):
            d ^= gf_mul(sigma[i], synd[n - i])
        if d == 0:
            m += 1
        elif 2 * l <= n:
            old = sigma[:]
            sigma = _bm_mix(sigma, prev, gf_div(d, b), m)
            l = n + 1 - l
            prev = old
            b = d
            m = 1
        else:
            sigma = _bm_mix(sigma, prev, gf_div(d, b), m)
            m += 1
    while sigma and sigma[-1] == 0:
        sigma.pop()
    v = len(sigma) - 1
    if v == 0 or v > N_PARITY // 2:
        raise DecodeFailure(f"locator degree {v} outside correctable range")

    # Chien search: symbol index i holds the coefficient of x^(49-i), so an
    # error there has locator X = alpha^(49-i).
    err_pos = []
    for i in range(N_SYMBOLS):
        x_inv = gf_pow(GENERATOR, (-(N_SYMBOLS - 1 - i)) % 255)
        acc = 0
        for d, c in enumerate(sigma):
            acc ^= gf_mul(c, gf_pow(x_inv, d))
        if acc == 0:
            err_pos.append(i)
    if len(err_pos) != v:
        raise DecodeFailure(f"locator degree {v} but {len(err_pos)} roots found")

    # Forney: omega(x) = [S(x) * sigma(x)] mod x^8, Y = omega(X^-1) / sigma'(X^-1).
    s_poly = synd[:]  # ascending: S_1 + S_2 x + ...
    omega_full = [0] * (len(s_poly) + len(sigma) - 1)
    for i, a in enumerate(s_poly):
        for j, c in enumerate(sigma):
            omega_full[i + j] ^= gf_mul(a, c)
    omega = omega_full[:N_PARITY]
    sigma_deriv = [sigma[d] if d % 2 == 1 else 0 for d in range(1, len(sigma))]  # formal derivative, ascending

    corrected = cw.copy()
    for i in err_pos:
        x_log = (N_SYMBOLS - 1 - i) % 255
        x_inv = gf_pow(GENERATOR, (-x_log) % 255)
        num = 0
        for d, c in enumerate(omega):
            num ^= gf_mul(c, gf_pow(x_inv, d))
        den = 0
        for d, c in enumerate(sigma_deriv):
            den ^= gf_mul(c, gf_pow(x_inv, d))
        if den == 0:
            raise DecodeFailure("Forney denominator vanished")
        # fcr = 1 makes the X^(1-fcr) factor unity
        corrected[i] ^= gf_div(num, den)

    if any(int(s) for s in syndromes(corrected)):
        raise DecodeFailure("corrected word fails syndrome re-check")
    return corrected, v
