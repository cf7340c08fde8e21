"""Compiled inner loops for the constrained base mapper.

Everything here works on base codes 0..3 in canonical order A < C < G < T.
The pure-Python FsmState / valid_bases in fsm.py define the semantics; these
kernels replicate them step for step and are cross-checked by property tests.

Numeric conventions shared with fsm.py:
  * bit-pair values map to codes through BITS2CODE (00->A, 01->T, 10->G, 11->C),
  * the GC band arrives as integer tables gmin_tab/gmax_tab indexed by window
    size, precomputed in fsm.py from the exact rational thresholds,
  * motif_tab[v] is the excluded-base mask for a 5-mer whose codes form the
    base-4 number v (earliest base most significant).
"""
from __future__ import annotations

import numpy as np
from numba import njit

# Status codes returned by the unit kernels.
OK = 0
EMPTY_SET = 1
BAD_BASE = 2
PAD_MISMATCH = 3
SHORT_BUDGET = 4

POP4 = np.array([0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4], dtype=np.uint8)
FIRST = np.array([-1, 0, 1, 0, 2, 0, 1, 0, 3, 0, 1, 0, 2, 0, 1, 0], dtype=np.int8)
SECOND = np.array([-1, -1, -1, 1, -1, 2, 2, 1, -1, 3, 3, 1, 3, 2, 2, 1], dtype=np.int8)
BITS2CODE = np.array([0, 3, 2, 1], dtype=np.uint8)
CODE2BITS = np.array([0, 3, 2, 1], dtype=np.uint8)
ISGC = np.array([0, 1, 1, 0], dtype=np.uint8)


@njit(cache=True)
def _pad_choice(mask, total_gc, pos):
    """Pad base: minimize |GC_after - 1/2| over the full prefix, ties canonical."""
    best = -1
    best_val = 0
    for c in range(4):
        if (mask >> c) & 1:
            v = 2 * (total_gc + ISGC[c]) - (pos + 1)
            if v < 0:
                v = -v
            if best < 0 or v < best_val:
                best = c
                best_val = v
    return best


@njit(cache=True)
def _encode_unit(bits, nbits, start, plen, out,
                 max_run, grace, window, gmin_tab, gmax_tab, motif_tab):
    """Encode one fixed-length unit from bits[start:nbits]; pad once bits run out.

    The state update is written out inline rather than factored into helpers:
    this loop runs once per emitted base and separately compiled functions are
    not inlined across module boundaries, so the call overhead dominates.
    gmin_tab[n] / gmax_tab[n] hold the exact integer GC-count band for a
    window of n emitted bases, precomputed from the configured rational
    thresholds.

    Returns (bits_consumed, zero_bit_positions, status).
    """
    run_base = -1
    run_len = 0
    gcw = 0
    mot5 = 0
    total_gc = 0
    p = start
    zero = 0
    for pos in range(plen):
        mask = 15
        if run_len >= max_run and run_base >= 0:
            mask &= ~(1 << run_base) & 15
        if pos >= grace:
            if pos >= window:
                g = gcw - ISGC[out[pos - window]]
                n_after = window
            else:
                g = gcw
                n_after = pos + 1
            if g + 1 > gmax_tab[n_after]:
                mask &= 9   # adding G or C would exceed gc_high: keep A, T
            if g < gmin_tab[n_after]:
                mask &= 6   # adding A or T would fall below gc_low: keep C, G
        if pos >= 5:
            mask &= (~motif_tab[mot5]) & 15
        if mask == 0:
            return p - start, zero, EMPTY_SET
        nv = POP4[mask]
        if p >= nbits:
            if nv == 1:
                code = FIRST[mask]
            else:
                code = _pad_choice(mask, total_gc, pos)
            zero += 1
        elif nv == 4:
            b1 = bits[p]
            p += 1
            b2 = np.uint8(0)
            if p < nbits:
                b2 = bits[p]
                p += 1
            code = BITS2CODE[(b1 << 1) | b2]
        elif nv >= 2:
            code = SECOND[mask] if bits[p] else FIRST[mask]
            p += 1
        else:
            code = FIRST[mask]
            zero += 1
        out[pos] = code
        if code == run_base:
            run_len += 1
        else:
            run_base = code
            run_len = 1
        gcw += ISGC[code]
        if pos >= window:
            gcw -= ISGC[out[pos - window]]
        mot5 = ((mot5 << 2) | code) & 1023
        total_gc += ISGC[code]
    return p - start, zero, OK


@njit(cache=True)
def _decode_unit(codes, plen, budget, outbits,
                 max_run, grace, window, gmin_tab, gmax_tab, motif_tab):
    """Replay one unit, recovering up to `budget` bits and verifying the padding.

    State tracking mirrors _encode_unit inline for the same reason: the loop
    body runs per base and cross-module calls are never inlined.

    Returns (bits_written, status).
    """
    run_base = -1
    run_len = 0
    gcw = 0
    mot5 = 0
    total_gc = 0
    b = 0
    for pos in range(plen):
        mask = 15
        if run_len >= max_run and run_base >= 0:
            mask &= ~(1 << run_base) & 15
        if pos >= grace:
            if pos >= window:
                g = gcw - ISGC[codes[pos - window]]
                n_after = window
            else:
                g = gcw
                n_after = pos + 1
            if g + 1 > gmax_tab[n_after]:
                mask &= 9
            if g < gmin_tab[n_after]:
                mask &= 6
        if pos >= 5:
            mask &= (~motif_tab[mot5]) & 15
        if mask == 0:
            return b, EMPTY_SET
        code = codes[pos]
        if code > 3:
            return b, BAD_BASE
        if ((mask >> code) & 1) == 0:
            return b, BAD_BASE
        nv = POP4[mask]
        remaining = budget - b
        if remaining > 0:
            if nv == 4:
                v = CODE2BITS[code]
                outbits[b] = v >> 1
                b += 1
                if remaining >= 2:
                    outbits[b] = v & 1
                    b += 1
                elif (v & 1) != 0:
                    # the encoder zero-extends a lone final bit
                    return b, PAD_MISMATCH
            elif nv >= 2:
                if code == FIRST[mask]:
                    outbits[b] = 0
                elif code == SECOND[mask]:
                    outbits[b] = 1
                else:
                    # the third valid base is never emitted for data
                    return b, BAD_BASE
                b += 1
            # nv == 1: forced base, no information
        else:
            if nv == 1:
                expect = FIRST[mask]
            else:
                expect = _pad_choice(mask, total_gc, pos)
            if code != expect:
                return b, PAD_MISMATCH
        if code == run_base:
            run_len += 1
        else:
            run_base = code
            run_len = 1
        gcw += ISGC[code]
        if pos >= window:
            gcw -= ISGC[codes[pos - window]]
        mot5 = ((mot5 << 2) | code) & 1023
        total_gc += ISGC[code]
    if b < budget:
        return b, SHORT_BUDGET
    return b, OK


@njit(cache=True)
def _encode_stream(bits, start, out2d, used, zeros,
                   max_run, grace, window, gmin_tab, gmax_tab, motif_tab):
    """Greedy strand filling: consume bits into consecutive fixed-length units.

    Fills at most out2d.shape[0] units; returns (units_written, next_bit, status).
    """
    n_max, plen = out2d.shape
    p = start
    count = 0
    nbits = bits.size
    while p < nbits and count < n_max:
        consumed, z, st = _encode_unit(bits, nbits, p, plen, out2d[count],
                                       max_run, grace, window,
                                       gmin_tab, gmax_tab, motif_tab)
        if st != OK:
            return count, p, st
        used[count] = consumed
        zeros[count] = z
        p += consumed
        count += 1
    return count, p, OK


@njit(cache=True)
def _encode_batch(bits2d, nbits_row, plen, out2d, consumed, zeros, status,
                  max_run, grace, window, gmin_tab, gmax_tab, motif_tab):
    """Encode independent rows (fresh state each), e.g. one address per row."""
    for i in range(bits2d.shape[0]):
        c, z, st = _encode_unit(bits2d[i], nbits_row, 0, plen, out2d[i],
                                max_run, grace, window,
                                gmin_tab, gmax_tab, motif_tab)
        consumed[i] = c
        zeros[i] = z
        status[i] = st


@njit(cache=True)
def _decode_batch(codes2d, budgets, outbits, offsets, written, status,
                  max_run, grace, window, gmin_tab, gmax_tab, motif_tab):
    """Decode independent rows into slices of a shared output bit array."""
    plen = codes2d.shape[1]
    for i in range(codes2d.shape[0]):
        o = offsets[i]
        w, st = _decode_unit(codes2d[i], plen, budgets[i], outbits[o:o + budgets[i]],
                             max_run, grace, window,
                             gmin_tab, gmax_tab, motif_tab)
        written[i] = w
        status[i] = st


@njit(cache=True)
def _mix_prefix(tensor, wt, wy, wx, eval_len, out):
    """Materialize the first eval_len flat bits of the separably mixed tensor.

    The t axis is transformed first and truncated to the rows whose outputs
    can land inside the prefix, so scoring a large tensor only pays for the
    blocks and slabs it actually reads.  Axis order does not change the
    result: the three per-axis transforms commute.
    """
    T, H, W, K = tensor.shape
    m = wt.shape[0]
    cube = np.empty((m, m, m), dtype=np.uint8)
    s1 = np.empty((m, m, m), dtype=np.uint8)
    s2 = np.empty((m, m, m), dtype=np.uint8)
    for bi in range(T // m):
        t0 = bi * m
        for bj in range(H // m):
            y0 = bj * m
            for bk in range(W // m):
                x0 = bk * m
                a_lim = 0
                for a in range(m):
                    if (((t0 + a) * H + y0) * W + x0) * K < eval_len:
                        a_lim = a + 1
                if a_lim == 0:
                    continue
                for kk in range(K):
                    for a in range(m):
                        for b in range(m):
                            for c in range(m):
                                cube[a, b, c] = tensor[t0 + a, y0 + b, x0 + c, kk]
                    for a in range(a_lim):
                        for b in range(m):
                            for c in range(m):
                                acc = np.uint8(0)
                                for j in range(m):
                                    acc ^= wt[a, j] & cube[j, b, c]
                                s1[a, b, c] = acc
                    for a in range(a_lim):
                        for i in range(m):
                            for c in range(m):
                                acc = np.uint8(0)
                                for j in range(m):
                                    acc ^= wy[i, j] & s1[a, j, c]
                                s2[a, i, c] = acc
                    for a in range(a_lim):
                        rowbase = (t0 + a) * H + y0
                        for b in range(m):
                            fb = ((rowbase + b) * W + x0) * K + kk
                            for i in range(m):
                                acc = np.uint8(0)
                                for j in range(m):
                                    acc ^= wx[i, j] & s2[a, b, j]
                                f = fb + i * K
                                if f < eval_len:
                                    out[f] = acc
    return out


@njit(cache=True)
def _dry_run_counts(bits, plen,
                    max_run, grace, window, gmin_tab, gmax_tab, motif_tab):
    """Greedy-encode all of `bits` and count score ingredients.

    Returns (total_nt, zero_bit_nt, gc_nt, adjacent_equal_pairs, status).
    The emitted payloads are treated as one concatenated sequence for the
    adjacency term; the final partial unit is padded to plen like a real
    final strand.
    """
    row = np.empty(plen, dtype=np.uint8)
    p = 0
    nbits = bits.size
    total = 0
    zero = 0
    gc = 0
    adj = 0
    prev = -1
    while p < nbits:
        consumed, z, st = _encode_unit(bits, nbits, p, plen, row,
                                       max_run, grace, window,
                                       gmin_tab, gmax_tab, motif_tab)
        if st != OK:
            return total, zero, gc, adj, st
        p += consumed
        zero += z
        total += plen
        for j in range(plen):
            c = row[j]
            gc += ISGC[c]
            if c == prev:
                adj += 1
            prev = c
    return total, zero, gc, adj, OK


@njit(cache=True)
def _score_candidates(tensor, mats, cands, eval_bits, plen, counts,
                      max_run, grace, window, gmin_tab, gmax_tab, motif_tab):
    """Fill counts[c] = (total_nt, zero_nt, gc_nt, adj_pairs, status) per candidate."""
    volume = tensor.size
    eval_len = eval_bits if 0 < eval_bits < volume else volume
    buf = np.empty(eval_len, dtype=np.uint8)
    for c in range(cands.shape[0]):
        wt = mats[cands[c, 0]]
        wy = mats[cands[c, 1]]
        wx = mats[cands[c, 2]]
        _mix_prefix(tensor, wt, wy, wx, eval_len, buf)
        t, z, g, a, st = _dry_run_counts(buf, plen,
                                         max_run, grace, window,
                                         gmin_tab, gmax_tab, motif_tab)
        counts[c, 0] = t
        counts[c, 1] = z
        counts[c, 2] = g
        counts[c, 3] = a
        counts[c, 4] = st
