"""Compiled inner loops for the decoder.

Everything here works in the reliability-ordered domain: position 0 is the most
reliable symbol and the first k positions (after any pivot swaps) form the MRB.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TERM_IDENTIFIED, TERM_EXHAUSTED, TERM_CUTOFF = 0, 1, 2


@njit(cache=True, nogil=True)
def binom_table(k):
    c = np.zeros((k + 1, k + 1))
    for a in range(k + 1):
        c[a, 0] = 1.0
        for b in range(1, a + 1):
            c[a, b] = c[a - 1, b - 1] + c[a - 1, b]
    return c


@njit(cache=True, nogil=True)
def reduce_ordered(G, perm):
    """GE of G[:, perm] to [I | P] with nearest-right swaps; perm is updated in place.

    Returns (A, T, ok) where A = T @ G[:, perm] over GF(2).
    """
    k, n = G.shape
    A = np.empty((k, n), dtype=np.uint8)
    for j in range(n):
        A[:, j] = G[:, perm[j]]
    T = np.zeros((k, k), dtype=np.uint8)
    for i in range(k):
        T[i, i] = 1
    for r in range(k):
        c = r
        found = False
        while c < n:
            for i in range(r, k):
                if A[i, c]:
                    found = True
                    break
            if found:
                break
            c += 1
        if not found:
            return A, T, False
        if c != r:
            for i in range(k):
                t = A[i, r]
                A[i, r] = A[i, c]
                A[i, c] = t
            t2 = perm[r]
            perm[r] = perm[c]
            perm[c] = t2
        p = r
        while not A[p, r]:
            p += 1
        if p != r:
            for j in range(r, n):
                t = A[r, j]
                A[r, j] = A[p, j]
                A[p, j] = t
            for j in range(k):
                t = T[r, j]
                T[r, j] = T[p, j]
                T[p, j] = t
        for i in range(k):
            if i != r and A[i, r]:
                for j in range(r, n):
                    A[i, j] ^= A[r, j]
                for j in range(k):
                    T[i, j] ^= T[r, j]
    return A, T, True


@njit(cache=True, nogil=True)
def _next_colex(c, w, k):
    for j in range(w):
        lim = c[j + 1] if j + 1 < w else k
        if c[j] + 1 < lim:
            c[j] += 1
            for i in range(j):
                c[i] = i
            return True
    return False


@njit(cache=True, nogil=True)
def _next_lex(c, w, k):
    j = w - 1
    while j >= 0 and c[j] == k - w + j:
        j -= 1
    if j < 0:
        return False
    c[j] += 1
    for i in range(j + 1, w):
        c[i] = c[i - 1] + 1
    return True


@njit(cache=True, nogil=True)
def element_map(magp, perm, k, lex):
    """Element e of the within-class enumeration -> MRB position."""
    if lex:
        return np.argsort(perm[:k], kind="mergesort")
    rev = magp[:k][::-1].copy()
    return (k - 1) - np.argsort(rev, kind="mergesort")


@njit(cache=True, nogil=True)
def pattern_rank(err_pos, emap, k, lex, C):
    """1-based guess rank of the MRB pattern with the given positions (float64)."""
    w = err_pos.size
    inv = np.empty(k, dtype=np.int64)
    for e in range(k):
        inv[emap[e]] = e
    el = np.sort(inv[err_pos])
    below = 0.0
    for j in range(w):
        below += C[k, j]
    within = 0.0
    if lex:
        # lex order is colex order of the mirrored elements, reversed
        mir = np.sort((k - 1) - el)
        for i in range(w):
            within += C[mir[i], i + 1]
        within = C[k, w] - 1.0 - within
    else:
        for i in range(w):
            within += C[el[i], i + 1]
    return below + within + 1.0


@njit(cache=True, nogil=True)
def decode_block(llr, G, unit_syn, crc_on, m, limit, lam, lex, truth, genie, shortcut, C):
    """One OSD pass.

    Returns (guesses, termination, codeword in original order, best discrepancy, swaps).
    ``limit`` caps the number of TEPs; genie mode stops on the true MRB pattern and
    identification (lam <= 1) stops on the first CRC-valid candidate whose share of
    the running probability mass reaches lam.
    """
    k, n = G.shape
    r = n - k
    mag = np.abs(llr)
    perm = np.argsort(-mag, kind="mergesort")
    base_perm = perm.copy()
    A, T, ok = reduce_ordered(G, perm)
    swaps = 0
    for j in range(n):
        if perm[j] != base_perm[j]:
            swaps += 1
    magp = mag[perm]
    zp = np.empty(n, dtype=np.uint8)
    for j in range(n):
        zp[j] = 1 if llr[perm[j]] < 0 else 0

    W = (r + 63) // 64
    Pw = np.zeros((k, max(W, 1)), dtype=np.uint64)
    zw = np.zeros(max(W, 1), dtype=np.uint64)
    for j in range(r):
        bit = np.uint64(1) << np.uint64(j % 64)
        if zp[k + j]:
            zw[j // 64] |= bit
        for i in range(k):
            if A[i, k + j]:
                Pw[i, j // 64] |= bit
    base = zw.copy()  # diff of b.P against the parity hard decision, before the TEP
    for i in range(k):
        if zp[i]:
            for w in range(W):
                base[w] ^= Pw[i, w]
    # byte lookup: sum of parity reliabilities over the set bits of each byte slot
    slots = max(W, 1) * 8
    lut = np.zeros((slots, 256))
    for s in range(slots):
        for b in range(1, 256):
            low = b & (-b)
            bit = 0
            while (1 << bit) != low:
                bit += 1
            pos = s * 8 + bit
            val = magp[k + pos] if pos < r else 0.0
            lut[s, b] = lut[s, b & (b - 1)] + val

    st = np.zeros(k, dtype=np.int64)
    base_syn = 0
    if crc_on:
        for i in range(k):
            s_ = 0
            for j in range(k):
                if T[i, j]:
                    s_ ^= unit_syn[j]
            st[i] = s_
            if zp[i]:
                base_syn ^= s_

    emap = element_map(magp, perm, k, lex)

    target = np.zeros(0, dtype=np.int64)
    tgt_w = -1
    if genie:
        cnt = 0
        for i in range(k):
            if zp[i] != truth[perm[i]]:
                cnt += 1
        target = np.empty(cnt, dtype=np.int64)
        cnt = 0
        for i in range(k):
            if zp[i] != truth[perm[i]]:
                target[cnt] = i
                cnt += 1
        tgt_w = target.size
        if shortcut and tgt_w <= m:
            rk = pattern_rank(target, emap, k, lex, C)
            if rk <= limit:
                d = 0.0
                for j in range(n):
                    if truth[perm[j]] != zp[j]:
                        d += magp[j]
                return np.int64(rk), TERM_IDENTIFIED, truth.copy(), d, swaps
    tgt_set = np.zeros(k, dtype=np.uint8)
    for i in range(target.size):
        tgt_set[target[i]] = 1

    # pure minimum-discrepancy search under reliability order can skip the tail of a
    # weight class once its smallest possible MRB discrepancy exceeds the incumbent;
    # skipped TEPs still count as guesses
    prune = lam > 1.0 and not lex and not (genie and tgt_w <= m)
    pre = np.zeros(k + 1)
    for i in range(k):
        pre[i + 1] = pre[i] + magp[emap[i]]

    best_d = np.inf
    best_pat = np.zeros(m + 1, dtype=np.int64)
    best_w = 0
    log_z = -np.inf
    diff = np.zeros(max(W, 1), dtype=np.uint64)
    c = np.zeros(m + 1, dtype=np.int64)
    guesses = 0
    term = TERM_EXHAUSTED
    done = False
    for w in range(m + 1):
        if w > k:
            break
        for i in range(w):
            c[i] = i
        more = True
        while more:
            guesses += 1
            if guesses > limit:
                guesses = limit
                term = TERM_CUTOFF
                done = True
                break
            # first pattern with this top element: lower elements are 0..w-2
            if prune and w > 0 and (w == 1 or c[w - 2] == w - 2):
                top = c[w - 1]
                if magp[emap[top]] + pre[w - 1] >= best_d:
                    skip = np.int64(C[k, w] - C[top, w])
                    guesses += skip - 1
                    if guesses > limit:
                        guesses = limit
                        term = TERM_CUTOFF
                        done = True
                    break
            for x in range(W):
                diff[x] = base[x]
            d = 0.0
            syn = base_syn
            hit = tgt_w == w
            for i in range(w):
                pos = emap[c[i]]
                d += magp[pos]
                for x in range(W):
                    diff[x] ^= Pw[pos, x]
                syn ^= st[pos]
                if hit and not tgt_set[pos]:
                    hit = False
            for x in range(W):
                v = diff[x]
                for byte in range(8):
                    d += lut[x * 8 + byte, np.int64((v >> np.uint64(8 * byte)) & np.uint64(255))]
            if d < best_d:
                best_d = d
                best_w = w
                for i in range(w):
                    best_pat[i] = emap[c[i]]
            if genie and hit:
                best_d = d
                best_w = w
                for i in range(w):
                    best_pat[i] = emap[c[i]]
                term = TERM_IDENTIFIED
                done = True
                break
            if lam <= 1.0:
                log_z = np.logaddexp(log_z, -d)
                if (not crc_on or syn == 0) and np.exp(-d - log_z) >= lam:
                    best_d = d
                    best_w = w
                    for i in range(w):
                        best_pat[i] = emap[c[i]]
                    term = TERM_IDENTIFIED
                    done = True
                    break
            if w == 0:
                more = False
            elif lex:
                more = _next_lex(c, w, k)
            else:
                more = _next_colex(c, w, k)
        if done:
            break

    b = zp[:k].copy()
    for i in range(best_w):
        b[best_pat[i]] ^= 1
    v = np.zeros(n, dtype=np.uint8)
    for i in range(k):
        if b[i]:
            for j in range(n):
                v[j] ^= A[i, j]
    cw = np.empty(n, dtype=np.uint8)
    for j in range(n):
        cw[perm[j]] = v[j]
    return np.int64(guesses), term, cw, best_d, swaps


@njit(cache=True, nogil=True)
def decode_batch(L, G, unit_syn, crc_on, m, limits, lam, lex, truths, genie, shortcut):
    B, n = L.shape
    k = G.shape[0]
    C = binom_table(k)
    guesses = np.empty(B, dtype=np.int64)
    terms = np.empty(B, dtype=np.int64)
    cws = np.empty((B, n), dtype=np.uint8)
    dist = np.empty(B)
    swaps = np.empty(B, dtype=np.int64)
    for t in range(B):
        g, term, cw, d, s = decode_block(L[t], G, unit_syn, crc_on, m, limits[t], lam, lex, truths[t], genie, shortcut, C)
        guesses[t] = g
        terms[t] = term
        cws[t] = cw
        dist[t] = d
        swaps[t] = s
    return guesses, terms, cws, dist, swaps


@njit(cache=True, nogil=True)
def mrb_error_weights(L, truths, k):
    """Hard-decision errors among the k largest-|L| positions, per row (no pivot swaps)."""
    B, n = L.shape
    out = np.empty(B, dtype=np.int64)
    for t in range(B):
        perm = np.argsort(-np.abs(L[t]), kind="mergesort")
        e = 0
        for i in range(k):
            j = perm[i]
            hd = 1 if L[t, j] < 0 else 0
            if hd != truths[t, j]:
                e += 1
        out[t] = e
    return out
