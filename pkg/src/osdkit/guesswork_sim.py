"""Monte Carlo guesswork moments for i.i.d. blocks and reliability-ordered segments.

Patterns compare lexicographically as sorted position tuples, so among
equal-score patterns ``{0} < {0, 3} < {1}``.  The all-zero codeword is sent
throughout; by channel symmetry this loses nothing.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from . import _kernels as K
from .channel import CHUNK, ChannelParams, chunks, llr, trial_rng
from .osd import tep_rank

MAX_OPTIMAL = 26
STRATEGIES = ("optimal", "hamming")


@njit(cache=True, nogil=True)
def _setlex_less(x, y):
    """Set-lexicographic comparison of two position bitmasks."""
    if x == y:
        return False
    d = (x ^ y) & -(x ^ y)
    above = ~((d << 1) - 1)
    if x & d:
        return (y & above) != 0
    return (x & above) == 0


@njit(cache=True, nogil=True)
def _subset_sums(v):
    h = v.size
    out = np.zeros(1 << h)
    for i in range(h):
        step = 1 << i
        for s in range(step):
            out[s + step] = out[s] + v[i]
    return out


@njit(cache=True, nogil=True)
def _rank_optimal(mask, mags):
    """1 + #patterns scoring below ``mask`` + #equal-score patterns ordered before it."""
    L = mags.size
    h = L // 2
    s1 = _subset_sums(mags[:h])
    s2 = _subset_sums(mags[h:])
    order = np.argsort(s2, kind="mergesort")
    s2s = s2[order]
    lo_mask = mask & ((1 << h) - 1)
    s = s1[lo_mask] + s2[mask >> h]
    count = 0
    N = s2s.size
    for a in range(s1.size):
        # s1[a] + s2s[j] is nondecreasing in j; fix the guess from searchsorted in that domain
        j = np.searchsorted(s2s, s - s1[a], side="left")
        while j > 0 and s1[a] + s2s[j - 1] >= s:
            j -= 1
        while j < N and s1[a] + s2s[j] < s:
            j += 1
        count += j
        while j < N and s1[a] + s2s[j] == s:
            if _setlex_less(a | (order[j] << h), mask):
                count += 1
            j += 1
    return count + 1


@njit(cache=True, nogil=True)
def _ranks_optimal_batch(err, mags):
    B, L = err.shape
    out = np.empty(B)
    for t in range(B):
        mask = 0
        for i in range(L):
            if err[t, i]:
                mask |= 1 << i
        out[t] = _rank_optimal(mask, mags[t])
    return out


@njit(cache=True, nogil=True)
def _ranks_hamming_batch(err, mags, labels, lex):
    B, L = err.shape
    C = K.binom_table(L)
    out = np.empty(B)
    for t in range(B):
        if lex:
            emap = np.argsort(labels[t], kind="mergesort")
        else:
            rev = mags[t][::-1].copy()
            emap = (L - 1) - np.argsort(rev, kind="mergesort")
        pos = np.flatnonzero(err[t])
        out[t] = K.pattern_rank(pos, emap, L, lex, C)
    return out


def _mask(pattern) -> int:
    return int(sum(1 << int(i) for i in np.flatnonzero(np.asarray(pattern))))


def guess_rank_optimal(pattern, mags) -> int:
    """Rank of the true pattern when patterns are tried in decreasing posterior order.

    The score of a pattern is the sum of |l| over its flipped positions.
    """
    mags = np.asarray(mags, dtype=np.float64)
    if mags.size > MAX_OPTIMAL:
        raise ValueError(f"optimal ranking needs a segment of at most {MAX_OPTIMAL} symbols")
    if np.asarray(pattern).size != mags.size:
        raise ValueError("pattern and magnitudes differ in length")
    return int(_rank_optimal(_mask(pattern), mags))


def guess_rank_hamming(pattern, mags, within_order: str = "reliability", labels=None) -> int:
    """Rank under ascending-weight processing; see ``osd.tep_rank`` for the class orders."""
    return tep_rank(pattern, mags, within_order, labels)


def _draw(rng, count, n, sigma):
    p = ChannelParams(sigma)
    y = 1.0 + sigma * rng.standard_normal((count, n))
    return llr(y, p)


def _segment_chunk(args):
    seed, idx, count, a, b, n, sigma, strategy, omega, within_order, ordered = args
    L = _draw(trial_rng(seed, idx), count, n, sigma)
    if ordered:
        perm = np.argsort(-np.abs(L), axis=1, kind="stable")
        seg = perm[:, a - 1 : b]
    else:
        seg = np.broadcast_to(np.arange(a - 1, b), (count, b - a + 1))
    vals = np.take_along_axis(L, seg, axis=1)
    err = np.ascontiguousarray(vals < 0).astype(np.uint8)
    mags = np.ascontiguousarray(np.abs(vals))
    if strategy == "optimal":
        r = _ranks_optimal_batch(err, mags)
    else:
        r = _ranks_hamming_batch(err, mags, np.ascontiguousarray(seg), within_order == "lexicographic")
    x = r**omega
    return x.sum(), (x * x).sum()


def simulate_segment_moments(a: int, b: int, n: int, sigma: float, strategy: str = "hamming", omega: float = 1.0,
                             trials: int = 100_000, seed: int = 0, within_order: str = "lexicographic",
                             threads: int = 1, ordered: bool = True) -> tuple[float, float]:
    """Mean of rank^omega for the true error pattern of segment [a, b] and its standard error.

    ``ordered=False`` treats positions a..b of an i.i.d. block without sorting.
    Lexicographic within-class order uses the original channel indices.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    if not 1 <= a <= b <= n:
        raise ValueError("need 1 <= a <= b <= n")
    if strategy == "optimal" and b - a + 1 > MAX_OPTIMAL:
        raise ValueError(f"optimal strategy needs a segment of at most {MAX_OPTIMAL} symbols")
    if trials < 2:
        raise ValueError("need at least two trials")
    jobs = [(seed, i, c, a, b, n, sigma, strategy, omega, within_order, ordered) for i, c in chunks(trials, CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(_segment_chunk, jobs))
    else:
        parts = [_segment_chunk(j) for j in jobs]
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / trials
    var = max(s2 / trials - mean * mean, 0.0) * trials / (trials - 1)
    return mean, math.sqrt(var / trials)


def simulate_iid_moments(n: int, sigma: float, strategy: str = "hamming", omega: float = 1.0, trials: int = 100_000,
                         seed: int = 0, within_order: str = "lexicographic", threads: int = 1) -> tuple[float, float]:
    return simulate_segment_moments(1, n, n, sigma, strategy, omega, trials, seed, within_order, threads, ordered=False)


def exact_iid_hamming_moment(n: int, sigma: float, omega: float = 1.0, within_order: str = "lexicographic") -> float:
    """sum_e P(e) rank(e)^omega for lexicographic classes (rank depends on the pattern only).

    With reliability order the rank depends on the magnitudes, so only the pattern-only
    order admits this enumeration.
    """
    from scipy.stats import norm

    if within_order != "lexicographic":
        raise ValueError("exact enumeration needs a magnitude-free order")
    p = float(norm.sf(1.0 / sigma))
    total = 0.0
    below = 0
    for w in range(n + 1):
        cw = math.comb(n, w)
        ranks = np.arange(below + 1, below + cw + 1, dtype=np.float64)
        total += p**w * (1 - p) ** (n - w) * float(np.sum(ranks**omega))
        below += cw
    return total
