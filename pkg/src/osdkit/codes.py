"""Code constructions: extended BCH, CRC framing, nested puncturing, random codes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2 import Gf2Matrix, load_matrix, rank, systematic_form

# primitive polynomials, bit i = coefficient of x^i
PRIMITIVE_POLY = {3: 0b1011, 4: 0b10011, 5: 0b100101, 6: 0b1000011, 7: 0b10001001, 8: 0b100011101}


def _gf_tables(m: int):
    size = (1 << m) - 1
    exp = np.zeros(2 * size, dtype=np.int64)
    log = np.full(size + 1, -1, dtype=np.int64)
    x = 1
    for i in range(size):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x >> m:
            x ^= PRIMITIVE_POLY[m]
    exp[size:] = exp[:size]
    return exp, log


def cyclotomic_cosets(m: int) -> list[list[int]]:
    N = (1 << m) - 1
    seen, out = set(), []
    for s in range(N):
        if s in seen:
            continue
        c, x = [], s
        while x not in c:
            c.append(x)
            x = 2 * x % N
        seen.update(c)
        out.append(c)
    return out


def minimal_polynomial(m: int, coset) -> int:
    """Product of (x - alpha^j) over the coset; returned as a GF(2) bitmask."""
    exp, log = _gf_tables(m)
    N = (1 << m) - 1
    poly = [1]  # coefficients in GF(2^m), lowest degree first
    for j in coset:
        root = int(exp[j % N])
        nxt = [0] * (len(poly) + 1)
        for d, a in enumerate(poly):
            nxt[d + 1] ^= a
            if a:
                nxt[d] ^= int(exp[(log[a] + log[root]) % N])
        poly = nxt
    if any(c not in (0, 1) for c in poly):
        raise ArithmeticError("minimal polynomial left GF(2)")
    return sum(c << d for d, c in enumerate(poly))


def _polymul2(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def bch_generator_poly(m: int, t: int) -> int:
    N = (1 << m) - 1
    need = {i % N for i in range(1, 2 * t + 1)}
    g = 1
    for c in cyclotomic_cosets(m):
        if need & set(c):
            g = _polymul2(g, minimal_polynomial(m, c))
    return g


def build_ebch(m: int, t: int) -> Gf2Matrix:
    """Systematic generator of the BCH code of length 2^m - 1 extended by an even-parity bit."""
    if not 3 <= m <= 8:
        raise ValueError("m must lie in [3, 8]")
    if t < 1:
        raise ValueError("t must be >= 1")
    N = (1 << m) - 1
    g = bch_generator_poly(m, t)
    r = g.bit_length() - 1
    k = N - r
    if k <= 0:
        raise ValueError(f"BCH(m={m}, t={t}) has no information bits")
    gbits = np.array([(g >> i) & 1 for i in range(r + 1)], dtype=np.uint8)
    rows = np.zeros((k, N), dtype=np.uint8)
    for i in range(k):
        rows[i, i : i + r + 1] = gbits
    gs, _ = systematic_form(Gf2Matrix(rows))
    parity = gs.bits.sum(axis=1) % 2
    return Gf2Matrix(np.hstack([gs.bits, parity[:, None].astype(np.uint8)]))


def ebch_dimension(m: int, t: int) -> int:
    return (1 << m) - 1 - (bch_generator_poly(m, t).bit_length() - 1)


def ebch_t_for_dimension(m: int, k: int) -> int:
    """Smallest designed t whose extended BCH code has dimension k."""
    for t in range(1, 1 << (m - 1)):
        d = ebch_dimension(m, t)
        if d == k:
            return t
        if d < k:
            break
    raise ValueError(f"no BCH code of length 2^{m}-1 with dimension {k}")


def random_code(n: int, k: int, seed: int = 0) -> Gf2Matrix:
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = np.random.default_rng(seed)
    while True:
        bits = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        if rank(bits) == k:
            return Gf2Matrix(bits)


# --- CRC ---------------------------------------------------------------------


@dataclass(frozen=True)
class CrcSpec:
    """Generator polynomial as an int with the x^degree term included."""

    poly: int = 0b1101111  # x^6 + x^5 + x^3 + x^2 + x + 1

    @property
    def degree(self) -> int:
        return self.poly.bit_length() - 1

    def __post_init__(self):
        if self.poly < 2:
            raise ValueError("CRC polynomial degree must be >= 1")


CRC6 = CrcSpec()


def crc_remainder(data, spec: CrcSpec = CRC6) -> np.ndarray:
    """Remainder of data(x) * x^r divided by the CRC polynomial; MSB (first bit) first."""
    r = spec.degree
    reg = 0
    top = 1 << r
    for bit in np.asarray(data, dtype=np.uint8):
        reg = (reg << 1) | int(bit)
        if reg & top:
            reg ^= spec.poly
    for _ in range(r):
        reg <<= 1
        if reg & top:
            reg ^= spec.poly
    return np.array([(reg >> (r - 1 - i)) & 1 for i in range(r)], dtype=np.uint8)


def crc_attach(info, spec: CrcSpec = CRC6) -> np.ndarray:
    info = np.asarray(info, dtype=np.uint8)
    return np.concatenate([info, crc_remainder(info, spec)])


def crc_matrix(data_len: int, spec: CrcSpec = CRC6) -> np.ndarray:
    """CRC bits as a linear map: crc(data) = data @ M over GF(2), M of shape (data_len, degree)."""
    return np.array([crc_remainder(np.eye(data_len, dtype=np.uint8)[i], spec) for i in range(data_len)], dtype=np.uint8).reshape(data_len, spec.degree)


def crc_attach_batch(info, spec: CrcSpec = CRC6) -> np.ndarray:
    info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
    M = crc_matrix(info.shape[1], spec).astype(np.int64)
    return np.hstack([info, (info.astype(np.int64) @ M % 2).astype(np.uint8)])


def crc_check(bits, spec: CrcSpec = CRC6) -> bool:
    bits = np.asarray(bits, dtype=np.uint8)
    r = spec.degree
    if bits.size < r:
        raise ValueError("block shorter than the CRC degree")
    return bool(np.array_equal(crc_remainder(bits[:-r], spec), bits[-r:]))


# --- puncturing ----------------------------------------------------------------


def _codeword_sample(G: Gf2Matrix, seed: int, samples: int) -> np.ndarray:
    k = G.rows
    if k <= 16:
        msgs = ((np.arange(1, 1 << k)[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    else:
        rng = np.random.default_rng(seed)
        msgs = rng.integers(0, 2, size=(samples, k), dtype=np.uint8)
        msgs = msgs[msgs.any(axis=1)]
    return (msgs.astype(np.int64) @ G.bits.astype(np.int64) % 2).astype(np.uint8)


def puncture_order(G: Gf2Matrix, n_target: int, seed: int = 0, samples: int = 1 << 14) -> list[int]:
    """Columns of G removed greedily, in removal order, until n_target remain.

    Each step drops the column whose deletion leaves the largest sampled minimum
    weight; ties go to the fewest sampled codewords at that weight, then the
    lowest column index.  Candidates that would lower the rank are skipped.
    """
    k, n = G.rows, G.cols
    if not k <= n_target <= n:
        raise ValueError("need k <= n_target <= n")
    cw = _codeword_sample(G, seed, samples).astype(bool)
    weights = cw.sum(axis=1).astype(np.int64)
    kept = list(range(n))
    removed: list[int] = []
    while len(kept) > n_target:
        w = weights[:, None] - cw[:, kept]
        wmin = w.min(axis=0)
        count = (w == wmin).sum(axis=0)
        scores = sorted(zip((-wmin).tolist(), count.tolist(), kept))
        for _, _, c in scores:
            trial = [x for x in kept if x != c]
            if rank(G.bits[:, trial]) == k:
                break
        else:
            raise ValueError("every remaining column removal loses rank")
        kept.remove(c)
        removed.append(c)
        weights = weights - cw[:, c]
    return removed


def puncture(G: Gf2Matrix, n_target: int, seed: int = 0) -> tuple[Gf2Matrix, np.ndarray]:
    if n_target == G.cols:
        return G, np.arange(G.cols)
    if n_target < G.rows or n_target > G.cols:
        raise ValueError("need k <= n_target <= n")
    gone = set(puncture_order(G, n_target, seed))
    kept = np.array([c for c in range(G.cols) if c not in gone])
    return Gf2Matrix(G.bits[:, kept]), kept


def parse_code_spec(spec: str, seed: int = 0) -> Gf2Matrix:
    kind, _, arg = spec.partition(":")
    if kind == "ebch":
        m, t = (int(x) for x in arg.split(","))
        return build_ebch(m, t)
    if kind == "random":
        n, k = (int(x) for x in arg.split(","))
        return random_code(n, k, seed)
    if kind == "file":
        return load_matrix(arg)
    raise ValueError(f"unknown code spec {spec!r}")
