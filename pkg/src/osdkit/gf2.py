"""Dense GF(2) matrices, systematic reduction with column tracking, re-encoding.

Matrices are held as ``uint8`` arrays of 0/1 values with a lazily built
row-major ``uint64`` packing that the decoding kernels consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class NotAGeneratorError(ValueError):
    """Raised when a matrix does not have full row rank."""


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, ceil(cols/64)) uint64 words.

    Bit ``c`` of a row lives in word ``c // 64`` at position ``c % 64``.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    rows, cols = bits.shape
    words = (cols + 63) // 64
    padded = np.zeros((rows, words * 64), dtype=np.uint64)
    padded[:, :cols] = bits
    shifts = np.arange(64, dtype=np.uint64)
    return (padded.reshape(rows, words, 64) << shifts).sum(axis=2, dtype=np.uint64)


def unpack_rows(packed: np.ndarray, cols: int) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.uint64)
    shifts = np.arange(64, dtype=np.uint64)
    bits = (packed[:, :, None] >> shifts) & np.uint64(1)
    return bits.reshape(packed.shape[0], -1)[:, :cols].astype(np.uint8)


@dataclass(frozen=True)
class Gf2Matrix:
    """Immutable dense bit matrix."""

    bits: np.ndarray
    _packed: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        b = np.array(self.bits, dtype=np.uint8, copy=True)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError("expected a non-empty 2-D bit array")
        if np.any(b > 1):
            raise ValueError("entries must be 0 or 1")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @property
    def packed(self) -> np.ndarray:
        if self._packed is None:
            p = pack_rows(self.bits)
            p.setflags(write=False)
            object.__setattr__(self, "_packed", p)
        return self._packed

    def permute_columns(self, perm) -> "Gf2Matrix":
        return Gf2Matrix(self.bits[:, np.asarray(perm)])

    def __eq__(self, other) -> bool:
        return isinstance(other, Gf2Matrix) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))


def rank(bits) -> int:
    """GF(2) rank by elimination on a copy."""
    a = np.array(bits, dtype=np.uint8) & 1
    r = 0
    rows, cols = a.shape
    for c in range(cols):
        if r == rows:
            break
        piv = np.flatnonzero(a[r:, c])
        if piv.size == 0:
            continue
        p = r + piv[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        hit = np.flatnonzero(a[:, c])
        hit = hit[hit != r]
        a[hit] ^= a[r]
        r += 1
    return r


def check_permutation(pi, n: int) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (n,) or not np.array_equal(np.sort(pi), np.arange(n)):
        raise ValueError(f"not a permutation of range({n})")
    return pi


def invert_permutation(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.int64)
    inv = np.empty_like(pi)
    inv[pi] = np.arange(pi.size)
    return inv


def compose(p, q) -> np.ndarray:
    """Apply ``q`` then ``p``: result[i] = q[p[i]] when indexing columns."""
    return np.asarray(q)[np.asarray(p)]


def systematic_form(G: Gf2Matrix, pi=None, *, return_transform: bool = False):
    """Reduce ``G[:, pi]`` to ``[I_k | P]`` by row operations and minimal column swaps.

    When the column at pivot position ``r`` is dependent on the earlier pivots it is
    swapped with the nearest column to its right that still has a pivot available.
    Returns ``(Gsys, pi_final)`` and optionally the k x k transform ``T`` with
    ``Gsys = T @ G[:, pi_final]`` over GF(2).
    """
    k, n = G.rows, G.cols
    pi = np.arange(n) if pi is None else check_permutation(pi, n)
    pi = pi.copy()
    a = G.bits[:, pi].copy()
    t = np.eye(k, dtype=np.uint8)
    for r in range(k):
        c = r
        while c < n and not a[r:, c].any():
            c += 1
        if c == n:
            raise NotAGeneratorError("not a generator matrix: row rank below k")
        if c != r:
            a[:, [r, c]] = a[:, [c, r]]
            pi[[r, c]] = pi[[c, r]]
        p = r + int(np.flatnonzero(a[r:, r])[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
            t[[r, p]] = t[[p, r]]
        hit = np.flatnonzero(a[:, r])
        hit = hit[hit != r]
        a[hit] ^= a[r]
        t[hit] ^= t[r]
    out = (Gf2Matrix(a), pi)
    return out + (t,) if return_transform else out


def encode(b, Gsys: Gf2Matrix) -> np.ndarray:
    b = np.asarray(b, dtype=np.uint8)
    if b.ndim == 1:
        if b.size != Gsys.rows:
            raise ValueError(f"message length {b.size} != {Gsys.rows}")
    elif b.shape[-1] != Gsys.rows:
        raise ValueError(f"message length {b.shape[-1]} != {Gsys.rows}")
    return (b.astype(np.int64) @ Gsys.bits.astype(np.int64) % 2).astype(np.uint8)


def is_codeword(v, G: Gf2Matrix) -> bool:
    v = np.asarray(v, dtype=np.uint8).reshape(1, -1)
    return rank(np.vstack([G.bits, v])) == rank(G.bits)


def load_matrix(path) -> Gf2Matrix:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    n, k = (int(x) for x in lines[0].split())
    body = lines[1:]
    if len(body) != k or any(len(row) != n or set(row) - {"0", "1"} for row in body):
        raise ValueError(f"expected {k} rows of {n} binary characters")
    return Gf2Matrix(np.array([[ch == "1" for ch in row] for row in body], dtype=np.uint8))


def save_matrix(path, G: Gf2Matrix) -> None:
    rows = ["".join("1" if x else "0" for x in row) for row in G.bits]
    Path(path).write_text(f"{G.cols} {G.rows}\n" + "\n".join(rows) + "\n")
