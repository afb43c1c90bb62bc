"""Two-round incremental-redundancy HARQ over nested punctured codes."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import ChannelParams, chunks, llr, transmit, trial_rng
from .codes import CRC6, CrcSpec, build_ebch, puncture_order
from .gf2 import Gf2Matrix
from .osd import TERMINATIONS, _run, random_messages


@lru_cache(maxsize=8)
def _removal_order(m: int, t: int, n_min: int, seed: int) -> tuple[int, ...]:
    return tuple(puncture_order(build_ebch(m, t), n_min, seed))


@dataclass(frozen=True)
class HarqScheme:
    n1: int
    m1: int
    n2: int
    m2: int
    lam: float = 0.75
    crc: CrcSpec = CRC6
    mother: tuple[int, int] = (7, 24)  # (m, t) of the extended BCH mother code, here (128, 15)
    puncture_seed: int = 0
    n_min: int = 40  # deepest puncturing depth; shallower codes reuse its removal order
    k: int = field(init=False)

    def __post_init__(self):
        G = build_ebch(*self.mother)
        object.__setattr__(self, "k", G.rows)
        if not G.rows <= self.n_min <= self.n1 < self.n2 <= G.cols:
            raise ValueError("need k <= n_min <= n1 < n2 <= mother length")
        if not (0 <= self.m1 <= G.rows and 0 <= self.m2 <= G.rows):
            raise ValueError("orders must lie in [0, k]")
        if not 0 < self.lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")

    def mother_generator(self) -> Gf2Matrix:
        return build_ebch(*self.mother)

    def kept(self, n_target: int) -> np.ndarray:
        """Columns kept at length n_target; sets are nested across lengths."""
        G = self.mother_generator()
        order = _removal_order(*self.mother, self.n_min, self.puncture_seed)
        gone = set(order[: G.cols - n_target])
        return np.array([c for c in range(G.cols) if c not in gone])

    @classmethod
    def parse(cls, text: str, **kw) -> "HarqScheme":
        n1, m1, n2, m2 = (int(x) for x in text.split(","))
        return cls(n1, m1, n2, m2, **kw)


SCHEME_1 = HarqScheme(48, 2, 72, 3)
SCHEME_2 = HarqScheme(40, 1, 96, 4)


@dataclass(frozen=True)
class HarqStats:
    snr_db: float
    blocks: int
    bler: float
    bler_round1: float
    p_round2: float
    r1_avg_guesses: float
    r1_max: int
    r2_avg_guesses: float
    r2_max: int
    avg_eff_n: float
    errors: np.ndarray
    retransmit: np.ndarray
    r1_guesses: np.ndarray
    r2_guesses: np.ndarray


def simulate_harq(scheme: HarqScheme, snr_db: float, blocks: int = 10_000, seed: int = 0) -> HarqStats:
    """Round 1 decodes n1 symbols; blocks with no identified codeword get n2 - n1 more."""
    G = scheme.mother_generator()
    k1, k2 = scheme.kept(scheme.n1), scheme.kept(scheme.n2)
    G1, G2 = Gf2Matrix(G.bits[:, k1]), Gf2Matrix(G.bits[:, k2])
    params = ChannelParams.from_snr_db(snr_db)
    bits = G.bits.astype(np.int64)
    ident = TERMINATIONS.index("identified")
    err, err1, retx, g1s, g2s = [], [], [], [], []
    for idx, count in chunks(blocks):
        rng = trial_rng(seed, idx)
        u = random_messages(rng, count, G.rows, scheme.crc)
        c = (u.astype(np.int64) @ bits % 2).astype(np.uint8)
        L = llr(transmit(c, params, rng), params)
        g1, t1, cw1, _, _ = _run(L[:, k1], G1, scheme.m1, crc=scheme.crc, lam=scheme.lam)
        wrong1 = np.any(cw1 != c[:, k1], axis=1)
        again = t1 != ident
        wrong = wrong1.copy()
        g2 = np.zeros(count, dtype=np.int64)
        if again.any():
            gg, _, cw2, _, _ = _run(L[again][:, k2], G2, scheme.m2, crc=scheme.crc, lam=scheme.lam)
            g2[again] = gg
            wrong[again] = np.any(cw2 != c[again][:, k2], axis=1)
        err.append(wrong)
        err1.append(wrong1)
        retx.append(again)
        g1s.append(g1)
        g2s.append(g2)
    err, err1, retx = np.concatenate(err), np.concatenate(err1), np.concatenate(retx)
    g1, g2 = np.concatenate(g1s), np.concatenate(g2s)
    p2 = float(retx.mean())
    r2 = g2[retx]
    return HarqStats(
        float(snr_db), int(blocks), float(err.mean()), float(err1.mean()), p2,
        float(g1.mean()), int(g1.max()), float(r2.mean()) if r2.size else 0.0, int(r2.max()) if r2.size else 0,
        scheme.n1 + p2 * (scheme.n2 - scheme.n1), err, retx, g1, g2,
    )
