"""Ordered statistics decoding: TEP ordering, the genie, identification and cutoff decoders."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import binom
from sklearn.base import BaseEstimator

from . import _kernels as K
from .bounds import osd_bler, tep_budget
from .codes import CRC6, CrcSpec, crc_remainder
from .gf2 import Gf2Matrix, NotAGeneratorError, rank as gf2_rank

WITHIN_ORDERS = ("reliability", "lexicographic")
TERMINATIONS = ("identified", "exhausted", "cutoff")


# --- TEP ordering -------------------------------------------------------------------


@dataclass(frozen=True)
class Tep:
    pattern: np.ndarray
    weight: int
    rank: int


def tep_count(k: int, m: int) -> int:
    """beta_m: number of TEPs of weight at most m."""
    if not 0 <= m <= k:
        raise ValueError("need 0 <= m <= k")
    return tep_budget(k, m)


def _element_map(k: int, reliabilities, within_order: str, labels) -> np.ndarray:
    """Element e of the within-class enumeration -> MRB position."""
    if within_order == "reliability":
        if reliabilities is None:
            return np.arange(k)[::-1].copy()
        mag = np.asarray(reliabilities, dtype=np.float64)[:k]
        if mag.size != k:
            raise ValueError("need k reliabilities")
        # ascending reliability; ties go to the later (less reliable) position
        return np.lexsort((-np.arange(k), mag))
    if within_order == "lexicographic":
        if labels is None:
            return np.arange(k)
        lab = np.asarray(labels)[:k]
        if lab.size != k:
            raise ValueError("need k labels")
        return np.argsort(lab, kind="stable")
    raise ValueError(f"within_order must be one of {WITHIN_ORDERS}")


def _colex_unrank(r: int, w: int) -> list[int]:
    out = []
    for i in range(w, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= r:
            c += 1
        out.append(c)
        r -= math.comb(c, i)
    return out[::-1]


def _colex_rank(el) -> int:
    return sum(math.comb(c, i + 1) for i, c in enumerate(sorted(el)))


def tep_at(rank: int, k: int, reliabilities=None, within_order: str = "reliability", labels=None) -> Tep:
    """TEP with the given 1-based rank.

    Weight classes come in ascending weight.  ``reliability`` flips the least
    reliable MRB positions first (colex over ascending reliability); ``lexicographic``
    orders each class lexicographically by ``labels`` (default: position index).
    """
    total = 1 << k
    if not 1 <= rank <= total:
        raise ValueError(f"rank must lie in [1, 2^{k}]")
    emap = _element_map(k, reliabilities, within_order, labels)
    r = rank - 1
    w = 0
    while r >= math.comb(k, w):
        r -= math.comb(k, w)
        w += 1
    if within_order == "lexicographic":
        el = [k - 1 - c for c in _colex_unrank(math.comb(k, w) - 1 - r, w)]
    else:
        el = _colex_unrank(r, w)
    pat = np.zeros(k, dtype=np.uint8)
    pat[emap[np.array(el, dtype=np.int64)]] = 1
    return Tep(pat, w, rank)


def tep_rank(pattern, reliabilities=None, within_order: str = "reliability", labels=None) -> int:
    pat = np.asarray(pattern, dtype=np.uint8)
    k = pat.size
    emap = _element_map(k, reliabilities, within_order, labels)
    inv = np.empty(k, dtype=np.int64)
    inv[emap] = np.arange(k)
    el = sorted(int(e) for e in inv[np.flatnonzero(pat)])
    w = len(el)
    below = sum(math.comb(k, j) for j in range(w))
    if within_order == "lexicographic":
        within = math.comb(k, w) - 1 - _colex_rank([k - 1 - e for e in el])
    else:
        within = _colex_rank(el)
    return below + within + 1


# --- candidate metric and identification ----------------------------------------------


def candidate_metric(v, reception) -> float:
    """Log prior of the hard-decision disagreements of v (ordered domain)."""
    mag = np.asarray(reception.llr_mag_ordered, dtype=np.float64)
    hd = (np.asarray(reception.llr_ordered) < 0).astype(np.uint8)
    dis = np.asarray(v, dtype=np.uint8) != hd
    # log p_i for disagreements, log(1 - p_i) otherwise, with p_i = 1/(1 + e^|l_i|)
    return float(-np.sum(np.logaddexp(0.0, np.where(dis, -mag, mag))))


class IdentificationState:
    """Running probability-domain normalizer over the candidates generated so far."""

    def __init__(self):
        self.log_norm = -np.inf
        self.count = 0

    def add(self, metric: float) -> None:
        self.log_norm = float(np.logaddexp(self.log_norm, metric))
        self.count += 1

    def share(self, metric: float) -> float:
        return math.exp(metric - self.log_norm)


def identify(metric: float, state: IdentificationState, lam: float) -> bool:
    """Register the candidate, then test its normalized metric against lam."""
    state.add(metric)
    return state.share(metric) >= lam


# --- complexity cutoff ---------------------------------------------------------------------


def ccc_cutoff(second_moment: float, eps_b: float) -> int:
    if second_moment < 0:
        raise ValueError("second moment must be nonnegative")
    if not 0 < eps_b <= 1:
        raise ValueError("eps_b must lie in (0, 1]")
    z1 = math.sqrt(4 * second_moment / (9 * eps_b))
    if z1 >= 2 * math.sqrt(second_moment) / math.sqrt(3):
        return math.ceil(z1) + 1
    return math.ceil(math.sqrt(3 * second_moment) * (1 - eps_b)) + 1


def ccc_cutoffs(second_moment, eps_b) -> np.ndarray:
    M = np.asarray(second_moment, dtype=np.float64)
    e = np.asarray(eps_b, dtype=np.float64)
    z1 = np.sqrt(4 * M / (9 * e))
    z2 = np.sqrt(3 * M) * (1 - e)
    return np.where(z1 >= 2 * np.sqrt(M) / math.sqrt(3), np.ceil(z1), np.ceil(z2)).astype(np.int64) + 1


def block_pe(llr, k: int) -> np.ndarray:
    """Per-block MRB bit-error estimate (1/k) sum_{i<=k} 1/(1 + e^{|l_i|}) over the k largest |l|."""
    mag = np.abs(np.atleast_2d(np.asarray(llr, dtype=np.float64)))
    top = -np.partition(-mag, k - 1, axis=1)[:, :k]
    return np.mean(np.exp(-np.logaddexp(0.0, top)), axis=1)


def order_m_second_moment(k: int, m: int, pe) -> np.ndarray:
    """Order-m series for E[X^2]: e^{-k p}[sum_{j<=m} (k^j/j!)^3 p^j + (k^m/m!)^2 (kp)^{m+1}/(m+1)!]."""
    p = np.maximum(np.atleast_1d(np.asarray(pe, dtype=np.float64)), 1e-300)
    j = np.arange(m + 1)
    lk = math.log(k)
    lp = np.log(p)[:, None]
    head = (3 * (j * lk - gammaln(j + 1)))[None, :] + j[None, :] * lp
    tail = 2 * (m * lk - gammaln(m + 1)) + (m + 1) * (lk + lp[:, 0]) - gammaln(m + 2)
    terms = np.hstack([head, tail[:, None]]) if m < k else head
    return np.exp(-k * p + logsumexp(terms, axis=1))


@dataclass(frozen=True)
class CccConfig:
    """Cutoff settings.  ``lam`` set to a value in (0, 1] keeps identification on."""

    alpha: float = 0.8
    second_moment_source: str = "per-block"
    eps_source: str = "snr"
    lam: float | None = None
    omega: int = 2

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.omega != 2:
            raise ValueError("the cutoff uses the second moment (omega = 2)")
        if self.second_moment_source not in ("per-block", "prior-bound"):
            raise ValueError("second_moment_source must be per-block or prior-bound")
        if self.eps_source not in ("snr", "per-block"):
            raise ValueError("eps_source must be snr or per-block")


def ccc_limits(llr, n: int, k: int, m: int, sigma: float, cfg: CccConfig) -> np.ndarray:
    """Per-block cutoff zeta_cut for a batch of LLR rows."""
    pe = block_pe(llr, k)
    if cfg.second_moment_source == "prior-bound":
        from .orderstats import mrb_error_prob

        M2 = np.full(pe.shape, order_m_second_moment(k, m, mrb_error_prob(n, k, sigma))[0])
    else:
        M2 = order_m_second_moment(k, m, pe)
    if cfg.eps_source == "snr":
        eps_m = np.full(pe.shape, osd_bler(n, k, m, sigma))
    else:
        eps_m = binom.sf(m, k, pe)
    eps_b = np.clip(eps_m, 1e-300, 1.0) ** cfg.alpha
    return np.minimum(ccc_cutoffs(M2, eps_b), tep_count(k, m))


# --- decoding ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class DecodeOutcome:
    codeword: np.ndarray
    success: bool | None
    guesses: int
    termination: str
    candidate_metric: float


def _crc_unit_syndromes(k: int, crc: CrcSpec | None) -> np.ndarray:
    """Syndrome (data remainder XOR stored CRC) contributed by each message bit."""
    if crc is None:
        return np.zeros(k, dtype=np.int64)
    r = crc.degree
    if k <= r:
        raise ValueError("message shorter than the CRC")
    out = np.zeros(k, dtype=np.int64)
    for j in range(k):
        if j < k - r:
            e = np.zeros(k - r, dtype=np.uint8)
            e[j] = 1
            rem = crc_remainder(e, crc)
            out[j] = int("".join(map(str, rem)), 2)
        else:
            out[j] = 1 << (r - 1 - (j - (k - r)))
    return out


def _as_matrix(G) -> Gf2Matrix:
    G = G if isinstance(G, Gf2Matrix) else Gf2Matrix(np.asarray(G))
    if gf2_rank(G.bits) != G.rows:
        raise NotAGeneratorError("not a generator matrix: row rank below k")
    return G


def _metric_from_distance(d: float, llr) -> float:
    # discrepancy -> log prior of the disagreements (same normalization as candidate_metric)
    mag = np.abs(np.asarray(llr, dtype=np.float64))
    return float(-d - np.sum(np.logaddexp(0.0, -mag)))


def _run(llr, G, m, *, crc=None, lam=2.0, within_order="reliability", truth=None, limit=None, shortcut=True):
    G = _as_matrix(G)
    if within_order not in WITHIN_ORDERS:
        raise ValueError(f"within_order must be one of {WITHIN_ORDERS}")
    if not 0 <= m <= G.rows:
        raise ValueError("need 0 <= m <= k")
    L = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    if L.shape[1] != G.cols:
        raise ValueError("reception length does not match the code")
    B = L.shape[0]
    beta = tep_count(G.rows, m)
    lim = np.full(B, beta, dtype=np.int64) if limit is None else np.minimum(np.broadcast_to(np.asarray(limit, dtype=np.int64), (B,)), beta)
    genie = truth is not None
    tr = np.zeros((B, G.cols), dtype=np.uint8) if truth is None else np.atleast_2d(np.asarray(truth, dtype=np.uint8))
    return K.decode_batch(
        L, np.ascontiguousarray(G.bits), _crc_unit_syndromes(G.rows, crc), crc is not None, int(m), np.ascontiguousarray(lim),
        float(lam), within_order == "lexicographic", np.ascontiguousarray(tr), genie, bool(shortcut),
    )


def _outcome(res, llr, truth=None) -> DecodeOutcome:
    g, t, cw, d, _ = res
    ok = None if truth is None else bool(np.array_equal(cw[0], np.asarray(truth, dtype=np.uint8)))
    return DecodeOutcome(cw[0].copy(), ok, int(g[0]), TERMINATIONS[int(t[0])], _metric_from_distance(float(d[0]), llr))


def decode_genie(llr, G, m: int, truth, within_order: str = "reliability", shortcut: bool = True) -> DecodeOutcome:
    """Order-m OSD that stops as soon as the re-encoded candidate equals ``truth``."""
    res = _run(llr, G, m, truth=truth, within_order=within_order, shortcut=shortcut)
    return _outcome(res, llr, truth)


def decode_identify(llr, G, m: int, lam: float, crc: CrcSpec | None = CRC6, within_order: str = "reliability", truth=None) -> DecodeOutcome:
    """Order-m OSD stopping at the first CRC-valid candidate whose normalized metric reaches lam."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    res = _run(llr, G, m, crc=crc, lam=lam, within_order=within_order)
    return _outcome(res, llr, truth)


def decode_ccc(llr, G, m: int, sigma: float, cfg: CccConfig = CccConfig(), crc: CrcSpec | None = CRC6,
               within_order: str = "reliability", truth=None) -> DecodeOutcome:
    """Order-m OSD with the per-block Gauss-inequality cutoff on the number of TEPs."""
    G = _as_matrix(G)
    lim = ccc_limits(llr, G.cols, G.rows, m, sigma, cfg)
    lam = 2.0 if cfg.lam is None else cfg.lam
    res = _run(llr, G, m, crc=crc if cfg.lam is not None else None, lam=lam, within_order=within_order, limit=lim)
    return _outcome(res, llr, truth)


class OsdDecoder(BaseEstimator):
    """Estimator wrapper: ``fit`` takes a generator matrix, ``predict`` decodes LLR rows.

    mode is one of genie, identify, ccc.  Genie mode needs ``truth`` in predict.
    """

    def __init__(self, m=4, mode="identify", lam=0.5, alpha=0.8, sigma=None, crc=CRC6, within_order="reliability",
                 second_moment_source="per-block", eps_source="snr"):
        self.m = m
        self.mode = mode
        self.lam = lam
        self.alpha = alpha
        self.sigma = sigma
        self.crc = crc
        self.within_order = within_order
        self.second_moment_source = second_moment_source
        self.eps_source = eps_source

    def fit(self, G, y=None):
        self.generator_ = _as_matrix(G)
        if self.mode not in ("genie", "identify", "ccc"):
            raise ValueError("mode must be genie, identify or ccc")
        if self.mode == "ccc" and self.sigma is None:
            raise ValueError("ccc mode needs sigma")
        self.n_features_in_ = self.generator_.cols
        return self

    def decode(self, L, truth=None):
        """Raw batch results: (guesses, termination codes, codewords, discrepancies, swaps)."""
        G = self.generator_
        L = np.atleast_2d(np.asarray(L, dtype=np.float64))
        if self.mode == "genie":
            if truth is None:
                raise ValueError("genie mode needs the transmitted codewords")
            return _run(L, G, self.m, truth=truth, within_order=self.within_order)
        if self.mode == "identify":
            return _run(L, G, self.m, crc=self.crc, lam=self.lam, within_order=self.within_order)
        cfg = CccConfig(self.alpha, self.second_moment_source, self.eps_source, self.lam)
        lim = ccc_limits(L, G.cols, G.rows, self.m, self.sigma, cfg)
        lam = 2.0 if self.lam is None else self.lam
        return _run(L, G, self.m, crc=self.crc if self.lam is not None else None, lam=lam,
                    within_order=self.within_order, limit=lim)

    def predict(self, L, truth=None):
        return self.decode(L, truth)[2]


# --- link simulation -----------------------------------------------------------------------------


@dataclass(frozen=True)
class DecodeStats:
    snr_db: float
    blocks: int
    bler: float
    avg_guesses: float
    max_guesses: int
    p50_guesses: float
    p99_guesses: float
    guesses: np.ndarray
    errors: np.ndarray
    terminations: np.ndarray
    limits: np.ndarray | None = None


def random_messages(rng, count: int, k: int, crc: CrcSpec | None) -> np.ndarray:
    from .codes import crc_attach_batch

    if crc is None:
        return rng.integers(0, 2, size=(count, k), dtype=np.uint8)
    return crc_attach_batch(rng.integers(0, 2, size=(count, k - crc.degree), dtype=np.uint8), crc)


def simulate_decoder(G, snr_db: float, m: int, mode: str = "identify", blocks: int = 10_000, seed: int = 0, *,
                     lam: float | None = 0.5, alpha: float = 0.8, crc: CrcSpec | None = CRC6,
                     within_order: str = "reliability", cfg: CccConfig | None = None, threads: int = 1) -> DecodeStats:
    """BLER and guess statistics of one decoder mode over ``blocks`` random CRC-framed messages.

    For mode ccc, ``lam`` None disables identification; ``cfg`` overrides the cutoff settings.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .channel import ChannelParams, chunks, llr, transmit, trial_rng

    G = _as_matrix(G)
    if mode not in ("genie", "identify", "ccc"):
        raise ValueError("mode must be genie, identify or ccc")
    params = ChannelParams.from_snr_db(snr_db)
    if mode == "ccc" and cfg is None:
        cfg = CccConfig(alpha=alpha, lam=lam)
    bits = G.bits.astype(np.int64)

    def one(job):
        idx, count = job
        rng = trial_rng(seed, idx)
        u = random_messages(rng, count, G.rows, crc)
        c = (u.astype(np.int64) @ bits % 2).astype(np.uint8)
        L = llr(transmit(c, params, rng), params)
        lim = None
        if mode == "genie":
            res = _run(L, G, m, truth=c, within_order=within_order)
        elif mode == "identify":
            res = _run(L, G, m, crc=crc, lam=lam if lam is not None else 2.0, within_order=within_order)
        else:
            lim = ccc_limits(L, G.cols, G.rows, m, params.sigma, cfg)
            on = cfg.lam is not None
            res = _run(L, G, m, crc=crc if on else None, lam=cfg.lam if on else 2.0, within_order=within_order, limit=lim)
        g, t, cw, _, _ = res
        return g, np.any(cw != c, axis=1), t, lim

    jobs = list(chunks(blocks))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    g = np.concatenate([p[0] for p in parts])
    err = np.concatenate([p[1] for p in parts])
    term = np.concatenate([p[2] for p in parts])
    lims = np.concatenate([p[3] for p in parts]) if mode == "ccc" else None
    return DecodeStats(float(snr_db), int(blocks), float(err.mean()), float(g.mean()), int(g.max()),
                       float(np.percentile(g, 50)), float(np.percentile(g, 99)), g, err, term, lims)
