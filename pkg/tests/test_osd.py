import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osdkit import _kernels as K
from osdkit.channel import ChannelParams, llr, transmit
from osdkit.codes import CRC6, build_ebch, crc_attach, crc_check, random_code
from osdkit.gf2 import Gf2Matrix, NotAGeneratorError, encode, is_codeword
from osdkit.orderstats import order_reception
from osdkit.osd import (
    CccConfig,
    IdentificationState,
    OsdDecoder,
    candidate_metric,
    ccc_cutoff,
    ccc_cutoffs,
    decode_ccc,
    decode_genie,
    decode_identify,
    identify,
    order_m_second_moment,
    simulate_decoder,
    tep_at,
    tep_count,
    tep_rank,
)

G_SMALL = random_code(24, 12, seed=4)


def _noisy(G, snr_db, rng, count=1, crc=None):
    k = G.rows
    if crc is None:
        u = rng.integers(0, 2, size=(count, k), dtype=np.uint8)
    else:
        u = np.array([crc_attach(rng.integers(0, 2, k - crc.degree, dtype=np.uint8), crc) for _ in range(count)])
    c = (u.astype(np.int64) @ G.bits.astype(np.int64) % 2).astype(np.uint8)
    p = ChannelParams.from_snr_db(snr_db)
    return c, llr(transmit(c, p, rng), p)


# --- TEP ordering ---------------------------------------------------------------


def test_tep_examples():
    t = tep_at(1, 10)
    assert t.weight == 0 and not t.pattern.any()
    assert tep_count(64, 4) == 679121
    assert tep_rank(np.eye(64, dtype=np.uint8)[63]) == 2  # least-reliable MRB bit first
    with pytest.raises(ValueError):
        tep_at(0, 4)
    with pytest.raises(ValueError):
        tep_at(17, 4)


@pytest.mark.parametrize("order", ["reliability", "lexicographic"])
@pytest.mark.parametrize("k", [1, 5, 9, 16])
def test_tep_round_trip(k, order, rng):
    rel = np.sort(rng.exponential(size=k))[::-1]
    labels = rng.permutation(k)
    beta = tep_count(k, min(3, k))
    for r in range(1, beta + 1):
        t = tep_at(r, k, rel, order, labels)
        assert t.weight <= 3
        assert tep_rank(t.pattern, rel, order, labels) == r


def test_weight_classes_ascend():
    ws = [tep_at(r, 8).weight for r in range(1, 257)]
    assert ws == sorted(ws)


def test_lexicographic_class_order():
    # within a class, patterns are lexicographic in the sorted label tuple
    got = [tuple(np.flatnonzero(tep_at(r, 5, within_order="lexicographic").pattern)) for r in range(7, 17)]
    assert got == list(combinations(range(5), 2))


def test_reliability_class_order():
    rel = np.array([5.0, 4.0, 3.0, 2.0, 1.0])
    pats = [tep_at(r, 5, rel).pattern for r in range(2, 7)]
    flipped = [int(np.flatnonzero(p)[0]) for p in pats]
    assert flipped == [4, 3, 2, 1, 0]
    # with weights 2: the pair of the two least reliable positions comes first
    assert np.flatnonzero(tep_at(7, 5, rel).pattern).tolist() == [3, 4]


def test_kernel_rank_matches_python(rng):
    k = 14
    C = K.binom_table(k)
    for lex in (False, True):
        mag = np.sort(rng.exponential(size=k))[::-1]
        perm = rng.permutation(k)
        emap = K.element_map(mag, perm, k, lex)
        for _ in range(50):
            w = int(rng.integers(0, 4))
            pos = np.sort(rng.choice(k, w, replace=False)).astype(np.int64)
            pat = np.zeros(k, dtype=np.uint8)
            pat[pos] = 1
            order = "lexicographic" if lex else "reliability"
            ref = tep_rank(pat, mag, order, perm)
            assert K.pattern_rank(pos, emap, k, lex, C) == ref


# --- genie -------------------------------------------------------------------------


def test_genie_noiseless():
    G = build_ebch(5, 3)
    c = encode(np.ones(G.rows, dtype=np.uint8), G)
    L = np.where(c == 1, -8.0, 8.0) * np.linspace(1, 2, G.cols)
    out = decode_genie(L, G, 2, c)
    assert out.success and out.guesses == 1 and out.termination == "identified"


def test_genie_constructed_second_guess():
    k, n = 6, 12
    P = np.random.default_rng(1).integers(0, 2, size=(k, n - k), dtype=np.uint8)
    G = Gf2Matrix(np.hstack([np.eye(k, dtype=np.uint8), P]))
    L = np.linspace(12.0, 1.0, n)  # all-zero word, reliability decreasing with index
    L[k - 1] = -L[k - 1]  # flip the least reliable MRB bit
    for shortcut in (True, False):
        out = decode_genie(L, G, 2, np.zeros(n, dtype=np.uint8), shortcut=shortcut)
        assert out.success and out.guesses == 2


def _mrb_rank(L, G, truth, within_order):
    # independent route: explicit GE with swaps, then the Python rank
    perm = np.argsort(-np.abs(L), kind="stable").astype(np.int64)
    _, _, ok = K.reduce_ordered(np.ascontiguousarray(G.bits), perm)
    assert ok
    k = G.rows
    hd = (L < 0).astype(np.uint8)
    pat = (hd[perm[:k]] != truth[perm[:k]]).astype(np.uint8)
    return tep_rank(pat, np.abs(L)[perm[:k]], within_order, perm[:k]), int(pat.sum())


@pytest.mark.parametrize("order", ["reliability", "lexicographic"])
def test_genie_guesses_equal_mrb_rank(order, rng):
    c, L = _noisy(G_SMALL, 1.0, rng, count=60)
    m = 3
    for i in range(60):
        fast = decode_genie(L[i], G_SMALL, m, c[i], within_order=order)
        full = decode_genie(L[i], G_SMALL, m, c[i], within_order=order, shortcut=False)
        rk, w = _mrb_rank(L[i], G_SMALL, c[i], order)
        if w <= m:
            assert fast.guesses == full.guesses == rk
            assert fast.success and full.success
        else:
            assert fast.guesses == full.guesses == tep_count(G_SMALL.rows, m)
            assert fast.termination == "exhausted"


def test_exhaustive_returns_min_distance(rng):
    c, L = _noisy(G_SMALL, 0.0, rng, count=20)
    k = G_SMALL.rows
    words = encode(np.array([[(x >> i) & 1 for i in range(k)] for x in range(1 << k)], dtype=np.uint8), G_SMALL)
    for i in range(20):
        out = decode_identify(L[i], G_SMALL, k, 2.0, crc=None)
        assert out.termination == "exhausted" and out.guesses == 1 << k
        d = np.sum(np.abs(L[i]) * (words != (L[i] < 0)), axis=1)
        ml = words[np.argmin(d)]
        assert np.array_equal(out.codeword, ml)


def test_pruned_search_matches_plain_enumeration(rng):
    # reliability order prunes; lexicographic order never does, and both find the same minimum
    c, L = _noisy(G_SMALL, 1.0, rng, count=40)
    for i in range(40):
        a = decode_identify(L[i], G_SMALL, 3, 2.0, crc=None)
        b = decode_identify(L[i], G_SMALL, 3, 2.0, crc=None, within_order="lexicographic")
        assert a.guesses == b.guesses == tep_count(12, 3)
        assert a.candidate_metric == pytest.approx(b.candidate_metric)


# --- identification ---------------------------------------------------------------


def test_identification_examples():
    r = order_reception(np.array([3.0, -2.0, 1.0, 0.5]))
    hd = (r.llr_ordered < 0).astype(np.uint8)
    st_ = IdentificationState()
    assert identify(candidate_metric(hd, r), st_, 1.0)
    st2 = IdentificationState()
    identify(-1.0, st2, 0.75)
    assert not identify(-1.0, st2, 0.75)
    assert st2.share(-1.0) == pytest.approx(0.5)


@given(st.lists(st.floats(-30, 0), min_size=1, max_size=30))
def test_normalizer_monotone(metrics):
    s = IdentificationState()
    prev = -np.inf
    for x in metrics:
        s.add(x)
        assert s.log_norm >= prev
        prev = s.log_norm


def test_identify_noiseless_and_unreachable(rng):
    G = build_ebch(5, 3)  # (32, 21)
    u = crc_attach(rng.integers(0, 2, G.rows - 6, dtype=np.uint8))
    c = encode(u, G)
    L = np.where(c == 1, -9.0, 9.0)
    for lam in (0.1, 0.5, 1.0):
        out = decode_identify(L, G, 2, lam)
        assert out.guesses == 1 and out.termination == "identified"
        assert crc_check(u)
    out = decode_identify(L, G, 2, 1.0 + 1e-9)
    assert out.termination == "exhausted" and out.guesses == tep_count(G.rows, 2)


def test_identify_small_lambda_tracks_genie(rng):
    G = build_ebch(5, 3)
    c, L = _noisy(G, 2.0, rng, count=80, crc=CRC6)
    for i in range(80):
        g = decode_genie(L[i], G, 2, c[i])
        d = decode_identify(L[i], G, 2, 1e-12)
        if np.array_equal(d.codeword, c[i]):
            assert d.guesses == g.guesses
        else:
            assert d.guesses <= g.guesses


def test_outputs_are_codewords(rng):
    G = build_ebch(5, 2)
    c, L = _noisy(G, -1.0, rng, count=30, crc=CRC6)
    s = ChannelParams.from_snr_db(-1.0).sigma
    for i in range(30):
        for out in (
            decode_genie(L[i], G, 2, c[i]),
            decode_identify(L[i], G, 2, 0.5),
            decode_ccc(L[i], G, 2, s),
            decode_ccc(L[i], G, 2, s, CccConfig(lam=0.5)),
        ):
            assert is_codeword(out.codeword, G)


def test_rank_deficient_generator():
    with pytest.raises(NotAGeneratorError):
        decode_identify(np.ones(4), np.array([[1, 1, 0, 0], [1, 1, 0, 0]], dtype=np.uint8), 1, 0.5, crc=None)


# --- cutoff ------------------------------------------------------------------------


def test_ccc_cutoff_examples():
    assert ccc_cutoff(900, 1.0) == 1
    assert ccc_cutoff(900, 0.01) == 201
    assert ccc_cutoff(900, 0.9) == 7
    M = np.array([900.0, 900.0, 900.0])
    e = np.array([1.0, 0.01, 0.9])
    assert ccc_cutoffs(M, e).tolist() == [1, 201, 7]
    with pytest.raises(ValueError):
        ccc_cutoff(900, 0.0)


@given(st.floats(0, 1e8), st.floats(1e-6, 1.0))
def test_ccc_vector_matches_scalar(M, e):
    assert int(ccc_cutoffs(np.array([M]), np.array([e]))[0]) == ccc_cutoff(M, e)


def test_second_moment_series():
    k, pe = 32, 0.02
    full = order_m_second_moment(k, k, pe)[0]
    ref = math.exp(-k * pe) * sum((k**j / math.factorial(j)) ** 3 * pe**j for j in range(k + 1))
    assert full == pytest.approx(ref, rel=1e-10)
    assert order_m_second_moment(k, 0, pe)[0] == pytest.approx(math.exp(-k * pe) * (1 + k * pe))


def test_ccc_high_snr_first_guess(rng):
    # the cutoff itself grows as the target error shrinks; identification ends the search
    G = build_ebch(6, 4)  # (64, 39)
    c, L = _noisy(G, 12.0, rng, count=5, crc=CRC6)
    s = ChannelParams.from_snr_db(12.0).sigma
    for i in range(5):
        out = decode_ccc(L[i], G, 3, s, CccConfig(lam=0.5))
        assert out.guesses == 1 and out.termination == "identified"
        assert np.array_equal(out.codeword, c[i])


# --- estimator and simulator -----------------------------------------------------------------


def test_estimator_round_trip(rng):
    G = build_ebch(5, 3)
    c, L = _noisy(G, 3.0, rng, count=50, crc=CRC6)
    dec = OsdDecoder(m=2, mode="identify", lam=0.5).fit(G)
    pred = dec.predict(L)
    assert pred.shape == c.shape
    assert np.mean(np.all(pred == c, axis=1)) > 0.8
    assert dec.get_params()["m"] == 2
    genie = OsdDecoder(m=2, mode="genie").fit(G)
    with pytest.raises(ValueError):
        genie.predict(L)
    with pytest.raises(ValueError):
        OsdDecoder(mode="ccc").fit(G)


def test_simulator_reproducible():
    G = build_ebch(5, 3)
    a = simulate_decoder(G, 2.0, 2, "identify", blocks=300, seed=9)
    b = simulate_decoder(G, 2.0, 2, "identify", blocks=300, seed=9, threads=2)
    assert np.array_equal(a.guesses, b.guesses) and a.bler == b.bler
    g = simulate_decoder(G, 2.0, 2, "genie", blocks=300, seed=9)
    assert g.max_guesses <= tep_count(G.rows, 2)
    cc = simulate_decoder(G, 2.0, 2, "ccc", blocks=300, seed=9, lam=None)
    assert np.all(cc.guesses <= cc.limits)


@pytest.mark.xfail(strict=True, reason="substituted identification metric: CRC false-accept floor near 1e-2 (see ledger)")
def test_identify_operating_point():
    from osdkit.bounds import osd_guesswork_bound

    G = build_ebch(7, 10)
    st = simulate_decoder(G, 3.0, 4, "identify", blocks=20_000, seed=0, lam=0.5)
    pred = osd_guesswork_bound(128, 64, 4, 1.0, ChannelParams.from_snr_db(3.0).sigma, "simplified").value
    assert pred / 2 <= st.avg_guesses <= 2 * pred
    assert st.bler <= 2e-4
