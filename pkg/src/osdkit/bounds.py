"""Guesswork-moment bounds and approximations, and order/rate selection helpers.

All products of counts and probabilities are carried in natural-log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaln, logsumexp
from scipy.stats import binom, norm

from .orderstats import (
    QuadratureError,
    conditional_moments,
    error_count_pmf,
    llr_mag_sf,
    magnitude_integrals,
    mrb_error_prob,
    segment_boundary_nodes,
)

METHODS = ("arikan-lower", "arikan-upper", "holder", "hamming-subset", "ordered-exact", "simplified", "bessel")


@dataclass(frozen=True)
class GuessworkQuery:
    n: int
    k: int | None = None
    a: int | None = None
    b: int | None = None
    omega: float = 1.0
    m: int | None = None
    sigma: float = 1.0
    method: str = "ordered-exact"
    q: float | str = "optimize"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.omega < 1:
            raise ValueError("omega must be >= 1")
        if self.a is not None and not 1 <= self.a <= (self.b or 0) <= self.n:
            raise ValueError("need 1 <= a <= b <= n")
        if self.k is not None and self.m is not None and not 0 <= self.m <= self.k:
            raise ValueError("need 0 <= m <= k")
        if self.q != "optimize" and not float(self.q) > 1:
            raise ValueError("q must exceed 1")


@dataclass(frozen=True)
class BoundResult:
    value: float
    q_used: float | None = None
    diagnostics: dict = field(default_factory=dict)


# --- combinatorics ---------------------------------------------------------------


def log_binom(n, j):
    return gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)


def log_beta_counts(L: int) -> np.ndarray:
    """log beta_j = log sum_{i<=j} C(L, i) for j = 0..L."""
    return np.logaddexp.accumulate(log_binom(L, np.arange(L + 1)))


def tep_budget(k: int, m: int) -> int:
    return sum(math.comb(k, i) for i in range(m + 1))


def log_gamma_weights(L: int, omega: float, p: float) -> np.ndarray:
    """log gamma_j = log[(beta_j^(w p + 1) - beta_{j-1}^(w p + 1)) / (w p + 1)], beta_{-1} = 0."""
    lb = log_beta_counts(L)
    e = omega * p + 1.0
    out = e * lb
    out[1:] += np.log(-np.expm1(-e * (lb[1:] - lb[:-1])))
    return out - math.log(e)


# --- Arikan -----------------------------------------------------------------------


def _check_pmf(P) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or np.any(P < 0) or abs(P.sum() - 1) > 1e-9:
        raise ValueError("joint pmf must be a nonnegative 2-D array summing to 1 (rows x, cols y)")
    return P


def renyi_cond_entropy(joint, alpha: float) -> float:
    """alpha/(1-alpha) ln sum_y [sum_x P(x,y)^alpha]^(1/alpha); rows index x."""
    P = _check_pmf(joint)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    with np.errstate(divide="ignore"):
        inner = logsumexp(alpha * np.log(P), axis=0) / alpha
    return alpha / (1 - alpha) * float(logsumexp(inner))


def arikan_bounds(n: int, omega: float, joint) -> tuple[float, float]:
    """(lower, upper) on E[G^omega] for n i.i.d. copies of the pair described by ``joint``."""
    P = _check_pmf(joint)
    M = P.shape[0]
    h = renyi_cond_entropy(P, 1.0 / (1.0 + omega))
    upper = math.exp(omega * n * h)
    lower = (1.0 + n * math.log(M)) ** (-omega) * upper
    return lower, upper


def bsc_joint(p: float) -> np.ndarray:
    return 0.5 * np.array([[1 - p, p], [p, 1 - p]])


def ordered_arikan_bounds(a: int, b: int, n: int, omega: float, sigma: float) -> tuple[float, float]:
    """Arikan bounds applied per realisation of the segment boundaries, then averaged."""
    L = b - a + 1
    alpha = 1.0 / (1.0 + omega)
    hi, lo, w = segment_boundary_nodes(a, b, n, sigma)
    mi = magnitude_integrals(sigma)
    mass = llr_mag_sf(lo, sigma) - np.where(np.isinf(hi), 0.0, llr_mag_sf(np.where(np.isinf(hi), 0.0, hi), sigma))
    # given the boundaries the L bits are i.i.d., so the per-bit Renyi term is raised to L
    with np.errstate(divide="ignore"):
        log_up = L * (np.log(mi.interval(lo, hi, alpha, 2)) - np.log(mass))
    keep = w > 0
    upper = float(np.exp(logsumexp(log_up[keep], b=w[keep])))
    lower = (1.0 + L * math.log(2.0)) ** (-omega) * upper
    return lower, upper


# --- Hamming subset / Hoelder family ------------------------------------------------


def _hamming_terms(L: int, omega: float, q: float, logE1, logE2, m: int | None = None):
    """Per-j log terms gamma_j^(1/p) C(L,j)^(1/q) E1^((L-j)/q) E2^(j/q) for j <= m."""
    p = q / (q - 1.0)
    m = L if m is None else m
    j = np.arange(m + 1)
    lg = log_gamma_weights(L, omega, p)[: m + 1]
    lc = log_binom(L, j)
    with np.errstate(invalid="ignore"):
        # a zero moment contributes only through patterns that use it
        e1 = np.where((L - j)[:, None] == 0, 0.0, (L - j)[:, None] * logE1[None, :])
        e2 = np.where(j[:, None] == 0, 0.0, j[:, None] * logE2[None, :])
    return (lg / p + lc / q)[:, None] + (e1 + e2) / q


def _awgn_moments(q: float, sigma: float):
    mi = magnitude_integrals(sigma)
    return math.log(mi.interval(0.0, np.inf, q, 0)), math.log(mi.interval(0.0, np.inf, q, 1))


def _discrete_moments(q: float, joint):
    P = _check_pmf(joint)
    py = P.sum(axis=0)
    keep = py > 0
    post = P[:, keep] / py[keep]
    best = post.max(axis=0)
    if P.shape[0] != 2:
        raise ValueError("binary input required")
    with np.errstate(divide="ignore"):
        return float(np.log(np.sum(py[keep] * best**q))), float(np.log(np.sum(py[keep] * (1 - best) ** q)))


def hamming_subset_bound_iid(n: int, omega: float, q: float, channel) -> BoundResult:
    """Hamming-subset bound for n i.i.d. binary-input uses.

    ``channel`` is a noise standard deviation (BI-AWGN) or a 2 x |Y| joint pmf.
    """
    if not q > 1:
        raise ValueError("q must exceed 1")
    if np.ndim(channel) == 0:
        le1, le2 = _awgn_moments(q, float(channel))
    else:
        le1, le2 = _discrete_moments(q, channel)
    t = _hamming_terms(n, omega, q, np.array([le1]), np.array([le2]))[:, 0]
    lv = float(logsumexp(t))
    return BoundResult(math.exp(lv), q, {"log_value": lv, "terms": np.exp(t)})


def _segment_logs(a, b, n, sigma, q):
    hi, lo, w = segment_boundary_nodes(a, b, n, sigma)
    le1, le2 = conditional_moments(lo, hi, q, sigma)
    keep = (w > 0) & np.isfinite(le1) & np.isfinite(le2)
    return le1[keep], le2[keep], w[keep], lo[keep], hi[keep]


def ordered_segment_bound(a: int, b: int, n: int, omega: float, q: float, sigma: float, m: int | None = None) -> BoundResult:
    """Hoelder/Hamming-subset bound for the reliability-ordered segment [a, b], averaged over its boundaries.

    With ``m`` < b - a + 1 the guesser stops after all patterns of weight <= m, and the
    remaining mass is charged beta_m^omega.
    """
    if not q > 1:
        raise ValueError("q must exceed 1")
    L = b - a + 1
    m = L if m is None else m
    if not 0 <= m <= L:
        raise ValueError("need 0 <= m <= segment length")
    le1, le2, w, lo, hi = _segment_logs(a, b, n, sigma, q)
    terms = _hamming_terms(L, omega, q, le1, le2, m)
    per_node = logsumexp(terms, axis=0)
    if m < L:
        c1, c2 = conditional_moments(lo, hi, 1.0, sigma)
        perr = np.exp(c2 - np.logaddexp(c1, c2))
        with np.errstate(divide="ignore"):
            rest = omega * log_beta_counts(L)[m] + binom.logsf(m, L, perr)
        per_node = np.logaddexp(per_node, rest)
    lv = float(logsumexp(per_node, b=w))
    contrib = np.exp(logsumexp(terms, b=w[None, :], axis=1))
    return BoundResult(math.exp(lv), q, {"log_value": lv, "terms": contrib})


def optimize_q(fn: Callable[[float], float], lo: float = 1.0 + 1e-3, hi: float = 3.0, grid: int = 40, xtol: float = 1e-3):
    """Minimise fn over q in [lo, hi]: coarse grid (dense near 1), then golden-section."""
    qs = 1.0 + np.geomspace(lo - 1.0, hi - 1.0, grid)
    vals = np.array([fn(float(q)) for q in qs])
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))
    if i == 0 or i == grid - 1:
        return float(qs[i]), float(vals[i])
    res = minimize_scalar(fn, bracket=(qs[i - 1], qs[i], qs[i + 1]), method="golden", tol=xtol / qs[i] / 4)
    if res.fun <= vals[i]:
        return float(res.x), float(res.fun)
    return float(qs[i]), float(vals[i])


def _with_q(fn_q: Callable[[float], BoundResult], q) -> BoundResult:
    if q == "optimize":
        qs, _ = optimize_q(lambda x: fn_q(x).value)
        return fn_q(qs)
    return fn_q(float(q))


def _arikan_diag(lo: float, up: float, L: int, omega: float) -> dict:
    # "lower_moment_prefactor" applies (1 + L ln 2)^-1 instead of its omega-th power
    return {"lower": lo, "upper": up, "lower_moment_prefactor": up / (1.0 + L * math.log(2.0))}


# --- OSD-level bounds -----------------------------------------------------------------


def _bessel_series(k: int, pe: float, m: int, omega: float) -> float:
    """e^{-k pe} sum_j (k^j/j!)^(omega+1) pe^j, truncated at m with the order-m tail term."""
    if pe <= 0:
        return 1.0
    lk, lp = math.log(k), math.log(pe)
    if m >= k and omega == 1:
        # full I0 series, summed well past its peak
        x = k * math.sqrt(pe)
        top = int(x + 20 * math.sqrt(x) + 60)
    else:
        top = min(m, k)
    j = np.arange(top + 1)
    terms = (omega + 1) * (j * lk - gammaln(j + 1)) + j * lp
    if m < k:
        tail = omega * (m * lk - gammaln(m + 1)) + (m + 1) * (lk + lp) - gammaln(m + 2)
        terms = np.append(terms, tail)
    return float(np.exp(-k * pe + logsumexp(terms)))


def bessel_closed_form(k: int, pe: float) -> float:
    """Large-argument form of e^{-k pe} I0(2 k sqrt(pe))."""
    s = math.sqrt(pe)
    return math.exp(k * (2 * s - pe)) / math.sqrt(4 * math.pi * k * s)


def simplified_bound(pmf, m: int, omega: float) -> float:
    k = pmf.size - 1
    lb = log_beta_counts(k)
    head = np.sum(np.exp(omega * lb[: m + 1]) * pmf[: m + 1])
    return float(head + math.exp(omega * lb[m]) * pmf[m + 1 :].sum())


def osd_guesswork_bound(
    n: int,
    k: int,
    m: int,
    omega: float,
    sigma: float,
    method: str = "ordered-exact",
    q: float | str = "optimize",
    pe_fidelity: str = "exact",
) -> BoundResult:
    """Bound or approximation of E[X_G^omega] for an order-m OSD of an (n, k) code."""
    if not 0 <= m <= k < n:
        raise ValueError("need 0 <= m <= k < n")
    if method == "ordered-exact":
        return _with_q(lambda x: ordered_segment_bound(1, k, n, omega, x, sigma, m), q)
    if method == "simplified":
        pmf = error_count_pmf(n, k, sigma).probs
        return BoundResult(simplified_bound(pmf, m, omega), None, {"pmf": pmf})
    if method == "bessel":
        pe = mrb_error_prob(n, k, sigma, pe_fidelity)
        if m < k and not m > k * pe:
            raise ValueError("order-m Bessel approximation needs m > k p_e")
        diag = {"p_e": pe, "pe_fidelity": pe_fidelity}
        if m == k and omega == 1:
            diag["closed_form"] = bessel_closed_form(k, pe)
        return BoundResult(_bessel_series(k, pe, m, omega), None, diag)
    if method in ("arikan-lower", "arikan-upper"):
        lo, up = ordered_arikan_bounds(1, k, n, omega, sigma)
        return BoundResult(lo if method == "arikan-lower" else up, None, _arikan_diag(lo, up, k, omega))
    raise ValueError(f"method {method!r} does not apply to OSD queries")


def evaluate(query: GuessworkQuery) -> BoundResult:
    """Dispatch a query to the matching bound."""
    qq = query
    if qq.method == "hamming-subset":
        return _with_q(lambda x: hamming_subset_bound_iid(qq.n, qq.omega, x, qq.sigma), qq.q)
    if qq.method == "holder":
        return _with_q(lambda x: ordered_segment_bound(qq.a, qq.b, qq.n, qq.omega, x, qq.sigma, qq.m), qq.q)
    if qq.a is not None and qq.method in ("arikan-lower", "arikan-upper"):
        lo, up = ordered_arikan_bounds(qq.a, qq.b, qq.n, qq.omega, qq.sigma)
        return BoundResult(lo if qq.method == "arikan-lower" else up, None, _arikan_diag(lo, up, qq.b - qq.a + 1, qq.omega))
    k = qq.k
    m = k if qq.m is None else qq.m
    return osd_guesswork_bound(qq.n, k, m, qq.omega, qq.sigma, qq.method, qq.q)


# --- order and rate selection -----------------------------------------------------------


def saturation_threshold(k: int, pe: float) -> int:
    if not 0 <= pe <= 1:
        raise ValueError("p_e must lie in [0, 1]")
    return int(math.ceil(k * math.sqrt(pe) - 1e-9))


def osd_bler(n: int, k: int, m: int, sigma: float, eps_ml: float = 0.0, pmf=None) -> float:
    if not 0 <= eps_ml <= 1:
        raise ValueError("eps_ml must lie in [0, 1]")
    probs = error_count_pmf(n, k, sigma).probs if pmf is None else np.asarray(pmf)
    return float(eps_ml + probs[m + 1 :].sum())


def mld_order(n: int, k: int, sigma: float, eps_b: float) -> int:
    if not 0 < eps_b <= 1:
        raise ValueError("eps_b must lie in (0, 1]")
    probs = error_count_pmf(n, k, sigma).probs
    tails = np.concatenate([np.cumsum(probs[::-1])[::-1][1:], [0.0]])
    return int(np.flatnonzero(tails <= eps_b)[0])


def dmin_order(d_min: int) -> int:
    return int(math.ceil(d_min / 4 - 1))


def biawgn_capacity_dispersion(sigma: float, nodes: int = 200) -> tuple[float, float]:
    """Capacity C (bits) and dispersion V (bits^2) of the BI-AWGN channel."""
    mu = 2.0 / sigma**2
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / math.sqrt(2 * math.pi)
    L = mu + math.sqrt(2 * mu) * x
    info = 1.0 - np.logaddexp(0.0, -L) / math.log(2)
    C = float(np.sum(w * info))
    return C, float(np.sum(w * (info - C) ** 2))


def _na_arg(n: int, k: int, sigma: float) -> float:
    C, V = biawgn_capacity_dispersion(sigma)
    return (n * C - k + 0.5 * math.log2(n)) / math.sqrt(n * V)


def na_bler(n: int, k: int, sigma: float) -> float:
    return float(norm.sf(_na_arg(n, k, sigma)))


def na_snr(n: int, k: int, eps: float) -> float:
    from .channel import snr_db_to_sigma

    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    f = lambda s: float(norm.logsf(_na_arg(n, k, snr_db_to_sigma(s)))) - math.log(eps)
    lo, hi = -10.0, 20.0
    if f(lo) * f(hi) > 0:
        raise QuadratureError("no SNR in [-10, 20] dB reaches the target", abs(min(f(lo), f(hi))))
    return float(brentq(f, lo, hi, xtol=1e-10))
