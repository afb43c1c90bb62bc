"""Ordered statistics of BI-AWGN LLR magnitudes.

Everything here is driven by the distribution of ``|L|`` with ``L ~ N(mu, 2 mu)``,
``mu = 2 / sigma^2``.  Integrals over an ordered magnitude are taken in the
uniform domain ``u = F(l)`` where the i-th largest of n has a Beta law, which
keeps the quadrature smooth for any (n, i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import gammaln, log_expit, logsumexp, xlogy
from scipy.stats import beta as beta_dist
from scipy.stats import binom, norm


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


# --- reception ordering --------------------------------------------------------


@dataclass(frozen=True)
class OrderedReception:
    llr_ordered: np.ndarray
    llr_mag_ordered: np.ndarray
    perm: np.ndarray
    sigma: float | None = None

    @property
    def n(self) -> int:
        return self.perm.size


def order_reception(llr, sigma: float | None = None) -> OrderedReception:
    """Sort by |llr| descending; equal magnitudes keep their original index order."""
    llr = np.asarray(llr, dtype=np.float64)
    if not np.all(np.isfinite(llr)):
        raise ValueError("LLRs must be finite")
    perm = np.argsort(-np.abs(llr), kind="stable")
    lo = llr[perm]
    return OrderedReception(lo, np.abs(lo), perm, sigma)


# --- |L| distribution ------------------------------------------------------------


def _musd(sigma: float) -> tuple[float, float]:
    mu = 2.0 / sigma**2
    return mu, math.sqrt(2.0 * mu)


def llr_mag_cdf(l, sigma: float):
    l = np.asarray(l, dtype=np.float64)
    if np.any(l < 0):
        raise ValueError("LLR magnitude must be nonnegative")
    mu, sd = _musd(sigma)
    return norm.cdf((l - mu) / sd) - norm.cdf((-l - mu) / sd)


def llr_mag_sf(l, sigma: float):
    """1 - F, accurate in the far tail."""
    l = np.asarray(l, dtype=np.float64)
    mu, sd = _musd(sigma)
    return norm.sf((l - mu) / sd) + norm.sf((l + mu) / sd)


def llr_mag_pdf(l, sigma: float):
    l = np.asarray(l, dtype=np.float64)
    mu, sd = _musd(sigma)
    d = (norm.pdf((l - mu) / sd) + norm.pdf((l + mu) / sd)) / sd
    return np.where(l >= 0, d, 0.0)


def llr_mag_icdf(p, sigma: float, tol: float = 1e-10, max_iter: int = 200):
    """Inverse of F by vectorised bisection on [0, mu + 12 sd]."""
    p = np.asarray(p, dtype=np.float64)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probability outside [0, 1]")
    mu, sd = _musd(sigma)
    lo = np.zeros_like(p)
    hi = np.full_like(p, mu + 12.0 * sd)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = llr_mag_cdf(mid, sigma) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, hi)):
            break
    x = 0.5 * (lo + hi)
    ok = (np.abs(llr_mag_cdf(x, sigma) - p) <= tol) | (p >= 1.0 - 1e-15)
    if not np.all(ok):
        raise QuadratureError("inverse cdf did not converge", float(np.max(np.abs(llr_mag_cdf(x, sigma) - p))))
    return x


def _check_index(i: int, n: int):
    if not 1 <= i <= n:
        raise IndexError(f"order index {i} outside [1, {n}]")


def ordered_marginal_pdf(i: int, n: int, l, sigma: float):
    """Density of the i-th largest of n magnitudes."""
    _check_index(i, n)
    l = np.asarray(l, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logc = gammaln(n + 1) - gammaln(i) - gammaln(n - i + 1)
        lv = (
            logc
            + xlogy(i - 1, llr_mag_sf(l, sigma))
            + xlogy(n - i, llr_mag_cdf(np.maximum(l, 0), sigma))
            + np.log(llr_mag_pdf(l, sigma))
        )
    return np.where(l >= 0, np.exp(lv), 0.0)


def ordered_joint_pdf(i: int, j: int, li, lj, n: int, sigma: float):
    """Joint density of the i-th and j-th largest (i < j, so li >= lj)."""
    _check_index(i, n)
    _check_index(j, n)
    if not i < j:
        raise IndexError("need i < j")
    li = np.asarray(li, dtype=np.float64)
    lj = np.asarray(lj, dtype=np.float64)
    valid = (li >= lj) & (lj >= 0)
    li_ = np.where(valid, li, 1.0)
    lj_ = np.where(valid, lj, 0.5)
    Fi = llr_mag_cdf(li_, sigma)
    Fj = llr_mag_cdf(lj_, sigma)
    with np.errstate(divide="ignore"):
        logc = gammaln(n + 1) - gammaln(i) - gammaln(j - i) - gammaln(n - j + 1)
        lv = (
            logc
            + xlogy(i - 1, llr_mag_sf(li_, sigma))
            + xlogy(j - i - 1, np.maximum(Fi - Fj, 0.0))
            + xlogy(n - j, Fj)
            + np.log(llr_mag_pdf(li_, sigma))
            + np.log(llr_mag_pdf(lj_, sigma))
        )
    out = np.exp(lv)
    out = np.where(np.isfinite(out), out, 0.0)
    return np.where(valid, out, 0.0)


# --- quadrature machinery ----------------------------------------------------------


def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def beta_nodes(a: float, b: float, panels: int = 12, per: int = 24, eps: float = 1e-15):
    """Composite Gauss-Legendre nodes/weights for E[f(U)], U ~ Beta(a, b).

    Panels are equal-probability slices so the nodes follow the mass.
    """
    dist = beta_dist(a, b)
    edges = dist.ppf(np.linspace(eps, 1 - eps, panels + 1))
    x, w = _gl(per)
    lo, hi = edges[:-1, None], edges[1:, None]
    u = (lo + x * (hi - lo)).ravel()
    wt = (w * (hi - lo)).ravel() * dist.pdf(u)
    return u, wt


class MagnitudeIntegrals:
    """Integrals of g(t) pdf_|L|(t) over magnitude intervals.

    ``which`` selects g: 0 -> P(correct)^q, 1 -> P(error)^q, 2 -> (P(correct)^q + P(error)^q)^(1/q),
    with P(correct | |L| = t) = 1 / (1 + e^{-t}) and P(error | t) = 1 / (1 + e^{t}).  Tail
    integrals come from a reverse cumulative Simpson table with an exact local
    Gauss-Legendre correction between the query point and the next grid node.
    """

    def __init__(self, sigma: float, points: int = 8193):
        self.sigma = float(sigma)
        mu, sd = _musd(sigma)
        self.top = mu + 12.0 * sd
        self.t = np.linspace(0.0, self.top, points)
        self.h = self.t[1] - self.t[0]
        self._gx, self._gw = _gl(16)
        self._tables: dict[tuple[float, int], np.ndarray] = {}

    def integrand(self, t, q: float, which: int):
        t = np.asarray(t, dtype=np.float64)
        if which == 2:
            lg = np.logaddexp(q * log_expit(t), q * log_expit(-t)) / q
        else:
            lg = q * (log_expit(t) if which == 0 else log_expit(-t))
        return np.exp(lg) * llr_mag_pdf(t, self.sigma)

    def _table(self, q: float, which: int) -> np.ndarray:
        key = (float(q), which)
        if key not in self._tables:
            if len(self._tables) > 1024:
                self._tables.clear()
            f = self.integrand(self.t, q, which)
            self._tables[key] = cumulative_simpson(f[::-1], dx=self.h, initial=0.0)[::-1]
        return self._tables[key]

    def tail(self, x, q: float, which: int):
        """Integral over [x, top]; x may be +inf."""
        x = np.asarray(x, dtype=np.float64)
        xs = np.clip(x, 0.0, self.top)
        R = self._table(q, which)
        idx = np.minimum(np.ceil(xs / self.h).astype(np.int64), self.t.size - 1)
        tn = self.t[idx]
        pts = xs[..., None] + (tn - xs)[..., None] * self._gx
        local = (self.integrand(pts, q, which) * self._gw).sum(axis=-1) * (tn - xs)
        return np.where(np.isinf(x), 0.0, R[idx] + local)

    def interval(self, lo, hi, q: float, which: int):
        """Integral over [lo, hi]; hi may be +inf."""
        lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64))
        shape = lo.shape
        lo, hi = lo.ravel(), hi.ravel()
        out = self.tail(lo, q, which) - self.tail(hi, q, which)
        narrow = np.isfinite(hi) & (hi - lo < 4 * self.h)
        if np.any(narrow):
            a, b = lo[narrow], hi[narrow]
            pts = a[:, None] + (b - a)[:, None] * self._gx
            out[narrow] = (self.integrand(pts, q, which) * self._gw).sum(axis=-1) * (b - a)
        return np.maximum(out, 0.0).reshape(shape)


@lru_cache(maxsize=64)
def _integrals(sigma: float) -> MagnitudeIntegrals:
    return MagnitudeIntegrals(sigma)


def magnitude_integrals(sigma: float) -> MagnitudeIntegrals:
    return _integrals(float(sigma))


def conditional_moments(lo, hi, q: float, sigma: float):
    """E[P(correct)^q], E[P(error)^q] given lo <= |L| <= hi (hi may be inf).

    Returned in log domain as (log E1, log E2).
    """
    mi = magnitude_integrals(sigma)
    mass = llr_mag_sf(lo, sigma) - np.where(np.isinf(hi), 0.0, llr_mag_sf(np.where(np.isinf(hi), 0.0, hi), sigma))
    with np.errstate(divide="ignore"):
        lm = np.log(mass)
        return np.log(mi.interval(lo, hi, q, 0)) - lm, np.log(mi.interval(lo, hi, q, 1)) - lm


def order_stat_nodes(i: int, n: int, sigma: float, panels: int = 12, per: int = 24):
    """Quadrature for E[f(|L~_i|)]: returns (l, weights) with weights summing to 1."""
    _check_index(i, n)
    u, w = beta_nodes(n - i + 1, i, panels, per)
    return llr_mag_icdf(u, sigma), w


def segment_boundary_nodes(a: int, b: int, n: int, sigma: float, panels: int = 8, per: int = 16):
    """Quadrature over the joint law of (|L~_{a-1}|, |L~_{b+1}|) for the segment [a, b].

    Returns (hi, lo, weights) flattened; hi = inf when a = 1 and lo = 0 when b = n.
    Uses that u_{b+1} / u_{a-1} ~ Beta(n - b, b - a + 2) independently of u_{a-1}.
    """
    if not 1 <= a <= b <= n:
        raise ValueError("need 1 <= a <= b <= n")
    i, j = a - 1, b + 1
    if i == 0:
        ui, wi = np.array([1.0]), np.array([1.0])
    else:
        ui, wi = beta_nodes(n - i + 1, i, panels, per)
    if j == n + 1:
        r, wr = np.array([0.0]), np.array([1.0])
    elif i == 0:
        r, wr = beta_nodes(n - j + 1, j, panels, per)
    else:
        r, wr = beta_nodes(n - j + 1, j - i, panels, per)
    UI, R = np.meshgrid(ui, r, indexing="ij")
    W = np.outer(wi, wr)
    UJ = UI * R
    hi = np.where(UI >= 1.0, np.inf, llr_mag_icdf(np.minimum(UI, 1.0), sigma))
    lo = np.where(UJ <= 0.0, 0.0, llr_mag_icdf(UJ, sigma))
    return hi.ravel(), lo.ravel(), W.ravel()


# --- MRB error probability -------------------------------------------------------


def _mrb_bit_error_given_boundary(l, sigma: float):
    """P(hard-decision error | |L| > l) = Q(l s/2 + 1/s) / tau(l), tau = Q(l s/2 - 1/s) + Q(l s/2 + 1/s)."""
    l = np.asarray(l, dtype=np.float64)
    b = norm.logsf(l * sigma / 2 + 1 / sigma)
    a = norm.logsf(l * sigma / 2 - 1 / sigma)
    return np.exp(b - np.logaddexp(a, b))


def normal_approx_params(n: int, r: float, sigma: float) -> tuple[float, float]:
    """Mean and variance of the normal approximation of |L~_{k+1}| with k = r n.

    The variance formula is stated for the received-amplitude magnitude; it is
    mapped to the LLR domain by the factor (2 / sigma^2)^2 (L = 2 y / sigma^2).
    """
    if not 0 < r < 1:
        raise ValueError("rate must lie in (0, 1)")
    p = 1.0 - r - 1.0 / n
    if not 0 < p < 1:
        raise ValueError("1 - r - 1/n outside (0, 1)")
    mu_r = float(llr_mag_icdf(p, sigma))
    N0 = 2.0 * sigma**2
    mu_y = sigma**2 * mu_r / 2.0
    s = math.exp(-((mu_y + 1) ** 2) / N0) + math.exp(-((mu_y - 1) ** 2) / N0)
    var_y = math.pi * N0 / n * p * (r + 1.0 / n) / s**2
    return mu_r, var_y * (2.0 / sigma**2) ** 2


def _pe_exact(n: int, k: int, sigma: float, panels: int, per: int) -> float:
    l, w = order_stat_nodes(k + 1, n, sigma, panels, per)
    return float(np.sum(w * _mrb_bit_error_given_boundary(l, sigma)))


def mrb_error_prob(n: int, k: int, sigma: float, fidelity: str = "exact", tol: float = 1e-9) -> float:
    """Average hard-decision bit error probability over the k most reliable positions."""
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    if fidelity == "exact":
        coarse = _pe_exact(n, k, sigma, 8, 24)
        fine = _pe_exact(n, k, sigma, 16, 32)
        if abs(fine - coarse) > tol + 1e-7 * fine:
            raise QuadratureError("MRB error integral not converged", abs(fine - coarse))
        return fine
    if fidelity == "normal-approx":
        mu_r, var_r = normal_approx_params(n, k / n, sigma)
        x, w = np.polynomial.hermite_e.hermegauss(96)
        l = mu_r + math.sqrt(var_r) * x
        return float(np.sum(w * _mrb_bit_error_given_boundary(l, sigma)) / math.sqrt(2 * math.pi))
    if fidelity == "asymptotic":
        r = k / n
        l = float(llr_mag_icdf(1.0 - r, sigma))
        return float(norm.sf(sigma * l / 2 + 1 / sigma) / r)
    raise ValueError(f"unknown fidelity {fidelity!r}")


@dataclass(frozen=True)
class ErrorCountPmf:
    probs: np.ndarray
    method: str

    @property
    def k(self) -> int:
        return self.probs.size - 1

    def tail(self, m: int) -> float:
        """P(more than m errors)."""
        return float(self.probs[m + 1 :].sum())


def error_count_pmf(n: int, k: int, sigma: float, method: str = "exact-integral", pe_fidelity: str = "exact") -> ErrorCountPmf:
    """Distribution of the number of hard-decision errors among the k most reliable bits."""
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    j = np.arange(k + 1)
    if method == "exact-integral":
        l, w = order_stat_nodes(k + 1, n, sigma, 16, 32)
        p = _mrb_bit_error_given_boundary(l, sigma)
        with np.errstate(divide="ignore"):
            lp = binom.logpmf(j[:, None], k, p[None, :])
        probs = np.exp(logsumexp(lp, b=w[None, :], axis=1))
    elif method == "binomial":
        probs = binom.pmf(j, k, mrb_error_prob(n, k, sigma, pe_fidelity))
    else:
        raise ValueError(f"unknown method {method!r}")
    return ErrorCountPmf(probs, method)


__all__ = [
    "OrderedReception",
    "order_reception",
    "llr_mag_cdf",
    "llr_mag_sf",
    "llr_mag_pdf",
    "llr_mag_icdf",
    "ordered_marginal_pdf",
    "ordered_joint_pdf",
    "normal_approx_params",
    "mrb_error_prob",
    "ErrorCountPmf",
    "error_count_pmf",
    "conditional_moments",
    "order_stat_nodes",
    "segment_boundary_nodes",
    "QuadratureError",
]
