"""BPSK over AWGN, LLRs, SNR conventions and per-trial random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# simulations draw randomness in fixed-size chunks so results do not depend on
# how chunks are scheduled across workers
CHUNK = 4096


@dataclass(frozen=True)
class ChannelParams:
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive and finite")

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "ChannelParams":
        return cls(snr_db_to_sigma(snr_db))

    @property
    def snr_db(self) -> float:
        return sigma_to_snr_db(self.sigma)

    @property
    def llr_mean(self) -> float:
        """Mean of the LLR given the +1 symbol, 2 / sigma^2."""
        return 2.0 / self.sigma**2


def snr_db_to_sigma(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 20.0)


def sigma_to_snr_db(sigma: float) -> float:
    return -20.0 * math.log10(sigma)


def bpsk(codeword) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(codeword, dtype=np.float64)


def transmit(codeword, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    x = bpsk(codeword)
    return x + params.sigma * rng.standard_normal(x.shape)


def llr(y, params: ChannelParams) -> np.ndarray:
    return 2.0 * np.asarray(y, dtype=np.float64) / params.sigma**2


def hard_decision(values) -> np.ndarray:
    return (np.asarray(values) < 0).astype(np.uint8)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream keyed by (master seed, trial or chunk index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def chunks(total: int, size: int = CHUNK):
    """(chunk index, count) pairs covering ``total`` trials."""
    for i, start in enumerate(range(0, total, size)):
        yield i, min(size, total - start)
