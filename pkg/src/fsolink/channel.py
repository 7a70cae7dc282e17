"""Log-normal block fading, AWGN, and perfect/imperfect CSI estimation.

The channel gain is h = exp(z) with z Gaussian, normalized so E[h] = 1.
`sigma` is the standard deviation of log h. Correlation is modeled as block
fading: z is redrawn every `correlation_length` symbols and held constant
inside the block, so correlation_length = 1 is the uncorrelated channel.
"""

import enum
from dataclasses import dataclass

import numpy as np


class CsiMode(str, enum.Enum):
    PERFECT = "perfect"
    IMPERFECT = "imperfect"


@dataclass(frozen=True)
class FadingConfig:
    sigma: float
    correlation_length: int = 1

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise ValueError("fading sigma must be finite and > 0")
        if self.correlation_length < 1:
            raise ValueError("correlation_length must be >= 1")


@dataclass(frozen=True)
class CsiConfig:
    """Receiver-side channel knowledge model.

    Perfect mode returns the true gains. Imperfect mode rebuilds the estimate
    once per *assumed* coherence block of `assumed_correlation_length` symbols:
    the block's first true gain is held stale across the block and multiplied
    by a log-Gaussian error exp(e), e ~ N(0, sigma_e^2), drawn once per block.
    """

    mode: CsiMode = CsiMode.PERFECT
    sigma_e: float = 0.0
    assumed_correlation_length: int = 1

    def __post_init__(self):
        if self.sigma_e < 0 or not np.isfinite(self.sigma_e):
            raise ValueError("sigma_e must be finite and >= 0")
        if self.assumed_correlation_length < 1:
            raise ValueError("assumed_correlation_length must be >= 1")


@dataclass(frozen=True)
class ChannelRealization:
    """True per-symbol gains and the receiver's estimates for one frame."""

    h: np.ndarray
    h_hat: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h)
        h_hat = np.asarray(self.h_hat)
        if h.shape != h_hat.shape:
            raise ValueError("h and h_hat must have the same length")
        if h.size and (h.min() <= 0 or h_hat.min() <= 0):
            raise ValueError("channel gains must be strictly positive")


def gen_lognormal(n: int, cfg: FadingConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw n block-fading gains h = exp(z), z ~ N(-sigma^2/2, sigma^2), E[h] = 1."""
    if n <= 0:
        raise ValueError("n must be >= 1")
    n_blocks = -(-n // cfg.correlation_length)
    z = rng.normal(-cfg.sigma**2 / 2.0, cfg.sigma, size=n_blocks)
    return np.exp(np.repeat(z, cfg.correlation_length)[:n])


def add_awgn(samples, n0: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise with total variance n0."""
    if n0 <= 0:
        raise ValueError("n0 must be > 0")
    samples = np.asarray(samples, dtype=np.complex128)
    scale = np.sqrt(n0 / 2.0)
    noise = scale * rng.standard_normal(samples.shape) + 1j * scale * rng.standard_normal(samples.shape)
    return samples + noise


def estimate_csi(h: np.ndarray, cfg: CsiConfig, rng: np.random.Generator) -> np.ndarray:
    """Produce the receiver's gain estimates for one frame of true gains."""
    h = np.asarray(h, dtype=np.float64)
    if h.size == 0:
        raise ValueError("h must be nonempty")
    if h.min() <= 0:
        raise ValueError("h must be strictly positive")
    if cfg.mode is CsiMode.PERFECT:
        return h.copy()
    a = cfg.assumed_correlation_length
    n_blocks = -(-h.size // a)
    e = rng.normal(0.0, cfg.sigma_e, size=n_blocks)
    block = np.arange(h.size) // a
    return h[block * a] * np.exp(e[block])


def apply_channel(tx_biased, h) -> np.ndarray:
    """Multiply the biased transmit samples by the real channel gains."""
    tx_biased = np.asarray(tx_biased, dtype=np.complex128)
    h = np.asarray(h, dtype=np.float64)
    if tx_biased.shape != h.shape:
        raise ValueError("tx_biased and h must have the same length")
    return h * tx_biased


def remove_dc(y, h_hat, bias: float = 1.0) -> np.ndarray:
    """Subtract the receiver's estimate of the DC component, h_hat * bias.

    With imperfect CSI the subtraction leaves a residual offset (h - h_hat) * bias.
    """
    y = np.asarray(y, dtype=np.complex128)
    h_hat = np.asarray(h_hat, dtype=np.float64)
    if y.shape != h_hat.shape:
        raise ValueError("y and h_hat must have the same length")
    if bias < 0:
        raise ValueError("bias must be >= 0")
    return y - h_hat * bias


def equalize(r, h_hat) -> np.ndarray:
    """Divide out the estimated gain, producing the detector's input samples."""
    r = np.asarray(r, dtype=np.complex128)
    h_hat = np.asarray(h_hat, dtype=np.float64)
    if r.shape != h_hat.shape:
        raise ValueError("r and h_hat must have the same length")
    if h_hat.size and h_hat.min() <= 0:
        raise ValueError("h_hat must be strictly positive")
    return r / h_hat
