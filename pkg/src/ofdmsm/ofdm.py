"""DCO-OFDM framing: Hermitian extension, DFT pair, cyclic prefix, bias and clipping.

The inverse transform carries the 1/N factor; the forward transform carries none.
All frame functions operate along axis 0 so an (N, n_streams) array holds one
OFDM symbol per column.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

__all__ = [
    "qfunc",
    "hermitian_extend",
    "ifft_real",
    "fft",
    "time_domain_sigma",
    "dc_bias_from_db",
    "bias_and_clip",
    "clipped_signal_power",
    "clipped_signal_mean",
    "clipped_pdf",
    "clip_atoms",
    "add_cp",
    "remove_cp",
]

_IMAG_TOL = 1e-9
_SQRT_2PI = math.sqrt(2 * math.pi)


def qfunc(x):
    """Gaussian tail probability Q(x) = P(Z > x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2))


def hermitian_extend(q: np.ndarray) -> np.ndarray:
    """Build ``[0, q, 0, conj(q[::-1])]`` along axis 0 (length N = 2*len(q) + 2)."""
    q = np.asarray(q, dtype=complex)
    if q.shape[0] < 1:
        raise ValueError("need at least one data subcarrier")
    zero = np.zeros((1,) + q.shape[1:], dtype=complex)
    return np.concatenate([zero, q, zero, np.conj(q[::-1])], axis=0)


def ifft_real(s: np.ndarray) -> np.ndarray:
    x = np.fft.ifft(np.asarray(s, dtype=complex), axis=0)
    resid = np.max(np.abs(x.imag)) if x.size else 0.0
    if resid > _IMAG_TOL:
        raise ValueError(f"frame is not Hermitian symmetric (imaginary residual {resid:.3g})")
    return x.real.copy()


def fft(x: np.ndarray) -> np.ndarray:
    return np.fft.fft(np.asarray(x), axis=0)


def time_domain_sigma(n_fft: int, subcarrier_power: float = 1.0) -> float:
    """Pre-clip sample std for unit-power data on all N/2-1 Hermitian pairs.

    ``subcarrier_power`` is E{|q|^2} per data subcarrier (1/N_t for FD-SM streams).
    """
    return math.sqrt((n_fft - 2) * subcarrier_power) / n_fft


def dc_bias_from_db(bias_db: float, sigma: float) -> float:
    if bias_db < 0:
        raise ValueError("bias_db must be >= 0")
    return math.sqrt(10 ** (bias_db / 10) - 1) * sigma


def bias_and_clip(x, bias: float, low: float, high: float = math.inf) -> np.ndarray:
    if not low < high:
        raise ValueError("clip_low must be < clip_high")
    return np.clip(np.asarray(x, dtype=float) + bias, low, high)


def clipped_signal_power(sigma: float, bias: float, low: float, high: float = math.inf) -> float:
    """Second moment E{x_bar^2} of a N(bias, sigma^2) sample clipped to [low, high]."""
    if high == low:
        return float(low**2)
    if not sigma > 0 or high < low:
        raise ValueError("need sigma > 0 and low <= high")
    s, b, lo, hi = sigma, bias, low, high
    lower = (lo + b) * math.exp(-((lo - b) ** 2) / (2 * s * s))
    upper = 0.0 if math.isinf(hi) else (hi + b) * math.exp(-((hi - b) ** 2) / (2 * s * s))
    power = s / _SQRT_2PI * (lower - upper)
    power += (b * b - lo * lo + s * s) * float(qfunc((lo - b) / s))
    if not math.isinf(hi):
        power += (hi * hi - b * b - s * s) * float(qfunc((hi - b) / s))
    return float(power + lo * lo)


def clipped_signal_mean(sigma: float, bias: float, low: float, high: float = math.inf) -> float:
    """First moment E{x_bar} of the clipped sample."""
    if high == low:
        return float(low)
    s, b, lo, hi = sigma, bias, low, high
    a = (lo - b) / s
    phi_a = math.exp(-a * a / 2) / _SQRT_2PI
    mean = lo * float(qfunc((b - lo) / s)) + b * (float(qfunc(a)))
    mean += s * phi_a
    if not math.isinf(hi):
        c = (hi - b) / s
        phi_c = math.exp(-c * c / 2) / _SQRT_2PI
        mean += hi * float(qfunc(c)) - b * float(qfunc(c)) - s * phi_c
    return float(mean)


def clip_atoms(sigma: float, bias: float, low: float, high: float = math.inf) -> tuple[float, float]:
    """Point masses of the clipped distribution at ``low`` and ``high``."""
    lower = float(qfunc((bias - low) / sigma))
    upper = 0.0 if math.isinf(high) else float(qfunc((high - bias) / sigma))
    return lower, upper


def clipped_pdf(v, sigma: float, bias: float, low: float, high: float = math.inf) -> np.ndarray:
    """Continuous part of the clipped density; zero outside the open interval (low, high).

    The atoms at the clip levels are reported separately by :func:`clip_atoms`.
    """
    v = np.asarray(v, dtype=float)
    dens = np.exp(-((v - bias) ** 2) / (2 * sigma**2)) / (_SQRT_2PI * sigma)
    return np.where((v > low) & (v < high), dens, 0.0)


def add_cp(x: np.ndarray, n_cp: int) -> np.ndarray:
    x = np.asarray(x)
    if not 0 <= n_cp < x.shape[0]:
        raise ValueError("cyclic prefix must satisfy 0 <= n_cp < N")
    if n_cp == 0:
        return x.copy()
    return np.concatenate([x[-n_cp:], x], axis=0)


def remove_cp(y: np.ndarray, n_cp: int, axis: int = 0) -> np.ndarray:
    y = np.asarray(y)
    n = y.shape[axis] - n_cp
    if not 0 <= n_cp < n:
        raise ValueError("cyclic prefix must satisfy 0 <= n_cp < N")
    return np.take(y, np.arange(n_cp, y.shape[axis]), axis=axis)
