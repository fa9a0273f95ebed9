"""Frequency-domain spatial modulation: one active LED per data subcarrier."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix, NoiseSpec, add_awgn, condition_number
from .core import QamConstellation, SimConfig, bits_to_ints, ints_to_bits
from .ofdm import (
    add_cp,
    bias_and_clip,
    clipped_signal_mean,
    clipped_signal_power,
    dc_bias_from_db,
    fft,
    hermitian_extend,
    ifft_real,
    remove_cp,
    time_domain_sigma,
)

__all__ = [
    "EqualizationError",
    "FdsmFrame",
    "fdsm_payload_bits",
    "fdsm_signal_stats",
    "fdsm_tx_moments",
    "fdsm_encode",
    "fdsm_spectral_efficiency",
    "fdsm_transmit",
    "zf_equalize",
    "fdsm_detect",
    "fdsm_demap",
    "fdsm_decode",
]

RHO_LIMIT = 1e12


class EqualizationError(ValueError):
    def __init__(self, rho: float):
        super().__init__(f"channel too ill-conditioned for ZF (rho={rho:.3g})")
        self.rho = rho


@dataclass(frozen=True)
class FdsmFrame:
    q_matrix: np.ndarray = field(repr=False)  # (N/2-1, n_tx) complex
    payload_bits: np.ndarray = field(repr=False)
    tx_matrix: np.ndarray = field(repr=False)  # (N, n_tx) biased and clipped
    active: np.ndarray = field(repr=False)  # LED index per data subcarrier
    symbols: np.ndarray = field(repr=False)  # constellation label per data subcarrier


def fdsm_payload_bits(cfg: SimConfig) -> int:
    return cfg.n_data * (cfg.k_c + cfg.k_s)


def fdsm_signal_stats(cfg: SimConfig) -> tuple[float, float]:
    """Pre-clip std and DC bias of each per-LED stream."""
    sigma = time_domain_sigma(cfg.n_fft, 1.0 / cfg.n_tx)
    return sigma, dc_bias_from_db(cfg.bias_db, sigma)


def fdsm_tx_moments(cfg: SimConfig) -> tuple[float, float]:
    """(E{x_i^2}, E{x_i x_k}) of the transmitted per-LED samples."""
    sigma, bias = fdsm_signal_stats(cfg)
    m2 = clipped_signal_power(sigma, bias, cfg.clip_low, cfg.clip_high)
    mu = clipped_signal_mean(sigma, bias, cfg.clip_low, cfg.clip_high)
    return m2, mu * mu


def fdsm_encode(bits, cfg: SimConfig, constellation: QamConstellation) -> FdsmFrame:
    """Map ``k_s`` spatial bits then ``k_c`` constellation bits onto each data subcarrier."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (fdsm_payload_bits(cfg),):
        raise ValueError(f"FD-SM frame needs {fdsm_payload_bits(cfg)} bits, got {bits.size}")
    rows = bits.reshape(cfg.n_data, cfg.k_s + cfg.k_c)
    active = bits_to_ints(rows[:, : cfg.k_s], cfg.k_s) if cfg.k_s else np.zeros(cfg.n_data, dtype=np.int64)
    symbols = bits_to_ints(rows[:, cfg.k_s :], cfg.k_c)
    q = np.zeros((cfg.n_data, cfg.n_tx), dtype=complex)
    q[np.arange(cfg.n_data), active] = constellation.points[symbols]
    sigma, bias = fdsm_signal_stats(cfg)
    x = ifft_real(hermitian_extend(q))
    tx = bias_and_clip(x, bias, cfg.clip_low, cfg.clip_high)
    return FdsmFrame(q_matrix=q, payload_bits=bits, tx_matrix=tx, active=active, symbols=symbols)


def fdsm_spectral_efficiency(cfg: SimConfig) -> float:
    g_f = (cfg.n_fft - 2) / cfg.n_fft
    g_t = cfg.n_fft / (cfg.n_fft + cfg.n_cp)
    return 0.5 * (cfg.k_c + cfg.k_s) * g_f * g_t


def _as_array(h) -> np.ndarray:
    return h.h if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=float)


def fdsm_transmit(frame: FdsmFrame, h, noise: NoiseSpec, stream: np.random.Generator,
                  n_cp: int = 0) -> np.ndarray:
    """Received (N_r, N) samples after the flat channel, AWGN and CP removal."""
    h = _as_array(h)
    tx = frame.tx_matrix
    if h.shape[1] != tx.shape[1]:
        raise ValueError(f"channel has {h.shape[1]} inputs, frame drives {tx.shape[1]} LEDs")
    y = add_awgn(h @ add_cp(tx, n_cp).T, noise, stream)
    return remove_cp(y, n_cp, axis=1)


def zf_equalize(y: np.ndarray, h) -> np.ndarray:
    """(N, N_t) channel-inverted samples; pseudo-inverse when N_r > N_t."""
    h = _as_array(h)
    n_r, n_t = h.shape
    if n_r < n_t:
        raise ValueError("ZF needs at least as many PDs as LEDs")
    if n_r == n_t:
        rho = condition_number(h)
        if rho >= RHO_LIMIT:
            raise EqualizationError(rho)
        return np.linalg.solve(h, y).T
    s = np.linalg.svd(h, compute_uv=False)
    rho = s[0] / s[-1] if s[-1] > 0 else np.inf
    if rho >= RHO_LIMIT:
        raise EqualizationError(rho)
    return (np.linalg.pinv(h) @ y).T


def fdsm_detect(s_hat: np.ndarray, constellation: QamConstellation) -> tuple[np.ndarray, np.ndarray]:
    """Joint minimum-distance search over (stream, symbol) for every row of ``s_hat``.

    Returns (stream index, constellation label) per row; ties go to the lowest
    stream, then the lowest label.
    """
    s_hat = np.atleast_2d(np.asarray(s_hat))
    n_rows, n_streams = s_hat.shape
    d2 = np.abs(s_hat[:, :, None] - constellation.points[None, None, :]) ** 2
    flat = np.argmin(d2.reshape(n_rows, -1), axis=1)
    return flat // constellation.order, flat % constellation.order


def fdsm_demap(j_hat, c_hat, constellation: QamConstellation, k_s: int) -> np.ndarray:
    spatial = ints_to_bits(np.asarray(j_hat), k_s)
    const = ints_to_bits(np.asarray(c_hat), constellation.bits_per_symbol)
    return np.concatenate([spatial, const], axis=-1).reshape(-1)


def fdsm_decode(y: np.ndarray, h, cfg: SimConfig, constellation: QamConstellation) -> np.ndarray:
    s_hat = fft(zf_equalize(y, h))
    j_hat, c_hat = fdsm_detect(s_hat[1 : cfg.n_data + 1], constellation)
    return fdsm_demap(j_hat, c_hat, constellation, cfg.k_s)
