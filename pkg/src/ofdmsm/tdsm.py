"""Time-domain spatial modulation: one OFDM stream, one active LED per sample."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix, NoiseSpec, add_awgn, condition_number
from .core import QamConstellation, SimConfig, bits_to_ints, ints_to_bits, slice_symbols
from .ofdm import (
    add_cp,
    bias_and_clip,
    clipped_signal_power,
    dc_bias_from_db,
    fft,
    hermitian_extend,
    ifft_real,
    remove_cp,
    time_domain_sigma,
)

__all__ = [
    "DegenerateColumnError",
    "TdsmFrame",
    "tdsm_payload_bits",
    "tdsm_signal_stats",
    "tdsm_tx_moments",
    "tdsm_encode",
    "tdsm_spectral_efficiency",
    "tdsm_transmit",
    "map_estimate_sample",
    "map_metric",
    "map_detect",
    "map_detect_frame",
    "zf_detect_td",
    "zf_detect_frame",
    "tdsm_decode",
]


class DegenerateColumnError(ValueError):
    pass


@dataclass(frozen=True)
class TdsmFrame:
    q: np.ndarray = field(repr=False)
    payload_bits: np.ndarray = field(repr=False)
    x_clipped: np.ndarray = field(repr=False)
    led_schedule: np.ndarray = field(repr=False)
    tx_matrix: np.ndarray = field(repr=False)  # (N, n_tx), one nonzero per row at most


def tdsm_payload_bits(cfg: SimConfig) -> int:
    return cfg.n_data * cfg.k_c + cfg.n_fft * cfg.k_s


def tdsm_signal_stats(cfg: SimConfig) -> tuple[float, float]:
    sigma = time_domain_sigma(cfg.n_fft, 1.0)
    return sigma, dc_bias_from_db(cfg.bias_db, sigma)


def tdsm_tx_moments(cfg: SimConfig) -> tuple[float, float]:
    """(E{z_i^2}, E{z_i z_k}); the cross moment vanishes since rows are one-hot."""
    sigma, bias = tdsm_signal_stats(cfg)
    return clipped_signal_power(sigma, bias, cfg.clip_low, cfg.clip_high) / cfg.n_tx, 0.0


def tdsm_encode(bits, cfg: SimConfig, constellation: QamConstellation) -> TdsmFrame:
    """Constellation bits fill the subcarriers; the next N*k_s bits schedule the LEDs."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (tdsm_payload_bits(cfg),):
        raise ValueError(f"TD-SM frame needs {tdsm_payload_bits(cfg)} bits, got {bits.size}")
    n_const = cfg.n_data * cfg.k_c
    q = constellation.points[bits_to_ints(bits[:n_const], cfg.k_c)]
    schedule = bits_to_ints(bits[n_const:], cfg.k_s) if cfg.k_s else np.zeros(cfg.n_fft, dtype=np.int64)
    sigma, bias = tdsm_signal_stats(cfg)
    x_bar = bias_and_clip(ifft_real(hermitian_extend(q)), bias, cfg.clip_low, cfg.clip_high)
    z = np.zeros((cfg.n_fft, cfg.n_tx))
    z[np.arange(cfg.n_fft), schedule] = x_bar
    return TdsmFrame(q=q, payload_bits=bits, x_clipped=x_bar, led_schedule=schedule, tx_matrix=z)


def tdsm_spectral_efficiency(cfg: SimConfig) -> float:
    g_f = (cfg.n_fft - 2) / cfg.n_fft
    g_t = cfg.n_fft / (cfg.n_fft + cfg.n_cp)
    return 0.5 * cfg.k_c * g_f * g_t + cfg.k_s


def _as_array(h) -> np.ndarray:
    return h.h if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=float)


def tdsm_transmit(frame: TdsmFrame, h, noise: NoiseSpec, stream: np.random.Generator,
                  n_cp: int = 0) -> np.ndarray:
    h = _as_array(h)
    z = frame.tx_matrix
    if h.shape[1] != z.shape[1]:
        raise ValueError(f"channel has {h.shape[1]} inputs, frame drives {z.shape[1]} LEDs")
    y = add_awgn(h @ add_cp(z, n_cp).T, noise, stream)
    return remove_cp(y, n_cp, axis=1)


def map_estimate_sample(y, h_i, sigma: float, sigma_n: float, bias: float,
                        low: float, high: float = np.inf) -> float:
    """Clipped MAP estimate of the sample given that LED ``i`` (column ``h_i``) is active."""
    y = np.asarray(y, dtype=float)
    h_i = np.asarray(h_i, dtype=float)
    energy = float(h_i @ h_i)
    den = 2 * (sigma**2 * energy + sigma_n**2)
    if den == 0:
        raise DegenerateColumnError("all-zero channel column with noiseless observation")
    num = sigma**2 * 2 * float(y @ h_i) + 2 * bias * sigma_n**2
    return float(np.clip(num / den, low, high))


def map_metric(y, h_i, x, sigma: float, sigma_n: float, bias: float) -> float:
    """Full posterior cost sigma^2 ||y - h_i x||^2 + sigma_n^2 (x - B)^2."""
    r = np.asarray(y, dtype=float) - np.asarray(h_i, dtype=float) * x
    return float(sigma**2 * (r @ r) + sigma_n**2 * (x - bias) ** 2)


def map_detect_frame(y: np.ndarray, h, sigma: float, sigma_n: float, bias: float,
                     low: float, high: float = np.inf) -> tuple[np.ndarray, np.ndarray]:
    """Joint MAP (LED index, sample) for every column of ``y`` (N_r, T)."""
    h = _as_array(h)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    energy = np.sum(h * h, axis=0)  # (N_t,)
    den = 2 * (sigma**2 * energy + sigma_n**2)
    if np.any(den == 0):
        raise DegenerateColumnError("all-zero channel column with noiseless observation")
    corr = h.T @ y  # (N_t, T)
    x_hat = np.clip((2 * sigma**2 * corr + 2 * bias * sigma_n**2) / den[:, None], low, high)
    resid = y[:, None, :] - h[:, :, None] * x_hat[None, :, :]
    metric = np.sum(resid * resid, axis=0) + (sigma_n**2 / sigma**2) * x_hat * (x_hat - 2 * bias)
    i_hat = np.argmin(metric, axis=0)
    return i_hat, x_hat[i_hat, np.arange(y.shape[1])]


def map_detect(y, h, sigma: float, sigma_n: float, bias: float,
               low: float, high: float = np.inf) -> tuple[int, float]:
    i_hat, x_hat = map_detect_frame(np.asarray(y, dtype=float)[:, None], h, sigma, sigma_n, bias, low, high)
    return int(i_hat[0]), float(x_hat[0])


def _zf_inverse(h: np.ndarray) -> np.ndarray:
    if h.shape[0] != h.shape[1]:
        raise ValueError("TD-SM ZF detection needs a square channel")
    if np.isinf(condition_number(h)):
        raise np.linalg.LinAlgError("singular channel matrix")
    return np.linalg.inv(h)


def zf_detect_frame(y: np.ndarray, h, low: float, high: float = np.inf) -> tuple[np.ndarray, np.ndarray]:
    h = _as_array(h)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    z_hat = _zf_inverse(h) @ y
    i_hat = np.argmax(z_hat, axis=0)
    return i_hat, np.clip(z_hat[i_hat, np.arange(y.shape[1])], low, high)


def zf_detect_td(y, h, low: float, high: float = np.inf) -> tuple[int, float]:
    i_hat, x_hat = zf_detect_frame(np.asarray(y, dtype=float)[:, None], h, low, high)
    return int(i_hat[0]), float(x_hat[0])


def tdsm_decode(y: np.ndarray, h, cfg: SimConfig, constellation: QamConstellation,
                detector: str = "map", sigma_n: float = 0.0) -> np.ndarray:
    """Recover the payload from (N_r, N) received samples with the ``map`` or ``zf`` detector."""
    sigma, bias = tdsm_signal_stats(cfg)
    if detector == "map":
        i_hat, x_hat = map_detect_frame(y, h, sigma, sigma_n, bias, cfg.clip_low, cfg.clip_high)
    elif detector == "zf":
        i_hat, x_hat = zf_detect_frame(y, h, cfg.clip_low, cfg.clip_high)
    else:
        raise ValueError(f"unknown TD-SM detector {detector!r}")
    s_hat = fft(x_hat - bias)
    labels = slice_symbols(s_hat[1 : cfg.n_data + 1], constellation)
    const_bits = ints_to_bits(labels, cfg.k_c).reshape(-1)
    spatial_bits = ints_to_bits(i_hat, cfg.k_s).reshape(-1)
    return np.concatenate([const_bits, spatial_bits])
