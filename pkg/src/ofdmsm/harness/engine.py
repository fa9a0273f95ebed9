"""Monte Carlo BER engine with worker-count independent frame streams."""
from __future__ import annotations

import logging
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..channel import ChannelMatrix, noise_sigma_for_snr
from ..core import SimConfig, build_constellation, derive_stream
from ..fdsm import fdsm_decode, fdsm_encode, fdsm_payload_bits, fdsm_transmit, fdsm_tx_moments
from ..tdsm import tdsm_decode, tdsm_encode, tdsm_payload_bits, tdsm_transmit, tdsm_tx_moments

log = logging.getLogger(__name__)

SCHEMES = ("fdsm", "tdsm-map", "tdsm-zf")
# Both TD-SM detectors draw from the same family so they see identical frames and noise.
_STREAM_FAMILY = {"fdsm": 0, "tdsm-map": 1, "tdsm-zf": 1}
CHUNK_FRAMES = 16


@dataclass(frozen=True)
class BerRecord:
    scheme: str
    snr_db: float
    bits: int
    bit_errors: int
    frames: int
    master_seed: int
    converged: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.bit_errors < 0 or self.bit_errors > self.bits:
            raise ValueError("bit_errors must lie in [0, bits]")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def std_error(self) -> float:
        """Binomial standard error of the BER estimate."""
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits) if self.bits else math.inf


@dataclass(frozen=True)
class SweepReport:
    config: SimConfig
    m_orders: dict
    channel_provenance: str
    rho: float
    records: tuple[BerRecord, ...] = ()

    def curve(self, scheme: str) -> list[BerRecord]:
        return [r for r in self.records if r.scheme == scheme]


def payload_bits(cfg: SimConfig, scheme: str) -> int:
    return fdsm_payload_bits(cfg) if scheme == "fdsm" else tdsm_payload_bits(cfg)


def tx_moments(cfg: SimConfig, scheme: str) -> tuple[float, float]:
    return fdsm_tx_moments(cfg) if scheme == "fdsm" else tdsm_tx_moments(cfg)


def simulate_frame(cfg: SimConfig, scheme: str, h: np.ndarray, sigma_n: float,
                   stream: np.random.Generator, constellation=None) -> int:
    """Transmit one random frame and return its payload bit-error count."""
    constellation = constellation or build_constellation(cfg.m_order)
    bits = stream.integers(0, 2, payload_bits(cfg, scheme), dtype=np.uint8)
    if scheme == "fdsm":
        frame = fdsm_encode(bits, cfg, constellation)
        y = fdsm_transmit(frame, h, sigma_n, stream, cfg.n_cp)
        decoded = fdsm_decode(y, h, cfg, constellation)
    else:
        frame = tdsm_encode(bits, cfg, constellation)
        y = tdsm_transmit(frame, h, sigma_n, stream, cfg.n_cp)
        decoded = tdsm_decode(y, h, cfg, constellation, scheme.removeprefix("tdsm-"), sigma_n)
    return int(np.count_nonzero(decoded != bits))


def _run_chunk(cfg: SimConfig, scheme: str, h: np.ndarray, sigma_n: float,
               snr_index: int, start: int, stop: int) -> list[int]:
    constellation = build_constellation(cfg.m_order)
    family = _STREAM_FAMILY[scheme]
    return [
        simulate_frame(cfg, scheme, h, sigma_n,
                       derive_stream(cfg.master_seed, (family, snr_index, f)), constellation)
        for f in range(start, stop)
    ]


def _check(cfg: SimConfig, scheme: str, h: np.ndarray) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if h.shape != (cfg.n_rx, cfg.n_tx):
        raise ValueError(f"channel is {h.shape[0]}x{h.shape[1]}, config needs {cfg.n_rx}x{cfg.n_tx}")


def run_point(cfg: SimConfig, scheme: str, channel, snr_db: float, snr_index: int = 0,
              workers: int = 1, executor: Executor | None = None) -> BerRecord:
    """Simulate frames until ``target_bit_errors`` is reached or ``max_frames`` run out.

    Frame ``f`` always uses stream ``(scheme family, snr_index, f)`` and the stop
    decision is taken frame by frame in order, so the record does not depend on
    ``workers``.
    """
    h = channel.h if isinstance(channel, ChannelMatrix) else np.asarray(channel, dtype=float)
    _check(cfg, scheme, h)
    m2, cross = tx_moments(cfg, scheme)
    sigma_n = noise_sigma_for_snr(snr_db, h, m2, cross).sigma_n
    per_frame = payload_bits(cfg, scheme)

    own_pool = None
    if executor is None and workers > 1:
        executor = own_pool = ProcessPoolExecutor(max_workers=workers)
    wave = max(workers, 1)
    errors = frames = 0
    try:
        while frames < cfg.max_frames and errors < cfg.target_bit_errors:
            bounds = []
            start = frames
            for _ in range(wave):
                if start >= cfg.max_frames:
                    break
                stop = min(start + CHUNK_FRAMES, cfg.max_frames)
                bounds.append((start, stop))
                start = stop
            args = [(cfg, scheme, h, sigma_n, snr_index, a, b) for a, b in bounds]
            if executor is None:
                results = [_run_chunk(*a) for a in args]
            else:
                results = [f.result() for f in [executor.submit(_run_chunk, *a) for a in args]]
            for chunk in results:
                for e in chunk:
                    if errors >= cfg.target_bit_errors:
                        break
                    errors += e
                    frames += 1
    finally:
        if own_pool is not None:
            own_pool.shutdown()

    converged = errors >= cfg.target_bit_errors
    if not converged:
        log.warning("%s at %.2f dB hit max_frames=%d with %d bit errors",
                    scheme, snr_db, cfg.max_frames, errors)
    return BerRecord(scheme=scheme, snr_db=float(snr_db), bits=frames * per_frame,
                     bit_errors=errors, frames=frames, master_seed=cfg.master_seed,
                     converged=converged)


def scheme_config(cfg: SimConfig, scheme: str, m_orders: dict | None) -> SimConfig:
    if m_orders and scheme in m_orders:
        return replace(cfg, m_order=m_orders[scheme])
    return cfg


def run_sweep(cfg: SimConfig, schemes, channel, workers: int = 1,
              m_orders: dict | None = None) -> SweepReport:
    """BER curve for each scheme over ``cfg.snr_grid_db``; ``m_orders`` overrides M per scheme."""
    if not isinstance(channel, ChannelMatrix):
        channel = ChannelMatrix(np.asarray(channel, dtype=float), provenance="loaded")
    rho = channel.rho if channel.shape[0] == channel.shape[1] else math.nan
    records = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 and cfg.snr_grid_db else None
    try:
        for scheme in schemes:
            scfg = scheme_config(cfg, scheme, m_orders)
            for k, snr in enumerate(scfg.snr_grid_db):
                records.append(run_point(scfg, scheme, channel, snr, k, workers, pool))
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepReport(config=cfg, m_orders=dict(m_orders or {}),
                       channel_provenance=channel.provenance, rho=rho, records=tuple(records))


def snr_at_ber(records: list[BerRecord], target: float) -> float:
    """First crossing of ``target`` by log-linear interpolation of log10(BER) against SNR."""
    pts = [(r.snr_db, r.ber) for r in sorted(records, key=lambda r: r.snr_db)]
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 >= target > b1:
            if b1 == 0:
                return s1
            l0, l1, lt = math.log10(b0), math.log10(b1), math.log10(target)
            return s0 + (lt - l0) * (s1 - s0) / (l1 - l0)
    return math.nan
