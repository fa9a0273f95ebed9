"""Shared types, configuration, square M-QAM with Gray labels and seeded streams.

Index conventions are 0-based throughout: LED ``i`` in ``0..n_tx-1`` is selected
by spatial bits read as an unsigned integer (MSB first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SimConfigError",
    "UnsupportedConstellationError",
    "SimConfig",
    "QamConstellation",
    "build_constellation",
    "map_bits_to_symbol",
    "slice_symbol",
    "slice_symbols",
    "bits_to_ints",
    "ints_to_bits",
    "derive_stream",
]


class SimConfigError(ValueError):
    """Invalid simulation parameter; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class UnsupportedConstellationError(ValueError):
    pass


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SimConfig:
    n_fft: int = 256
    n_cp: int = 0
    m_order: int = 16
    n_tx: int = 4
    n_rx: int = 4
    bias_db: float = 10.0
    clip_low: float = 0.0
    clip_high: float = math.inf
    snr_grid_db: tuple[float, ...] = ()
    master_seed: int = 0
    max_frames: int = 10_000
    target_bit_errors: int = 100

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        if self.n_fft < 8 or self.n_fft % 2:
            raise SimConfigError("n_fft", "must be even and >= 8")
        if not 0 <= self.n_cp < self.n_fft:
            raise SimConfigError("n_cp", "must satisfy 0 <= n_cp < n_fft")
        if not _is_pow2(self.m_order) or int(math.log2(self.m_order)) % 2:
            raise SimConfigError("m_order", "must be a power of 4 (square QAM)")
        if not _is_pow2(self.n_tx):
            raise SimConfigError("n_tx", "must be a power of 2")
        if self.n_rx < 1:
            raise SimConfigError("n_rx", "must be positive")
        if self.bias_db < 0:
            raise SimConfigError("bias_db", "must be >= 0")
        if not self.clip_low < self.clip_high:
            raise SimConfigError("clip_low", "must be < clip_high")
        grid = self.snr_grid_db
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise SimConfigError("snr_db", "must be strictly increasing")
        if not 0 <= self.master_seed < 2**64:
            raise SimConfigError("seed", "must be a 64-bit unsigned integer")
        if self.max_frames < 1:
            raise SimConfigError("max_frames", "must be positive")
        if self.target_bit_errors < 1:
            raise SimConfigError("target_errors", "must be positive")

    @property
    def k_c(self) -> int:
        return int(math.log2(self.m_order))

    @property
    def k_s(self) -> int:
        return int(math.log2(self.n_tx))

    @property
    def n_data(self) -> int:
        """Number of data-carrying subcarriers per OFDM symbol, N/2 - 1."""
        return self.n_fft // 2 - 1


@dataclass(frozen=True)
class QamConstellation:
    """Square QAM alphabet; ``points[k]`` carries the label whose integer value is ``k``."""

    order: int
    points: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @property
    def labels(self) -> list[str]:
        k = self.bits_per_symbol
        return [format(v, f"0{k}b") for v in range(self.order)]

    @property
    def label_bits(self) -> np.ndarray:
        return ints_to_bits(np.arange(self.order), self.bits_per_symbol)

    @property
    def lattice_positions(self) -> np.ndarray:
        """(M, 2) integer lattice coordinates (I column, Q row) of each label."""
        side = math.isqrt(self.order)
        raw = self.points / np.min(np.abs(self.points.real))
        col = np.rint((side - 1 - raw.real) / 2).astype(int)
        row = np.rint((side - 1 - raw.imag) / 2).astype(int)
        return np.stack([col, row], axis=1)


def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


def build_constellation(m: int) -> QamConstellation:
    """Unit-power square M-QAM with per-axis reflected Gray labels, I bits first."""
    if not _is_pow2(m) or int(math.log2(m)) % 2 or m < 4:
        raise UnsupportedConstellationError(f"M={m} is not a power of 4")
    side = math.isqrt(m)
    half = int(math.log2(side))
    pos = np.arange(side)
    amp = (side - 1) - 2 * pos  # descending: position 0 is the most positive level
    gray = _gray(pos)
    points = np.empty(m, dtype=complex)
    for pi in range(side):
        for pq in range(side):
            points[(gray[pi] << half) | gray[pq]] = amp[pi] + 1j * amp[pq]
    points /= math.sqrt(np.mean(np.abs(points) ** 2))
    points.setflags(write=False)
    return QamConstellation(order=m, points=points)


def bits_to_ints(bits: np.ndarray, width: int) -> np.ndarray:
    """Read consecutive groups of ``width`` bits (MSB first) as a flat integer vector."""
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    if width == 0:
        return np.zeros(0, dtype=np.int64)
    weights = 1 << np.arange(width - 1, -1, -1)
    return bits.reshape(-1, width) @ weights


def ints_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    """Inverse of :func:`bits_to_ints`; appends a trailing axis of length ``width``."""
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def map_bits_to_symbol(bits, constellation: QamConstellation) -> complex:
    bits = np.asarray(bits)
    if bits.shape != (constellation.bits_per_symbol,):
        raise ValueError(
            f"expected {constellation.bits_per_symbol} bits, got shape {bits.shape}"
        )
    return complex(constellation.points[bits_to_ints(bits, bits.size)[0]])


def slice_symbols(z: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Label index of the nearest point for every element of ``z``; ties go to the lowest label."""
    z = np.asarray(z)
    d2 = np.abs(z[..., None] - constellation.points) ** 2
    return np.argmin(d2, axis=-1)


def slice_symbol(z: complex, constellation: QamConstellation) -> tuple[complex, np.ndarray]:
    idx = int(slice_symbols(np.asarray(z), constellation))
    return complex(constellation.points[idx]), ints_to_bits(idx, constellation.bits_per_symbol)


def derive_stream(master_seed: int, stream_id: int | tuple[int, ...]) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``(master_seed, stream_id)``."""
    key = (stream_id,) if isinstance(stream_id, (int, np.integer)) else tuple(stream_id)
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
