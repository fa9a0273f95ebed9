"""Line-of-sight optical MIMO channel, synthetic overlap channels and AWGN."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DegenerateGeometryError",
    "LinkGeometry",
    "ChannelMatrix",
    "NoiseSpec",
    "lambertian_order",
    "los_gain",
    "build_channel_matrix",
    "make_overlap_channel",
    "identity_channel",
    "condition_number",
    "add_awgn",
    "received_power",
    "noise_sigma_for_snr",
    "load_channel_csv",
    "save_channel_csv",
    "load_geometry",
]

LAMBERTIAN_ORDER_CAP = 1e4


class DegenerateGeometryError(ValueError):
    pass


def _unit_rows(a, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[1] != 3:
        raise ValueError(f"{name} must be 3-D vectors")
    norms = np.linalg.norm(a, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError(f"{name} must be unit vectors")
    return a


@dataclass(frozen=True)
class LinkGeometry:
    led_positions: np.ndarray
    led_normals: np.ndarray
    pd_positions: np.ndarray
    pd_normals: np.ndarray
    half_power_semiangle: float  # radians
    fov_semiangle: float  # radians
    pd_area: float  # m^2

    def __post_init__(self):
        lp = np.atleast_2d(np.asarray(self.led_positions, dtype=float))
        pp = np.atleast_2d(np.asarray(self.pd_positions, dtype=float))
        ln = _unit_rows(self.led_normals, "led_normals")
        pn = _unit_rows(self.pd_normals, "pd_normals")
        if lp.shape != ln.shape or pp.shape != pn.shape or lp.shape[1] != 3 or pp.shape[1] != 3:
            raise ValueError("positions and normals must pair up as (n, 3) arrays")
        if not 0 < self.half_power_semiangle < math.pi / 2:
            raise ValueError("half_power_semiangle must lie in (0, pi/2)")
        if not 0 < self.fov_semiangle <= math.pi / 2:
            raise ValueError("fov_semiangle must lie in (0, pi/2]")
        if not self.pd_area > 0:
            raise ValueError("pd_area must be positive")
        for name, val in (("led_positions", lp), ("led_normals", ln), ("pd_positions", pp), ("pd_normals", pn)):
            object.__setattr__(self, name, val)

    @property
    def n_tx(self) -> int:
        return self.led_positions.shape[0]

    @property
    def n_rx(self) -> int:
        return self.pd_positions.shape[0]


@dataclass(frozen=True)
class ChannelMatrix:
    h: np.ndarray = field(repr=False)
    provenance: str = "synthetic"

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h, dtype=float))
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise ValueError("channel gains must be finite and nonnegative")
        if self.provenance not in ("geometric", "synthetic", "loaded"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def shape(self) -> tuple[int, int]:
        return self.h.shape

    @property
    def rho(self) -> float:
        return condition_number(self.h)


@dataclass(frozen=True)
class NoiseSpec:
    sigma_n: float

    def __post_init__(self):
        if not self.sigma_n >= 0:
            raise ValueError("sigma_n must be >= 0")


def lambertian_order(half_power_semiangle: float, cap: float = LAMBERTIAN_ORDER_CAP) -> float:
    """Lambertian mode number m = -1 / log2(cos(phi_1/2))."""
    if not 0 < half_power_semiangle < math.pi / 2:
        raise ValueError("half-power semiangle must lie in (0, pi/2)")
    m = -1.0 / math.log2(math.cos(half_power_semiangle))
    if m > cap:
        raise ValueError(f"Lambertian order {m:.3g} exceeds cap {cap:g}")
    return m


def los_gain(i: int, j: int, geometry: LinkGeometry) -> float:
    """DC gain from LED ``i`` to PD ``j``; zero outside FoV or behind the LED."""
    d = geometry.led_positions[i] - geometry.pd_positions[j]
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise DegenerateGeometryError(f"LED {i} and PD {j} coincide")
    cos_theta = float(-geometry.led_normals[i] @ d) / dist
    cos_psi = float(geometry.pd_normals[j] @ d) / dist
    if cos_theta <= 0.0 or cos_psi <= 0.0:
        return 0.0
    psi = math.acos(min(cos_psi, 1.0))
    if psi > geometry.fov_semiangle:
        return 0.0
    m = lambertian_order(geometry.half_power_semiangle)
    return (m + 1) * geometry.pd_area / (2 * math.pi * dist**2) * cos_theta**m * cos_psi


def build_channel_matrix(geometry: LinkGeometry) -> ChannelMatrix:
    h = np.array(
        [[los_gain(i, j, geometry) for i in range(geometry.n_tx)] for j in range(geometry.n_rx)]
    )
    return ChannelMatrix(h, provenance="geometric")


def make_overlap_channel(n: int, rho: float, gain: float = 1.0) -> ChannelMatrix:
    """Symmetric ``gain*I + b*(J-I)`` whose condition number is exactly ``rho``."""
    if rho < 1:
        raise ValueError("rho must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not gain > 0:
        raise ValueError("gain must be positive")
    b = gain * (rho - 1) / (rho + n - 1)
    h = np.full((n, n), b)
    np.fill_diagonal(h, gain)
    return ChannelMatrix(h, provenance="synthetic")


def identity_channel(n: int) -> ChannelMatrix:
    return ChannelMatrix(np.eye(n), provenance="synthetic")


def condition_number(h) -> float:
    """Ratio of extreme singular values; ``inf`` when numerically rank deficient."""
    h = np.asarray(getattr(h, "h", h), dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("condition number requires a square matrix")
    s = np.linalg.svd(h, compute_uv=False)
    if s[0] == 0 or s[-1] <= s[0] * max(h.shape) * np.finfo(float).eps:
        return math.inf
    return float(s[0] / s[-1])


def add_awgn(signal: np.ndarray, noise: NoiseSpec | float, stream: np.random.Generator) -> np.ndarray:
    sigma_n = noise.sigma_n if isinstance(noise, NoiseSpec) else float(noise)
    signal = np.asarray(signal, dtype=float)
    if sigma_n == 0:
        return signal.copy()
    return signal + stream.normal(0.0, sigma_n, size=signal.shape)


def received_power(h, tx_second_moment, tx_cross_moment=0.0) -> float:
    """Total received electrical power sum_j E{(H x)_j^2}.

    ``tx_second_moment`` is E{x_i^2} per LED (scalar or vector) and
    ``tx_cross_moment`` is E{x_i x_k} for i != k (a common scalar).
    """
    h = np.asarray(getattr(h, "h", h), dtype=float)
    m2 = np.broadcast_to(np.asarray(tx_second_moment, dtype=float), (h.shape[1],))
    c = float(tx_cross_moment)
    diag = np.sum(h**2 * (m2 - c))
    return float(diag + c * np.sum(h.sum(axis=1) ** 2))


def noise_sigma_for_snr(snr_db: float, h, tx_second_moment, tx_cross_moment=0.0) -> NoiseSpec:
    """Per-PD noise std so that received power over total noise power equals ``snr_db``."""
    h = np.asarray(getattr(h, "h", h), dtype=float)
    p_rx = received_power(h, tx_second_moment, tx_cross_moment)
    if not p_rx > 0:
        raise ValueError("received signal power is zero")
    if math.isinf(snr_db) and snr_db > 0:
        return NoiseSpec(0.0)
    return NoiseSpec(math.sqrt(p_rx / (h.shape[0] * 10 ** (snr_db / 10))))


def load_channel_csv(path) -> ChannelMatrix:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: channel CSV must be a non-empty rectangular matrix")
    return ChannelMatrix(np.array(rows), provenance="loaded")


def save_channel_csv(h, path) -> None:
    h = np.asarray(getattr(h, "h", h), dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in h:
            writer.writerow([repr(float(v)) for v in row])


def load_geometry(path) -> LinkGeometry:
    """Read a JSON geometry; angles are given in degrees under ``*_deg`` keys."""
    spec = json.loads(Path(path).read_text())
    try:
        return LinkGeometry(
            led_positions=spec["led_positions"],
            led_normals=spec["led_normals"],
            pd_positions=spec["pd_positions"],
            pd_normals=spec["pd_normals"],
            half_power_semiangle=math.radians(spec["half_power_semiangle_deg"]),
            fov_semiangle=math.radians(spec["fov_semiangle_deg"]),
            pd_area=spec["pd_area"],
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing geometry key {exc.args[0]!r}") from None
