"""Fast invariant checks behind ``ofdmsm selftest``."""
from __future__ import annotations

import logging
import math

import numpy as np

from ..channel import condition_number, make_overlap_channel
from ..core import SimConfig, build_constellation, derive_stream, slice_symbols
from ..ofdm import (
    bias_and_clip,
    clipped_signal_power,
    dc_bias_from_db,
    fft,
    hermitian_extend,
    ifft_real,
)
from ..tdsm import map_detect, map_metric
from .engine import run_point


def _constellations():
    for m in (4, 16, 64, 256):
        c = build_constellation(m)
        assert abs(np.mean(np.abs(c.points) ** 2) - 1) < 1e-12
        assert np.array_equal(slice_symbols(c.points, c), np.arange(m))
        pos = c.lattice_positions
        for a in range(m):
            for b in range(a + 1, m):
                if np.abs(pos[a] - pos[b]).sum() == 1:
                    assert bin(a ^ b).count("1") == 1


def _transforms():
    rng = derive_stream(0, 0)
    for n in (8, 64, 256):
        q = rng.normal(size=n // 2 - 1) + 1j * rng.normal(size=n // 2 - 1)
        s = hermitian_extend(q)
        assert np.max(np.abs(fft(ifft_real(s)) - s)) < 1e-12


def _clipped_power():
    rng = derive_stream(0, 1)
    x = rng.normal(size=200_000)
    for bias_db in (0.0, 7.0, 10.0):
        b = dc_bias_from_db(bias_db, 1.0)
        emp = np.mean(bias_and_clip(x, b, 0.0) ** 2)
        assert abs(emp / clipped_signal_power(1.0, b, 0.0) - 1) < 0.02


def _overlap_rho():
    for n in (4, 16):
        for rho in (1.0, 3.5, 400.0):
            assert abs(condition_number(make_overlap_channel(n, rho)) / rho - 1) < 1e-9


def _map_grid():
    rng = derive_stream(0, 2)
    h = rng.uniform(0.1, 1, (2, 2))
    grid = np.linspace(0, 6, 60_001)
    for _ in range(20):
        y = rng.uniform(0, 3, 2)
        i, x = map_detect(y, h, 1.0, 0.5, 3.0, 0.0)
        best = min(map_metric(y, h[:, k], g, 1.0, 0.5, 3.0) for k in range(2) for g in grid[::100])
        assert map_metric(y, h[:, i], x, 1.0, 0.5, 3.0) <= best + 1e-9


def _noiseless_link():
    cfg = SimConfig(n_fft=64, m_order=16, n_tx=4, n_rx=4, bias_db=13.0, max_frames=20)
    for scheme in ("fdsm", "tdsm-map", "tdsm-zf"):
        rec = run_point(cfg, scheme, np.eye(4), math.inf)
        assert rec.bit_errors == 0 and rec.frames == 20


CHECKS = {
    "constellation power, Gray labels, slicer roundtrip": _constellations,
    "Hermitian frames give real samples and invert": _transforms,
    "clipped power formula vs Monte Carlo": _clipped_power,
    "overlap channel condition number": _overlap_rho,
    "MAP estimate vs grid search": _map_grid,
    "noiseless end-to-end links": _noiseless_link,
}


def run_selftest(echo=print) -> bool:
    ok = True
    engine_log = logging.getLogger("ofdmsm.harness.engine")
    previous = engine_log.level
    engine_log.setLevel(logging.ERROR)  # noiseless points never reach the error target
    try:
        for name, check in CHECKS.items():
            try:
                check()
                echo(f"PASS  {name}")
            except AssertionError:
                ok = False
                echo(f"FAIL  {name}")
    finally:
        engine_log.setLevel(previous)
    return ok
