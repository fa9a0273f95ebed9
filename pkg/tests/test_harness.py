"""Config parsing, the Monte Carlo engine and CSV output."""
import io
import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ofdmsm.channel import identity_channel, make_overlap_channel
from ofdmsm.core import SimConfig
from ofdmsm.harness import (
    BerRecord,
    ConfigError,
    SweepReport,
    emit_csv,
    emit_plot_data,
    parse_config,
    read_csv,
    resolve_channel,
    run_point,
    run_sweep,
    snr_at_ber,
)
from ofdmsm.harness import engine

SMALL = SimConfig(n_fft=64, m_order=4, n_tx=2, n_rx=2, max_frames=200, target_bit_errors=100)


def write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    def test_minimal_defaults(self, tmp_path):
        spec = parse_config(write(tmp_path, "scheme = fdsm\nm_order = 16\nn_tx = 4\nsnr_db = 0,10\n"))
        cfg = spec.config
        assert (cfg.n_fft, cfg.bias_db, cfg.n_cp, cfg.clip_high, cfg.n_rx) == (256, 10.0, 0, math.inf, 4)
        assert cfg.snr_grid_db == (0.0, 10.0)
        assert spec.channel == "identity"

    def test_per_scheme_order(self, tmp_path):
        spec = parse_config(write(tmp_path, "scheme = fdsm, tdsm-map, tdsm-zf\nm_order = fdsm:64, tdsm:16\n"
                                            "n_tx = 4\nsnr_db = 0\n"))
        assert spec.m_orders == {"fdsm": 64, "tdsm-map": 16, "tdsm-zf": 16}

    def test_comments_and_inf(self, tmp_path):
        spec = parse_config(write(tmp_path, "# sweep\nscheme = tdsm-map  # detector\nm_order=4\nn_tx=2\n"
                                            "snr_db=5\nclip_high = inf\nclip_low = 0\n"))
        assert spec.config.clip_high == math.inf

    @pytest.mark.parametrize("text, key", [
        ("scheme = fdsm\nm_order = 6\nn_tx = 4\nsnr_db = 0\n", "m_order"),
        ("scheme = fdsm\nm_order = 16\nn_tx = 4\n", "snr_db"),
        ("scheme = fdsm\nm_order = 16\nn_tx = four\nsnr_db = 0\n", "n_tx"),
        ("scheme = ofdm\nm_order = 16\nn_tx = 4\nsnr_db = 0\n", "scheme"),
        ("scheme = fdsm\nm_order = 16\nn_tx = 4\nsnr_db = 0\ncolour = red\n", "colour"),
        ("scheme = fdsm\nm_order = 16\nn_tx = 4\nsnr_db = 0\nchannel = overlap:r=2\n", "channel"),
        ("scheme = fdsm\nm_order = 16\nn_tx = 4\nsnr_db = 0\nseed = -1\n", "seed"),
    ])
    def test_errors_name_key(self, tmp_path, text, key):
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, text))
        assert err.value.key == key

    def test_m_order_message(self, tmp_path):
        with pytest.raises(ConfigError, match="power of 4"):
            parse_config(write(tmp_path, "scheme = fdsm\nm_order = 6\nn_tx = 4\nsnr_db = 0\n"))

    def test_duplicate_last_wins(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            spec = parse_config(write(tmp_path, "scheme=fdsm\nm_order=16\nm_order=64\nn_tx=4\nsnr_db=0\n"))
        assert spec.config.m_order == 64
        assert "duplicate" in caplog.text

    def test_overrides(self, tmp_path):
        spec = parse_config(write(tmp_path, "scheme=fdsm\nm_order=16\nn_tx=4\nsnr_db=0\nseed=1\n"),
                            {"seed": "9", "snr_db": "1,2"})
        assert spec.config.master_seed == 9 and spec.config.snr_grid_db == (1.0, 2.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "nope.cfg")

    def test_channels(self, tmp_path):
        base = "scheme=fdsm\nm_order=16\nn_tx=4\nsnr_db=0\n"
        h = resolve_channel(parse_config(write(tmp_path, base + "channel = overlap:rho=3.5\n")))
        assert h.rho == pytest.approx(3.5)
        (tmp_path / "h.csv").write_text("\n".join([",".join(["1", "0", "0", "0"])] * 4))
        with pytest.raises(ConfigError):  # rank-deficient is fine, but shape must match
            resolve_channel(parse_config(write(tmp_path, base.replace("n_tx=4", "n_tx=2") + "channel=csv:h.csv\n")))
        loaded = resolve_channel(parse_config(write(tmp_path, base + "channel=csv:h.csv\n")))
        assert loaded.provenance == "loaded"
        with pytest.raises(ConfigError):
            resolve_channel(parse_config(write(tmp_path, base + "channel=geometry:missing.json\n")))


class TestRecords:
    def test_invariants(self):
        r = BerRecord("fdsm", 0.0, bits=1000, bit_errors=10, frames=2, master_seed=0)
        assert r.ber == 0.01
        assert r.std_error == pytest.approx(math.sqrt(0.01 * 0.99 / 1000))
        with pytest.raises(ValueError):
            BerRecord("fdsm", 0.0, bits=10, bit_errors=11, frames=1, master_seed=0)

    def test_snr_at_ber(self):
        recs = [BerRecord("x", s, 10**6, int(10**6 * b), 1, 0) for s, b in ((0, 1e-1), (10, 1e-2), (20, 1e-4))]
        assert snr_at_ber(recs, 1e-3) == pytest.approx(15.0)
        assert snr_at_ber(recs, 1e-1 / math.sqrt(10)) == pytest.approx(5.0)
        assert math.isnan(snr_at_ber(recs, 1e-6))


class TestRunPoint:
    def test_guessing_limit(self):
        for scheme in engine.SCHEMES:
            cfg = SimConfig(n_fft=64, m_order=4, n_tx=2, n_rx=2, max_frames=200, target_bit_errors=20_000)
            r = run_point(cfg, scheme, identity_channel(2), -40.0)
            assert r.ber == pytest.approx(0.5, abs=0.02)

    @pytest.mark.parametrize("scheme", engine.SCHEMES)
    def test_noiseless(self, scheme):
        cfg = SimConfig(n_fft=256, m_order=16, n_tx=4, n_rx=4, bias_db=13, max_frames=150)
        r = run_point(cfg, scheme, identity_channel(4), math.inf)
        assert r.bit_errors == 0 and r.bits >= 10**5 and not r.converged

    def test_stops_at_target(self):
        r = run_point(SMALL, "tdsm-map", identity_channel(2), 5.0)
        assert r.converged and r.bit_errors >= 100
        assert r.bits == r.frames * engine.payload_bits(SMALL, "tdsm-map")
        # the frame before the last one had not yet reached the target
        last = engine._run_chunk(SMALL, "tdsm-map", identity_channel(2).h,
                                 engine.noise_sigma_for_snr(5.0, np.eye(2), *engine.tx_moments(SMALL, "tdsm-map")).sigma_n,
                                 0, r.frames - 1, r.frames)[0]
        assert r.bit_errors - last < 100

    def test_max_frames_flagged(self, caplog):
        cfg = SimConfig(n_fft=64, m_order=4, n_tx=2, n_rx=2, max_frames=3, target_bit_errors=10**6)
        with caplog.at_level(logging.WARNING):
            r = run_point(cfg, "fdsm", identity_channel(2), 10.0)
        assert r.frames == 3 and not r.converged and "max_frames" in caplog.text

    def test_deterministic(self):
        a = run_point(SMALL, "fdsm", make_overlap_channel(2, 2.0), 15.0)
        b = run_point(SMALL, "fdsm", make_overlap_channel(2, 2.0), 15.0)
        assert a == b

    def test_workers_independent(self):
        a = run_point(SMALL, "tdsm-zf", identity_channel(2), 8.0, workers=1)
        b = run_point(SMALL, "tdsm-zf", identity_channel(2), 8.0, workers=3)
        assert a == b

    def test_seed_matters(self):
        a = run_point(SMALL, "fdsm", identity_channel(2), 10.0)
        b = run_point(SimConfig(**{**SMALL.__dict__, "master_seed": 1}), "fdsm", identity_channel(2), 10.0)
        assert a != b

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            run_point(SMALL, "fdsm", identity_channel(3), 0.0)
        with pytest.raises(ValueError):
            run_point(SMALL, "ofdm", identity_channel(2), 0.0)

    def test_counts_injected_errors(self, monkeypatch):
        def flip(y, h, cfg, c, *args):
            n = engine.tdsm_payload_bits(cfg)
            return np.zeros(n, dtype=np.uint8)

        monkeypatch.setattr(engine, "tdsm_decode", flip)
        cfg = SimConfig(n_fft=64, m_order=4, n_tx=2, n_rx=2)
        stream = engine.derive_stream(0, 0)
        bits = engine.derive_stream(0, 0).integers(0, 2, engine.payload_bits(cfg, "tdsm-map"), dtype=np.uint8)
        assert engine.simulate_frame(cfg, "tdsm-map", np.eye(2), 0.0, stream) == int(bits.sum())


class TestSweep:
    def test_empty_grid(self):
        rep = run_sweep(SMALL, ["fdsm"], identity_channel(2))
        assert rep.records == () and rep.rho == 1.0

    def test_grid_matches(self):
        cfg = SimConfig(**{**SMALL.__dict__, "snr_grid_db": (0.0, 5.0)})
        rep = run_sweep(cfg, ["fdsm", "tdsm-map"], make_overlap_channel(2, 3.0), m_orders={"fdsm": 16})
        assert [r.snr_db for r in rep.curve("fdsm")] == [0.0, 5.0]
        assert rep.channel_provenance == "synthetic" and rep.rho == pytest.approx(3.0)

    @pytest.mark.slow
    def test_monotone(self):
        cfg = SimConfig(n_fft=256, m_order=16, n_tx=4, n_rx=4, snr_grid_db=(0, 5, 10, 15, 20, 25, 30))
        curve = run_sweep(cfg, ["tdsm-map"], identity_channel(4)).records
        for a, b in zip(curve, curve[1:]):
            if a.converged and b.converged:
                assert b.ber <= a.ber + 2 * math.hypot(a.std_error, b.std_error)


class TestCsv:
    RECS = (BerRecord("fdsm", 0.0, 2032, 1016, 2, 7), BerRecord("tdsm-map", 12.5, 10**6, 3, 984, 7),
            BerRecord("tdsm-zf", -5.0, 100, 0, 1, 7))

    def test_format(self):
        buf = io.StringIO()
        emit_csv(list(self.RECS), buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "scheme,snr_db,bits,bit_errors,ber,frames,seed"
        assert lines[1] == "fdsm,0.0,2032,1016,5.00000e-01,2,7"
        assert lines[2] == "tdsm-map,12.5,1000000,3,3.00000e-06,984,7"

    def test_empty_report(self, tmp_path):
        emit_csv(SweepReport(SimConfig(), {}, "synthetic", 1.0), tmp_path / "o.csv")
        assert (tmp_path / "o.csv").read_text() == "scheme,snr_db,bits,bit_errors,ber,frames,seed\n"

    @given(st.lists(st.tuples(st.sampled_from(["fdsm", "tdsm-map"]), st.floats(-50, 80),
                              st.integers(1, 10**9), st.floats(0, 1), st.integers(0, 10**4),
                              st.integers(0, 2**64 - 1)), max_size=5))
    def test_roundtrip(self, rows):
        import tempfile
        from pathlib import Path
        recs = [BerRecord(s, snr, b, int(b * p), f, seed) for s, snr, b, p, f, seed in rows]
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "o.csv"
            emit_csv(recs, path)
            assert read_csv(path) == recs

    def test_rejects_bad_header(self, tmp_path):
        (tmp_path / "o.csv").write_text("a,b\n")
        with pytest.raises(ValueError):
            read_csv(tmp_path / "o.csv")

    def test_plot_data(self, tmp_path):
        emit_plot_data(SweepReport(SimConfig(), {}, "synthetic", 1.0, self.RECS), tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines == ["scheme,snr_db,log10_ber", "fdsm,0.0,-0.301030", "tdsm-map,12.5,-5.522879"]
