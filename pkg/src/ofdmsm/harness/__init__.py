from .config import ConfigError, SweepSpec, parse_config, resolve_channel
from .engine import SCHEMES, BerRecord, SweepReport, run_point, run_sweep, snr_at_ber
from .io import emit_csv, emit_plot_data, read_csv

__all__ = [
    "ConfigError", "SweepSpec", "parse_config", "resolve_channel", "SCHEMES", "BerRecord",
    "SweepReport", "run_point", "run_sweep", "snr_at_ber", "emit_csv", "emit_plot_data",
    "read_csv",
]
