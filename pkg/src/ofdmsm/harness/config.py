"""``key = value`` sweep configuration files."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..channel import (
    ChannelMatrix,
    build_channel_matrix,
    identity_channel,
    load_channel_csv,
    load_geometry,
    make_overlap_channel,
)
from ..core import SimConfig, SimConfigError
from .engine import SCHEMES

log = logging.getLogger(__name__)

REQUIRED_KEYS = ("scheme", "m_order", "n_tx", "snr_db")
KNOWN_KEYS = (
    "scheme", "n_fft", "n_cp", "m_order", "n_tx", "n_rx", "bias_db", "clip_low",
    "clip_high", "snr_db", "seed", "max_frames", "target_errors", "channel",
)
# config key -> SimConfig field
_FIELD = {
    "n_fft": "n_fft", "n_cp": "n_cp", "n_tx": "n_tx", "n_rx": "n_rx", "bias_db": "bias_db",
    "clip_low": "clip_low", "clip_high": "clip_high", "seed": "master_seed",
    "max_frames": "max_frames", "target_errors": "target_bit_errors",
}
_INT_KEYS = {"n_fft", "n_cp", "n_tx", "n_rx", "seed", "max_frames", "target_errors"}


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class SweepSpec:
    config: SimConfig
    schemes: tuple[str, ...]
    channel: str = "identity"
    m_orders: dict = field(default_factory=dict)
    base_dir: Path = Path(".")


def _to_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key) from None


def _to_float(key: str, text: str) -> float:
    try:
        return math.inf if text.strip().lower() in ("inf", "+inf") else float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", key) from None


def _parse_schemes(text: str) -> tuple[str, ...]:
    schemes = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in schemes if s not in SCHEMES]
    if bad or not schemes:
        raise ConfigError(f"unknown scheme(s) {bad or text!r}; choose from {', '.join(SCHEMES)}", "scheme")
    return schemes


def _parse_m_order(text: str, schemes: tuple[str, ...]) -> dict:
    """``64`` applies everywhere; ``fdsm:64, tdsm:16`` sets M per scheme (``tdsm`` covers both detectors)."""
    if ":" not in text:
        m = _to_int("m_order", text)
        return {s: m for s in schemes}
    orders = {}
    for item in text.split(","):
        name, _, value = item.partition(":")
        name = name.strip()
        targets = [s for s in SCHEMES if s.startswith("tdsm")] if name == "tdsm" else [name]
        if not all(t in SCHEMES for t in targets):
            raise ConfigError(f"unknown scheme {name!r} in m_order", "m_order")
        for t in targets:
            orders[t] = _to_int("m_order", value)
    missing = [s for s in schemes if s not in orders]
    if missing:
        raise ConfigError(f"no constellation order given for {', '.join(missing)}", "m_order")
    return {s: orders[s] for s in schemes}


def read_key_values(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key", key)
        if key in values:
            log.warning("%s:%d: duplicate key %r, last value wins", source, lineno, key)
        values[key] = value.strip()
    return values


def build_spec(values: dict[str, str], base_dir: Path = Path(".")) -> SweepSpec:
    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError("missing required key", key)
    schemes = _parse_schemes(values["scheme"])
    m_orders = _parse_m_order(values["m_order"], schemes)
    kwargs = {}
    for key, fname in _FIELD.items():
        if key in values:
            kwargs[fname] = _to_int(key, values[key]) if key in _INT_KEYS else _to_float(key, values[key])
    kwargs.setdefault("n_rx", kwargs.get("n_tx"))
    kwargs["snr_grid_db"] = tuple(
        _to_float("snr_db", s) for s in values["snr_db"].split(",") if s.strip()
    )
    kwargs["m_order"] = m_orders[schemes[0]]
    try:
        cfg = SimConfig(**kwargs)
        for m in set(m_orders.values()):
            SimConfig(**{**kwargs, "m_order": m})
    except SimConfigError as exc:
        key = {v: k for k, v in _FIELD.items()}.get(exc.key, exc.key)
        raise ConfigError(str(exc).split(": ", 1)[1], key) from None
    channel = values.get("channel", "identity")
    spec = SweepSpec(config=cfg, schemes=schemes, channel=channel, m_orders=m_orders,
                     base_dir=Path(base_dir))
    _validate_channel_syntax(channel)
    return spec


def parse_config(path, overrides: dict[str, str] | None = None) -> SweepSpec:
    """Read a config file; ``overrides`` (e.g. from CLI flags) win over file values."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    values = read_key_values(text, str(path))
    for key, value in (overrides or {}).items():
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", key)
        values[key] = str(value)
    return build_spec(values, path.parent)


def _parse_overlap(text: str) -> tuple[float, float]:
    params = {}
    for item in text.split(","):
        k, sep, v = item.partition("=")
        if not sep:
            raise ConfigError(f"bad overlap parameter {item!r}", "channel")
        params[k.strip()] = _to_float("channel", v)
    unknown = set(params) - {"rho", "gain"}
    if unknown or "rho" not in params:
        raise ConfigError("overlap channel takes rho=<r>[,gain=<a>]", "channel")
    return params["rho"], params.get("gain", 1.0)


def _validate_channel_syntax(channel: str) -> None:
    kind, _, arg = channel.partition(":")
    if kind == "identity" and not arg:
        return
    if kind == "overlap":
        _parse_overlap(arg)
        return
    if kind in ("geometry", "csv") and arg:
        return
    raise ConfigError(f"unrecognised channel spec {channel!r}", "channel")


def resolve_channel(spec: SweepSpec) -> ChannelMatrix:
    cfg = spec.config
    kind, _, arg = spec.channel.partition(":")
    if kind == "identity":
        if cfg.n_rx != cfg.n_tx:
            return ChannelMatrix(np.eye(cfg.n_rx, cfg.n_tx), provenance="synthetic")
        return identity_channel(cfg.n_tx)
    if kind == "overlap":
        if cfg.n_rx != cfg.n_tx:
            raise ConfigError("overlap channel requires n_rx == n_tx", "channel")
        rho, gain = _parse_overlap(arg)
        try:
            return make_overlap_channel(cfg.n_tx, rho, gain)
        except ValueError as exc:
            raise ConfigError(str(exc), "channel") from None
    path = Path(arg)
    if not path.is_absolute():
        path = spec.base_dir / path
    try:
        h = load_channel_csv(path) if kind == "csv" else build_channel_matrix(load_geometry(path))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "channel") from None
    except ValueError as exc:
        raise ConfigError(str(exc), "channel") from None
    if h.shape != (cfg.n_rx, cfg.n_tx):
        raise ConfigError(f"channel is {h.shape[0]}x{h.shape[1]}, config needs {cfg.n_rx}x{cfg.n_tx}", "channel")
    return h
