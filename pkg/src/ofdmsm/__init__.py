"""Link-level simulation of OFDM-based optical spatial modulation (FD-SM and TD-SM)."""

__version__ = "0.1.0"
