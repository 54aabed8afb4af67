"""Multicarrier waveform laboratory: CP-OFDM, PCC-OFDM and UFMC.

Transceiver chains, analytic interference models and a multiuser uplink
Monte-Carlo BER harness.
"""
from .modem import Constellation, constellation, parse_constellation, theoretical_ber
from .uplink import UserScenario, compose_uplink
from .waveforms import SubbandAllocation, Transceiver, WaveformConfig, WaveformKind

__version__ = "0.1.0"

__all__ = [
    "Constellation", "SubbandAllocation", "Transceiver", "UserScenario", "WaveformConfig",
    "WaveformKind", "compose_uplink", "constellation", "parse_constellation", "theoretical_ber",
]
