"""Scenario-driven BER experiments, sweeps and the command line."""
from .engine import BerEngine, required_ebn0, run_ber
from .scenario import BerRecord, RequiredResult, Scenario

__all__ = ["BerEngine", "BerRecord", "RequiredResult", "Scenario", "required_ebn0", "run_ber"]
