"""Distributed coordination of binary interactions under a priority order."""

from .model import ModelError, ProcessSpec, SystemSpec
from .harness import measure, run_simulation, validate_run

__all__ = ["ModelError", "ProcessSpec", "SystemSpec", "measure", "run_simulation", "validate_run"]
__version__ = "0.1.0"
