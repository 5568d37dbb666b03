"""Limit shapes and fluctuations of cycle profiles of weighted random permutations."""
from __future__ import annotations

from .weights import WeightModel, scaling_constants, tune_parameter

__version__ = "0.1.0"

__all__ = ["WeightModel", "scaling_constants", "tune_parameter", "__version__"]
