"""Scheduling multi-model DNN inference on heterogeneous chiplet packages."""
from __future__ import annotations

__version__ = "0.1.0"

from .costmodel import CostModel, CostReport  # noqa: E402
from .hardware import McmSpec, load_hardware, parse_hardware  # noqa: E402
from .search import Objective, SearchConfig, SearchResult, search  # noqa: E402
from .workload import Scenario, load_scenario, parse_scenario  # noqa: E402

__all__ = [
    "CostModel",
    "CostReport",
    "McmSpec",
    "Objective",
    "Scenario",
    "SearchConfig",
    "SearchResult",
    "load_hardware",
    "load_scenario",
    "parse_hardware",
    "parse_scenario",
    "search",
]
