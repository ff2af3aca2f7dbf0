"""Leakage-free, debiased benchmark construction for remaining-time prediction."""

from ppmbench.errors import PipelineError, PpmBenchError
from ppmbench.log_model import (
    Case,
    ColumnMapping,
    Event,
    EventLog,
    Prefix,
    deduplicate,
    generate_prefixes,
    parse_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Case",
    "ColumnMapping",
    "Event",
    "EventLog",
    "PipelineError",
    "PpmBenchError",
    "Prefix",
    "deduplicate",
    "generate_prefixes",
    "parse_csv",
    "__version__",
]
