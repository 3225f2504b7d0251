"""Exact Bayesian-network inference with workload-aware materialization."""

from ._core import (
    Answer,
    BnmatError,
    EliminationTree,
    IoError,
    JunctionTree,
    Network,
    ParseError,
    Plan,
    SizeLimitError,
    Store,
    ValidationError,
    entry_cap,
    set_entry_cap,
)

__all__ = [
    "Answer",
    "BnmatError",
    "EliminationTree",
    "IoError",
    "JunctionTree",
    "Network",
    "ParseError",
    "Plan",
    "SizeLimitError",
    "Store",
    "ValidationError",
    "entry_cap",
    "set_entry_cap",
]
