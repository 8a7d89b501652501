"""Measurement-dependent-locality Bell test toolkit.

Quantum predictions for the golden-ratio two-qubit state, the MDL inequality
and its brute-force polytope check, coincidence-count simulation, tomography
and the analysis of the published coincidence table.
"""

from mdl_bell.errors import (
    DegenerateDataError,
    InvalidArgumentError,
    InvalidProtocolError,
    InvalidStateError,
    MDLError,
    ParseError,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateDataError",
    "InvalidArgumentError",
    "InvalidProtocolError",
    "InvalidStateError",
    "MDLError",
    "ParseError",
    "__version__",
]
