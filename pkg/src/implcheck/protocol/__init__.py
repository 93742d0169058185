"""Protocol frontends: explicit, global-type and symbolic."""

from .formats import ParseError, dump_gclts, dump_sgclts, load_protocol, parse_gclts, parse_gt, parse_sgclts
from .gclts import (
    Failure,
    Gclts,
    LocalRestriction,
    Rule,
    Transition,
    UnknownSymbol,
    WellFormednessReport,
    restrict_to_participant,
    to_dot,
    validate_gclts,
)
from .globaltype import from_global_type, parse_global_type
from .symbolic import SymbolicProtocol, concretize_symbolic

__all__ = [
    "Failure",
    "Gclts",
    "LocalRestriction",
    "ParseError",
    "Rule",
    "SymbolicProtocol",
    "Transition",
    "UnknownSymbol",
    "WellFormednessReport",
    "concretize_symbolic",
    "dump_gclts",
    "dump_sgclts",
    "from_global_type",
    "load_protocol",
    "parse_gclts",
    "parse_global_type",
    "parse_gt",
    "parse_sgclts",
    "restrict_to_participant",
    "to_dot",
    "validate_gclts",
]
