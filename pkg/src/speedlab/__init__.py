"""Exact-arithmetic laboratory for speedable approximations of reals and randomness tests."""

from .approximations import Approximation, ClassTag, ComputableOrder, make_order
from .errors import HorizonExhausted, InvariantViolation, PreconditionError, SpeedlabError
from .numerics import Dyadic, Interval, format_number, parse_number
from .randomness_tests import MLTest, SolovayTest

__version__ = "0.1.0"

__all__ = [
    "Approximation",
    "ClassTag",
    "ComputableOrder",
    "Dyadic",
    "HorizonExhausted",
    "Interval",
    "InvariantViolation",
    "MLTest",
    "PreconditionError",
    "SolovayTest",
    "SpeedlabError",
    "format_number",
    "make_order",
    "parse_number",
]
