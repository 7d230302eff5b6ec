"""Stage constructions; each returns its output together with a :class:`StageTrace`."""

from .ml import even_level_strings, speedup_from_ml
from .solovay import (
    bounded_inc_test_from_speedup,
    converging_test_from,
    dce_test_from,
    lce_test_from,
    speedup_from_bounded_inc_test,
)
from .trace import Assertion, StageTrace
from .weak import weak_speed_test
from .zero import zero_speedup

__all__ = [
    "Assertion",
    "StageTrace",
    "bounded_inc_test_from_speedup",
    "converging_test_from",
    "dce_test_from",
    "even_level_strings",
    "lce_test_from",
    "speedup_from_bounded_inc_test",
    "speedup_from_ml",
    "weak_speed_test",
    "zero_speedup",
]
