"""Filtrations, gradeds and Sen-operator checks for effective Frobenius modules over W(k)[[u]]."""

from .bk import BKModule, matching_check, weak_frobenius_check
from .errors import (BKError, ConsistencyError, DomainError, InsufficientPrecision, NotEffective,
                     UsageError)
from .modp import ModpBK
from .ring import EisensteinPoly, Prec, SeriesElt
from .spec_io import ModuleSpec
from .suites import run_suite

__all__ = ["BKModule", "matching_check", "weak_frobenius_check", "BKError", "ConsistencyError",
           "DomainError", "InsufficientPrecision", "NotEffective", "UsageError", "ModpBK",
           "EisensteinPoly", "Prec", "SeriesElt", "ModuleSpec", "run_suite"]
__version__ = "0.1.0"
