"""
Extended utilities for DLNS
Finite nonnegative reals plus the distinguished NEG_INF used by hard constraints
"""

import math
from functools import total_ordering
from typing import Iterable, Union

import numpy as np


@total_ordering
class _NegInf:
    """The -inf utility of a violated hard constraint.

    Absorbing under addition, identity under max, smaller than every float.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __truediv__(self, other):
        return self

    def __eq__(self, other):
        if other is self:
            return True
        if isinstance(other, (float, np.floating)):
            return math.isinf(other) and other < 0
        return False

    def __lt__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(float("-inf"))

    def __float__(self):
        return float("-inf")

    def __repr__(self):
        return "NEG_INF"

    def __reduce__(self):
        return (_NegInf, ())


NEG_INF = _NegInf()

ExtendedUtility = Union[float, _NegInf]

# Text form used in instance files and traces
NEG_INF_TOKEN = "-inf"

ABS_TOL = 1e-9


def is_neg_inf(value) -> bool:
    if value is NEG_INF:
        return True
    try:
        return math.isinf(value) and value < 0
    except TypeError:
        return False


def to_extended(value) -> ExtendedUtility:
    """Convert a float (possibly -inf from a numpy table) to an ExtendedUtility"""
    if is_neg_inf(value):
        return NEG_INF
    return float(value)


def to_float(value: ExtendedUtility) -> float:
    """Array-side representation: NEG_INF becomes -inf"""
    return float(value)


def eu_sum(values: Iterable[ExtendedUtility]) -> ExtendedUtility:
    total = 0.0
    for value in values:
        if is_neg_inf(value):
            return NEG_INF
        total += value
    return total


def eu_max(values: Iterable[ExtendedUtility]) -> ExtendedUtility:
    best: ExtendedUtility = NEG_INF
    for value in values:
        value = to_extended(value)
        if value > best:
            best = value
    return best


def format_utility(value: ExtendedUtility) -> Union[str, float, int]:
    """JSON-side form: "-inf" for NEG_INF, int for integral values"""
    if is_neg_inf(value):
        return NEG_INF_TOKEN
    value = float(value)
    if value.is_integer():
        return int(value)
    return value


def parse_utility(raw) -> ExtendedUtility:
    if isinstance(raw, str):
        if raw.strip() == NEG_INF_TOKEN:
            return NEG_INF
        raise ValueError(f"unknown utility token {raw!r}")
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValueError(f"utility must be a number or {NEG_INF_TOKEN!r}, got {raw!r}")
    value = float(raw)
    if math.isnan(value) or math.isinf(value) or value < 0:
        raise ValueError(f"finite utilities must be >= 0, got {raw!r}")
    return value
