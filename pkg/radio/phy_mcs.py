"""
Rate model and MCS quantization.

Continuous rates follow the Shannon expression with an SINR gap factor beta;
discrete rates come from the link-adaptation table (SINR threshold and
spectral efficiency per level). SINR is always mapped to a level by its raw
value, beta only shapes the continuous curve.
"""

import math
from typing import Sequence

import numpy as np

from core.config import DEFAULT_MCS_TABLE
from core.exceptions import ValidationError
from core.models import McsLevel, RateModel

# Relative tolerance so that a threshold converted dB -> linear -> level maps back to itself.
_BOUNDARY_RTOL = 1e-12


def default_mcs_table() -> tuple:
    return tuple(
        McsLevel(i, row["threshold_db"], row["efficiency"], row["label"])
        for i, row in enumerate(DEFAULT_MCS_TABLE)
    )


MCS_TABLE = default_mcs_table()


def _check_value(name: str, value: float, allow_zero: bool = True):
    if not math.isfinite(value):
        raise ValidationError(name, value, "must be finite")
    if value < 0 or (value == 0 and not allow_zero):
        raise ValidationError(name, value, "must be positive" if not allow_zero else "must be >= 0")


def shannon_rate(p: float, w: float, h: float, model: RateModel) -> float:
    """w * log2(1 + beta * p * h / (n0 * w)) in bps"""
    _check_value("p", p)
    _check_value("w", w, allow_zero=False)
    _check_value("h", h, allow_zero=False)
    if p == 0.0:
        return 0.0
    return w * math.log2(1.0 + model.beta * p * h / (model.n0 * w))


def quantize_sinr_down(sinr: float, table: Sequence[McsLevel] = MCS_TABLE) -> McsLevel:
    """Highest level whose threshold does not exceed sinr (level 0 below the table)"""
    if not sinr > 0:
        raise ValidationError("sinr", sinr, "must be positive")
    thresholds = np.fromiter((m.sinr_threshold for m in table), dtype=float, count=len(table))
    idx = int(np.searchsorted(thresholds, sinr * (1.0 + _BOUNDARY_RTOL), side="right")) - 1
    return table[max(idx, 0)]


def discrete_rate(level: McsLevel, w: float) -> float:
    return level.efficiency * w


def power_for_level(level: McsLevel, w: float, h: float, n0: float) -> float:
    """Power that puts a user exactly at the level's SINR threshold on bandwidth w"""
    if w <= 0.0:
        return 0.0
    return level.sinr_threshold * w * n0 / h


def next_level(level: McsLevel, table: Sequence[McsLevel] = MCS_TABLE):
    """The level above, or None at the top of the table"""
    if level.index + 1 < len(table):
        return table[level.index + 1]
    return None
