"""Radio layer: MCS table, rate model and channel fading."""

from .phy_mcs import (
    MCS_TABLE,
    default_mcs_table,
    discrete_rate,
    next_level,
    power_for_level,
    quantize_sinr_down,
    shannon_rate,
)
from .channel import ChannelModel, ChannelState, gain, pathloss_db

__all__ = [
    'MCS_TABLE',
    'default_mcs_table',
    'discrete_rate',
    'next_level',
    'power_for_level',
    'quantize_sinr_down',
    'shannon_rate',
    'ChannelModel',
    'ChannelState',
    'gain',
    'pathloss_db',
]
